#include "crowdqc/http_api.hpp"

#include <charconv>
#include <cstdlib>
#include <iostream>

#include <httplib.h>

#include "crowdqc/json_io.hpp"

namespace crowdqc {

using ojson = nlohmann::ordered_json;

namespace {

constexpr const char* kJson = "application/json";
constexpr const char* kTokenHeader = "X-Admin-Token";

void reply(httplib::Response& res, int status, const ojson& body) {
  res.status = status;
  res.set_content(body.dump(), kJson);
}

int submit_status(SubmitError::Kind k) {
  switch (k) {
    case SubmitError::Kind::UnknownAssignment: return 404;
    case SubmitError::Kind::Stale:
    case SubmitError::Kind::Expired: return 409;
    case SubmitError::Kind::ReviewMismatch:
    case SubmitError::Kind::SpanOutOfBounds:
    case SubmitError::Kind::MissingSpan: return 422;
  }
  return 400;
}

ojson class_options() {
  ojson arr = ojson::array();
  for (auto c : kAllLabels) {
    arr.push_back(ojson{{"id", to_string(c)}, {"help", class_help(c)}});
  }
  return arr;
}

}  // namespace

std::optional<std::string> admin_token_from_env() {
  const char* v = std::getenv("CROWDQC_ADMIN_TOKEN");
  if (!v || !*v) return std::nullopt;
  return std::string(v);
}

ojson task_json(const Assignment& a, const Review& r) {
  return ojson{{"assignment_id", a.assignment_id},
               {"review",
                {{"review_id", r.review_id},
                 {"caption", r.caption},
                 {"body", r.body},
                 {"image_ref", r.image_ref}}},
               {"classes", class_options()}};
}

Submission parse_label_body(const std::string& body) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::parse_error&) {
    throw ParseError("body is not valid JSON", 0);
  }
  if (!j.is_object() || !j.contains("class") || !j["class"].is_string()) {
    throw ParseError("body needs a \"class\" string", 0);
  }
  Submission s;
  auto label = try_parse_label(j["class"].get<std::string>());
  if (!label) throw ParseError("unknown class \"" + j["class"].get<std::string>() + "\"", 0);
  s.label = *label;
  if (j.contains("spans")) s.spans = spans_from_json(j["spans"]);
  if (j.contains("review_id")) {
    if (!j["review_id"].is_string()) throw ParseError("\"review_id\" must be a string", 0);
    s.review_id = j["review_id"].get<std::string>();
  }
  return s;
}

struct HttpServer::Impl {
  Service* service;
  std::optional<std::string> token;
  httplib::Server server;

  bool admin_ok(const httplib::Request& req, httplib::Response& res) const {
    if (!token || req.get_header_value(kTokenHeader) == *token) return true;
    reply(res, 401, ojson{{"error", "admin token required"}});
    return false;
  }

  void routes() {
    server.Post("/api/workers", [this](const httplib::Request&, httplib::Response& res) {
      const auto id = service->register_worker();
      reply(res, 201, ojson{{"worker_id", id}, {"instructions_markdown", instructions_markdown()}});
    });

    server.Get("/api/workers/:id/next-task",
               [this](const httplib::Request& req, httplib::Response& res) {
                 const auto& worker = req.path_params.at("id");
                 try {
                   auto a = service->next_task(worker);
                   if (!a) {
                     res.status = 204;
                     return;
                   }
                   reply(res, 200, task_json(*a, service->review(a->review_id)));
                 } catch (const NotFoundError& e) {
                   reply(res, 404, ojson{{"error", e.what()}});
                 }
               });

    server.Post("/api/assignments/:id/label",
                [this](const httplib::Request& req, httplib::Response& res) {
                  const auto& raw = req.path_params.at("id");
                  std::uint64_t id = 0;
                  const auto [ptr, ec] = std::from_chars(raw.data(), raw.data() + raw.size(), id);
                  if (ec != std::errc() || ptr != raw.data() + raw.size()) {
                    reply(res, 404, ojson{{"accepted", false}, {"reason", "unknown_assignment"}});
                    return;
                  }
                  try {
                    const auto outcome = service->label(id, parse_label_body(req.body));
                    ojson body{{"accepted", outcome.accepted}};
                    if (outcome.verdict && service->config().reveal_gold_feedback) {
                      body["feedback"] = ojson{{"passed", outcome.verdict->passed}};
                    }
                    reply(res, 200, body);
                  } catch (const SubmitError& e) {
                    reply(res, submit_status(e.kind()),
                          ojson{{"accepted", false}, {"reason", e.code()}, {"message", e.what()}});
                  } catch (const ParseError& e) {
                    reply(res, 400,
                          ojson{{"accepted", false}, {"reason", "bad_request"}, {"message", e.what()}});
                  }
                });

    server.Get("/api/admin/progress", [this](const httplib::Request& req, httplib::Response& res) {
      if (admin_ok(req, res)) reply(res, 200, to_json(service->progress()));
    });
    server.Get("/api/admin/workers", [this](const httplib::Request& req, httplib::Response& res) {
      if (!admin_ok(req, res)) return;
      ojson arr = ojson::array();
      for (const auto& w : service->workers()) arr.push_back(to_json(w));
      reply(res, 200, arr);
    });
    server.Get("/api/admin/distribution",
               [this](const httplib::Request& req, httplib::Response& res) {
                 if (admin_ok(req, res)) reply(res, 200, to_json(service->distribution()));
               });
    server.Post("/api/admin/export", [this](const httplib::Request& req, httplib::Response& res) {
      if (!admin_ok(req, res)) return;
      ExportMode mode = ExportMode::Majority;
      try {
        if (!req.body.empty()) {
          const auto j = nlohmann::json::parse(req.body);
          if (j.contains("mode")) mode = parse_export_mode(j.at("mode").get<std::string>());
        }
      } catch (const std::exception& e) {
        reply(res, 400, ojson{{"error", e.what()}});
        return;
      }
      try {
        ojson body = to_json(service->export_labels(mode));
        body["mode"] = to_string(mode);
        body["path"] = service->default_export_path().string();
        reply(res, 200, body);
      } catch (const Error& e) {
        reply(res, 409, ojson{{"error", e.what()}});
      }
    });

    server.set_exception_handler(
        [](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
          std::string what = "internal error";
          try {
            std::rethrow_exception(ep);
          } catch (const std::exception& e) {
            what = e.what();
          } catch (...) {
          }
          reply(res, 500, ojson{{"error", what}});
        });
  }
};

HttpServer::HttpServer(Service& service, std::optional<std::string> admin_token)
    : impl_(std::make_unique<Impl>()) {
  impl_->service = &service;
  impl_->token = std::move(admin_token);
  impl_->server.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char*>(&yes), sizeof(yes));
  });
  impl_->server.set_tcp_nodelay(true);
  impl_->routes();
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  int bound = port;
  if (port == 0) {
    bound = impl_->server.bind_to_any_port(host);
  } else if (!impl_->server.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) throw Error("cannot listen on " + host + ":" + std::to_string(port));
  return bound;
}

void HttpServer::serve() {
  if (!impl_->server.listen_after_bind()) throw Error("server stopped with an error");
}

void HttpServer::stop() {
  if (impl_) impl_->server.stop();
}

void HttpServer::wait_until_ready() const { impl_->server.wait_until_ready(); }

struct HttpBackend::Impl {
  httplib::Client client;
  std::optional<std::string> token;
  Impl(const std::string& host, int port) : client(host, port) {}

  httplib::Headers headers(bool admin) const {
    httplib::Headers h;
    if (admin && token) h.emplace(kTokenHeader, *token);
    return h;
  }
};

HttpBackend::HttpBackend(const std::string& host, int port, std::optional<std::string> admin_token)
    : impl_(std::make_unique<Impl>(host, port)) {
  impl_->token = std::move(admin_token);
  impl_->client.set_keep_alive(true);
  impl_->client.set_tcp_nodelay(true);
}

HttpBackend::~HttpBackend() = default;
HttpBackend::HttpBackend(HttpBackend&&) noexcept = default;

HttpBackend::Response HttpBackend::get(const std::string& path, bool admin) {
  auto r = impl_->client.Get(path, impl_->headers(admin));
  if (!r) throw Error("GET " + path + " failed: " + httplib::to_string(r.error()));
  return {r->status, r->body};
}

HttpBackend::Response HttpBackend::post(const std::string& path, const std::string& body,
                                        bool admin) {
  auto r = impl_->client.Post(path, impl_->headers(admin), body, kJson);
  if (!r) throw Error("POST " + path + " failed: " + httplib::to_string(r.error()));
  return {r->status, r->body};
}

std::string HttpBackend::register_worker() {
  auto r = post("/api/workers", "{}");
  if (r.status != 201) throw Error("worker registration returned " + std::to_string(r.status));
  return r.json().at("worker_id").get<std::string>();
}

std::optional<TaskRef> HttpBackend::next_task(const std::string& worker, Timestamp) {
  auto r = get("/api/workers/" + worker + "/next-task");
  if (r.status == 204) return std::nullopt;
  if (r.status != 200) throw Error("next-task returned " + std::to_string(r.status));
  const auto j = r.json();
  return TaskRef{j.at("assignment_id").get<std::uint64_t>(),
                 j.at("review").at("review_id").get<std::string>()};
}

bool HttpBackend::submit(std::uint64_t id, const Submission& s, Timestamp) {
  ojson body{{"class", to_string(s.label)}, {"spans", spans_to_json(s.spans)}};
  if (s.review_id) body["review_id"] = *s.review_id;
  auto r = post("/api/assignments/" + std::to_string(id) + "/label", body.dump());
  if (r.status >= 500) throw Error("label returned " + std::to_string(r.status));
  return r.json().value("accepted", false);
}

}  // namespace crowdqc
