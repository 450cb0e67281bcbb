#pragma once

#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

#include "crowdqc/service.hpp"
#include "crowdqc/simulator.hpp"

namespace crowdqc {

/// Value of CROWDQC_ADMIN_TOKEN, if set and non-empty.
std::optional<std::string> admin_token_from_env();

/// JSON body of `GET /api/workers/{id}/next-task`.
nlohmann::ordered_json task_json(const Assignment& a, const Review& r);

/// Decodes a label request body. Throws ParseError on a malformed body.
Submission parse_label_body(const std::string& body);

/// The worker and admin HTTP API over a Service.
///
/// Admin routes require the `X-Admin-Token` header when a token is set.
class HttpServer {
 public:
  explicit HttpServer(Service& service, std::optional<std::string> admin_token = admin_token_from_env());
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds the socket; port 0 picks a free port. Returns the bound port and
  /// throws crowdqc::Error when the address is unavailable.
  int bind(const std::string& host, int port);
  /// Serves until stop(); call bind() first.
  void serve();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Talks to a running server the way a simulated crowd would.
class HttpBackend {
 public:
  HttpBackend(const std::string& host, int port,
              std::optional<std::string> admin_token = admin_token_from_env());
  ~HttpBackend();
  HttpBackend(HttpBackend&&) noexcept;

  std::string register_worker();
  std::optional<TaskRef> next_task(const std::string& worker, Timestamp now);
  bool submit(std::uint64_t id, const Submission& s, Timestamp now);

  /// Raw request helpers; throw crowdqc::Error on a transport failure.
  struct Response {
    int status = 0;
    std::string body;
    nlohmann::json json() const { return body.empty() ? nlohmann::json() : nlohmann::json::parse(body); }
  };
  Response get(const std::string& path, bool admin = false);
  Response post(const std::string& path, const std::string& body, bool admin = false);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace crowdqc
