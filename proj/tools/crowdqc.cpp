// crowdqc: operator CLI for labeling campaigns and the baseline classifier.

#include <csignal>
#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "crowdqc/baseline/classifier.hpp"
#include "crowdqc/baseline/datasets.hpp"
#include "crowdqc/config.hpp"
#include "crowdqc/corpus.hpp"
#include "crowdqc/http_api.hpp"
#include "crowdqc/service.hpp"
#include "crowdqc/simulator.hpp"

using namespace crowdqc;
using ojson = nlohmann::ordered_json;

namespace {

struct Globals {
  std::string config;
  std::uint64_t seed = 1;
  bool seed_set = false;
  std::string format = "text";
};

void emit(const Globals& g, const ojson& j, const std::string& text) {
  if (g.format == "json") {
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << text;
  }
}

CampaignConfig require_config(const Globals& g) {
  if (g.config.empty()) throw Error("--config is required");
  auto c = CampaignConfig::load(g.config);
  if (g.seed_set) c.seed = g.seed;
  return c;
}

ojson metrics_json(const baseline::MetricsReport& m) {
  auto cls = [](const baseline::ClassMetrics& c) {
    return ojson{{"precision", c.precision}, {"recall", c.recall}, {"f1", c.f1},
                 {"support", c.support}};
  };
  ojson per = ojson::object();
  for (std::size_t i = 0; i < m.class_names.size(); ++i) per[m.class_names[i]] = cls(m.per_class[i]);
  ojson conf = ojson::array();
  for (Eigen::Index r = 0; r < m.confusion.rows(); ++r) {
    ojson row = ojson::array();
    for (Eigen::Index c = 0; c < m.confusion.cols(); ++c) row.push_back(m.confusion(r, c));
    conf.push_back(row);
  }
  return ojson{{"per_class", per}, {"weighted", cls(m.weighted)}, {"accuracy", m.accuracy},
               {"confusion", conf}};
}

std::string metrics_text(const baseline::MetricsReport& m) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(3);
  s << "class       precision  recall  f1     support\n";
  auto line = [&](const std::string& name, const baseline::ClassMetrics& c) {
    s << name << std::string(name.size() < 12 ? 12 - name.size() : 1, ' ') << c.precision
      << "      " << c.recall << "   " << c.f1 << "  " << c.support << "\n";
  };
  for (std::size_t i = 0; i < m.class_names.size(); ++i) line(m.class_names[i], m.per_class[i]);
  line("weighted", m.weighted);
  s << "accuracy " << m.accuracy << "\n";
  return s.str();
}

// gen-corpus

int cmd_gen_corpus(const Globals& g, const std::filesystem::path& out, std::size_t n,
                   std::optional<double> gold_fraction) {
  SyntheticConfig sc;
  sc.n_reviews = n;
  if (gold_fraction) sc.gold_fraction = *gold_fraction;
  const auto corpus = generate_synthetic_corpus(sc, g.seed);
  std::filesystem::create_directories(out);
  save_reviews(out / "reviews.jsonl", corpus.reviews, ReviewFormat::Jsonl);
  save_gold(out / "gold.jsonl", corpus.gold);
  {
    std::ofstream t(out / "truth.jsonl");
    write_truth(t, corpus.truth);
    if (!t) throw Error("cannot write " + (out / "truth.jsonl").string());
  }
  CampaignConfig c;
  c.corpus = "reviews.jsonl";
  c.gold = "gold.jsonl";
  c.truth = "truth.jsonl";
  c.data_dir = "data";
  c.seed = g.seed;
  {
    std::ofstream cf(out / "campaign.conf");
    write_config(cf, c);
  }
  emit(g,
       ojson{{"dir", out.string()}, {"reviews", corpus.reviews.size()},
             {"gold", corpus.gold.size()}, {"seed", g.seed}},
       "wrote " + std::to_string(corpus.reviews.size()) + " reviews (" +
           std::to_string(corpus.gold.size()) + " gold) to " + out.string() + "\n");
  return 0;
}

// serve

int cmd_serve(const Globals& g, const std::string& listen) {
  auto config = require_config(g);
  if (!listen.empty()) {
    const auto colon = listen.rfind(':');
    if (colon == std::string::npos) throw Error("--listen must be host:port");
    config.host = listen.substr(0, colon);
    config.port = std::stoi(listen.substr(colon + 1));
  }

  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  Service service(config);
  for (const auto& w : service.replay_warnings()) std::cerr << "warning: " << w << "\n";
  HttpServer server(service);
  const int port = server.bind(config.host, config.port);
  std::cerr << "replayed " << service.replayed_events() << " events; listening on "
            << config.host << ":" << port << "\n";

  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    server.stop();
  });
  server.serve();
  if (waiter.joinable()) {
    pthread_kill(waiter.native_handle(), SIGTERM);
    waiter.join();
  }
  return 0;
}

// simulate

struct SimulateArgs {
  std::size_t reviews = 1000;
  std::size_t good = 15;
  std::size_t bad = 5;
  std::string backend = "service";
  std::string data_dir;
  std::string export_path;
  std::string export_mode = "per_annotation";
  bool no_filter = false;
};

int cmd_simulate(const Globals& g, const SimulateArgs& a) {
  SyntheticCorpus corpus;
  QcPolicy policy;
  std::uint64_t seed = g.seed;
  CampaignConfig config;
  if (!g.config.empty()) {
    config = require_config(g);
    if (!config.truth) throw Error("simulation needs a truth file in the config");
    config.validate();
    corpus.reviews = load_reviews(config.corpus, format_for(config.corpus));
    corpus.gold = load_gold(config.gold, &corpus.reviews);
    std::ifstream t(*config.truth);
    corpus.truth = read_truth(t);
    policy = config.policy;
    seed = config.seed;
  } else {
    SyntheticConfig sc;
    sc.n_reviews = a.reviews;
    corpus = generate_synthetic_corpus(sc, seed);
  }
  if (a.no_filter) {
    policy.max_gold_error_rate = 1.0;
    policy.qual_pass_ratio = 0.0;
  }
  config.policy = policy;
  config.seed = seed;
  if (!a.data_dir.empty()) config.data_dir = a.data_dir;

  const auto profiles = mixed_pool(a.good, a.bad, seed);
  auto reviews = std::make_shared<const ReviewSet>(corpus.reviews);
  auto gold = std::make_shared<const GoldSet>(corpus.gold);
  CampaignDriver driver(*reviews, corpus.truth, profiles, seed);
  CampaignReport report;
  AnnotationStore store;

  if (a.backend == "campaign") {
    Campaign campaign(reviews, gold, policy, seed);
    InProcessBackend backend(campaign);
    driver.run(backend);
    report = make_report(campaign, driver, corpus.truth, seed);
    store = campaign.store();
  } else if (a.backend == "service" || a.backend == "http") {
    if (std::filesystem::exists(config.event_log_path()) &&
        std::filesystem::file_size(config.event_log_path()) > 0) {
      throw Error("data directory " + config.data_dir.string() + " already holds an event log");
    }
    Service service(config, reviews, gold);
    if (a.backend == "service") {
      ServiceBackend backend(service);
      driver.run(backend);
    } else {
      HttpServer server(service);
      const int port = server.bind("127.0.0.1", 0);
      std::thread t([&] { server.serve(); });
      server.wait_until_ready();
      try {
        HttpBackend backend("127.0.0.1", port);
        driver.run(backend);
      } catch (...) {
        server.stop();
        t.join();
        throw;
      }
      server.stop();
      t.join();
    }
    service.inspect([&](const Campaign& c) {
      report = make_report(c, driver, corpus.truth, seed);
      store = c.store();
    });
    report.transcript = config.event_log_path().string();
  } else {
    throw Error("unknown backend \"" + a.backend + "\"");
  }

  ojson j = to_json(report);
  if (!a.export_path.empty()) {
    const auto mode = parse_export_mode(a.export_mode);
    const auto s = export_dataset(store, *reviews, mode, a.export_path, seed);
    j["export"] = to_json(s);
    j["export"]["path"] = a.export_path;
  }
  std::ostringstream text;
  text << "seed " << seed << ": " << report.reviews_complete << "/" << report.reviews
       << " reviews complete, majority accuracy " << report.majority_accuracy << "\n"
       << "excluded: " << report.inaccurate_excluded() << " inaccurate, "
       << report.accurate_excluded() << " accurate workers\n";
  emit(g, j, text.str());
  return 0;
}

// export / stats

int cmd_export(const Globals& g, const std::string& mode_name, const std::string& out) {
  Service service(require_config(g));
  for (const auto& w : service.replay_warnings()) std::cerr << "warning: " << w << "\n";
  const auto mode = parse_export_mode(mode_name);
  const std::filesystem::path path = out.empty() ? service.default_export_path() : std::filesystem::path(out);
  const auto s = service.export_labels(mode, path);
  for (const auto& id : s.tied_reviews) std::cerr << "export: review " << id << " is tied, skipped\n";
  ojson j = to_json(s);
  j["mode"] = to_string(mode);
  j["path"] = path.string();
  emit(g, j,
       "exported " + std::to_string(s.rows) + " rows to " + path.string() + " (" +
           std::to_string(s.quarantined) + " quarantined, " + std::to_string(s.tied_skipped) +
           " tied)\n");
  return 0;
}

int cmd_stats(const Globals& g) {
  Service service(require_config(g));
  for (const auto& w : service.replay_warnings()) std::cerr << "warning: " << w << "\n";
  const auto p = service.progress();
  const auto d = service.distribution();
  ojson j{{"progress", to_json(p)}, {"distribution", to_json(d)}};
  std::ostringstream s;
  s << "reviews complete " << p.reviews_complete << "/" << (p.corpus_size - p.gold_reviews)
    << ", open assignments " << p.open_assignments << "\n";
  s << "workers qualifying " << p.workers_by_phase[0] << ", active " << p.workers_by_phase[1]
    << ", excluded " << p.workers_by_phase[2] << "\n";
  for (auto c : kAllLabels) s << to_string(c) << " " << d[c] << "\n";
  emit(g, j, s.str());
  return 0;
}

// train / evaluate

struct TrainArgs {
  std::string data;
  std::string model;
  std::string mode = "whole";
  std::optional<std::uint64_t> split_seed;
  bool row_split = false;
  baseline::ClassifierConfig classifier;
  bool subwords = false;
  std::string vectors;
};

int cmd_train(const Globals& g, TrainArgs a) {
  const auto mode = baseline::parse_dataset_mode(a.mode);
  const auto rows = load_labeled(a.data);
  auto examples = baseline::build_dataset(rows, mode);
  if (a.row_split) examples = baseline::ungrouped(std::move(examples));
  const std::uint64_t split_seed = a.split_seed.value_or(g.seed);
  auto split = baseline::split_80_20(examples, split_seed);
  for (const auto& w : split.warnings) std::cerr << "warning: " << w << "\n";

  a.classifier.seed = g.seed;
  if (a.subwords) a.classifier.subwords = baseline::SubwordRange{};
  if (!a.vectors.empty()) a.classifier.pretrained_vectors = a.vectors;
  baseline::TrainingLog log;
  auto model = baseline::train(split.train, a.classifier, &log);
  for (const auto& w : log.warnings) std::cerr << "warning: " << w << "\n";
  model.metadata()["mode"] = std::string(baseline::to_string(mode));
  model.metadata()["split_seed"] = std::to_string(split_seed);
  model.metadata()["split"] = a.row_split ? "rows" : "reviews";
  model.metadata()["data"] = std::filesystem::absolute(a.data).string();
  model.metadata()["train_rows"] = std::to_string(split.train.size());
  model.metadata()["test_rows"] = std::to_string(split.test.size());
  baseline::save_model(a.model, model);

  ojson j{{"model", a.model},
          {"mode", baseline::to_string(mode)},
          {"split_seed", split_seed},
          {"train_rows", split.train.size()},
          {"test_rows", split.test.size()},
          {"epoch_loss", log.epoch_loss}};
  emit(g, j,
       "trained on " + std::to_string(split.train.size()) + " rows (" +
           std::to_string(split.test.size()) + " held out), final loss " +
           (log.epoch_loss.empty() ? std::string("n/a") : std::to_string(log.epoch_loss.back())) +
           "; saved " + a.model + "\n");
  return 0;
}

int cmd_evaluate(const Globals& g, const std::string& model_path, std::string data, bool all_rows) {
  const auto model = baseline::load_model(model_path);
  const auto& meta = model.metadata();
  auto get = [&](const std::string& k) -> std::string {
    auto it = meta.find(k);
    if (it == meta.end()) throw Error("model lacks \"" + k + "\" metadata");
    return it->second;
  };
  if (data.empty()) data = get("data");
  const auto mode = baseline::parse_dataset_mode(get("mode"));
  const auto rows = load_labeled(data);
  auto examples = baseline::build_dataset(rows, mode);
  if (auto it = meta.find("split"); it != meta.end() && it->second == "rows") {
    examples = baseline::ungrouped(std::move(examples));
  }
  std::vector<baseline::Example> test;
  if (all_rows) {
    test = examples;
  } else {
    test = baseline::split_80_20(examples, std::stoull(get("split_seed"))).test;
  }
  const auto report = baseline::evaluate(model, test);
  const auto err_len = baseline::error_length_analysis(model, test);
  ojson j = metrics_json(report);
  j["mode"] = baseline::to_string(mode);
  j["rows"] = test.size();
  j["error_length_ratio"] = err_len ? ojson(*err_len) : ojson(nullptr);
  std::string text = metrics_text(report);
  if (err_len) text += "misclassified/correct mean length " + std::to_string(*err_len) + "\n";
  emit(g, j, text);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"crowdqc: crowd labeling campaigns with gold-standard quality control"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "Campaign config file");
  app.add_option_function<std::uint64_t>(
      "--seed", [&](std::uint64_t s) { g.seed = s, g.seed_set = true; }, "Random seed");
  app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"json", "text"}));

  std::function<int()> run;

  auto* gen = app.add_subcommand("gen-corpus", "Write a synthetic corpus, gold set and config");
  std::string gen_out;
  std::size_t gen_n = 1000;
  std::optional<double> gen_gold;
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_option("--reviews", gen_n, "Number of reviews")->check(CLI::PositiveNumber);
  gen->add_option("--gold-fraction", gen_gold, "Share of reviews in the gold set")
      ->check(CLI::Range(0.0, 1.0));
  gen->callback([&] { run = [&] { return cmd_gen_corpus(g, gen_out, gen_n, gen_gold); }; });

  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  std::string listen;
  serve->add_option("--listen", listen, "host:port, overrides the config");
  serve->callback([&] { run = [&] { return cmd_serve(g, listen); }; });

  auto* sim = app.add_subcommand("simulate", "Run a campaign with simulated workers");
  SimulateArgs sa;
  sim->add_option("--reviews", sa.reviews, "Synthetic corpus size when no config is given");
  sim->add_option("--good", sa.good, "Accurate workers (p=0.95)");
  sim->add_option("--bad", sa.bad, "Inaccurate workers (p=0.4)");
  sim->add_option("--backend", sa.backend, "service (default), http, or campaign (in memory, no log)")
      ->check(CLI::IsMember({"campaign", "service", "http"}));
  sim->add_option("--data-dir", sa.data_dir, "Event log directory for service/http backends");
  sim->add_option("--export", sa.export_path, "Write the labeled dataset here");
  sim->add_option("--export-mode", sa.export_mode, "per_annotation or majority");
  sim->add_flag("--no-filter", sa.no_filter, "Disable qualification and error-rate exclusion");
  sim->callback([&] { run = [&] { return cmd_simulate(g, sa); }; });

  auto* exp = app.add_subcommand("export", "Export labels of a campaign");
  std::string exp_mode = "majority", exp_out;
  exp->add_option("--mode", exp_mode, "per_annotation or majority");
  exp->add_option("--out", exp_out, "Output path (default: <data_dir>/labeled.jsonl)");
  exp->callback([&] { run = [&] { return cmd_export(g, exp_mode, exp_out); }; });

  auto* stats = app.add_subcommand("stats", "Show campaign progress and label distribution");
  stats->callback([&] { run = [&] { return cmd_stats(g); }; });

  auto* train = app.add_subcommand("train", "Train the baseline classifier on labeled.jsonl");
  TrainArgs ta;
  train->add_option("--data", ta.data, "labeled.jsonl")->required();
  train->add_option("--model", ta.model, "Output model file")->required();
  train->add_option("--mode", ta.mode, "whole or spans")->check(CLI::IsMember({"whole", "spans"}));
  train->add_option("--split-seed", ta.split_seed, "80/20 split seed (default: --seed)");
  train->add_flag("--row-split", ta.row_split, "Split rows independently instead of keeping reviews together");
  train->add_option("--epochs", ta.classifier.epochs, "Training epochs")->capture_default_str();
  train->add_option("--dim", ta.classifier.dim, "Embedding dimension")->capture_default_str();
  train->add_option("--ngrams", ta.classifier.word_ngrams, "Longest word n-gram")->capture_default_str();
  train->add_option("--lr", ta.classifier.learning_rate, "Initial learning rate")->capture_default_str();
  train->add_option("--buckets", ta.classifier.hash_buckets, "Hash buckets, a power of two")->capture_default_str();
  train->add_flag("--subwords", ta.subwords, "Add character 3..6-grams");
  train->add_option("--vectors", ta.vectors, "Pretrained vector file");
  train->callback([&] { run = [&] { return cmd_train(g, ta); }; });

  auto* eval = app.add_subcommand("evaluate", "Evaluate a model on its held-out split");
  std::string eval_model, eval_data;
  bool eval_all = false;
  eval->add_option("--model", eval_model, "Model file")->required();
  eval->add_option("--data", eval_data, "labeled.jsonl (default: the training data)");
  eval->add_flag("--all", eval_all, "Evaluate on every row instead of the held-out split");
  eval->callback([&] { run = [&] { return cmd_evaluate(g, eval_model, eval_data, eval_all); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }

  try {
    return run();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
