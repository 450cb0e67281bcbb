#include "crowdqc/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <ostream>

#include "crowdqc/error.hpp"

namespace crowdqc {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string unquote(std::string v) {
  if (v.size() >= 2 && v.front() == '"' && v.back() == '"') return v.substr(1, v.size() - 2);
  return v;
}

template <typename T>
T parse_number(const std::string& v, const std::string& key, std::size_t line) {
  T out{};
  const auto* end = v.data() + v.size();
  auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw ParseError("invalid value for " + key + ": \"" + v + "\"", line);
  }
  return out;
}

bool parse_bool(const std::string& v, const std::string& key, std::size_t line) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ParseError("invalid boolean for " + key + ": \"" + v + "\"", line);
}

}  // namespace

CampaignConfig CampaignConfig::parse(std::istream& in, const std::filesystem::path& base_dir) {
  CampaignConfig c;
  auto path = [&](const std::string& v) {
    std::filesystem::path p(v);
    return p.is_relative() && !base_dir.empty() ? base_dir / p : p;
  };
  using Setter = std::function<void(const std::string&, const std::string&, std::size_t)>;
  const std::map<std::string, Setter> setters = {
      {"corpus", [&](auto& v, auto&, auto) { c.corpus = path(v); }},
      {"gold", [&](auto& v, auto&, auto) { c.gold = path(v); }},
      {"truth", [&](auto& v, auto&, auto) { c.truth = path(v); }},
      {"data_dir", [&](auto& v, auto&, auto) { c.data_dir = path(v); }},
      {"seed", [&](auto& v, auto& k, auto l) { c.seed = parse_number<std::uint64_t>(v, k, l); }},
      {"ttl_seconds",
       [&](auto& v, auto& k, auto l) {
         c.ttl = std::chrono::seconds(parse_number<std::int64_t>(v, k, l));
       }},
      {"listen",
       [&](auto& v, auto& k, auto l) {
         const auto colon = v.rfind(':');
         if (colon == std::string::npos) throw ParseError("listen must be host:port", l);
         c.host = v.substr(0, colon);
         c.port = parse_number<int>(v.substr(colon + 1), k, l);
       }},
      {"reveal_gold_feedback",
       [&](auto& v, auto& k, auto l) { c.reveal_gold_feedback = parse_bool(v, k, l); }},
      {"span_threshold",
       [&](auto& v, auto& k, auto l) { c.policy.span_threshold = parse_number<double>(v, k, l); }},
      {"qual_questions",
       [&](auto& v, auto& k, auto l) {
         c.policy.qual_questions = parse_number<std::size_t>(v, k, l);
       }},
      {"qual_pass_ratio",
       [&](auto& v, auto& k, auto l) { c.policy.qual_pass_ratio = parse_number<double>(v, k, l); }},
      {"max_gold_error_rate",
       [&](auto& v, auto& k, auto l) {
         c.policy.max_gold_error_rate = parse_number<double>(v, k, l);
       }},
      {"min_gold_before_exclusion",
       [&](auto& v, auto& k, auto l) {
         c.policy.min_gold_before_exclusion = parse_number<std::size_t>(v, k, l);
       }},
      {"gold_interleave_rate",
       [&](auto& v, auto& k, auto l) {
         c.policy.gold_interleave_rate = parse_number<double>(v, k, l);
       }},
      {"worker_cap",
       [&](auto& v, auto& k, auto l) { c.policy.worker_cap = parse_number<std::size_t>(v, k, l); }},
      {"redundancy",
       [&](auto& v, auto& k, auto l) { c.policy.redundancy = parse_number<std::size_t>(v, k, l); }},
      {"span_metric",
       [&](auto& v, auto&, auto l) {
         try {
           c.policy.span_metric = parse_span_metric(v);
         } catch (const Error& e) {
           throw ParseError(e.what(), l);
         }
       }},
  };

  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string s = trim(line);
    if (s.empty() || s[0] == '#' || s[0] == '[') continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ParseError("expected key = value", lineno);
    const std::string key = trim(s.substr(0, eq));
    std::string value = trim(s.substr(eq + 1));
    if (!value.empty() && value[0] != '"') {
      if (auto hash = value.find('#'); hash != std::string::npos) value = trim(value.substr(0, hash));
    }
    value = unquote(value);
    auto it = setters.find(key);
    if (it == setters.end()) throw ParseError("unknown key \"" + key + "\"", lineno);
    it->second(value, key, lineno);
  }
  return c;
}

CampaignConfig CampaignConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path.string());
  return parse(in, path.parent_path());
}

void CampaignConfig::validate() const {
  policy.validate();
  if (corpus.empty() || !std::filesystem::exists(corpus)) {
    throw Error("corpus file not found: " + corpus.string());
  }
  if (gold.empty() || !std::filesystem::exists(gold)) {
    throw Error("gold file not found: " + gold.string());
  }
  if (truth && !std::filesystem::exists(*truth)) {
    throw Error("truth file not found: " + truth->string());
  }
  if (ttl.count() <= 0) throw Error("ttl must be positive");
  if (port < 0 || port > 65535) throw Error("port out of range");
}

void write_config(std::ostream& out, const CampaignConfig& c) {
  out << "corpus = \"" << c.corpus.string() << "\"\n"
      << "gold = \"" << c.gold.string() << "\"\n";
  if (c.truth) out << "truth = \"" << c.truth->string() << "\"\n";
  out << "data_dir = \"" << c.data_dir.string() << "\"\n"
      << "listen = \"" << c.host << ":" << c.port << "\"\n"
      << "seed = " << c.seed << "\n"
      << "ttl_seconds = " << std::chrono::duration_cast<std::chrono::seconds>(c.ttl).count() << "\n"
      << "reveal_gold_feedback = " << (c.reveal_gold_feedback ? "true" : "false") << "\n"
      << "\n[qc]\n"
      << "span_threshold = " << c.policy.span_threshold << "\n"
      << "span_metric = \"" << to_string(c.policy.span_metric) << "\"\n"
      << "qual_questions = " << c.policy.qual_questions << "\n"
      << "qual_pass_ratio = " << c.policy.qual_pass_ratio << "\n"
      << "max_gold_error_rate = " << c.policy.max_gold_error_rate << "\n"
      << "min_gold_before_exclusion = " << c.policy.min_gold_before_exclusion << "\n"
      << "gold_interleave_rate = " << c.policy.gold_interleave_rate << "\n"
      << "worker_cap = " << c.policy.worker_cap << "\n"
      << "redundancy = " << c.policy.redundancy << "\n";
}

}  // namespace crowdqc
