#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "crowdqc/goldqc.hpp"

namespace crowdqc {

/// Campaign settings, read from a `key = value` text file.
///
/// Blank lines, `#` comments and `[section]` headers are ignored; string
/// values may be double-quoted. Relative paths resolve against the config
/// file's directory.
struct CampaignConfig {
  std::filesystem::path corpus;
  std::filesystem::path gold;
  std::optional<std::filesystem::path> truth;  // simulations only
  std::filesystem::path data_dir = "data";
  QcPolicy policy;
  std::chrono::milliseconds ttl = std::chrono::minutes(30);
  std::uint64_t seed = 1;
  std::string host = "127.0.0.1";
  int port = 8080;
  bool reveal_gold_feedback = false;

  static CampaignConfig parse(std::istream& in,
                              const std::filesystem::path& base_dir = {});
  static CampaignConfig load(const std::filesystem::path& path);

  /// Throws crowdqc::Error if referenced files are missing or values invalid.
  void validate() const;
  std::filesystem::path event_log_path() const { return data_dir / "events.log"; }
};

void write_config(std::ostream& out, const CampaignConfig& config);

}  // namespace crowdqc
