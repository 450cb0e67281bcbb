#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "crowdqc/annotation.hpp"
#include "crowdqc/error.hpp"

namespace crowdqc {

enum class EventKind { WorkerRegistered, Assigned, Submitted, Verdict, Excluded, Expired };

std::string_view to_string(EventKind k);
EventKind parse_event_kind(std::string_view s);

/// Commands are re-executed on replay; the other kinds are derived and only
/// cross-checked.
constexpr bool is_command(EventKind k) {
  return k == EventKind::WorkerRegistered || k == EventKind::Assigned ||
         k == EventKind::Submitted || k == EventKind::Expired;
}

struct EventRecord {
  std::uint64_t seq = 0;
  Timestamp timestamp{0};
  EventKind kind = EventKind::WorkerRegistered;
  nlohmann::ordered_json payload = nlohmann::ordered_json::object();
};

std::string serialize(const EventRecord& e);
/// Throws crowdqc::Error on malformed input.
EventRecord parse_event(std::string_view line);

class CorruptLogError : public Error {
 public:
  CorruptLogError(std::uint64_t seq, const std::string& what)
      : Error("event log corrupt at seq " + std::to_string(seq) + ": " + what), seq_(seq) {}
  std::uint64_t seq() const noexcept { return seq_; }

 private:
  std::uint64_t seq_;
};

struct LoadedLog {
  std::vector<EventRecord> records;
  /// Set when a torn final line was dropped.
  std::optional<std::string> warning;
  /// Byte length of the intact prefix.
  std::uintmax_t valid_bytes = 0;
};

/// Reads an event log. An unterminated or unparsable last line is dropped
/// with a warning; any other bad line, or a sequence number that does not
/// increase by one, throws CorruptLogError.
LoadedLog read_event_log(const std::filesystem::path& path);

/// Append-only writer. Each append is flushed and synced before returning.
class EventLog {
 public:
  /// Opens (creating if needed) and truncates the file to `valid_bytes` when given.
  EventLog(std::filesystem::path path, std::uint64_t next_seq,
           std::optional<std::uintmax_t> valid_bytes = std::nullopt);
  ~EventLog();
  EventLog(const EventLog&) = delete;
  EventLog& operator=(const EventLog&) = delete;

  /// Assigns sequence numbers and writes all records in one write.
  void append(std::span<EventRecord> records);
  std::uint64_t next_seq() const { return next_seq_; }
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::FILE* file_ = nullptr;
  std::uint64_t next_seq_;
};

}  // namespace crowdqc
