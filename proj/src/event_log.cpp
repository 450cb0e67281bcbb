#include "crowdqc/event_log.hpp"

#include <array>
#include <fstream>
#include <iterator>
#include <utility>

#include <unistd.h>

namespace crowdqc {

namespace {

constexpr std::array<std::pair<EventKind, std::string_view>, 6> kKindNames{{
    {EventKind::WorkerRegistered, "worker_registered"},
    {EventKind::Assigned, "assigned"},
    {EventKind::Submitted, "submitted"},
    {EventKind::Verdict, "verdict"},
    {EventKind::Excluded, "excluded"},
    {EventKind::Expired, "expired"},
}};

}  // namespace

std::string_view to_string(EventKind k) {
  for (const auto& [kind, name] : kKindNames) {
    if (kind == k) return name;
  }
  return "unknown";
}

EventKind parse_event_kind(std::string_view s) {
  for (const auto& [kind, name] : kKindNames) {
    if (name == s) return kind;
  }
  throw Error("unknown event kind \"" + std::string(s) + "\"");
}

std::string serialize(const EventRecord& e) {
  nlohmann::ordered_json j;
  j["seq"] = e.seq;
  j["ts"] = e.timestamp.count();
  j["kind"] = to_string(e.kind);
  j["payload"] = e.payload;
  return j.dump();
}

EventRecord parse_event(std::string_view line) {
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(std::string("malformed event: ") + e.what());
  }
  if (!j.is_object() || !j.contains("seq") || !j["seq"].is_number_unsigned() ||
      !j.contains("ts") || !j["ts"].is_number_integer() || !j.contains("kind") ||
      !j["kind"].is_string() || !j.contains("payload") || !j["payload"].is_object()) {
    throw Error("event lacks seq, ts, kind or payload");
  }
  EventRecord e;
  e.seq = j["seq"].get<std::uint64_t>();
  e.timestamp = Timestamp(j["ts"].get<std::int64_t>());
  e.kind = parse_event_kind(j["kind"].get<std::string>());
  e.payload = std::move(j["payload"]);
  return e;
}

LoadedLog read_event_log(const std::filesystem::path& path) {
  LoadedLog out;
  std::ifstream in(path, std::ios::binary);
  if (!in) return out;
  const std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  std::size_t pos = 0;
  while (pos < data.size()) {
    const auto nl = data.find('\n', pos);
    const bool terminated = nl != std::string::npos;
    const std::size_t end = terminated ? nl : data.size();
    const std::string_view line(data.data() + pos, end - pos);
    const bool last = !terminated || nl + 1 == data.size();
    const std::uint64_t expected = out.records.empty() ? 1 : out.records.back().seq + 1;

    std::optional<EventRecord> rec;
    std::string problem;
    if (!terminated) {
      problem = "unterminated line";
    } else {
      try {
        rec = parse_event(line);
      } catch (const Error& e) {
        problem = e.what();
      }
    }
    if (!rec) {
      if (last) {
        out.warning = "dropped torn final event (expected seq " + std::to_string(expected) +
                      "): " + problem;
        break;
      }
      throw CorruptLogError(expected, problem);
    }
    if (rec->seq != expected) {
      throw CorruptLogError(rec->seq, "expected seq " + std::to_string(expected));
    }
    out.records.push_back(std::move(*rec));
    pos = end + 1;
    out.valid_bytes = pos;
  }
  return out;
}

EventLog::EventLog(std::filesystem::path path, std::uint64_t next_seq,
                   std::optional<std::uintmax_t> valid_bytes)
    : path_(std::move(path)), next_seq_(next_seq) {
  if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
  if (valid_bytes && std::filesystem::exists(path_) &&
      std::filesystem::file_size(path_) != *valid_bytes) {
    std::filesystem::resize_file(path_, *valid_bytes);
  }
  file_ = std::fopen(path_.c_str(), "ab");
  if (!file_) throw Error("cannot open event log " + path_.string());
}

EventLog::~EventLog() {
  if (file_) std::fclose(file_);
}

void EventLog::append(std::span<EventRecord> records) {
  if (records.empty()) return;
  std::string buf;
  std::uint64_t seq = next_seq_;
  for (auto& r : records) {
    r.seq = seq++;
    buf += serialize(r);
    buf += '\n';
  }
  if (std::fwrite(buf.data(), 1, buf.size(), file_) != buf.size() || std::fflush(file_) != 0 ||
      ::fsync(::fileno(file_)) != 0) {
    throw Error("write to event log " + path_.string() + " failed");
  }
  next_seq_ = seq;
}

}  // namespace crowdqc
