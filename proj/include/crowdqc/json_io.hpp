#pragma once

#include <json.hpp>

#include "crowdqc/corpus.hpp"
#include "crowdqc/error.hpp"

namespace crowdqc {

/// `[{"start":s,"end":e}, ...]`
inline nlohmann::ordered_json spans_to_json(const SpanList& spans) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& s : spans) {
    arr.push_back(nlohmann::ordered_json{{"start", s.start}, {"end", s.end}});
  }
  return arr;
}

template <class Json>
SpanList spans_from_json(const Json& j, std::size_t lineno = 0) {
  if (!j.is_array()) throw ParseError("\"spans\" must be an array", lineno);
  SpanList spans;
  for (const auto& s : j) {
    if (!s.is_object() || !s.contains("start") || !s.contains("end") ||
        !s["start"].is_number_unsigned() || !s["end"].is_number_unsigned()) {
      throw ParseError("span needs non-negative integer start/end", lineno);
    }
    spans.push_back({s["start"].template get<std::size_t>(),
                     s["end"].template get<std::size_t>()});
  }
  return spans;
}

}  // namespace crowdqc
