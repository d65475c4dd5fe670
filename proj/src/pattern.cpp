#include <algorithm>
#include <map>
#include <set>

#include "chainflow/action.hpp"
#include "chainflow/error.hpp"
#include "chainflow/hash.hpp"

namespace chainflow {

namespace {

std::vector<std::string> first_occurrence(const std::vector<std::string>& events,
                                          const std::string& skip = {}) {
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (const auto& e : events) {
    if (e == skip) continue;
    if (seen.insert(e).second) out.push_back(e);
  }
  return out;
}

}  // namespace

const char* to_string(PatternKind kind) {
  switch (kind) {
    case PatternKind::UniqueEvents: return "UniqueEvents";
    case PatternKind::AllRepeatK: return "AllRepeatK";
    case PatternKind::AllRepeatKPlusBulk: return "AllRepeatKPlusBulk";
    case PatternKind::OneRepeatsRestOnce: return "OneRepeatsRestOnce";
    case PatternKind::Mixed: return "Mixed";
  }
  return "?";
}

const char* to_string(ActionType type) {
  switch (type) {
    case ActionType::Primary: return "Primary";
    case ActionType::Secondary: return "Secondary";
    case ActionType::Both: return "Both";
  }
  return "?";
}

ActionType parse_action_type(std::string_view text) {
  if (text == "Primary") return ActionType::Primary;
  if (text == "Secondary") return ActionType::Secondary;
  if (text == "Both") return ActionType::Both;
  throw Error(ErrorKind::Schema, "unknown action type '" + std::string(text) + "'");
}

PatternKind match_pattern(const std::vector<std::string>& names, unsigned repeat_threshold) {
  if (names.empty()) throw Error(ErrorKind::EmptySequence, "empty event sequence");
  std::map<std::string, std::size_t> counts;
  for (const auto& n : names) ++counts[n];

  std::size_t ones = 0, max_count = 0, min_count = names.size();
  std::set<std::size_t> repeated;  // distinct counts >= 2
  for (const auto& [name, c] : counts) {
    if (c == 1) ++ones;
    else repeated.insert(c);
    max_count = std::max(max_count, c);
    min_count = std::min(min_count, c);
  }
  const std::size_t distinct = counts.size();

  if (max_count == 1) return PatternKind::UniqueEvents;
  if (min_count == max_count) return PatternKind::AllRepeatK;
  if (ones == 1 && repeated.size() == 1) return PatternKind::AllRepeatKPlusBulk;
  if (ones == distinct - 1 && max_count >= repeat_threshold) {
    return PatternKind::OneRepeatsRestOnce;
  }
  return PatternKind::Mixed;
}

std::vector<std::string> get_events(const std::vector<std::string>& events, PatternKind pattern,
                                    unsigned repeat_threshold) {
  const auto actual = match_pattern(events, repeat_threshold);
  if (actual != pattern) {
    throw Error(ErrorKind::PatternMismatch, std::string("events match ") + to_string(actual) +
                                                ", not " + to_string(pattern));
  }
  switch (pattern) {
    case PatternKind::UniqueEvents:
    case PatternKind::Mixed:
      return events;
    case PatternKind::AllRepeatK:
    case PatternKind::OneRepeatsRestOnce:
      return first_occurrence(events);
    case PatternKind::AllRepeatKPlusBulk: {
      std::map<std::string, std::size_t> counts;
      for (const auto& e : events) ++counts[e];
      std::string bulk;
      for (const auto& [name, c] : counts) {
        if (c == 1) bulk = name;
      }
      auto out = first_occurrence(events, bulk);
      out.push_back(bulk);
      return out;
    }
  }
  return events;
}

std::string action_uuid(const std::vector<std::string>& events) {
  std::string blob;
  for (const auto& e : events) {
    blob += std::to_string(e.size());
    blob += ':';
    blob += e;
  }
  const auto h = sha256_hex(blob);
  return h.substr(0, 8) + "-" + h.substr(8, 4) + "-" + h.substr(12, 4) + "-" + h.substr(16, 4) +
         "-" + h.substr(20, 12);
}

}  // namespace chainflow
