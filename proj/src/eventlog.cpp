#include "churn/eventlog.hpp"

#include <algorithm>
#include <istream>
#include <ostream>

#include <json.hpp>

namespace churn {

using nlohmann::json;

const char* kind_name(EventKind k) {
  switch (k) {
    case EventKind::Login: return "login";
    case EventKind::StageClear: return "stage_clear";
    case EventKind::GetResource: return "get_resource";
    case EventKind::GetCharacter: return "get_character";
  }
  return "?";
}

EventKind kind_from_name(const std::string& name) {
  if (name == "login") return EventKind::Login;
  if (name == "stage_clear") return EventKind::StageClear;
  if (name == "get_resource") return EventKind::GetResource;
  if (name == "get_character") return EventKind::GetCharacter;
  throw std::runtime_error("unknown event kind: " + name);
}

static const char* payload_key(EventKind k) {
  switch (k) {
    case EventKind::Login: return "session_seconds";
    case EventKind::StageClear: return "stage_id";
    case EventKind::GetResource: return "resource_amount";
    case EventKind::GetCharacter: return "character_id";
  }
  return "?";
}

static GameEvent parse_record(const json& j, int line) {
  if (!j.is_object()) throw ParseError(line, "record is not an object");
  for (const char* key : {"user", "day", "kind"}) {
    if (!j.contains(key)) throw ParseError(line, std::string("missing field: ") + key);
  }
  GameEvent e;
  if (!j["user"].is_string()) throw ParseError(line, "field user must be a string");
  e.user_id = j["user"].get<std::string>();
  if (e.user_id.empty()) throw ParseError(line, "field user must be non-empty");
  if (!j["day"].is_number_integer()) throw ParseError(line, "field day must be an integer");
  e.day = j["day"].get<int>();
  if (e.day < 0) throw ParseError(line, "field day out of range: must be >= 0");
  if (!j["kind"].is_string()) throw ParseError(line, "field kind must be a string");
  try {
    e.kind = kind_from_name(j["kind"].get<std::string>());
  } catch (const std::exception& ex) {
    throw ParseError(line, ex.what());
  }

  const std::string want = payload_key(e.kind);
  if (!j.contains(want)) {
    throw ParseError(line, "missing field: " + want + " (required for kind " +
                               std::string(kind_name(e.kind)) + ")");
  }
  if (j.size() != 4) {
    for (auto it = j.begin(); it != j.end(); ++it) {
      const std::string& k = it.key();
      if (k != "user" && k != "day" && k != "kind" && k != want) {
        throw ParseError(line, "unexpected field: " + k);
      }
    }
  }

  const json& payload = j[want];
  switch (e.kind) {
    case EventKind::Login:
      if (!payload.is_number_integer()) throw ParseError(line, "session_seconds must be an integer");
      e.session_seconds = payload.get<long long>();
      if (e.session_seconds < 0) throw ParseError(line, "session_seconds out of range: must be >= 0");
      break;
    case EventKind::StageClear:
      if (!payload.is_number_integer()) throw ParseError(line, "stage_id must be an integer");
      e.stage_id = payload.get<int>();
      if (e.stage_id < 1) throw ParseError(line, "stage_id out of range: must be >= 1");
      break;
    case EventKind::GetResource:
      if (!payload.is_number_integer()) throw ParseError(line, "resource_amount must be an integer");
      e.resource_amount = payload.get<long long>();
      if (e.resource_amount < 0) throw ParseError(line, "resource_amount out of range: must be >= 0");
      break;
    case EventKind::GetCharacter:
      if (!payload.is_string()) throw ParseError(line, "character_id must be a string");
      e.character_id = payload.get<std::string>();
      if (e.character_id.empty()) throw ParseError(line, "character_id must be non-empty");
      break;
  }
  return e;
}

std::vector<GameEvent> parse_events(std::istream& in) {
  std::vector<GameEvent> events;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& ex) {
      throw ParseError(line_no, std::string("malformed record: ") + ex.what());
    }
    events.push_back(parse_record(j, line_no));
  }
  return events;
}

std::string serialize_event(const GameEvent& e) {
  std::string out = "{\"user\":" + json(e.user_id).dump() +
                    ",\"day\":" + std::to_string(e.day) +
                    ",\"kind\":\"" + kind_name(e.kind) + "\",";
  switch (e.kind) {
    case EventKind::Login:
      out += "\"session_seconds\":" + std::to_string(e.session_seconds);
      break;
    case EventKind::StageClear:
      out += "\"stage_id\":" + std::to_string(e.stage_id);
      break;
    case EventKind::GetResource:
      out += "\"resource_amount\":" + std::to_string(e.resource_amount);
      break;
    case EventKind::GetCharacter:
      out += "\"character_id\":" + json(e.character_id).dump();
      break;
  }
  out += "}";
  return out;
}

void serialize_events(const std::vector<GameEvent>& events, std::ostream& out) {
  for (const auto& e : events) out << serialize_event(e) << '\n';
}

std::map<std::string, UserTimeline> build_timelines(const std::vector<GameEvent>& events) {
  std::map<std::string, UserTimeline> timelines;
  for (const auto& e : events) {
    auto [it, fresh] = timelines.try_emplace(e.user_id);
    UserTimeline& t = it->second;
    if (fresh) {
      t.user_id = e.user_id;
      t.first_play_day = e.day;
      t.last_play_day = e.day;
    } else {
      t.first_play_day = std::min(t.first_play_day, e.day);
      t.last_play_day = std::max(t.last_play_day, e.day);
    }
    t.events.push_back(e);
  }
  for (auto& [id, t] : timelines) {
    std::stable_sort(t.events.begin(), t.events.end(),
                     [](const GameEvent& a, const GameEvent& b) { return a.day < b.day; });
  }
  return timelines;
}

}  // namespace churn
