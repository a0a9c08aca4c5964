#pragma once

#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace churn {

enum class EventKind { Login, StageClear, GetResource, GetCharacter };

const char* kind_name(EventKind k);
EventKind kind_from_name(const std::string& name);  // throws on unknown kind

// One raw log record. Only the payload field matching `kind` is meaningful;
// the wire format carries exactly that key and the parser enforces it.
struct GameEvent {
  std::string user_id;
  int day = 0;
  EventKind kind = EventKind::Login;
  long long session_seconds = 0;  // Login
  int stage_id = 0;               // StageClear
  long long resource_amount = 0;  // GetResource
  std::string character_id;       // GetCharacter
};

struct UserTimeline {
  std::string user_id;
  std::vector<GameEvent> events;  // sorted by day, stable within a day
  int first_play_day = 0;
  int last_play_day = 0;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(int line, const std::string& reason)
      : std::runtime_error("line " + std::to_string(line) + ": " + reason), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

// Wire format: UTF-8, one JSON object per line with keys user, day, kind and
// the kind-specific payload key. Blank lines are ignored. Canonical
// serialization writes keys in the order user, day, kind, payload with no
// extra whitespace, so serialize(parse(x)) round-trips canonical files
// byte-identically.
std::vector<GameEvent> parse_events(std::istream& in);
std::string serialize_event(const GameEvent& e);
void serialize_events(const std::vector<GameEvent>& events, std::ostream& out);

std::map<std::string, UserTimeline> build_timelines(const std::vector<GameEvent>& events);

}  // namespace churn
