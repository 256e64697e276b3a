#include "dualloop/types.hpp"

#include <algorithm>
#include <cctype>
#include <string>

namespace dualloop {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace

std::string_view to_string(Direction d) {
  switch (d) {
    case Direction::Up: return "up";
    case Direction::Down: return "down";
    case Direction::Left: return "left";
    case Direction::Right: return "right";
  }
  return "?";
}

std::optional<Direction> parse_direction(std::string_view text) {
  const std::string s = lower(text);
  for (Direction d : kDirections) {
    if (s == to_string(d)) return d;
  }
  return std::nullopt;
}

Cell offset(Cell c, Direction d) {
  switch (d) {
    case Direction::Up: return {c.x, c.y - 1};
    case Direction::Down: return {c.x, c.y + 1};
    case Direction::Left: return {c.x - 1, c.y};
    case Direction::Right: return {c.x + 1, c.y};
  }
  return c;
}

std::string_view to_string(PersonaKind p) {
  switch (p) {
    case PersonaKind::Emotion: return "emotion";
    case PersonaKind::Rational: return "rational";
    case PersonaKind::Habitual: return "habitual";
    case PersonaKind::RiskMonitor: return "risk_monitor";
    case PersonaKind::SocialCognition: return "social_cognition";
  }
  return "?";
}

std::string_view display_name(PersonaKind p) {
  switch (p) {
    case PersonaKind::Emotion: return "Emotion";
    case PersonaKind::Rational: return "Rational";
    case PersonaKind::Habitual: return "Habitual";
    case PersonaKind::RiskMonitor: return "Risk-Monitor";
    case PersonaKind::SocialCognition: return "Social-Cognition";
  }
  return "?";
}

std::optional<PersonaKind> parse_persona(std::string_view text) {
  std::string s = lower(text);
  std::replace(s.begin(), s.end(), '-', '_');
  for (PersonaKind p : kPersonas) {
    if (s == to_string(p)) return p;
  }
  if (s == "emotional") return PersonaKind::Emotion;
  if (s == "habit") return PersonaKind::Habitual;
  if (s == "risk" || s == "riskmonitor") return PersonaKind::RiskMonitor;
  if (s == "social" || s == "socialcognition") return PersonaKind::SocialCognition;
  return std::nullopt;
}

}  // namespace dualloop
