#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace dualloop {

/// Raised when a caller breaks an operation's precondition.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class BackendError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Direction : std::uint8_t { Up, Down, Left, Right };

/// Fixed enumeration order; also the tie-break order wherever directions compete.
inline constexpr std::array<Direction, 4> kDirections{Direction::Up, Direction::Down,
                                                      Direction::Left, Direction::Right};

std::string_view to_string(Direction d);
std::optional<Direction> parse_direction(std::string_view text);

/// Grid coordinates. y grows downward, so Up decrements y.
struct Cell {
  int x = 0;
  int y = 0;
  auto operator<=>(const Cell&) const = default;
};

Cell offset(Cell c, Direction d);

enum class PersonaKind : std::uint8_t { Emotion, Rational, Habitual, RiskMonitor, SocialCognition };

inline constexpr std::size_t kPersonaCount = 5;

/// Persona index order, used for state-key offsets and for committing results.
inline constexpr std::array<PersonaKind, kPersonaCount> kPersonas{
    PersonaKind::Emotion, PersonaKind::Rational, PersonaKind::Habitual, PersonaKind::RiskMonitor,
    PersonaKind::SocialCognition};

/// Arbitration tie-break order; also the column order of trust exports.
inline constexpr std::array<PersonaKind, kPersonaCount> kTrustOrder{
    PersonaKind::Rational, PersonaKind::Emotion, PersonaKind::RiskMonitor, PersonaKind::Habitual,
    PersonaKind::SocialCognition};

constexpr std::size_t index_of(PersonaKind p) { return static_cast<std::size_t>(p); }

std::string_view to_string(PersonaKind p);
std::string_view display_name(PersonaKind p);
/// Accepts canonical names plus short aliases ("risk", "social", "habit"), case-insensitive.
std::optional<PersonaKind> parse_persona(std::string_view text);

}  // namespace dualloop
