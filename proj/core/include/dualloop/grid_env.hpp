#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

#include "dualloop/rng.hpp"
#include "dualloop/types.hpp"

namespace dualloop {

inline constexpr int kGridSize = 10;

enum class TileKind : std::uint8_t { Goal, Food, Trap, Safe };

char tile_letter(TileKind t);
std::optional<TileKind> tile_from_letter(char c);

/// Malformed map or state text. Line and column are 1-based; column 0 means "whole line".
class MapParseError : public std::runtime_error {
 public:
  MapParseError(std::size_t line, std::size_t column, const std::string& what);
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

class GridMap {
 public:
  using Tiles = std::array<TileKind, kGridSize * kGridSize>;

  /// Throws ContractViolation unless the map has a Goal and start is an in-bounds Safe cell.
  GridMap(const Tiles& tiles, Cell start);

  static constexpr int width() { return kGridSize; }
  static constexpr int height() { return kGridSize; }
  static constexpr bool in_bounds(Cell c) {
    return c.x >= 0 && c.x < kGridSize && c.y >= 0 && c.y < kGridSize;
  }

  TileKind at(Cell c) const { return tiles_[static_cast<std::size_t>(c.y * kGridSize + c.x)]; }
  Cell start() const { return start_; }
  const Tiles& tiles() const { return tiles_; }

  /// First Goal in row-major order.
  Cell goal() const;

  bool operator==(const GridMap&) const = default;

 private:
  Tiles tiles_;
  Cell start_;
};

struct EntityState {
  Cell position;
  int stamina = 1;
  double career_delta = 0.0;
  std::set<Cell> consumed_food;

  bool operator==(const EntityState&) const = default;
};

/// Entity at the map start with nothing consumed.
EntityState fresh_entity(const GridMap& map, int stamina);

enum class Event : std::uint8_t {
  ReachedGoal = 1U << 0U,
  AteFood = 1U << 1U,
  HitTrap = 1U << 2U,
  BumpedWall = 1U << 3U,
};

class EventSet {
 public:
  constexpr EventSet() = default;
  constexpr void insert(Event e) { bits_ |= static_cast<std::uint8_t>(e); }
  constexpr bool contains(Event e) const { return (bits_ & static_cast<std::uint8_t>(e)) != 0; }
  constexpr bool empty() const { return bits_ == 0; }
  constexpr std::uint8_t bits() const { return bits_; }
  bool operator==(const EventSet&) const = default;

 private:
  std::uint8_t bits_ = 0;
};

std::string_view to_string(Event e);
/// Space-separated event names in declaration order, or "none".
std::string describe(EventSet events);

struct TransitionOutcome {
  Cell new_position;
  EventSet events;
  double shared_reward = 0.0;
  bool episode_done = false;
};

inline constexpr double kGoalSharedReward = 1.0;

/// One move of the entity. Updates entity.position and entity.consumed_food.
TransitionOutcome step(const GridMap& map, EntityState& entity, Direction action);

/// steps = max(1, round(3 * mood)); mood must lie in [0, 2].
int stamina_from_mood(double mood);

struct CareerIncrements {
  double goal = 0.5;
  double trap = -0.3;
};

/// Career change implied by an outcome's events.
double career_change(const TransitionOutcome& outcome, const CareerIncrements& inc = {});

EntityState update_career(EntityState entity, const TransitionOutcome& outcome,
                          const CareerIncrements& inc = {});

double euclidean_distance(Cell a, Cell b);

/// Euclidean distance from c to the nearest Goal tile.
double goal_distance(const GridMap& map, Cell c);

/// Canonical text of a world state:
///   grid 10 10
///   start <x> <y>
///   <10 rows of tile letters>
///   entity <x> <y> <stamina> <career>
///   consumed <n> <x> <y> ...
std::string serialize_state(const GridMap& map, const EntityState& entity);
std::pair<GridMap, EntityState> parse_state(std::string_view text);

/// Map files: a `start x y` header followed by 10 rows of 10 letters from {G,F,T,S}.
GridMap parse_map(std::string_view text);
GridMap load_map(const std::filesystem::path& path);
std::string format_map(const GridMap& map);

struct MapGenParams {
  int goals = 1;
  int food = 5;
  int traps = 8;
  /// Minimum Manhattan distance from start to every goal.
  int min_goal_distance = 9;
};

GridMap generate_map(std::uint64_t seed, const MapGenParams& params = {});

}  // namespace dualloop
