#include "dualloop/grid_env.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include <fmt/format.h>

namespace dualloop {

char tile_letter(TileKind t) {
  switch (t) {
    case TileKind::Goal: return 'G';
    case TileKind::Food: return 'F';
    case TileKind::Trap: return 'T';
    case TileKind::Safe: return 'S';
  }
  return '?';
}

std::optional<TileKind> tile_from_letter(char c) {
  switch (c) {
    case 'G': return TileKind::Goal;
    case 'F': return TileKind::Food;
    case 'T': return TileKind::Trap;
    case 'S': return TileKind::Safe;
    default: return std::nullopt;
  }
}

MapParseError::MapParseError(std::size_t line, std::size_t column, const std::string& what)
    : std::runtime_error(fmt::format("line {}, column {}: {}", line, column, what)),
      line_(line),
      column_(column) {}

GridMap::GridMap(const Tiles& tiles, Cell start) : tiles_(tiles), start_(start) {
  if (!in_bounds(start)) {
    throw ContractViolation(fmt::format("start ({}, {}) is off the grid", start.x, start.y));
  }
  if (at(start) != TileKind::Safe) {
    throw ContractViolation("start cell must be a Safe tile");
  }
  if (std::find(tiles_.begin(), tiles_.end(), TileKind::Goal) == tiles_.end()) {
    throw ContractViolation("map has no Goal tile");
  }
}

Cell GridMap::goal() const {
  const auto it = std::find(tiles_.begin(), tiles_.end(), TileKind::Goal);
  const int idx = static_cast<int>(it - tiles_.begin());
  return {idx % kGridSize, idx / kGridSize};
}

EntityState fresh_entity(const GridMap& map, int stamina) {
  EntityState e;
  e.position = map.start();
  e.stamina = std::max(1, stamina);
  return e;
}

std::string_view to_string(Event e) {
  switch (e) {
    case Event::ReachedGoal: return "reached_goal";
    case Event::AteFood: return "ate_food";
    case Event::HitTrap: return "hit_trap";
    case Event::BumpedWall: return "bumped_wall";
  }
  return "?";
}

std::string describe(EventSet events) {
  if (events.empty()) return "none";
  std::string out;
  for (Event e : {Event::ReachedGoal, Event::AteFood, Event::HitTrap, Event::BumpedWall}) {
    if (!events.contains(e)) continue;
    if (!out.empty()) out += ' ';
    out += to_string(e);
  }
  return out;
}

TransitionOutcome step(const GridMap& map, EntityState& entity, Direction action) {
  if (!GridMap::in_bounds(entity.position)) {
    throw ContractViolation("entity position is off the grid");
  }
  TransitionOutcome out;
  const Cell target = offset(entity.position, action);
  if (!GridMap::in_bounds(target)) {
    out.events.insert(Event::BumpedWall);
    out.new_position = entity.position;
    return out;
  }
  entity.position = target;
  out.new_position = target;
  switch (map.at(target)) {
    case TileKind::Goal:
      out.events.insert(Event::ReachedGoal);
      out.shared_reward = kGoalSharedReward;
      out.episode_done = true;
      break;
    case TileKind::Food:
      if (entity.consumed_food.insert(target).second) out.events.insert(Event::AteFood);
      break;
    case TileKind::Trap:
      out.events.insert(Event::HitTrap);
      break;
    case TileKind::Safe:
      break;
  }
  return out;
}

int stamina_from_mood(double mood) {
  if (!(mood >= 0.0 && mood <= 2.0)) {
    throw ContractViolation(fmt::format("mood {} outside [0, 2]", mood));
  }
  return std::max(1, static_cast<int>(std::lround(3.0 * mood)));
}

double career_change(const TransitionOutcome& outcome, const CareerIncrements& inc) {
  double change = 0.0;
  if (outcome.events.contains(Event::ReachedGoal)) change += inc.goal;
  if (outcome.events.contains(Event::HitTrap)) change += inc.trap;
  return change;
}

EntityState update_career(EntityState entity, const TransitionOutcome& outcome,
                          const CareerIncrements& inc) {
  entity.career_delta += career_change(outcome, inc);
  return entity;
}

double euclidean_distance(Cell a, Cell b) {
  return std::hypot(static_cast<double>(a.x - b.x), static_cast<double>(a.y - b.y));
}

double goal_distance(const GridMap& map, Cell c) {
  double best = -1.0;
  for (int y = 0; y < kGridSize; ++y) {
    for (int x = 0; x < kGridSize; ++x) {
      if (map.at({x, y}) != TileKind::Goal) continue;
      const double d = euclidean_distance(c, {x, y});
      if (best < 0.0 || d < best) best = d;
    }
  }
  return best;
}

namespace {

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    pos = nl + 1;
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

std::vector<std::string_view> split_words(std::string_view line) {
  std::vector<std::string_view> words;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && line[i] == ' ') ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ') ++j;
    if (j > i) words.push_back(line.substr(i, j - i));
    i = j;
  }
  return words;
}

template <typename T>
T parse_number(std::string_view word, std::size_t line, const char* what) {
  T value{};
  const auto res = std::from_chars(word.data(), word.data() + word.size(), value);
  if (res.ec != std::errc() || res.ptr != word.data() + word.size()) {
    throw MapParseError(line, 0, fmt::format("bad {} '{}'", what, word));
  }
  return value;
}

double parse_real(std::string_view word, std::size_t line, const char* what) {
  std::string s(word);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v)) {
    throw MapParseError(line, 0, fmt::format("bad {} '{}'", what, word));
  }
  return v;
}

Cell parse_start(std::string_view line, std::size_t lineno) {
  const auto words = split_words(line);
  if (words.size() != 3 || words[0] != "start") {
    throw MapParseError(lineno, 1, "expected header 'start <x> <y>'");
  }
  return {parse_number<int>(words[1], lineno, "start x"),
          parse_number<int>(words[2], lineno, "start y")};
}

GridMap::Tiles parse_rows(const std::vector<std::string_view>& lines, std::size_t first) {
  GridMap::Tiles tiles{};
  if (lines.size() < first + kGridSize) {
    throw MapParseError(lines.size() + 1, 0,
                        fmt::format("expected {} tile rows, found {}", kGridSize,
                                    lines.size() > first ? lines.size() - first : 0));
  }
  for (int y = 0; y < kGridSize; ++y) {
    const std::size_t lineno = first + static_cast<std::size_t>(y) + 1;
    const std::string_view row = lines[first + static_cast<std::size_t>(y)];
    for (std::size_t x = 0; x < row.size() && x < kGridSize; ++x) {
      const auto tile = tile_from_letter(row[x]);
      if (!tile) {
        throw MapParseError(lineno, x + 1, fmt::format("unknown tile '{}'", row[x]));
      }
      tiles[static_cast<std::size_t>(y * kGridSize) + x] = *tile;
    }
    if (row.size() != kGridSize) {
      throw MapParseError(lineno, std::min(row.size(), std::size_t{kGridSize}) + 1,
                          fmt::format("row has {} tiles, expected {}", row.size(), kGridSize));
    }
  }
  return tiles;
}

GridMap checked_map(const GridMap::Tiles& tiles, Cell start, std::size_t header_line) {
  try {
    return GridMap(tiles, start);
  } catch (const ContractViolation& e) {
    throw MapParseError(header_line, 0, e.what());
  }
}

}  // namespace

std::string format_map(const GridMap& map) {
  std::string out = fmt::format("start {} {}\n", map.start().x, map.start().y);
  for (int y = 0; y < kGridSize; ++y) {
    for (int x = 0; x < kGridSize; ++x) out += tile_letter(map.at({x, y}));
    out += '\n';
  }
  return out;
}

GridMap parse_map(std::string_view text) {
  const auto lines = split_lines(text);
  if (lines.empty()) throw MapParseError(1, 0, "empty map file");
  const Cell start = parse_start(lines[0], 1);
  const auto tiles = parse_rows(lines, 1);
  if (lines.size() > kGridSize + 1) {
    throw MapParseError(kGridSize + 2, 0, "unexpected content after the last tile row");
  }
  return checked_map(tiles, start, 1);
}

GridMap load_map(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MapParseError(0, 0, fmt::format("cannot open map file '{}'", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_map(ss.str());
}

std::string serialize_state(const GridMap& map, const EntityState& entity) {
  std::string out = fmt::format("grid {} {}\n", kGridSize, kGridSize);
  out += format_map(map);
  out += fmt::format("entity {} {} {} {}\n", entity.position.x, entity.position.y, entity.stamina,
                     entity.career_delta);
  out += fmt::format("consumed {}", entity.consumed_food.size());
  for (const Cell& c : entity.consumed_food) out += fmt::format(" {} {}", c.x, c.y);
  out += '\n';
  return out;
}

std::pair<GridMap, EntityState> parse_state(std::string_view text) {
  const auto lines = split_lines(text);
  if (lines.size() != kGridSize + 4) {
    throw MapParseError(lines.size(), 0, "state text has the wrong number of lines");
  }
  const auto grid = split_words(lines[0]);
  if (grid.size() != 3 || grid[0] != "grid" || grid[1] != "10" || grid[2] != "10") {
    throw MapParseError(1, 1, "expected 'grid 10 10'");
  }
  const Cell start = parse_start(lines[1], 2);
  const auto tiles = parse_rows(lines, 2);
  GridMap map = checked_map(tiles, start, 2);

  constexpr std::size_t kEntityLine = kGridSize + 2;
  const auto ent = split_words(lines[kEntityLine]);
  if (ent.size() != 5 || ent[0] != "entity") {
    throw MapParseError(kEntityLine + 1, 1, "expected 'entity <x> <y> <stamina> <career>'");
  }
  EntityState e;
  e.position = {parse_number<int>(ent[1], kEntityLine + 1, "entity x"),
                parse_number<int>(ent[2], kEntityLine + 1, "entity y")};
  e.stamina = parse_number<int>(ent[3], kEntityLine + 1, "stamina");
  e.career_delta = parse_real(ent[4], kEntityLine + 1, "career");
  if (!GridMap::in_bounds(e.position) || e.stamina < 1) {
    throw MapParseError(kEntityLine + 1, 0, "entity fields out of range");
  }

  const auto con = split_words(lines[kEntityLine + 1]);
  if (con.empty() || con[0] != "consumed") {
    throw MapParseError(kEntityLine + 2, 1, "expected 'consumed <n> ...'");
  }
  const auto n = parse_number<std::size_t>(con.size() > 1 ? con[1] : "", kEntityLine + 2, "count");
  if (con.size() != 2 + 2 * n) throw MapParseError(kEntityLine + 2, 0, "consumed count mismatch");
  for (std::size_t i = 0; i < n; ++i) {
    const Cell c{parse_number<int>(con[2 + 2 * i], kEntityLine + 2, "x"),
                 parse_number<int>(con[3 + 2 * i], kEntityLine + 2, "y")};
    e.consumed_food.insert(c);
  }
  return {map, e};
}

GridMap generate_map(std::uint64_t seed, const MapGenParams& params) {
  const int cells = kGridSize * kGridSize;
  if (params.goals < 1 || params.food < 0 || params.traps < 0 ||
      params.goals + params.food + params.traps >= cells) {
    throw ContractViolation("map generator densities do not fit on a 10x10 grid");
  }
  Rng rng(seed);
  // Rejection on the start/goal distance; falls back to the best draw seen.
  std::optional<GridMap> best;
  int best_distance = -1;
  for (int attempt = 0; attempt < 256; ++attempt) {
    std::vector<int> order(cells);
    for (int i = 0; i < cells; ++i) order[static_cast<std::size_t>(i)] = i;
    for (int i = cells - 1; i > 0; --i) {
      const auto j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i + 1)));
      std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
    }
    GridMap::Tiles tiles;
    tiles.fill(TileKind::Safe);
    std::size_t k = 0;
    for (int i = 0; i < params.goals; ++i) tiles[static_cast<std::size_t>(order[k++])] = TileKind::Goal;
    for (int i = 0; i < params.food; ++i) tiles[static_cast<std::size_t>(order[k++])] = TileKind::Food;
    for (int i = 0; i < params.traps; ++i) tiles[static_cast<std::size_t>(order[k++])] = TileKind::Trap;
    const int s = order[k];
    const Cell start{s % kGridSize, s / kGridSize};
    int nearest = cells;
    for (int i = 0; i < params.goals; ++i) {
      const int g = order[static_cast<std::size_t>(i)];
      nearest = std::min(nearest, std::abs(g % kGridSize - start.x) + std::abs(g / kGridSize - start.y));
    }
    if (nearest > best_distance) {
      best_distance = nearest;
      best.emplace(tiles, start);
    }
    if (nearest >= params.min_goal_distance) break;
  }
  return *best;
}

}  // namespace dualloop
