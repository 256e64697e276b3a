#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <ostream>
#include <utility>
#include <vector>

#include "dualloop/types.hpp"

namespace dualloop {

inline constexpr int kStateKeyOffset = 100;

struct StateKey {
  int x = 0;
  int y = 0;
  auto operator<=>(const StateKey&) const = default;
};

/// (x + 100·i, y + 100·i) for agent index i.
constexpr StateKey state_key(Cell c, std::size_t agent_index) {
  const int off = kStateKeyOffset * static_cast<int>(agent_index);
  return {c.x + off, c.y + off};
}

/// Sparse tabular Q-function. Missing entries read as 0.
class QTable {
 public:
  QTable(double alpha = 0.1, double gamma = 0.9, int agent_offset = 0);

  double alpha() const { return alpha_; }
  double gamma() const { return gamma_; }
  int agent_offset() const { return agent_offset_; }

  double value(StateKey s, Direction a) const;
  double max_value(StateKey s) const;

  /// Q(s,a) += alpha * (r + gamma * max_a' Q(s',a') - Q(s,a)). Rejects non-finite r.
  void update(StateKey s, Direction a, double r, StateKey s_next);

  std::size_t size() const { return entries_.size(); }
  const std::map<std::pair<StateKey, Direction>, double>& entries() const { return entries_; }

 private:
  double alpha_;
  double gamma_;
  int agent_offset_;
  std::map<std::pair<StateKey, Direction>, double> entries_;
};

/// Free-function form of QTable::update; returns the updated table.
QTable q_update(QTable q, StateKey s, Direction a, double r, StateKey s_next);

constexpr double composite_reward(double r_p, double r_s, double w_p, double w_s) {
  return w_p * r_p + w_s * r_s;
}

struct QHint {
  Direction action;
  double q;
  bool operator==(const QHint&) const = default;
};

/// Top-k actions by Q-value, ties in Up, Down, Left, Right order. k must be in [1, 4].
std::vector<QHint> soft_suggestions(const QTable& q, StateKey s, std::size_t k);

/// `agent,state_x,state_y,action,q` rows, one per stored entry.
void write_qtable_csv(std::ostream& out, const std::array<const QTable*, kPersonaCount>& tables);

}  // namespace dualloop
