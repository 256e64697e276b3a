#include "dualloop/behavior_loop.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace dualloop {

QTable::QTable(double alpha, double gamma, int agent_offset)
    : alpha_(alpha), gamma_(gamma), agent_offset_(agent_offset) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw ContractViolation("Q-learning alpha must lie in (0, 1]");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ContractViolation("Q-learning gamma must lie in [0, 1)");
}

double QTable::value(StateKey s, Direction a) const {
  const auto it = entries_.find({s, a});
  return it == entries_.end() ? 0.0 : it->second;
}

double QTable::max_value(StateKey s) const {
  double best = value(s, kDirections[0]);
  for (Direction a : kDirections) best = std::max(best, value(s, a));
  return best;
}

void QTable::update(StateKey s, Direction a, double r, StateKey s_next) {
  if (!std::isfinite(r)) throw ContractViolation("Q update reward must be finite");
  const double target = r + gamma_ * max_value(s_next);
  double& q = entries_[{s, a}];
  q += alpha_ * (target - q);
}

QTable q_update(QTable q, StateKey s, Direction a, double r, StateKey s_next) {
  q.update(s, a, r, s_next);
  return q;
}

std::vector<QHint> soft_suggestions(const QTable& q, StateKey s, std::size_t k) {
  if (k < 1 || k > kDirections.size()) throw ContractViolation("soft_suggestions k must be in [1, 4]");
  std::vector<QHint> all;
  for (Direction a : kDirections) all.push_back({a, q.value(s, a)});
  std::stable_sort(all.begin(), all.end(),
                   [](const QHint& l, const QHint& r) { return l.q > r.q; });
  all.resize(k);
  return all;
}

void write_qtable_csv(std::ostream& out, const std::array<const QTable*, kPersonaCount>& tables) {
  out << "agent,state_x,state_y,action,q\n";
  for (std::size_t i = 0; i < kPersonaCount; ++i) {
    if (tables[i] == nullptr) continue;
    for (const auto& [key, q] : tables[i]->entries()) {
      out << fmt::format("{},{},{},{},{}\n", to_string(kPersonas[i]), key.first.x, key.first.y,
                         to_string(key.second), q);
    }
  }
}

}  // namespace dualloop
