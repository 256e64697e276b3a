#pragma once

#include <array>
#include <optional>

#include "dualloop/grid_env.hpp"
#include "dualloop/types.hpp"

namespace dualloop {

/// Private reward magnitudes. Defaults are the agent design table values.
struct RewardParams {
  double emotion_food = 0.5;
  double emotion_adopted = 0.3;
  double emotion_trap = -1.0;
  double emotion_round_decay = -0.05;
  double rational_scale = 1.0;
  double habit_match = 0.2;
  double risk_trap = -1.0;
  double risk_safe_step = 0.05;
  CareerIncrements career;
};

inline constexpr double kMoodMin = 0.0;
inline constexpr double kMoodMax = 2.0;
inline constexpr double kMoodInit = 1.0;

struct AgentState {
  PersonaKind kind = PersonaKind::Rational;
  std::optional<double> mood;          // Emotion only
  std::optional<double> career_value;  // SocialCognition only
  std::optional<Direction> last_action;
  double w_p = 0.7;
  double w_s = 0.3;
};

/// Initial state for a persona: mood 1.0 for Emotion, career 0 for SocialCognition,
/// and w_s forced to 0 for Emotion.
AgentState make_agent(PersonaKind kind, double w_p = 0.7, double w_s = 0.3);

struct RewardContext {
  TransitionOutcome outcome;
  bool adopted = false;
  double prev_distance = 0.0;
  double new_distance = 0.0;
  Direction action = Direction::Up;
  bool round_boundary = false;
};

double private_reward(const AgentState& state, const RewardContext& ctx,
                      const RewardParams& params = {});

/// mood' = clamp(mood + delta, 0, 2). Only valid for the Emotion agent.
AgentState update_mood(AgentState state, double delta);

}  // namespace dualloop
