#include "dualloop/personas.hpp"

#include <algorithm>

namespace dualloop {

AgentState make_agent(PersonaKind kind, double w_p, double w_s) {
  AgentState a;
  a.kind = kind;
  a.w_p = w_p;
  a.w_s = w_s;
  if (kind == PersonaKind::Emotion) {
    a.mood = kMoodInit;
    a.w_s = 0.0;
  }
  if (kind == PersonaKind::SocialCognition) a.career_value = 0.0;
  return a;
}

double private_reward(const AgentState& state, const RewardContext& ctx,
                      const RewardParams& params) {
  const EventSet& ev = ctx.outcome.events;
  switch (state.kind) {
    case PersonaKind::Emotion: {
      double r = 0.0;
      if (ev.contains(Event::AteFood)) r += params.emotion_food;
      if (ctx.adopted) r += params.emotion_adopted;
      if (ev.contains(Event::HitTrap)) r += params.emotion_trap;
      if (ctx.round_boundary) r += params.emotion_round_decay;
      return r;
    }
    case PersonaKind::Rational:
      return params.rational_scale * (ctx.prev_distance - ctx.new_distance);
    case PersonaKind::Habitual:
      return state.last_action && *state.last_action == ctx.action ? params.habit_match : 0.0;
    case PersonaKind::RiskMonitor:
      return ev.contains(Event::HitTrap) ? params.risk_trap : params.risk_safe_step;
    case PersonaKind::SocialCognition:
      return career_change(ctx.outcome, params.career);
  }
  return 0.0;
}

AgentState update_mood(AgentState state, double delta) {
  if (state.kind != PersonaKind::Emotion || !state.mood) {
    throw ContractViolation("update_mood is only defined for the Emotion agent");
  }
  state.mood = std::clamp(*state.mood + delta, kMoodMin, kMoodMax);
  return state;
}

}  // namespace dualloop
