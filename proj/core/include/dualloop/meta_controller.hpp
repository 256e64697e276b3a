#pragma once

#include <array>
#include <cstddef>
#include <deque>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "dualloop/behavior_loop.hpp"
#include "dualloop/lm_backend.hpp"
#include "dualloop/types.hpp"

namespace dualloop {

class TrustScores {
 public:
  explicit TrustScores(double initial = 1.0, double beta = 0.1, std::size_t window = 10);

  double score(PersonaKind p) const { return scores_[index_of(p)]; }
  void set_score(PersonaKind p, double value);
  const std::array<double, kPersonaCount>& scores() const { return scores_; }

  double beta() const { return beta_; }
  std::size_t window_capacity() const { return window_capacity_; }
  const std::deque<double>& window() const { return window_; }
  /// Mean of recent shared rewards, 0 for an empty window.
  double mean_shared_reward() const;
  void push_shared_reward(double r_s);

  /// Every score multiplied by c.
  TrustScores scaled(double c) const;

 private:
  std::array<double, kPersonaCount> scores_{};
  double beta_;
  std::size_t window_capacity_;
  std::deque<double> window_;
};

/// T_adopted += beta * (r_s - mean(window)); r_s then enters the window.
TrustScores trust_update(TrustScores trust, PersonaKind adopted, double r_s);

/// T_social += multiplier * max(0, career change).
TrustScores social_trust_boost(TrustScores trust, double career_delta_change,
                               double multiplier = 0.2);

struct SuggestionBundle {
  PersonaKind agent = PersonaKind::Rational;
  Direction proposed_action = Direction::Up;
  std::string persuasion_text;
  std::vector<std::string> style_tokens;
  std::vector<QHint> q_hint;
};

enum class ArbitrationMode { Stub, Llm };

struct Decision {
  PersonaKind agent = PersonaKind::Rational;
  Direction action = Direction::Up;
  /// True when llm mode could not produce a valid answer and the trust rule decided.
  bool fallback = false;
  std::vector<std::string> warnings;
};

/// Highest trust; ties resolved in Rational, Emotion, RiskMonitor, Habitual, SocialCognition order.
PersonaKind most_trusted(const TrustScores& trust);

struct MetaPromptInputs {
  std::string model = "gpt-4o";
  std::string memory_bias;
  std::shared_ptr<const RenderedMap> image;
};

ChatRequest compose_meta_prompt(std::span<const SuggestionBundle> bundles, const TrustScores& trust,
                                const MetaPromptInputs& inputs,
                                const PromptTemplates& templates = PromptTemplates::builtin());

/// Parses a single `ADOPT <agent> <action>` line.
std::optional<std::pair<PersonaKind, Direction>> parse_adopt_reply(std::string_view reply);

/// Needs exactly one bundle per persona. Stub mode adopts the most trusted agent's proposal.
/// Llm mode asks the backend, re-prompts once on an invalid reply, then falls back. The executed
/// action is the named agent's own proposal even when the reply names another direction.
Decision arbitrate(std::span<const SuggestionBundle> bundles, const TrustScores& trust,
                   ArbitrationMode mode, LanguageBackend* backend = nullptr,
                   const MetaPromptInputs& inputs = {},
                   const PromptTemplates& templates = PromptTemplates::builtin());

struct AdoptionRecord {
  std::size_t step = 0;
  std::size_t episode = 0;
  PersonaKind adopted_agent = PersonaKind::Rational;
  Direction action = Direction::Up;
  std::array<double, kPersonaCount> trust{};  // persona index order
  double shared_reward = 0.0;
};

using AdoptionLog = std::vector<AdoptionRecord>;

/// `step,episode,adopted_agent,action,T_rational,T_emotion,T_risk,T_habit,T_social,shared_reward`
void write_adoption_csv(std::ostream& out, const AdoptionLog& log);
AdoptionLog read_adoption_csv(std::istream& in);

}  // namespace dualloop
