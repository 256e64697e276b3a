#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dualloop/behavior_loop.hpp"
#include "dualloop/grid_env.hpp"
#include "dualloop/language_loop.hpp"
#include "dualloop/personas.hpp"
#include "dualloop/prompts.hpp"
#include "dualloop/render.hpp"
#include "dualloop/vector_math.hpp"

namespace dualloop {

enum class BackendMode { Stub, Http };

std::string_view to_string(BackendMode m);

struct BackendConfig {
  BackendMode mode = BackendMode::Stub;
  std::string base_url = "https://api.openai.com/v1";
  std::string meta_model = "gpt-4o";
  std::string agent_model = "gpt-4o-mini";
  std::string embed_model = "text-embedding-3-large";
  std::string api_key_env = "OPENAI_API_KEY";
  double timeout_seconds = 30.0;
  int max_retries = 2;
  double backoff_initial_seconds = 0.5;
  int max_in_flight = 5;
  std::size_t embed_dim = kDefaultLatentDim;
  /// Request/response mirror for http mode; empty disables it.
  std::filesystem::path transcript_path;
  /// When set, exhausting retries throws BackendError instead of falling back.
  bool fail_on_error = false;
};

/// Everything an advisor sees when proposing a move.
struct AgentContext {
  GridMap map;
  EntityState entity;
  AgentState agent;
  RewardParams rewards;
  std::size_t step = 0;
  std::vector<QHint> q_hint;
  std::vector<std::string> style_tokens;
  std::string memory_bias;
  std::shared_ptr<const RenderedMap> rendered;
};

struct Suggestion {
  Direction action = Direction::Up;
  std::string text;
  bool fallback = false;
};

struct ReflectionContext {
  PersonaKind agent = PersonaKind::Rational;
  std::size_t step = 0;
  Direction action = Direction::Up;
  TransitionOutcome outcome;
  double reward = 0.0;
  bool adopted = false;
};

struct ReflectionRecord {
  PersonaKind agent = PersonaKind::Rational;
  std::size_t step = 0;
  std::string text;
  Vector embedding;
  double reward_used = 0.0;
  bool fallback = false;
};

struct ChatRequest {
  std::string model;
  std::string system;
  std::string user;
  std::shared_ptr<const RenderedMap> image;
};

/// Language/embedding provider. Implementations must tolerate five concurrent callers.
class LanguageBackend {
 public:
  virtual ~LanguageBackend() = default;

  virtual BackendMode mode() const = 0;
  virtual std::size_t embed_dim() const = 0;

  virtual Suggestion suggest(const AgentContext& ctx) = 0;
  virtual ReflectionRecord reflect(const ReflectionContext& ctx) = 0;
  /// Unit-norm vector of embed_dim(). Empty text is a ContractViolation.
  virtual Vector embed(std::string_view text) = 0;
  /// Raw chat completion; nullopt when the backend cannot answer.
  virtual std::optional<std::string> complete(const ChatRequest& request) = 0;

  /// Drains warnings (fallbacks, retries exhausted) accumulated since the last call.
  std::vector<std::string> take_warnings();

 protected:
  void warn(std::string message);

 private:
  std::mutex warnings_mutex_;
  std::vector<std::string> warnings_;
};

/// Signed feature hashing: lowercase alphanumeric tokens, FNV-1a 64-bit per token,
/// bucket = h mod dim, sign from the top bit, then L2 normalization.
Vector hash_embed(std::string_view text, std::size_t dim);

/// Lowercase alphanumeric runs of `text`.
std::vector<std::string> word_tokens(std::string_view text);

/// The direction maximizing the persona's private reward one move ahead, ties in
/// Up, Down, Left, Right order.
Direction lookahead_action(const AgentContext& ctx);

/// Offline deterministic backend: templated texts and hashed embeddings.
class StubBackend final : public LanguageBackend {
 public:
  explicit StubBackend(std::size_t embed_dim = kDefaultLatentDim,
                       const PromptTemplates& templates = PromptTemplates::builtin());

  BackendMode mode() const override { return BackendMode::Stub; }
  std::size_t embed_dim() const override { return dim_; }

  Suggestion suggest(const AgentContext& ctx) override;
  ReflectionRecord reflect(const ReflectionContext& ctx) override;
  Vector embed(std::string_view text) override;
  std::optional<std::string> complete(const ChatRequest& request) override;

  std::string reflection_text(const ReflectionContext& ctx) const;

 private:
  std::size_t dim_;
  PromptTemplates templates_;
};

/// Variables shared by agent-facing templates.
TemplateVars agent_template_vars(const AgentContext& ctx);
std::string q_hint_sentence(const std::vector<QHint>& hints);
std::string reward_sign_word(double reward);

/// Parses `MOVE <dir>: <text>` (case-insensitive keyword and direction).
std::optional<Suggestion> parse_move_reply(std::string_view reply);

std::unique_ptr<LanguageBackend> make_backend(const BackendConfig& config, std::uint64_t seed,
                                              const PromptTemplates& templates =
                                                  PromptTemplates::builtin());

}  // namespace dualloop
