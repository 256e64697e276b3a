#pragma once

#include <cstdint>
#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>

#include <nlohmann/json.hpp>

#include "dualloop/lm_backend.hpp"
#include "dualloop/rng.hpp"

namespace dualloop {

/// OpenAI-compatible chat-completions body. The image, when present, goes in as an
/// `image_url` content part carrying a PNG data URL.
nlohmann::json build_chat_request(const ChatRequest& request);
nlohmann::json build_embedding_request(std::string_view model, std::string_view input);

/// choices[0].message.content; extra fields are ignored.
std::optional<std::string> parse_chat_response(const nlohmann::json& body);
/// data[0].embedding.
std::optional<Vector> parse_embedding_response(const nlohmann::json& body);

struct Endpoint {
  std::string origin;       // scheme://host[:port]
  std::string path_prefix;  // e.g. "/v1"
};

/// Splits a base URL into origin and path. Throws ConfigError when no scheme is present.
Endpoint split_base_url(std::string_view base_url);

/// Live backend over HTTP. Every failure path ends in the stub backend unless
/// fail_on_error is configured.
class HttpBackend final : public LanguageBackend {
 public:
  /// Throws ConfigError when the API key variable is unset or base_url is malformed.
  HttpBackend(BackendConfig config, std::uint64_t jitter_seed,
              const PromptTemplates& templates = PromptTemplates::builtin());

  BackendMode mode() const override { return BackendMode::Http; }
  std::size_t embed_dim() const override { return config_.embed_dim; }

  Suggestion suggest(const AgentContext& ctx) override;
  ReflectionRecord reflect(const ReflectionContext& ctx) override;
  Vector embed(std::string_view text) override;
  std::optional<std::string> complete(const ChatRequest& request) override;

  const BackendConfig& config() const { return config_; }

 private:
  std::optional<nlohmann::json> post_json(const std::string& path, const nlohmann::json& body);
  double next_backoff(int attempt);
  void mirror(const nlohmann::json& record);
  [[noreturn]] void fail(const std::string& what);

  BackendConfig config_;
  Endpoint endpoint_;
  std::string api_key_;
  PromptTemplates templates_;
  StubBackend fallback_;
  std::counting_semaphore<64> in_flight_;
  std::mutex rng_mutex_;
  Rng jitter_rng_;
  std::mutex transcript_mutex_;
  std::ofstream transcript_;
};

}  // namespace dualloop
