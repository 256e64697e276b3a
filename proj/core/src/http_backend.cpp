#include "dualloop/http_backend.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <thread>

#include <fmt/format.h>

#ifdef DUALLOOP_HAVE_OPENSSL
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include "httplib.h"

namespace dualloop {

using nlohmann::json;

json build_chat_request(const ChatRequest& request) {
  json messages = json::array();
  if (!request.system.empty()) {
    messages.push_back({{"role", "system"}, {"content", request.system}});
  }
  json content = json::array();
  content.push_back({{"type", "text"}, {"text", request.user}});
  if (request.image) {
    content.push_back({{"type", "image_url"}, {"image_url", {{"url", request.image->data_url()}}}});
  }
  messages.push_back({{"role", "user"}, {"content", std::move(content)}});
  return {{"model", request.model}, {"messages", std::move(messages)}};
}

json build_embedding_request(std::string_view model, std::string_view input) {
  return {{"model", model}, {"input", input}};
}

std::optional<std::string> parse_chat_response(const json& body) {
  try {
    const json& content = body.at("choices").at(0).at("message").at("content");
    if (content.is_string()) return content.get<std::string>();
    // Some servers return content parts.
    if (content.is_array()) {
      std::string text;
      for (const json& part : content) {
        if (part.value("type", "") == "text") text += part.value("text", "");
      }
      return text;
    }
  } catch (const json::exception&) {
  }
  return std::nullopt;
}

std::optional<Vector> parse_embedding_response(const json& body) {
  try {
    const json& values = body.at("data").at(0).at("embedding");
    Vector v;
    v.reserve(values.size());
    for (const json& x : values) v.push_back(x.get<double>());
    if (v.empty() || !all_finite(v)) return std::nullopt;
    return v;
  } catch (const json::exception&) {
    return std::nullopt;
  }
}

Endpoint split_base_url(std::string_view base_url) {
  const std::size_t scheme = base_url.find("://");
  if (scheme == std::string_view::npos || scheme == 0) {
    throw ConfigError(fmt::format("backend base_url '{}' has no scheme", base_url));
  }
  const std::size_t path = base_url.find('/', scheme + 3);
  Endpoint e;
  e.origin = std::string(base_url.substr(0, path));
  e.path_prefix = path == std::string_view::npos ? std::string() : std::string(base_url.substr(path));
  while (!e.path_prefix.empty() && e.path_prefix.back() == '/') e.path_prefix.pop_back();
  return e;
}

HttpBackend::HttpBackend(BackendConfig config, std::uint64_t jitter_seed,
                         const PromptTemplates& templates)
    : config_(std::move(config)),
      endpoint_(split_base_url(config_.base_url)),
      templates_(templates),
      fallback_(config_.embed_dim, templates),
      in_flight_(std::clamp(config_.max_in_flight, 1, 64)),
      jitter_rng_(jitter_seed) {
  const char* key = std::getenv(config_.api_key_env.c_str());
  if (key == nullptr || *key == '\0') {
    throw ConfigError(fmt::format("environment variable {} is not set", config_.api_key_env));
  }
  api_key_ = key;
  if (!config_.transcript_path.empty()) {
    transcript_.open(config_.transcript_path, std::ios::binary | std::ios::app);
    if (!transcript_) {
      throw ConfigError(fmt::format("cannot open transcript '{}'", config_.transcript_path.string()));
    }
  }
}

double HttpBackend::next_backoff(int attempt) {
  double u = 0.0;
  {
    std::lock_guard lock(rng_mutex_);
    u = jitter_rng_.uniform();
  }
  return config_.backoff_initial_seconds * std::ldexp(1.0, attempt) * (1.0 + 0.25 * u);
}

void HttpBackend::mirror(const json& record) {
  if (!transcript_.is_open()) return;
  std::lock_guard lock(transcript_mutex_);
  transcript_ << record.dump() << '\n';
  transcript_.flush();
}

void HttpBackend::fail(const std::string& what) { throw BackendError(what); }

std::optional<json> HttpBackend::post_json(const std::string& path, const json& body) {
  const std::string full_path = endpoint_.path_prefix + path;
  const std::string payload = body.dump();
  const auto timeout = std::chrono::duration<double>(config_.timeout_seconds);
  const auto timeout_us = std::chrono::duration_cast<std::chrono::microseconds>(timeout);
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(std::chrono::duration<double>(next_backoff(attempt - 1)));
    }
    json record = {{"path", full_path}, {"attempt", attempt}, {"request", body}};
    std::optional<json> parsed;
    {
      in_flight_.acquire();
      httplib::Client client(endpoint_.origin);
      client.set_connection_timeout(timeout_us);
      client.set_read_timeout(timeout_us);
      client.set_write_timeout(timeout_us);
      const httplib::Headers headers{{"Authorization", "Bearer " + api_key_}};
      auto res = client.Post(full_path, headers, payload, "application/json");
      in_flight_.release();
      if (!res) {
        record["error"] = httplib::to_string(res.error());
      } else {
        record["status"] = res->status;
        auto j = json::parse(res->body, nullptr, false);
        if (j.is_discarded()) {
          record["error"] = "response is not JSON";
          record["raw_response"] = res->body;
        } else {
          record["response"] = j;
          if (res->status >= 200 && res->status < 300) parsed = std::move(j);
        }
      }
    }
    mirror(record);
    if (parsed) return parsed;
  }
  warn(fmt::format("{}: no usable response after {} attempts", full_path, config_.max_retries + 1));
  return std::nullopt;
}

std::optional<std::string> HttpBackend::complete(const ChatRequest& request) {
  const auto body = post_json("/chat/completions", build_chat_request(request));
  if (!body) {
    if (config_.fail_on_error) fail("chat completion failed after retries");
    return std::nullopt;
  }
  auto text = parse_chat_response(*body);
  if (!text) warn("chat response had no choices[0].message.content");
  return text;
}

Suggestion HttpBackend::suggest(const AgentContext& ctx) {
  const TemplateVars vars = agent_template_vars(ctx);
  ChatRequest request{config_.agent_model, render_template(templates_.get("agent_system"), vars),
                      render_template(templates_.get("agent_user"), vars), ctx.rendered};
  for (int tries = 0; tries < 2; ++tries) {
    if (const auto reply = complete(request)) {
      if (auto s = parse_move_reply(*reply)) return *s;
      warn(fmt::format("{}: reply is not 'MOVE <dir>: <text>'", to_string(ctx.agent.kind)));
    }
  }
  if (config_.fail_on_error) fail("no valid MOVE reply");
  Suggestion s = fallback_.suggest(ctx);
  s.fallback = true;
  warn(fmt::format("{}: suggestion fell back to the stub", to_string(ctx.agent.kind)));
  return s;
}

ReflectionRecord HttpBackend::reflect(const ReflectionContext& ctx) {
  TemplateVars vars;
  vars["persona"] = std::string(display_name(ctx.agent));
  vars["goal"] = templates_.get(fmt::format("goal_{}", to_string(ctx.agent)));
  vars["step"] = std::to_string(ctx.step);
  vars["action"] = std::string(to_string(ctx.action));
  vars["events"] = describe(ctx.outcome.events);
  vars["adopted"] = ctx.adopted ? "adopted" : "not adopted";
  vars["reward"] = fmt::format("{:.3f}", ctx.reward);
  vars["sign"] = reward_sign_word(ctx.reward);
  ChatRequest request{config_.agent_model, render_template(templates_.get("reflect_system"), vars),
                      render_template(templates_.get("reflect_user"), vars), nullptr};
  ReflectionRecord rec;
  rec.agent = ctx.agent;
  rec.step = ctx.step;
  rec.reward_used = ctx.reward;
  auto text = complete(request);
  if (!text || word_tokens(*text).empty()) {
    if (config_.fail_on_error) fail("no reflection text");
    warn(fmt::format("{}: reflection fell back to the stub", to_string(ctx.agent)));
    text = fallback_.reflection_text(ctx);
    rec.fallback = true;
  }
  rec.text = *text;
  rec.embedding = embed(rec.text);
  return rec;
}

Vector HttpBackend::embed(std::string_view text) {
  if (word_tokens(text).empty()) throw ContractViolation("cannot embed empty text");
  if (const auto body = post_json("/embeddings", build_embedding_request(config_.embed_model, text))) {
    if (const auto raw = parse_embedding_response(*body)) {
      const Vector v = resized(*raw, config_.embed_dim);
      if (l2_norm(v) > 0.0) return normalized(v);
    }
    warn("embedding response had no usable data[0].embedding");
  }
  if (config_.fail_on_error) fail("embedding failed after retries");
  warn("embedding fell back to feature hashing");
  return fallback_.embed(text);
}

}  // namespace dualloop
