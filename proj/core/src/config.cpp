#include "dualloop/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <vector>

#include <fmt/format.h>

namespace dualloop {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

double to_real(std::string_view v) {
  std::string s(v);
  char* end = nullptr;
  const double x = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(x)) {
    throw ConfigError(fmt::format("'{}' is not a finite number", v));
  }
  return x;
}

template <typename T>
T to_unsigned(std::string_view v) {
  T x{};
  const auto res = std::from_chars(v.data(), v.data() + v.size(), x);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw ConfigError(fmt::format("'{}' is not a nonnegative integer", v));
  }
  return x;
}

int to_int(std::string_view v) {
  int x{};
  const auto res = std::from_chars(v.data(), v.data() + v.size(), x);
  if (res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw ConfigError(fmt::format("'{}' is not an integer", v));
  }
  return x;
}

bool to_bool(std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(fmt::format("'{}' is not a boolean", v));
}

struct Key {
  std::string name;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename Field>
Key real_key(std::string name, Field field) {
  return {std::move(name), [field](RunConfig& c, std::string_view v) { field(c) = to_real(v); },
          [field](const RunConfig& c) { return fmt::format("{}", field(const_cast<RunConfig&>(c))); }};
}

template <typename Field>
Key count_key(std::string name, Field field) {
  return {std::move(name),
          [field](RunConfig& c, std::string_view v) {
            field(c) = to_unsigned<std::remove_reference_t<decltype(field(c))>>(v);
          },
          [field](const RunConfig& c) { return fmt::format("{}", field(const_cast<RunConfig&>(c))); }};
}

template <typename Field>
Key int_key(std::string name, Field field) {
  return {std::move(name), [field](RunConfig& c, std::string_view v) { field(c) = to_int(v); },
          [field](const RunConfig& c) { return fmt::format("{}", field(const_cast<RunConfig&>(c))); }};
}

template <typename Field>
Key text_key(std::string name, Field field) {
  return {std::move(name), [field](RunConfig& c, std::string_view v) { field(c) = std::string(v); },
          [field](const RunConfig& c) { return std::string(field(const_cast<RunConfig&>(c))); }};
}

const std::vector<Key>& keys() {
  static const std::vector<Key> table = [] {
    std::vector<Key> k;
    k.push_back(count_key("run.seed", [](RunConfig& c) -> std::uint64_t& { return c.seed; }));
    k.push_back(count_key("run.rounds", [](RunConfig& c) -> std::size_t& { return c.rounds; }));
    k.push_back(count_key("run.max_steps_per_episode",
                          [](RunConfig& c) -> std::size_t& { return c.max_steps_per_episode; }));
    k.push_back(text_key("run.run_id", [](RunConfig& c) -> std::string& { return c.run_id; }));
    k.push_back({"run.output_dir",
                 [](RunConfig& c, std::string_view v) { c.output_dir = std::string(v); },
                 [](const RunConfig& c) { return c.output_dir.string(); }});
    k.push_back(count_key("run.trajectory_csv_components",
                          [](RunConfig& c) -> std::size_t& { return c.trajectory_csv_components; }));

    k.push_back({"map.file",
                 [](RunConfig& c, std::string_view v) {
                   if (v.empty()) c.map.file.reset(); else c.map.file = std::string(v);
                 },
                 [](const RunConfig& c) { return c.map.file ? c.map.file->string() : std::string(); }});
    k.push_back(int_key("map.goals", [](RunConfig& c) -> int& { return c.map.generator.goals; }));
    k.push_back(int_key("map.food", [](RunConfig& c) -> int& { return c.map.generator.food; }));
    k.push_back(int_key("map.traps", [](RunConfig& c) -> int& { return c.map.generator.traps; }));
    k.push_back(int_key("map.min_goal_distance",
                        [](RunConfig& c) -> int& { return c.map.generator.min_goal_distance; }));

    k.push_back({"backend.mode",
                 [](RunConfig& c, std::string_view v) {
                   if (v == "stub") c.backend.mode = BackendMode::Stub;
                   else if (v == "http") c.backend.mode = BackendMode::Http;
                   else throw ConfigError(fmt::format("backend mode '{}' is not stub or http", v));
                 },
                 [](const RunConfig& c) { return std::string(to_string(c.backend.mode)); }});
    k.push_back(text_key("backend.base_url", [](RunConfig& c) -> std::string& { return c.backend.base_url; }));
    k.push_back(text_key("backend.meta_model", [](RunConfig& c) -> std::string& { return c.backend.meta_model; }));
    k.push_back(text_key("backend.agent_model", [](RunConfig& c) -> std::string& { return c.backend.agent_model; }));
    k.push_back(text_key("backend.embed_model", [](RunConfig& c) -> std::string& { return c.backend.embed_model; }));
    k.push_back(text_key("backend.api_key_env", [](RunConfig& c) -> std::string& { return c.backend.api_key_env; }));
    k.push_back(real_key("backend.timeout", [](RunConfig& c) -> double& { return c.backend.timeout_seconds; }));
    k.push_back(int_key("backend.max_retries", [](RunConfig& c) -> int& { return c.backend.max_retries; }));
    k.push_back(real_key("backend.backoff_initial",
                         [](RunConfig& c) -> double& { return c.backend.backoff_initial_seconds; }));
    k.push_back(int_key("backend.max_in_flight", [](RunConfig& c) -> int& { return c.backend.max_in_flight; }));
    k.push_back({"backend.transcript",
                 [](RunConfig& c, std::string_view v) { c.backend.transcript_path = std::string(v); },
                 [](const RunConfig& c) { return c.backend.transcript_path.string(); }});
    k.push_back({"backend.fail_on_error",
                 [](RunConfig& c, std::string_view v) { c.backend.fail_on_error = to_bool(v); },
                 [](const RunConfig& c) { return std::string(c.backend.fail_on_error ? "true" : "false"); }});

    k.push_back(real_key("hyper.alpha", [](RunConfig& c) -> double& { return c.hyper.alpha; }));
    k.push_back(real_key("hyper.gamma", [](RunConfig& c) -> double& { return c.hyper.gamma; }));
    k.push_back(real_key("hyper.eta", [](RunConfig& c) -> double& { return c.hyper.eta; }));
    k.push_back(real_key("hyper.beta", [](RunConfig& c) -> double& { return c.hyper.beta; }));
    k.push_back(count_key("hyper.retrieval_k", [](RunConfig& c) -> std::size_t& { return c.hyper.retrieval_k; }));
    k.push_back(real_key("hyper.spike_threshold", [](RunConfig& c) -> double& { return c.hyper.spike_threshold; }));
    k.push_back(count_key("hyper.embed_dim", [](RunConfig& c) -> std::size_t& { return c.hyper.embed_dim; }));
    k.push_back(real_key("hyper.trust_init", [](RunConfig& c) -> double& { return c.hyper.trust_init; }));
    k.push_back(count_key("hyper.trust_window", [](RunConfig& c) -> std::size_t& { return c.hyper.trust_window; }));
    k.push_back(real_key("hyper.social_boost", [](RunConfig& c) -> double& { return c.hyper.social_boost; }));
    k.push_back(count_key("hyper.q_hint_k", [](RunConfig& c) -> std::size_t& { return c.hyper.q_hint_k; }));
    k.push_back(count_key("hyper.style_k", [](RunConfig& c) -> std::size_t& { return c.hyper.style_k; }));

    for (PersonaKind p : kPersonas) {
      const std::size_t i = index_of(p);
      const std::string base = fmt::format("persona.{}.", to_string(p));
      k.push_back(real_key(base + "w_p", [i](RunConfig& c) -> double& { return c.persona.w_p[i]; }));
      k.push_back(real_key(base + "w_s", [i](RunConfig& c) -> double& { return c.persona.w_s[i]; }));
    }
    k.push_back({"persona.emotion.pin_mood",
                 [](RunConfig& c, std::string_view v) {
                   if (v.empty()) c.persona.pin_mood.reset(); else c.persona.pin_mood = to_real(v);
                 },
                 [](const RunConfig& c) {
                   return c.persona.pin_mood ? fmt::format("{}", *c.persona.pin_mood) : std::string();
                 }});

    auto rw = [](RunConfig& c) -> RewardParams& { return c.persona.rewards; };
    k.push_back(real_key("reward.emotion_food", [rw](RunConfig& c) -> double& { return rw(c).emotion_food; }));
    k.push_back(real_key("reward.emotion_adopted", [rw](RunConfig& c) -> double& { return rw(c).emotion_adopted; }));
    k.push_back(real_key("reward.emotion_trap", [rw](RunConfig& c) -> double& { return rw(c).emotion_trap; }));
    k.push_back(real_key("reward.emotion_round_decay",
                         [rw](RunConfig& c) -> double& { return rw(c).emotion_round_decay; }));
    k.push_back(real_key("reward.rational_scale", [rw](RunConfig& c) -> double& { return rw(c).rational_scale; }));
    k.push_back(real_key("reward.habit_match", [rw](RunConfig& c) -> double& { return rw(c).habit_match; }));
    k.push_back(real_key("reward.risk_trap", [rw](RunConfig& c) -> double& { return rw(c).risk_trap; }));
    k.push_back(real_key("reward.risk_safe_step", [rw](RunConfig& c) -> double& { return rw(c).risk_safe_step; }));
    k.push_back(real_key("reward.career_goal", [rw](RunConfig& c) -> double& { return rw(c).career.goal; }));
    k.push_back(real_key("reward.career_trap", [rw](RunConfig& c) -> double& { return rw(c).career.trap; }));
    return k;
  }();
  return table;
}

const Key* find_key(std::string_view name) {
  for (const Key& k : keys()) {
    if (k.name == name) return &k;
  }
  return nullptr;
}

}  // namespace

RunConfig parse_config(std::string_view text) {
  RunConfig cfg;
  std::set<std::string, std::less<>> seen;
  std::size_t pos = 0;
  std::size_t lineno = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(fmt::format("config line {}: expected 'section.key = value'", lineno));
    }
    const std::string_view name = trim(line.substr(0, eq));
    const std::string_view value = trim(line.substr(eq + 1));
    const Key* key = find_key(name);
    if (key == nullptr) throw ConfigError(fmt::format("config line {}: unknown key '{}'", lineno, name));
    if (!seen.insert(std::string(name)).second) {
      throw ConfigError(fmt::format("config line {}: duplicate key '{}'", lineno, name));
    }
    try {
      key->set(cfg, value);
    } catch (const ConfigError& e) {
      throw ConfigError(fmt::format("config line {}: {}: {}", lineno, name, e.what()));
    }
  }
  cfg.backend.embed_dim = cfg.hyper.embed_dim;
  validate(cfg);
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(fmt::format("cannot open config file '{}'", path.string()));
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

void validate(const RunConfig& c) {
  auto require = [](bool ok, std::string_view what) {
    if (!ok) throw ConfigError(std::string(what));
  };
  require(c.rounds >= 1, "run.rounds must be at least 1");
  require(c.max_steps_per_episode >= 1, "run.max_steps_per_episode must be at least 1");
  require(!c.run_id.empty() && c.run_id.find('/') == std::string::npos, "run.run_id must be a plain name");
  require(c.hyper.alpha > 0.0 && c.hyper.alpha <= 1.0, "hyper.alpha must lie in (0, 1]");
  require(c.hyper.gamma >= 0.0 && c.hyper.gamma < 1.0, "hyper.gamma must lie in [0, 1)");
  require(c.hyper.eta >= 0.0, "hyper.eta must be nonnegative");
  require(c.hyper.beta >= 0.0, "hyper.beta must be nonnegative");
  require(c.hyper.spike_threshold >= 0.0, "hyper.spike_threshold must be nonnegative");
  require(c.hyper.embed_dim >= 1, "hyper.embed_dim must be positive");
  require(c.hyper.trust_window >= 1, "hyper.trust_window must be at least 1");
  require(c.hyper.q_hint_k >= 1 && c.hyper.q_hint_k <= 4, "hyper.q_hint_k must lie in [1, 4]");
  require(c.hyper.style_k >= 1, "hyper.style_k must be at least 1");
  require(c.persona.w_s[index_of(PersonaKind::Emotion)] == 0.0,
          "persona.emotion.w_s must be 0: the Emotion agent takes no shared reward");
  if (c.persona.pin_mood) {
    require(*c.persona.pin_mood >= kMoodMin && *c.persona.pin_mood <= kMoodMax,
            "persona.emotion.pin_mood must lie in [0, 2]");
  }
  const auto& g = c.map.generator;
  require(g.goals >= 1 && g.food >= 0 && g.traps >= 0 && g.goals + g.food + g.traps < 100,
          "map densities must leave room for a start cell");
  require(c.backend.timeout_seconds > 0.0, "backend.timeout must be positive");
  require(c.backend.max_retries >= 0, "backend.max_retries must be nonnegative");
  require(c.backend.backoff_initial_seconds >= 0.0, "backend.backoff_initial must be nonnegative");
  require(c.backend.max_in_flight >= 1 && c.backend.max_in_flight <= 64,
          "backend.max_in_flight must lie in [1, 64]");
  if (c.backend.mode == BackendMode::Http) {
    require(!c.backend.base_url.empty(), "backend.base_url is required in http mode");
    require(!c.backend.api_key_env.empty(), "backend.api_key_env is required in http mode");
  }
}

std::string format_config(const RunConfig& config) {
  std::string out;
  for (const Key& k : keys()) out += fmt::format("{} = {}\n", k.name, k.get(config));
  return out;
}

}  // namespace dualloop
