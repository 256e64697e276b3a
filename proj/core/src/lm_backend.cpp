#include "dualloop/lm_backend.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

#include <fmt/format.h>

#include "dualloop/http_backend.hpp"
#include "dualloop/rng.hpp"

namespace dualloop {

std::string_view to_string(BackendMode m) { return m == BackendMode::Stub ? "stub" : "http"; }

std::vector<std::string> LanguageBackend::take_warnings() {
  std::lock_guard lock(warnings_mutex_);
  std::vector<std::string> out;
  out.swap(warnings_);
  return out;
}

void LanguageBackend::warn(std::string message) {
  std::lock_guard lock(warnings_mutex_);
  warnings_.push_back(std::move(message));
}

std::vector<std::string> word_tokens(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c) != 0) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  return tokens;
}

Vector hash_embed(std::string_view text, std::size_t dim) {
  if (dim == 0) throw ContractViolation("embedding dimension must be positive");
  const auto tokens = word_tokens(text);
  if (tokens.empty()) throw ContractViolation("cannot embed empty text");
  Vector v(dim, 0.0);
  for (const std::string& t : tokens) {
    const std::uint64_t h = fnv1a64(t);
    const double sign = (h >> 63) != 0 ? -1.0 : 1.0;
    v[static_cast<std::size_t>(h % dim)] += sign;
  }
  if (l2_norm(v) == 0.0) {
    // Every token cancelled out; fall back to unsigned counts so the vector stays defined.
    for (const std::string& t : tokens) v[static_cast<std::size_t>(fnv1a64(t) % dim)] += 1.0;
  }
  return normalized(v);
}

std::string reward_sign_word(double reward) {
  if (reward > 0.0) return "positive";
  if (reward < 0.0) return "negative";
  return "neutral";
}

namespace {

std::string goal_section(PersonaKind p) { return fmt::format("goal_{}", to_string(p)); }

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i > 0) out += sep;
    out += parts[i];
  }
  return out;
}

std::string event_words(EventSet events) {
  std::string s = describe(events);
  if (s == "none") return "a plain move";
  std::replace(s.begin(), s.end(), '_', ' ');
  return s;
}

std::string upper(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return out;
}

}  // namespace

std::string q_hint_sentence(const std::vector<QHint>& hints) {
  const auto& t = PromptTemplates::builtin();
  if (hints.empty()) return t.get("q_hint_empty");
  std::vector<std::string> parts;
  for (const QHint& h : hints) parts.push_back(fmt::format("{} ({:.3f})", to_string(h.action), h.q));
  return render_template(t.get("q_hint"), {{"actions", join(parts, ", ")}});
}

TemplateVars agent_template_vars(const AgentContext& ctx) {
  const auto& t = PromptTemplates::builtin();
  TemplateVars vars;
  vars["persona"] = std::string(display_name(ctx.agent.kind));
  vars["goal"] = t.get(goal_section(ctx.agent.kind));
  vars["style"] = ctx.style_tokens.empty() ? "plain speech" : join(ctx.style_tokens, "; ");
  vars["state"] = serialize_state(ctx.map, ctx.entity);
  vars["step"] = std::to_string(ctx.step);
  vars["stamina"] = std::to_string(ctx.entity.stamina);
  vars["mood"] = ctx.agent.mood ? fmt::format("Your mood score is {:.2f} out of 2.", *ctx.agent.mood)
                                : std::string();
  vars["q_hint"] = q_hint_sentence(ctx.q_hint);
  vars["memory"] =
      ctx.memory_bias.empty() ? std::string() : t.get("memory_header") + "\n" + ctx.memory_bias;
  return vars;
}

Direction lookahead_action(const AgentContext& ctx) {
  const double here = goal_distance(ctx.map, ctx.entity.position);
  Direction best = kDirections[0];
  double best_reward = 0.0;
  bool first = true;
  for (Direction d : kDirections) {
    EntityState probe = ctx.entity;
    RewardContext rc;
    rc.outcome = step(ctx.map, probe, d);
    rc.adopted = true;
    rc.prev_distance = here;
    rc.new_distance = goal_distance(ctx.map, probe.position);
    rc.action = d;
    const double r = private_reward(ctx.agent, rc, ctx.rewards);
    if (first || r > best_reward) {
      best = d;
      best_reward = r;
      first = false;
    }
  }
  return best;
}

std::optional<Suggestion> parse_move_reply(std::string_view reply) {
  std::size_t pos = 0;
  while (pos <= reply.size()) {
    std::size_t nl = reply.find('\n', pos);
    if (nl == std::string_view::npos) nl = reply.size();
    std::string_view line = reply.substr(pos, nl - pos);
    pos = nl + 1;
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.front())) != 0) line.remove_prefix(1);
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back())) != 0) line.remove_suffix(1);
    if (line.size() < 5 || upper(line.substr(0, 4)) != "MOVE" ||
        std::isspace(static_cast<unsigned char>(line[4])) == 0) {
      continue;
    }
    std::string_view rest = line.substr(5);
    while (!rest.empty() && rest.front() == ' ') rest.remove_prefix(1);
    std::size_t end = 0;
    while (end < rest.size() && std::isalpha(static_cast<unsigned char>(rest[end])) != 0) ++end;
    const auto dir = parse_direction(rest.substr(0, end));
    if (!dir) continue;
    std::string_view text = rest.substr(end);
    if (!text.empty() && text.front() == ':') text.remove_prefix(1);
    while (!text.empty() && text.front() == ' ') text.remove_prefix(1);
    return Suggestion{*dir, std::string(text), false};
  }
  return std::nullopt;
}

StubBackend::StubBackend(std::size_t embed_dim, const PromptTemplates& templates)
    : dim_(embed_dim), templates_(templates) {
  if (dim_ == 0) throw ContractViolation("embedding dimension must be positive");
}

Suggestion StubBackend::suggest(const AgentContext& ctx) {
  Suggestion s;
  s.action = lookahead_action(ctx);
  TemplateVars vars = agent_template_vars(ctx);
  vars["action"] = std::string(to_string(s.action));
  s.text = render_template(templates_.get("stub_persuasion"), vars);
  return s;
}

std::string StubBackend::reflection_text(const ReflectionContext& ctx) const {
  const std::string sign = reward_sign_word(ctx.reward);
  TemplateVars vars;
  vars["persona"] = std::string(display_name(ctx.agent));
  vars["step"] = std::to_string(ctx.step);
  vars["action"] = std::string(to_string(ctx.action));
  vars["events"] = event_words(ctx.outcome.events);
  vars["adopted"] = ctx.adopted ? "adopted" : "not adopted";
  vars["sign"] = sign;
  vars["lesson"] = templates_.get("lesson_" + sign);
  return render_template(templates_.get("stub_reflection"), vars);
}

ReflectionRecord StubBackend::reflect(const ReflectionContext& ctx) {
  ReflectionRecord rec;
  rec.agent = ctx.agent;
  rec.step = ctx.step;
  rec.text = reflection_text(ctx);
  rec.embedding = embed(rec.text);
  rec.reward_used = ctx.reward;
  return rec;
}

Vector StubBackend::embed(std::string_view text) { return hash_embed(text, dim_); }

std::optional<std::string> StubBackend::complete(const ChatRequest&) { return std::nullopt; }

std::unique_ptr<LanguageBackend> make_backend(const BackendConfig& config, std::uint64_t seed,
                                              const PromptTemplates& templates) {
  if (config.mode == BackendMode::Stub) {
    return std::make_unique<StubBackend>(config.embed_dim, templates);
  }
  return std::make_unique<HttpBackend>(config, derive_seed(seed, "jitter"), templates);
}

}  // namespace dualloop
