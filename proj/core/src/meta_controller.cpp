#include "dualloop/meta_controller.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <istream>
#include <numeric>
#include <sstream>

#include <fmt/format.h>

namespace dualloop {

TrustScores::TrustScores(double initial, double beta, std::size_t window)
    : beta_(beta), window_capacity_(window) {
  if (!std::isfinite(initial) || !std::isfinite(beta)) throw ContractViolation("trust parameters must be finite");
  if (window == 0) throw ContractViolation("trust window must hold at least one reward");
  scores_.fill(initial);
}

void TrustScores::set_score(PersonaKind p, double value) {
  if (!std::isfinite(value)) throw ContractViolation("trust scores must be finite");
  scores_[index_of(p)] = value;
}

double TrustScores::mean_shared_reward() const {
  if (window_.empty()) return 0.0;
  return std::accumulate(window_.begin(), window_.end(), 0.0) / static_cast<double>(window_.size());
}

void TrustScores::push_shared_reward(double r_s) {
  window_.push_back(r_s);
  while (window_.size() > window_capacity_) window_.pop_front();
}

TrustScores TrustScores::scaled(double c) const {
  TrustScores out = *this;
  for (double& s : out.scores_) s *= c;
  return out;
}

TrustScores trust_update(TrustScores trust, PersonaKind adopted, double r_s) {
  if (!std::isfinite(r_s)) throw ContractViolation("shared reward must be finite");
  const double advantage = r_s - trust.mean_shared_reward();
  trust.set_score(adopted, trust.score(adopted) + trust.beta() * advantage);
  trust.push_shared_reward(r_s);
  return trust;
}

TrustScores social_trust_boost(TrustScores trust, double career_delta_change, double multiplier) {
  if (!std::isfinite(career_delta_change)) throw ContractViolation("career change must be finite");
  const double boost = multiplier * std::max(0.0, career_delta_change);
  if (boost != 0.0) {
    trust.set_score(PersonaKind::SocialCognition,
                    trust.score(PersonaKind::SocialCognition) + boost);
  }
  return trust;
}

PersonaKind most_trusted(const TrustScores& trust) {
  PersonaKind best = kTrustOrder[0];
  for (PersonaKind p : kTrustOrder) {
    if (trust.score(p) > trust.score(best)) best = p;
  }
  return best;
}

namespace {

void require_bundles(std::span<const SuggestionBundle> bundles) {
  if (bundles.size() != kPersonaCount) {
    throw ContractViolation(fmt::format("arbitration needs {} bundles, got {}", kPersonaCount,
                                        bundles.size()));
  }
  std::array<bool, kPersonaCount> seen{};
  for (const SuggestionBundle& b : bundles) {
    if (seen[index_of(b.agent)]) throw ContractViolation("two bundles from the same agent");
    seen[index_of(b.agent)] = true;
  }
}

const SuggestionBundle& bundle_of(std::span<const SuggestionBundle> bundles, PersonaKind p) {
  return *std::find_if(bundles.begin(), bundles.end(),
                       [p](const SuggestionBundle& b) { return b.agent == p; });
}

std::string trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front())) != 0) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back())) != 0) s.remove_suffix(1);
  return std::string(s);
}

}  // namespace

ChatRequest compose_meta_prompt(std::span<const SuggestionBundle> bundles, const TrustScores& trust,
                                const MetaPromptInputs& inputs, const PromptTemplates& templates) {
  std::string lines;
  for (PersonaKind p : kTrustOrder) {
    const SuggestionBundle& b = bundle_of(bundles, p);
    lines += render_template(templates.get("meta_bundle"),
                             {{"agent", std::string(to_string(p))},
                              {"trust", fmt::format("{:.3f}", trust.score(p))},
                              {"action", std::string(to_string(b.proposed_action))},
                              {"text", b.persuasion_text}});
    lines += '\n';
  }
  if (!lines.empty()) lines.pop_back();
  const std::string memory =
      inputs.memory_bias.empty() ? std::string()
                                 : templates.get("memory_header") + "\n" + inputs.memory_bias;
  ChatRequest req;
  req.model = inputs.model;
  req.system = templates.get("meta_system");
  req.user = render_template(templates.get("meta_user"), {{"bundles", lines}, {"memory", memory}});
  req.image = inputs.image;
  return req;
}

std::optional<std::pair<PersonaKind, Direction>> parse_adopt_reply(std::string_view reply) {
  const std::string line = trim(reply);
  if (line.find('\n') != std::string::npos) return std::nullopt;
  std::istringstream in(line);
  std::string keyword, agent, action, extra;
  if (!(in >> keyword >> agent >> action) || (in >> extra)) return std::nullopt;
  std::transform(keyword.begin(), keyword.end(), keyword.begin(),
                 [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  if (keyword != "ADOPT") return std::nullopt;
  const auto p = parse_persona(agent);
  const auto d = parse_direction(action);
  if (!p || !d) return std::nullopt;
  return std::make_pair(*p, *d);
}

Decision arbitrate(std::span<const SuggestionBundle> bundles, const TrustScores& trust,
                   ArbitrationMode mode, LanguageBackend* backend, const MetaPromptInputs& inputs,
                   const PromptTemplates& templates) {
  require_bundles(bundles);
  Decision d;
  if (mode == ArbitrationMode::Llm) {
    if (backend == nullptr) throw ContractViolation("llm arbitration needs a backend");
    ChatRequest req = compose_meta_prompt(bundles, trust, inputs, templates);
    for (int attempt = 0; attempt < 2; ++attempt) {
      const auto reply = backend->complete(req);
      if (reply) {
        if (const auto parsed = parse_adopt_reply(*reply)) {
          // The executed move is always the named advisor's own proposal.
          d.agent = parsed->first;
          d.action = bundle_of(bundles, d.agent).proposed_action;
          if (parsed->second != d.action) {
            d.warnings.push_back(fmt::format("meta named {} with {} but {} proposed {}", to_string(d.agent),
                                             to_string(parsed->second), to_string(d.agent),
                                             to_string(d.action)));
          }
          return d;
        }
        d.warnings.push_back(fmt::format("meta reply not in ADOPT format: {}", trim(*reply)));
        req.user += "\n" + templates.get("meta_retry");
      } else {
        d.warnings.push_back("meta-controller got no reply");
      }
    }
    d.fallback = true;
    d.warnings.push_back("meta-controller fell back to the trust rule");
  }
  d.agent = most_trusted(trust);
  d.action = bundle_of(bundles, d.agent).proposed_action;
  return d;
}

namespace {

constexpr std::array<std::size_t, kPersonaCount> kCsvTrustColumns{
    index_of(PersonaKind::Rational), index_of(PersonaKind::Emotion),
    index_of(PersonaKind::RiskMonitor), index_of(PersonaKind::Habitual),
    index_of(PersonaKind::SocialCognition)};

constexpr std::string_view kAdoptionHeader =
    "step,episode,adopted_agent,action,T_rational,T_emotion,T_risk,T_habit,T_social,shared_reward";

}  // namespace

void write_adoption_csv(std::ostream& out, const AdoptionLog& log) {
  out << kAdoptionHeader << '\n';
  for (const AdoptionRecord& r : log) {
    out << fmt::format("{},{},{},{}", r.step, r.episode, to_string(r.adopted_agent),
                       to_string(r.action));
    for (std::size_t col : kCsvTrustColumns) out << fmt::format(",{}", r.trust[col]);
    out << fmt::format(",{}\n", r.shared_reward);
  }
}

AdoptionLog read_adoption_csv(std::istream& in) {
  AdoptionLog log;
  std::string line;
  if (!std::getline(in, line) || line != kAdoptionHeader) {
    throw std::runtime_error("adoption CSV header mismatch");
  }
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 10) throw std::runtime_error(fmt::format("adoption CSV line {}: expected 10 fields", lineno));
    AdoptionRecord r;
    try {
      r.step = std::stoul(cells[0]);
      r.episode = std::stoul(cells[1]);
      const auto agent = parse_persona(cells[2]);
      const auto action = parse_direction(cells[3]);
      if (!agent || !action) throw std::invalid_argument("agent/action");
      r.adopted_agent = *agent;
      r.action = *action;
      for (std::size_t i = 0; i < kPersonaCount; ++i) r.trust[kCsvTrustColumns[i]] = std::stod(cells[4 + i]);
      r.shared_reward = std::stod(cells[9]);
    } catch (const std::exception&) {
      throw std::runtime_error(fmt::format("adoption CSV line {}: bad field", lineno));
    }
    log.push_back(r);
  }
  return log;
}

}  // namespace dualloop
