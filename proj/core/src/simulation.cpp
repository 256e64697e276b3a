#include "dualloop/simulation.hpp"

#include <algorithm>
#include <fstream>
#include <future>
#include <sstream>

#include <fmt/format.h>

#include "binary_io.hpp"
#include "dualloop/render.hpp"

namespace dualloop {

using nlohmann::json;

ReplayError::ReplayError(std::size_t record, const std::string& what)
    : std::runtime_error(record == 0 ? what : fmt::format("record {}: {}", record, what)),
      record_(record) {}

namespace {

constexpr std::array<Event, 4> kEvents{Event::ReachedGoal, Event::AteFood, Event::HitTrap,
                                       Event::BumpedWall};

json cell_json(Cell c) { return json::array({c.x, c.y}); }
Cell cell_from(const json& j) { return {j.at(0).get<int>(), j.at(1).get<int>()}; }

PersonaKind persona_from(const json& j) {
  const auto p = parse_persona(j.get<std::string>());
  if (!p) throw std::invalid_argument("unknown agent name");
  return *p;
}

Direction direction_from(const json& j) {
  const auto d = parse_direction(j.get<std::string>());
  if (!d) throw std::invalid_argument("unknown direction");
  return *d;
}

}  // namespace

json to_json(const StepRecord& r) {
  json events = json::array();
  for (Event e : kEvents) {
    if (r.events.contains(e)) events.push_back(to_string(e));
  }
  json trust = json::object();
  for (PersonaKind p : kPersonas) trust[std::string(to_string(p))] = r.trust[index_of(p)];
  json agents = json::array();
  for (const AgentStepRecord& a : r.agents) {
    json hints = json::array();
    for (const QHint& h : a.q_hint) hints.push_back(json::array({to_string(h.action), h.q}));
    agents.push_back({{"agent", to_string(a.agent)},
                      {"proposed", to_string(a.proposed)},
                      {"persuasion", a.persuasion},
                      {"style_tokens", a.style_tokens},
                      {"q_hint", std::move(hints)},
                      {"r_p", a.r_p},
                      {"w_p", a.w_p},
                      {"w_s", a.w_s},
                      {"r", a.r},
                      {"reflection", a.reflection},
                      {"latent_row", a.latent_row},
                      {"fallback", a.fallback}});
  }
  return {{"step", r.step},
          {"episode", r.episode},
          {"episode_step", r.episode_step},
          {"round", r.round},
          {"stamina", r.stamina},
          {"before", cell_json(r.position_before)},
          {"after", cell_json(r.position_after)},
          {"adopted", to_string(r.adopted)},
          {"action", to_string(r.action)},
          {"arbitration_fallback", r.arbitration_fallback},
          {"events", std::move(events)},
          {"round_boundary", r.round_boundary},
          {"shared_reward", r.shared_reward},
          {"trust", std::move(trust)},
          {"mood", r.mood},
          {"career_delta", r.career_delta},
          {"agents", std::move(agents)},
          {"warnings", r.warnings}};
}

StepRecord step_record_from_json(const json& j) {
  StepRecord r;
  r.step = j.at("step").get<std::size_t>();
  r.episode = j.at("episode").get<std::size_t>();
  r.episode_step = j.at("episode_step").get<std::size_t>();
  r.round = j.at("round").get<std::size_t>();
  r.stamina = j.at("stamina").get<int>();
  r.position_before = cell_from(j.at("before"));
  r.position_after = cell_from(j.at("after"));
  r.adopted = persona_from(j.at("adopted"));
  r.action = direction_from(j.at("action"));
  r.arbitration_fallback = j.at("arbitration_fallback").get<bool>();
  for (const json& e : j.at("events")) {
    const std::string name = e.get<std::string>();
    const auto it = std::find_if(kEvents.begin(), kEvents.end(),
                                 [&](Event ev) { return to_string(ev) == name; });
    if (it == kEvents.end()) throw std::invalid_argument("unknown event name");
    r.events.insert(*it);
  }
  r.round_boundary = j.at("round_boundary").get<bool>();
  r.shared_reward = j.at("shared_reward").get<double>();
  for (PersonaKind p : kPersonas) {
    r.trust[index_of(p)] = j.at("trust").at(std::string(to_string(p))).get<double>();
  }
  r.mood = j.at("mood").get<double>();
  r.career_delta = j.at("career_delta").get<double>();
  const json& agents = j.at("agents");
  if (agents.size() != kPersonaCount) throw std::invalid_argument("expected five agent entries");
  for (std::size_t i = 0; i < kPersonaCount; ++i) {
    const json& a = agents.at(i);
    AgentStepRecord& out = r.agents[i];
    out.agent = persona_from(a.at("agent"));
    if (out.agent != kPersonas[i]) throw std::invalid_argument("agent entries out of persona order");
    out.proposed = direction_from(a.at("proposed"));
    out.persuasion = a.at("persuasion").get<std::string>();
    out.style_tokens = a.at("style_tokens").get<std::vector<std::string>>();
    for (const json& h : a.at("q_hint")) {
      out.q_hint.push_back({direction_from(h.at(0)), h.at(1).get<double>()});
    }
    out.r_p = a.at("r_p").get<double>();
    out.w_p = a.at("w_p").get<double>();
    out.w_s = a.at("w_s").get<double>();
    out.r = a.at("r").get<double>();
    out.reflection = a.at("reflection").get<std::string>();
    out.latent_row = a.at("latent_row").get<std::size_t>();
    out.fallback = a.at("fallback").get<bool>();
  }
  r.warnings = j.at("warnings").get<std::vector<std::string>>();
  return r;
}

namespace {

/// Runs f(i) for every persona; concurrently when asked, committing results in persona order.
template <typename F>
auto for_each_persona(bool concurrent, F&& f) {
  using R = decltype(f(std::size_t{0}));
  std::array<R, kPersonaCount> out;
  if (!concurrent) {
    for (std::size_t i = 0; i < kPersonaCount; ++i) out[i] = f(i);
    return out;
  }
  std::array<std::future<R>, kPersonaCount> pending;
  for (std::size_t i = 0; i < kPersonaCount; ++i) {
    pending[i] = std::async(std::launch::async, [&f, i] { return f(i); });
  }
  for (std::size_t i = 0; i < kPersonaCount; ++i) out[i] = pending[i].get();
  return out;
}

constexpr std::size_t kEmotion = index_of(PersonaKind::Emotion);
constexpr std::size_t kSocial = index_of(PersonaKind::SocialCognition);

}  // namespace

RunArtifacts run(const RunConfig& config_in, const BackendFactory& factory) {
  RunArtifacts art;
  art.config = config_in;
  RunConfig& config = art.config;
  config.backend.embed_dim = config.hyper.embed_dim;
  validate(config);
  if (config.backend.mode == BackendMode::Http && config.backend.transcript_path.empty()) {
    std::filesystem::create_directories(config.output_dir);
    config.backend.transcript_path = config.output_dir / "transcript.jsonl";
  }

  std::unique_ptr<LanguageBackend> backend =
      factory ? factory(config) : make_backend(config.backend, config.seed);
  const std::size_t dim = config.hyper.embed_dim;
  if (backend->embed_dim() != dim) {
    throw ContractViolation("backend embedding dimension differs from hyper.embed_dim");
  }
  const bool concurrent = backend->mode() == BackendMode::Http;
  const ArbitrationMode arbitration =
      backend->mode() == BackendMode::Http ? ArbitrationMode::Llm : ArbitrationMode::Stub;
  const RewardParams& rewards = config.persona.rewards;
  const Hyperparameters& hp = config.hyper;

  const GridMap map = config.map.file ? load_map(*config.map.file)
                                      : generate_map(derive_seed(config.seed, kMapStream),
                                                     config.map.generator);
  art.map = map;

  const StyleCodebook codebook = StyleCodebook::from_phrases(
      default_style_phrases(), [&](std::string_view t) { return backend->embed(t); });
  const std::size_t style_k = std::min(hp.style_k, codebook.size());

  std::array<AgentState, kPersonaCount> agents;
  std::array<LatentVector, kPersonaCount> latent;
  for (std::size_t i = 0; i < kPersonaCount; ++i) {
    agents[i] = make_agent(kPersonas[i], config.persona.w_p[i], config.persona.w_s[i]);
    art.qtables[i] = QTable(hp.alpha, hp.gamma, kStateKeyOffset * static_cast<int>(i));
    latent[i] = init_latent(dim, derive_seed(config.seed, kLatentStream, i));
    art.trajectories[i].initial = latent[i];
  }
  if (config.persona.pin_mood) agents[kEmotion].mood = *config.persona.pin_mood;

  TrustScores trust(hp.trust_init, hp.beta, hp.trust_window);
  std::size_t global_step = 0;

  for (std::size_t episode = 1; episode <= config.rounds; ++episode) {
    EntityState entity = fresh_entity(map, stamina_from_mood(*agents[kEmotion].mood));
    for (AgentState& a : agents) a.last_action.reset();

    const Vector env_embedding = backend->embed(serialize_state(map, entity));
    const auto memories = art.memory.retrieve(env_embedding, hp.retrieval_k);
    const std::string bias = bias_text(memories);

    std::vector<Vector> reflections;
    std::size_t round = 1;
    std::size_t in_round = 0;
    std::size_t episode_step = 0;
    double shared_total = 0.0;
    bool done = false;

    while (!done && episode_step < config.max_steps_per_episode) {
      ++episode_step;
      ++global_step;
      try {
        StepRecord rec;
        rec.step = global_step;
        rec.episode = episode;
        rec.episode_step = episode_step;
        rec.round = round;
        rec.stamina = entity.stamina;
        rec.position_before = entity.position;

        const auto rendered = std::make_shared<const RenderedMap>(render_map(map, entity));
        std::vector<AgentContext> contexts;
        contexts.reserve(kPersonaCount);
        for (std::size_t i = 0; i < kPersonaCount; ++i) {
          contexts.push_back({map, entity, agents[i], rewards, global_step,
                              soft_suggestions(art.qtables[i], state_key(entity.position, i), hp.q_hint_k),
                              style_decode(latent[i].values, codebook, style_k).phrases, bias, rendered});
        }
        const auto suggestions =
            for_each_persona(concurrent, [&](std::size_t i) { return backend->suggest(contexts[i]); });

        std::vector<SuggestionBundle> bundles;
        for (std::size_t i = 0; i < kPersonaCount; ++i) {
          bundles.push_back({kPersonas[i], suggestions[i].action, suggestions[i].text,
                             contexts[i].style_tokens, contexts[i].q_hint});
        }
        const Decision decision = arbitrate(bundles, trust, arbitration, backend.get(),
                                            {config.backend.meta_model, bias, rendered});

        const Cell before = entity.position;
        const double prev_distance = goal_distance(map, before);
        const TransitionOutcome outcome = step(map, entity, decision.action);
        const double new_distance = goal_distance(map, entity.position);
        ++in_round;
        const bool round_boundary = in_round == static_cast<std::size_t>(entity.stamina);
        const double career = career_change(outcome, rewards.career);
        entity = update_career(std::move(entity), outcome, rewards.career);
        const double r_s = outcome.shared_reward;
        shared_total += r_s;

        std::array<double, kPersonaCount> composite{};
        for (std::size_t i = 0; i < kPersonaCount; ++i) {
          RewardContext rc;
          rc.outcome = outcome;
          rc.adopted = decision.agent == kPersonas[i];
          rc.prev_distance = prev_distance;
          rc.new_distance = new_distance;
          rc.action = decision.action;
          rc.round_boundary = round_boundary;
          const double r_p = private_reward(agents[i], rc, rewards);
          composite[i] = composite_reward(r_p, r_s, agents[i].w_p, agents[i].w_s);
          art.qtables[i].update(state_key(before, i), decision.action, composite[i],
                                state_key(entity.position, i));
          AgentStepRecord& ar = rec.agents[i];
          ar.agent = kPersonas[i];
          ar.proposed = suggestions[i].action;
          ar.persuasion = suggestions[i].text;
          ar.style_tokens = contexts[i].style_tokens;
          ar.q_hint = contexts[i].q_hint;
          ar.r_p = r_p;
          ar.w_p = agents[i].w_p;
          ar.w_s = agents[i].w_s;
          ar.r = composite[i];
          ar.fallback = suggestions[i].fallback;
        }
        if (!config.persona.pin_mood) {
          agents[kEmotion] = update_mood(agents[kEmotion], rec.agents[kEmotion].r_p);
        }
        *agents[kSocial].career_value += career;
        for (AgentState& a : agents) a.last_action = decision.action;

        const auto records = for_each_persona(concurrent, [&](std::size_t i) {
          ReflectionContext rc{kPersonas[i], global_step, decision.action, outcome, composite[i],
                               decision.agent == kPersonas[i]};
          return backend->reflect(rc);
        });
        for (std::size_t i = 0; i < kPersonaCount; ++i) {
          latent[i] = latent_update(latent[i], records[i].embedding, composite[i], hp.eta);
          art.trajectories[i].updates.push_back(latent[i]);
          reflections.push_back(records[i].embedding);
          rec.agents[i].reflection = records[i].text;
          rec.agents[i].latent_row = global_step * kPersonaCount + i;
          rec.agents[i].fallback = rec.agents[i].fallback || records[i].fallback;
        }

        trust = trust_update(std::move(trust), decision.agent, r_s);
        trust = social_trust_boost(std::move(trust), career, hp.social_boost);

        rec.position_after = entity.position;
        rec.adopted = decision.agent;
        rec.action = decision.action;
        rec.arbitration_fallback = decision.fallback;
        rec.events = outcome.events;
        rec.round_boundary = round_boundary;
        rec.shared_reward = r_s;
        rec.trust = trust.scores();
        rec.mood = *agents[kEmotion].mood;
        rec.career_delta = entity.career_delta;
        rec.warnings = decision.warnings;
        for (std::string& w : backend->take_warnings()) rec.warnings.push_back(std::move(w));

        art.adoption.push_back({rec.step, rec.episode, rec.adopted, rec.action, rec.trust, r_s});
        art.steps.push_back(std::move(rec));

        done = outcome.episode_done;
        if (round_boundary) {
          ++round;
          in_round = 0;
          entity.stamina = stamina_from_mood(*agents[kEmotion].mood);
        }
      } catch (const ContractViolation& e) {
        throw ContractViolation(
            fmt::format("episode {} step {} (global {}): {}", episode, episode_step, global_step, e.what()));
      }
    }

    art.episodes.push_back({episode, episode_step, in_round > 0 ? round : round - 1, done,
                            shared_total, *agents[kEmotion].mood});
    art.memory.append({episode, episodic_vector(reflections), shared_total, episode_step});
  }

  art.report = analyze(art.trajectories, art.adoption, hp.spike_threshold);
  return art;
}

namespace {

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", p.string()));
  return out;
}

void write_episodes(const std::filesystem::path& p, const std::vector<EpisodeSummary>& episodes) {
  auto out = open_out(p);
  out << "episode,steps,rounds,reached_goal,total_shared_reward,final_mood\n";
  for (const EpisodeSummary& e : episodes) {
    out << fmt::format("{},{},{},{},{},{}\n", e.episode, e.steps, e.rounds, e.reached_goal ? 1 : 0,
                       e.total_shared_reward, e.final_mood);
  }
}

void write_trajectories(const RunArtifacts& art, const std::filesystem::path& dir) {
  auto out = open_out(dir / fmt::format("{}_trajectory.csv", art.config.run_id));
  for (std::size_t i = 0; i < kPersonaCount; ++i) {
    write_trajectory_csv(out, to_string(kPersonas[i]), art.trajectories[i],
                         art.config.trajectory_csv_components, i == 0);
  }
}

void write_derived(const RunArtifacts& art, const std::filesystem::path& dir) {
  {
    auto out = open_out(dir / "adoption_log.csv");
    write_adoption_csv(out, art.adoption);
  }
  write_episodes(dir / "episodes.csv", art.episodes);
  write_trajectories(art, dir);
  write_analysis(dir, art.config.run_id, art.report, art.trajectories);
}

}  // namespace

void write_artifacts(const RunArtifacts& art, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  {
    // Recorded relative to the directory itself so copies of a run stay byte-identical.
    RunConfig recorded = art.config;
    recorded.output_dir = ".";
    auto out = open_out(dir / "config.txt");
    out << format_config(recorded);
  }
  if (art.map) {
    auto out = open_out(dir / "map.txt");
    out << format_map(*art.map);
  }
  {
    auto out = open_out(dir / "steps.jsonl");
    for (const StepRecord& r : art.steps) out << to_json(r).dump() << '\n';
    out << json{{"end", true}, {"steps", art.steps.size()}}.dump() << '\n';
  }
  {
    auto out = open_out(dir / "latents.bin");
    const std::size_t count = art.trajectories[0].updates.size() + 1;
    for (std::size_t t = 0; t < count; ++t) {
      for (const LatentTrajectory& traj : art.trajectories) {
        detail::write_f64_le(out, t == 0 ? traj.initial.values : traj.updates[t - 1].values);
      }
    }
  }
  {
    auto out = open_out(dir / "qtables.csv");
    std::array<const QTable*, kPersonaCount> tables{};
    for (std::size_t i = 0; i < kPersonaCount; ++i) tables[i] = &art.qtables[i];
    write_qtable_csv(out, tables);
  }
  art.memory.save(dir / "memory.jsonl", dir / "memory.bin");
  write_derived(art, dir);
}

namespace {

/// Parses and validates steps.jsonl and latents.bin into `art`.
void load_records(const std::filesystem::path& dir, RunArtifacts& art) {
  try {
    art.config = load_config(dir / "config.txt");
  } catch (const ConfigError& e) {
    throw ReplayError(0, fmt::format("config.txt: {}", e.what()));
  }
  if (std::filesystem::exists(dir / "map.txt")) {
    try {
      art.map = load_map(dir / "map.txt");
    } catch (const MapParseError& e) {
      throw ReplayError(0, fmt::format("map.txt: {}", e.what()));
    }
  }
  std::ifstream in(dir / "steps.jsonl", std::ios::binary);
  if (!in) throw ReplayError(0, "steps.jsonl is missing");

  std::string line;
  std::size_t lineno = 0;
  bool ended = false;
  std::size_t prev_episode = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (ended) throw ReplayError(lineno, "content after the end marker");
    const json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw ReplayError(lineno, "not a JSON object (truncated?)");
    if (j.contains("end")) {
      if (j.value("steps", std::size_t{0}) != art.steps.size()) {
        throw ReplayError(lineno, "end marker step count does not match the records");
      }
      ended = true;
      continue;
    }
    StepRecord r;
    try {
      r = step_record_from_json(j);
    } catch (const std::exception& e) {
      throw ReplayError(lineno, fmt::format("malformed step record: {}", e.what()));
    }
    if (r.step != art.steps.size() + 1) throw ReplayError(lineno, "step numbers are not contiguous");
    if (r.episode < prev_episode || r.episode == 0) throw ReplayError(lineno, "episode numbers go backwards");
    prev_episode = r.episode;
    for (std::size_t i = 0; i < kPersonaCount; ++i) {
      const AgentStepRecord& a = r.agents[i];
      if (a.r != composite_reward(a.r_p, r.shared_reward, a.w_p, a.w_s)) {
        throw ReplayError(lineno, fmt::format("{} composite reward does not recompute", to_string(a.agent)));
      }
      if (a.latent_row != r.step * kPersonaCount + i) {
        throw ReplayError(lineno, "latent snapshot id out of sequence");
      }
    }
    art.adoption.push_back({r.step, r.episode, r.adopted, r.action, r.trust, r.shared_reward});
    art.steps.push_back(std::move(r));
  }
  if (!ended) throw ReplayError(lineno + 1, "steps.jsonl ends without its end marker (truncated)");

  for (const StepRecord& r : art.steps) {
    if (art.episodes.empty() || art.episodes.back().episode != r.episode) {
      art.episodes.push_back({r.episode, 0, 0, false, 0.0, 0.0});
    }
    EpisodeSummary& e = art.episodes.back();
    e.steps = r.episode_step;
    e.rounds = r.round_boundary ? r.round : r.round;
    e.reached_goal = e.reached_goal || r.events.contains(Event::ReachedGoal);
    e.total_shared_reward += r.shared_reward;
    e.final_mood = r.mood;
  }

  const std::size_t dim = art.config.hyper.embed_dim;
  const std::size_t rows = (art.steps.size() + 1) * kPersonaCount;
  std::ifstream blob(dir / "latents.bin", std::ios::binary);
  if (!blob) throw ReplayError(0, "latents.bin is missing");
  blob.seekg(0, std::ios::end);
  const auto size = static_cast<std::uint64_t>(blob.tellg());
  if (size != rows * dim * sizeof(double)) {
    throw ReplayError(0, fmt::format("latents.bin holds {} bytes, expected {}", size,
                                     rows * dim * sizeof(double)));
  }
  blob.seekg(0);
  for (std::size_t t = 0; t <= art.steps.size(); ++t) {
    for (std::size_t i = 0; i < kPersonaCount; ++i) {
      LatentVector v{Vector(dim), t};
      for (double& x : v.values) detail::read_f64_le(blob, x);
      if (t == 0) art.trajectories[i].initial = std::move(v);
      else art.trajectories[i].updates.push_back(std::move(v));
    }
  }
}

}  // namespace

RunArtifacts replay(const std::filesystem::path& dir) {
  RunArtifacts art;
  load_records(dir, art);
  if (std::filesystem::exists(dir / "memory.jsonl")) {
    try {
      art.memory = MemoryPool::load(dir / "memory.jsonl", dir / "memory.bin");
    } catch (const std::exception& e) {
      throw ReplayError(0, fmt::format("memory pool: {}", e.what()));
    }
  }
  art.report = analyze(art.trajectories, art.adoption, art.config.hyper.spike_threshold);
  write_derived(art, dir);
  return art;
}

AnalysisReport analyze_dir(const std::filesystem::path& dir) {
  RunArtifacts art;
  load_records(dir, art);
  art.report = analyze(art.trajectories, art.adoption, art.config.hyper.spike_threshold);
  write_analysis(dir, art.config.run_id, art.report, art.trajectories);
  return art.report;
}

}  // namespace dualloop
