#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dualloop/analysis.hpp"
#include "dualloop/behavior_loop.hpp"
#include "dualloop/config.hpp"
#include "dualloop/grid_env.hpp"
#include "dualloop/language_loop.hpp"
#include "dualloop/lm_backend.hpp"
#include "dualloop/memory_pool.hpp"
#include "dualloop/meta_controller.hpp"

namespace dualloop {

/// Corrupt or incomplete artifact directory. record() is the 1-based line of the first bad
/// record in steps.jsonl, or 0 when the problem is not tied to a record.
class ReplayError : public std::runtime_error {
 public:
  ReplayError(std::size_t record, const std::string& what);
  std::size_t record() const { return record_; }

 private:
  std::size_t record_;
};

struct AgentStepRecord {
  PersonaKind agent = PersonaKind::Rational;
  Direction proposed = Direction::Up;
  std::string persuasion;
  std::vector<std::string> style_tokens;
  std::vector<QHint> q_hint;
  double r_p = 0.0;
  double w_p = 0.0;
  double w_s = 0.0;
  double r = 0.0;
  std::string reflection;
  std::size_t latent_row = 0;
  bool fallback = false;
};

struct StepRecord {
  std::size_t step = 0;  // global, 1-based
  std::size_t episode = 0;
  std::size_t episode_step = 0;
  std::size_t round = 0;  // within the episode
  int stamina = 1;
  Cell position_before;
  Cell position_after;
  PersonaKind adopted = PersonaKind::Rational;
  Direction action = Direction::Up;
  bool arbitration_fallback = false;
  EventSet events;
  bool round_boundary = false;
  double shared_reward = 0.0;
  std::array<double, kPersonaCount> trust{};  // after the update, persona index order
  double mood = 0.0;
  double career_delta = 0.0;
  std::array<AgentStepRecord, kPersonaCount> agents;
  std::vector<std::string> warnings;
};

nlohmann::json to_json(const StepRecord& record);
StepRecord step_record_from_json(const nlohmann::json& j);

struct EpisodeSummary {
  std::size_t episode = 0;
  std::size_t steps = 0;
  std::size_t rounds = 0;
  bool reached_goal = false;
  double total_shared_reward = 0.0;
  double final_mood = 0.0;
};

struct RunArtifacts {
  RunConfig config;
  std::optional<GridMap> map;
  std::vector<StepRecord> steps;
  std::vector<EpisodeSummary> episodes;
  AdoptionLog adoption;
  std::array<LatentTrajectory, kPersonaCount> trajectories;
  std::array<QTable, kPersonaCount> qtables;
  MemoryPool memory;
  AnalysisReport report;
};

using BackendFactory = std::function<std::unique_ptr<LanguageBackend>(const RunConfig&)>;

/// Runs every episode of the dual loop. A default factory builds the backend from the config.
/// A contract violation inside a step is rethrown with its episode/step context.
RunArtifacts run(const RunConfig& config, const BackendFactory& factory = {});

/// Writes every artifact into dir (created if missing).
void write_artifacts(const RunArtifacts& artifacts, const std::filesystem::path& dir);

/// Rebuilds the derived outputs (adoption log, analysis) from steps.jsonl and latents.bin,
/// validating every record, and rewrites them into dir.
RunArtifacts replay(const std::filesystem::path& dir);

/// Recomputes and rewrites only the analysis outputs.
AnalysisReport analyze_dir(const std::filesystem::path& dir);

/// Root seed stream names.
inline constexpr std::string_view kMapStream = "map";
inline constexpr std::string_view kLatentStream = "latent";
inline constexpr std::string_view kJitterStream = "jitter";

}  // namespace dualloop
