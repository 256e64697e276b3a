#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

#include "dualloop/grid_env.hpp"
#include "dualloop/lm_backend.hpp"
#include "dualloop/personas.hpp"

namespace dualloop {

struct Hyperparameters {
  double alpha = 0.1;
  double gamma = 0.9;
  double eta = 0.1;
  double beta = 0.1;
  std::size_t retrieval_k = 3;
  double spike_threshold = 0.6;
  std::size_t embed_dim = kDefaultLatentDim;
  double trust_init = 1.0;
  std::size_t trust_window = 10;
  double social_boost = 0.2;
  std::size_t q_hint_k = 2;
  std::size_t style_k = 3;
};

struct PersonaConfig {
  /// Indexed by persona order; Emotion's w_s stays 0.
  std::array<double, kPersonaCount> w_p{0.7, 0.7, 0.7, 0.7, 0.7};
  std::array<double, kPersonaCount> w_s{0.0, 0.3, 0.3, 0.3, 0.3};
  RewardParams rewards;
  /// Holds the Emotion agent's mood constant (no updates) when set.
  std::optional<double> pin_mood;
};

struct MapSource {
  std::optional<std::filesystem::path> file;
  MapGenParams generator;
};

struct RunConfig {
  std::uint64_t seed = 1;
  std::size_t rounds = 6;
  std::size_t max_steps_per_episode = 60;
  std::string run_id = "run";
  std::filesystem::path output_dir = "out";
  /// Components per row in the trajectory CSV; 0 writes all of them.
  std::size_t trajectory_csv_components = 64;
  BackendConfig backend;
  Hyperparameters hyper;
  PersonaConfig persona;
  MapSource map;
};

/// Flat `section.key = value` lines; `#` starts a comment. Unknown keys, malformed lines,
/// and out-of-range values raise ConfigError naming the line.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);

/// Checks every rate and count against its module contract.
void validate(const RunConfig& config);

/// Canonical text of every key, parseable by parse_config.
std::string format_config(const RunConfig& config);

}  // namespace dualloop
