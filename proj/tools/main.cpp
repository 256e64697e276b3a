// dualloop command-line driver.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "dualloop/config.hpp"
#include "dualloop/grid_env.hpp"
#include "dualloop/rng.hpp"
#include "dualloop/simulation.hpp"
#include "dualloop/types.hpp"

namespace {

enum ExitCode : int { kOk = 0, kFailure = 1, kConfig = 2, kBackend = 3, kContract = 4 };

void print_summary(const dualloop::RunArtifacts& art, const std::filesystem::path& dir) {
  std::size_t reached = 0;
  for (const auto& e : art.episodes) reached += e.reached_goal ? 1 : 0;
  fmt::print("{} steps over {} episodes, goal reached in {}\n", art.steps.size(), art.episodes.size(),
             reached);
  fmt::print("adoptions:");
  for (std::size_t i = 0; i < dualloop::kPersonaCount; ++i) {
    fmt::print(" {}={}", dualloop::to_string(dualloop::kPersonas[i]), art.report.adoption[i]);
  }
  fmt::print("\nartifacts in {}\n", dir.string());
}

int run_command(const std::string& config_path, std::optional<std::uint64_t> seed,
                std::optional<std::string> backend, std::optional<std::size_t> rounds,
                std::optional<std::string> out) {
  dualloop::RunConfig config = dualloop::load_config(config_path);
  if (seed) config.seed = *seed;
  if (rounds) config.rounds = *rounds;
  if (out) config.output_dir = *out;
  if (backend) {
    if (*backend == "stub") config.backend.mode = dualloop::BackendMode::Stub;
    else if (*backend == "http") config.backend.mode = dualloop::BackendMode::Http;
    else throw dualloop::ConfigError(fmt::format("unknown backend '{}'", *backend));
  }
  const auto art = dualloop::run(config);
  dualloop::write_artifacts(art, art.config.output_dir);
  print_summary(art, art.config.output_dir);
  return kOk;
}

int gen_map_command(std::uint64_t seed, const std::string& out_path) {
  const auto map = dualloop::generate_map(dualloop::derive_seed(seed, dualloop::kMapStream));
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw std::runtime_error(fmt::format("cannot write '{}'", out_path));
  out << dualloop::format_map(map);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dual-loop multi-agent grid world simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> backend;
  std::optional<std::size_t> rounds;
  std::optional<std::string> out;
  auto* run_cmd = app.add_subcommand("run", "Run the simulation and write artifacts");
  run_cmd->add_option("--config", config_path, "Config file")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--seed", seed, "Override run.seed");
  run_cmd->add_option("--backend", backend, "stub or http")->check(CLI::IsMember({"stub", "http"}));
  run_cmd->add_option("--rounds", rounds, "Override run.rounds");
  run_cmd->add_option("--out", out, "Override run.output_dir");

  std::string dir;
  auto* replay_cmd = app.add_subcommand("replay", "Recompute derived outputs from a run directory");
  replay_cmd->add_option("--dir", dir, "Artifact directory")->required()->check(CLI::ExistingDirectory);
  auto* analyze_cmd = app.add_subcommand("analyze", "Recompute analysis outputs only");
  analyze_cmd->add_option("--dir", dir, "Artifact directory")->required()->check(CLI::ExistingDirectory);

  std::uint64_t map_seed = 0;
  std::string map_out;
  auto* gen_cmd = app.add_subcommand("gen-map", "Generate a map file");
  gen_cmd->add_option("--seed", map_seed, "Root seed")->required();
  gen_cmd->add_option("--out", map_out, "Output file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    if (*run_cmd) return run_command(config_path, seed, backend, rounds, out);
    if (*replay_cmd) {
      const auto art = dualloop::replay(dir);
      print_summary(art, dir);
      return kOk;
    }
    if (*analyze_cmd) {
      const auto report = dualloop::analyze_dir(dir);
      std::size_t spikes = 0;
      for (const auto& s : report.spikes) spikes += s.size();
      fmt::print("analysis rewritten in {} ({} spikes)\n", dir, spikes);
      return kOk;
    }
    if (*gen_cmd) return gen_map_command(map_seed, map_out);
  } catch (const dualloop::ConfigError& e) {
    fmt::print(stderr, "config error: {}\n", e.what());
    return kConfig;
  } catch (const dualloop::MapParseError& e) {
    fmt::print(stderr, "config error: {}\n", e.what());
    return kConfig;
  } catch (const dualloop::BackendError& e) {
    fmt::print(stderr, "backend failure: {}\n", e.what());
    return kBackend;
  } catch (const dualloop::ContractViolation& e) {
    fmt::print(stderr, "contract violation: {}\n", e.what());
    return kContract;
  } catch (const dualloop::ReplayError& e) {
    fmt::print(stderr, "replay failed: {}\n", e.what());
    return kFailure;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return kFailure;
  }
  return kFailure;
}
