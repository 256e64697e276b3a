#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dualloop/language_loop.hpp"
#include "dualloop/meta_controller.hpp"
#include "dualloop/vector_math.hpp"

namespace dualloop {

struct SeriesPoint {
  std::size_t step = 0;
  double value = 0.0;
};

enum class MetricKind { CosineToFirst, L2Delta };

struct Series {
  MetricKind kind = MetricKind::CosineToFirst;
  std::vector<SeriesPoint> points;
};

/// value(t) = cosine(z_t, z_0). Throws ContractViolation on an empty or zero-first trajectory.
Series cosine_to_first(std::span<const Vector> trajectory);

/// value(t) = |z_t - z_{t-1}| for t >= 1; empty for fewer than two points.
Series l2_deltas(std::span<const Vector> trajectory);

inline constexpr double kDefaultSpikeThreshold = 0.6;

/// Steps whose L2 delta strictly exceeds the threshold.
std::vector<std::size_t> detect_spikes(const Series& l2, double threshold = kDefaultSpikeThreshold);

struct PcaOptions {
  double tolerance = 1e-10;
  int max_iterations = 10000;
};

struct Pca2d {
  /// Per input point (pc1, pc2).
  std::vector<std::array<double, 2>> projections;
  std::array<double, 2> explained_variance{};
  double total_variance = 0.0;
  /// Principal directions in the input space, unit norm.
  std::array<Vector, 2> components;
};

/// Centers the points and finds the top two principal directions by power iteration with
/// deflation, on the Gram matrix when points < dims and on the covariance otherwise.
/// Each component's largest-magnitude entry is made positive.
/// Needs at least 3 points; identical points are a ContractViolation.
Pca2d pca2d(std::span<const Vector> points, const PcaOptions& options = {});

std::array<std::size_t, kPersonaCount> adoption_counts(const AdoptionLog& log);

struct AgentSeries {
  PersonaKind agent;
  LatentTrajectory trajectory;
};

struct AnalysisReport {
  std::array<Series, kPersonaCount> cosine;
  std::array<Series, kPersonaCount> l2;
  std::array<std::vector<std::size_t>, kPersonaCount> spikes;
  /// Joint fit over every agent's points, in agent-major order.
  Pca2d joint_pca;
  std::array<std::optional<Pca2d>, kPersonaCount> per_agent_pca;
  std::array<std::size_t, kPersonaCount> adoption{};
  double spike_threshold = kDefaultSpikeThreshold;
};

/// Trajectories indexed by persona.
AnalysisReport analyze(const std::array<LatentTrajectory, kPersonaCount>& trajectories,
                       const AdoptionLog& log, double spike_threshold = kDefaultSpikeThreshold);

nlohmann::json report_json(const AnalysisReport& report);

/// Writes `{run_id}_{metric}.csv` files and `{run_id}_report.json` into dir.
void write_analysis(const std::filesystem::path& dir, const std::string& run_id,
                    const AnalysisReport& report,
                    const std::array<LatentTrajectory, kPersonaCount>& trajectories);

}  // namespace dualloop
