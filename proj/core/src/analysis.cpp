#include "dualloop/analysis.hpp"

#include <cmath>
#include <fstream>

#include <fmt/format.h>

#include "dualloop/rng.hpp"

namespace dualloop {

Series cosine_to_first(std::span<const Vector> trajectory) {
  if (trajectory.empty()) throw ContractViolation("cosine_to_first of an empty trajectory");
  if (l2_norm(trajectory.front()) == 0.0) throw ContractViolation("first latent vector is zero");
  Series s{MetricKind::CosineToFirst, {}};
  s.points.reserve(trajectory.size());
  s.points.push_back({0, 1.0});
  for (std::size_t t = 1; t < trajectory.size(); ++t) {
    s.points.push_back({t, cosine(trajectory[t], trajectory.front())});
  }
  return s;
}

Series l2_deltas(std::span<const Vector> trajectory) {
  Series s{MetricKind::L2Delta, {}};
  for (std::size_t t = 1; t < trajectory.size(); ++t) {
    s.points.push_back({t, l2_distance(trajectory[t], trajectory[t - 1])});
  }
  return s;
}

std::vector<std::size_t> detect_spikes(const Series& l2, double threshold) {
  std::vector<std::size_t> steps;
  for (const SeriesPoint& p : l2.points) {
    if (p.value > threshold) steps.push_back(p.step);
  }
  return steps;
}

namespace {

/// Dense symmetric matrix, row-major.
struct SymMatrix {
  std::size_t n = 0;
  std::vector<double> a;

  double& at(std::size_t i, std::size_t j) { return a[i * n + j]; }
  double at(std::size_t i, std::size_t j) const { return a[i * n + j]; }

  Vector apply(const Vector& v) const {
    Vector out(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      const double* row = &a[i * n];
      for (std::size_t j = 0; j < n; ++j) s += row[j] * v[j];
      out[i] = s;
    }
    return out;
  }
};

struct EigenPair {
  double value = 0.0;
  Vector vector;
};

void orthogonalize(Vector& v, const std::vector<Vector>& against) {
  for (const Vector& u : against) {
    const double p = dot(v, u);
    for (std::size_t i = 0; i < v.size(); ++i) v[i] -= p * u[i];
  }
}

/// Leading eigenpair of a PSD matrix restricted to the complement of `found`.
EigenPair power_iterate(const SymMatrix& m, const std::vector<Vector>& found,
                        const PcaOptions& options, std::uint64_t seed) {
  Rng rng(seed);
  Vector v(m.n);
  for (double& x : v) x = rng.normal();
  orthogonalize(v, found);
  double norm = l2_norm(v);
  if (norm == 0.0) return {0.0, Vector(m.n, 0.0)};
  for (double& x : v) x /= norm;

  double lambda = 0.0;
  for (int it = 0; it < options.max_iterations; ++it) {
    Vector w = m.apply(v);
    orthogonalize(w, found);
    lambda = dot(v, w);
    norm = l2_norm(w);
    if (norm <= 1e-300) return {0.0, v};
    for (double& x : w) x /= norm;
    const double change = l2_distance(w, v);
    v = std::move(w);
    if (change < options.tolerance) break;
  }
  lambda = dot(v, m.apply(v));
  return {std::max(lambda, 0.0), v};
}

}  // namespace

Pca2d pca2d(std::span<const Vector> points, const PcaOptions& options) {
  const std::size_t n = points.size();
  if (n < 3) throw ContractViolation("pca2d needs at least 3 points");
  const std::size_t dim = points.front().size();
  for (const Vector& p : points) {
    if (p.size() != dim) throw ContractViolation("pca2d points have mixed dimensions");
  }

  Vector mean(dim, 0.0);
  for (const Vector& p : points) {
    for (std::size_t j = 0; j < dim; ++j) mean[j] += p[j];
  }
  for (double& x : mean) x /= static_cast<double>(n);
  std::vector<Vector> centered(points.begin(), points.end());
  double total = 0.0;
  for (Vector& p : centered) {
    for (std::size_t j = 0; j < dim; ++j) {
      p[j] -= mean[j];
      total += p[j] * p[j];
    }
  }
  if (total == 0.0) throw ContractViolation("pca2d of identical points");

  const bool gram = n <= dim;
  SymMatrix m;
  m.n = gram ? n : dim;
  m.a.assign(m.n * m.n, 0.0);
  if (gram) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = i; k < n; ++k) {
        const double g = dot(centered[i], centered[k]);
        m.at(i, k) = g;
        m.at(k, i) = g;
      }
    }
  } else {
    for (const Vector& p : centered) {
      for (std::size_t i = 0; i < dim; ++i) {
        for (std::size_t k = i; k < dim; ++k) m.at(i, k) += p[i] * p[k];
      }
    }
    for (std::size_t i = 0; i < dim; ++i) {
      for (std::size_t k = 0; k < i; ++k) m.at(i, k) = m.at(k, i);
    }
  }

  Pca2d out;
  const double denom = static_cast<double>(n - 1);
  out.total_variance = total / denom;
  out.projections.assign(n, {0.0, 0.0});

  std::vector<Vector> found;
  for (std::size_t c = 0; c < 2; ++c) {
    EigenPair ep = power_iterate(m, found, options, 0x5eed0000ULL + c);
    found.push_back(ep.vector);
    Vector component(dim, 0.0);
    Vector proj(n, 0.0);
    if (ep.value > 0.0) {
      if (gram) {
        const double root = std::sqrt(ep.value);
        for (std::size_t i = 0; i < n; ++i) {
          for (std::size_t j = 0; j < dim; ++j) component[j] += centered[i][j] * ep.vector[i];
        }
        for (double& x : component) x /= root;
        for (std::size_t i = 0; i < n; ++i) proj[i] = root * ep.vector[i];
      } else {
        component = ep.vector;
        for (std::size_t i = 0; i < n; ++i) proj[i] = dot(centered[i], component);
      }
      std::size_t largest = 0;
      for (std::size_t j = 1; j < dim; ++j) {
        if (std::fabs(component[j]) > std::fabs(component[largest])) largest = j;
      }
      if (component[largest] < 0.0) {
        for (double& x : component) x = -x;
        for (double& x : proj) x = -x;
      }
    }
    out.explained_variance[c] = ep.value / denom;
    out.components[c] = std::move(component);
    for (std::size_t i = 0; i < n; ++i) out.projections[i][c] = proj[i];
  }
  return out;
}

std::array<std::size_t, kPersonaCount> adoption_counts(const AdoptionLog& log) {
  std::array<std::size_t, kPersonaCount> counts{};
  for (const AdoptionRecord& r : log) ++counts[index_of(r.adopted_agent)];
  return counts;
}

AnalysisReport analyze(const std::array<LatentTrajectory, kPersonaCount>& trajectories,
                       const AdoptionLog& log, double spike_threshold) {
  AnalysisReport rep;
  rep.spike_threshold = spike_threshold;
  std::vector<Vector> joint;
  for (std::size_t i = 0; i < kPersonaCount; ++i) {
    const auto pts = trajectories[i].points();
    rep.cosine[i] = cosine_to_first(pts);
    rep.l2[i] = l2_deltas(pts);
    rep.spikes[i] = detect_spikes(rep.l2[i], spike_threshold);
    if (pts.size() >= 3) {
      try {
        rep.per_agent_pca[i] = pca2d(pts);
      } catch (const ContractViolation&) {
        rep.per_agent_pca[i].reset();
      }
    }
    joint.insert(joint.end(), pts.begin(), pts.end());
  }
  rep.joint_pca = pca2d(joint);
  rep.adoption = adoption_counts(log);
  return rep;
}

namespace {

double mean_of(const Series& s, std::size_t first_step, std::size_t last_step) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const SeriesPoint& p : s.points) {
    if (p.step >= first_step && p.step <= last_step) {
      sum += p.value;
      ++count;
    }
  }
  return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

}  // namespace

nlohmann::json report_json(const AnalysisReport& report) {
  nlohmann::json agents = nlohmann::json::object();
  std::size_t total = 0;
  for (std::size_t i = 0; i < kPersonaCount; ++i) {
    const auto& cos = report.cosine[i].points;
    nlohmann::json a = {
        {"adoption_count", report.adoption[i]},
        {"reflections", cos.empty() ? 0 : cos.size() - 1},
        {"final_cosine_to_first", cos.empty() ? 1.0 : cos.back().value},
        {"mean_l2_delta_first_10", mean_of(report.l2[i], 1, 10)},
        {"mean_l2_delta_last_10",
         mean_of(report.l2[i], cos.size() > 10 ? cos.size() - 10 : 1, cos.size())},
        {"spikes", report.spikes[i]},
    };
    if (report.per_agent_pca[i]) {
      a["pca_explained_variance"] = report.per_agent_pca[i]->explained_variance;
    }
    agents[std::string(to_string(kPersonas[i]))] = std::move(a);
    total += report.adoption[i];
  }
  return {{"agents", std::move(agents)},
          {"decision_steps", total},
          {"spike_threshold", report.spike_threshold},
          {"joint_pca",
           {{"explained_variance", report.joint_pca.explained_variance},
            {"total_variance", report.joint_pca.total_variance}}}};
}

void write_analysis(const std::filesystem::path& dir, const std::string& run_id,
                    const AnalysisReport& report,
                    const std::array<LatentTrajectory, kPersonaCount>& trajectories) {
  auto open = [&](std::string_view metric, std::string_view ext = "csv") {
    std::ofstream out(dir / fmt::format("{}_{}.{}", run_id, metric, ext), std::ios::binary);
    if (!out) throw std::runtime_error(fmt::format("cannot write {} output", metric));
    return out;
  };
  auto series_csv = [&](std::string_view metric, const std::array<Series, kPersonaCount>& all) {
    auto out = open(metric);
    out << "agent,step,value\n";
    for (std::size_t i = 0; i < kPersonaCount; ++i) {
      for (const SeriesPoint& p : all[i].points) {
        out << fmt::format("{},{},{}\n", to_string(kPersonas[i]), p.step, p.value);
      }
    }
  };
  series_csv("cosine_to_first", report.cosine);
  series_csv("l2_delta", report.l2);
  {
    auto out = open("spikes");
    out << "agent,step,l2_delta\n";
    for (std::size_t i = 0; i < kPersonaCount; ++i) {
      for (std::size_t s : report.spikes[i]) {
        out << fmt::format("{},{},{}\n", to_string(kPersonas[i]), s, report.l2[i].points[s - 1].value);
      }
    }
  }
  {
    auto out = open("pca2d");
    out << "agent,step,pc1,pc2\n";
    std::size_t row = 0;
    for (std::size_t i = 0; i < kPersonaCount; ++i) {
      const std::size_t count = trajectories[i].updates.size() + 1;
      for (std::size_t t = 0; t < count; ++t, ++row) {
        const auto& p = report.joint_pca.projections[row];
        out << fmt::format("{},{},{},{}\n", to_string(kPersonas[i]), t, p[0], p[1]);
      }
    }
  }
  {
    auto out = open("pca2d_per_agent");
    out << "agent,step,pc1,pc2\n";
    for (std::size_t i = 0; i < kPersonaCount; ++i) {
      if (!report.per_agent_pca[i]) continue;
      const auto& proj = report.per_agent_pca[i]->projections;
      for (std::size_t t = 0; t < proj.size(); ++t) {
        out << fmt::format("{},{},{},{}\n", to_string(kPersonas[i]), t, proj[t][0], proj[t][1]);
      }
    }
  }
  {
    auto out = open("adoption_counts");
    out << "agent,count\n";
    for (std::size_t i = 0; i < kPersonaCount; ++i) {
      out << fmt::format("{},{}\n", to_string(kPersonas[i]), report.adoption[i]);
    }
  }
  {
    auto out = open("report", "json");
    out << report_json(report).dump(2) << '\n';
  }
}

}  // namespace dualloop
