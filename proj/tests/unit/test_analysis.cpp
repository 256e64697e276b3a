#include <doctest.h>

#include <chrono>

#include "dualloop/analysis.hpp"
#include "dualloop/rng.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"

using namespace dualloop;

namespace {

double mean_delta(const Series& s, std::size_t first, std::size_t last) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& p : s.points) {
    if (p.step >= first && p.step <= last) {
      sum += p.value;
      ++n;
    }
  }
  return sum / static_cast<double>(n);
}

}  // namespace

TEST_CASE("cosine_to_first") {
  const Vector z0{1.0, 2.0, -1.0};
  const std::vector<Vector> constant(5, z0);
  for (const auto& p : cosine_to_first(constant).points) CHECK(p.value == doctest::Approx(1.0).epsilon(1e-15));

  std::vector<Vector> flip = constant;
  flip[3] = {-1.0, -2.0, 1.0};
  CHECK(cosine_to_first(flip).points[3].value == doctest::Approx(-1.0).epsilon(1e-15));

  Rng rng(2);
  std::vector<Vector> random;
  for (int i = 0; i < 20; ++i) random.push_back(oracle::random_vector(rng, 40));
  const auto s = cosine_to_first(random);
  REQUIRE(s.points.size() == 20);
  for (std::size_t t = 0; t < 20; ++t) {
    CHECK(s.points[t].step == t);
    CHECK(std::fabs(s.points[t].value - oracle::cosine(random[t], random[0])) < 1e-12);
  }
  CHECK_THROWS_AS(cosine_to_first(std::vector<Vector>{}), ContractViolation);
}

TEST_CASE("l2_deltas") {
  const std::vector<Vector> constant(6, Vector{1.0, 1.0});
  const auto c = l2_deltas(constant);
  REQUIRE(c.points.size() == 5);
  for (const auto& p : c.points) CHECK(p.value == 0.0);
  CHECK(c.points.front().step == 1);

  std::vector<Vector> jump(8, Vector{0.0, 0.0, 0.0});
  for (std::size_t t = 4; t < 8; ++t) jump[t] = {0.0, 3.0, 4.0};
  const auto j = l2_deltas(jump);
  for (const auto& p : j.points) CHECK(p.value == (p.step == 4 ? 5.0 : 0.0));
  CHECK(l2_deltas(std::vector<Vector>{{1.0}}).points.empty());
}

TEST_CASE("spike detection finds exactly the injected flips") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto pts = synthetic::flip_trajectory(kDefaultLatentDim, seed, {15, 30, 45});
    const auto spikes = detect_spikes(l2_deltas(pts), 0.6);
    CHECK(spikes == std::vector<std::size_t>{15, 30, 45});
  }
  Series s{MetricKind::L2Delta, {{1, 0.6}, {2, 0.61}}};
  CHECK(detect_spikes(s, 0.6) == std::vector<std::size_t>{2});
}

TEST_CASE("stationary embeddings: late deltas are smaller than early ones") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto l2 = l2_deltas(synthetic::stationary_trajectory(kDefaultLatentDim, seed));
    CHECK(mean_delta(l2, 41, 50) < mean_delta(l2, 1, 10));
  }
}

TEST_CASE("pca2d matches a dense eigensolver on 5-D data") {
  Rng rng(77);
  const std::array<double, 5> scale{3.0, 2.0, 1.0, 0.5, 0.25};
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<Vector> pts;
    for (int i = 0; i < 40; ++i) {
      Vector p(5);
      for (std::size_t j = 0; j < 5; ++j) p[j] = scale[j] * rng.normal() + 0.2 * p[0];
      pts.push_back(p);
    }
    const auto got = pca2d(pts);
    const auto want = oracle::dense_pca(pts);
    for (std::size_t c = 0; c < 2; ++c) {
      CHECK(std::fabs(got.explained_variance[c] - want.variance[c]) < 1e-6);
      const double sign = got.projections[0][c] * want.projections[0][c] < 0 ? -1.0 : 1.0;
      for (std::size_t i = 0; i < pts.size(); ++i) {
        CHECK(std::fabs(got.projections[i][c] - sign * want.projections[i][c]) < 1e-6);
      }
      CHECK(l2_norm(got.components[c]) == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("pca2d: planar data is fully explained by two components") {
  Rng rng(5);
  const std::size_t dim = 200;
  const Vector u = oracle::random_vector(rng, dim);
  const Vector v = oracle::random_vector(rng, dim);
  std::vector<Vector> pts;
  for (int i = 0; i < 30; ++i) {
    const double a = rng.normal() * 2.0, b = rng.normal();
    Vector p(dim);
    for (std::size_t j = 0; j < dim; ++j) p[j] = 1.0 + a * u[j] + b * v[j];
    pts.push_back(p);
  }
  const auto pca = pca2d(pts);
  CHECK((pca.explained_variance[0] + pca.explained_variance[1]) / pca.total_variance > 1.0 - 1e-6);
}

TEST_CASE("pca2d: isotropic cloud splits variance evenly") {
  Rng rng(6);
  std::vector<Vector> pts;
  for (int i = 0; i < 10000; ++i) pts.push_back(oracle::random_vector(rng, 3));
  const auto pca = pca2d(pts);
  for (double ev : pca.explained_variance) CHECK(std::fabs(ev / pca.total_variance - 1.0 / 3.0) < 0.05);
}

TEST_CASE("pca2d: sign convention and preconditions") {
  const std::vector<Vector> pts{{-1.0, 0.0}, {0.0, 0.1}, {1.0, 0.0}, {2.0, -0.1}};
  const auto pca = pca2d(pts);
  CHECK(pca.components[0][0] > 0.0);
  CHECK_THROWS_AS(pca2d(std::vector<Vector>{{1.0}, {2.0}}), ContractViolation);
  CHECK_THROWS_AS(pca2d(std::vector<Vector>(4, Vector{1.0, 1.0})), ContractViolation);
}

TEST_CASE("pca2d at full latent dimension stays fast") {
  Rng rng(9);
  std::vector<Vector> pts;
  for (int i = 0; i < 50; ++i) pts.push_back(oracle::random_vector(rng, kDefaultLatentDim));
  const auto start = std::chrono::steady_clock::now();
  const auto pca = pca2d(pts);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  CHECK(secs < 5.0);
  CHECK(pca.explained_variance[0] >= pca.explained_variance[1]);
}

TEST_CASE("adoption_counts") {
  CHECK(adoption_counts({}) == std::array<std::size_t, kPersonaCount>{});
  AdoptionLog rational(10);
  for (auto& r : rational) r.adopted_agent = PersonaKind::Rational;
  const auto c = adoption_counts(rational);
  CHECK(c[index_of(PersonaKind::Rational)] == 10);
  CHECK(c[index_of(PersonaKind::Emotion)] == 0);

  Rng rng(12);
  for (int trial = 0; trial < 1000; ++trial) {
    AdoptionLog log(rng.below(300));
    for (auto& r : log) r.adopted_agent = kPersonas[rng.below(kPersonaCount)];
    const auto counts = adoption_counts(log);
    std::size_t total = 0;
    for (auto n : counts) total += n;
    CHECK(total == log.size());
  }
}
