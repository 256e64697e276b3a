#include <doctest.h>

#include <filesystem>

#include "dualloop/memory_pool.hpp"
#include "dualloop/rng.hpp"
#include "oracles.hpp"

using namespace dualloop;

namespace {

MemoryPool random_pool(Rng& rng, std::size_t n, std::size_t dim) {
  MemoryPool pool;
  for (std::size_t i = 0; i < n; ++i) {
    pool.append({i + 1, oracle::random_vector(rng, dim), rng.normal(), 1 + rng.below(20)});
  }
  return pool;
}

}  // namespace

TEST_CASE("episodic_vector") {
  const Vector e{0.5, -1.0, 2.0};
  CHECK(episodic_vector(std::vector<Vector>{e}) == e);
  const Vector neg{-0.5, 1.0, -2.0};
  CHECK(episodic_vector(std::vector<Vector>{e, neg}) == Vector{0.0, 0.0, 0.0});

  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Vector> vs;
    for (int i = 0; i < 3; ++i) vs.push_back(oracle::random_vector(rng, 64));
    const Vector got = episodic_vector(vs);
    const Vector want = oracle::mean(vs);
    for (std::size_t j = 0; j < got.size(); ++j) CHECK(std::fabs(got[j] - want[j]) < 1e-12);
  }
  CHECK_THROWS_AS(episodic_vector(std::vector<Vector>{}), ContractViolation);
  CHECK_THROWS_AS(episodic_vector(std::vector<Vector>{{1.0}, {1.0, 2.0}}), ContractViolation);
}

TEST_CASE("retrieve: empty pool and completeness") {
  MemoryPool empty;
  CHECK(empty.retrieve(Vector{1, 0}, 3).empty());

  Rng rng(5);
  const MemoryPool pool = random_pool(rng, 5, 8);
  const Vector q = oracle::random_vector(rng, 8);
  const auto all = pool.retrieve(q, 5);
  REQUIRE(all.size() == 5);
  for (std::size_t i = 1; i < all.size(); ++i) CHECK(all[i - 1].similarity >= all[i].similarity);
  CHECK(pool.retrieve(q, 50).size() == 5);
}

TEST_CASE("retrieve matches an exhaustive cosine scan") {
  Rng rng(8);
  for (int trial = 0; trial < 100; ++trial) {
    const MemoryPool pool = random_pool(rng, 50, 12);
    const Vector q = oracle::random_vector(rng, 12);
    std::vector<double> scores;
    for (const auto& e : pool.entries()) scores.push_back(oracle::cosine(q, e.vector));
    const auto want = oracle::exhaustive_topk(scores, 3, true);
    const auto got = pool.retrieve(q, 3);
    REQUIRE(got.size() == 3);
    for (std::size_t r = 0; r < 3; ++r) CHECK(got[r].entry.episode_id == want[r] + 1);
  }
}

TEST_CASE("retrieve ties prefer the newer episode; zero vectors score 0") {
  MemoryPool pool;
  pool.append({1, {1.0, 0.0}, 0.0, 1});
  pool.append({2, {2.0, 0.0}, 0.0, 1});
  pool.append({3, {0.0, 0.0}, 0.0, 1});
  const auto got = pool.retrieve(Vector{1.0, 0.0}, 3);
  CHECK(got[0].entry.episode_id == 2);
  CHECK(got[1].entry.episode_id == 1);
  CHECK(got[2].entry.episode_id == 3);
  CHECK(got[2].similarity == 0.0);
}

TEST_CASE("append contract and capacity") {
  MemoryPool pool(2);
  pool.append({1, {1.0}, 0.0, 1});
  CHECK_THROWS_AS(pool.append({1, {1.0}, 0.0, 1}), ContractViolation);
  CHECK_THROWS_AS(pool.append({2, {1.0}, 0.0, 0}), ContractViolation);
  CHECK_THROWS_AS(pool.append({2, {1.0, 2.0}, 0.0, 1}), ContractViolation);
  pool.append({2, {1.0}, 0.0, 1});
  pool.append({3, {1.0}, 0.0, 1});
  REQUIRE(pool.size() == 2);
  CHECK(pool.entries().front().episode_id == 2);
}

TEST_CASE("bias_text") {
  CHECK(bias_text({}).empty());
  std::vector<RetrievedMemory> one{{{4, {1.0}, 1.0, 12}, 0.5}};
  const std::string t = bias_text(one);
  CHECK(std::count(t.begin(), t.end(), '\n') <= 1);
  CHECK(t.find('4') != std::string::npos);
  Rng rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const MemoryPool pool = random_pool(rng, 6, 4);
    const auto got = pool.retrieve(oracle::random_vector(rng, 4), 3);
    CHECK(bias_text(got) == bias_text(got));
  }
}

TEST_CASE("save and load round trip") {
  Rng rng(17);
  const MemoryPool pool = random_pool(rng, 7, 33);
  const auto dir = std::filesystem::temp_directory_path() / "dualloop_memory_test";
  std::filesystem::create_directories(dir);
  pool.save(dir / "memory.jsonl", dir / "memory.bin");
  const MemoryPool back = MemoryPool::load(dir / "memory.jsonl", dir / "memory.bin");
  REQUIRE(back.size() == pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) {
    CHECK(back.entries()[i].episode_id == pool.entries()[i].episode_id);
    CHECK(back.entries()[i].vector == pool.entries()[i].vector);
    CHECK(back.entries()[i].total_shared_reward == pool.entries()[i].total_shared_reward);
    CHECK(back.entries()[i].step_count == pool.entries()[i].step_count);
  }
  std::filesystem::resize_file(dir / "memory.bin", 100);
  CHECK_THROWS(MemoryPool::load(dir / "memory.jsonl", dir / "memory.bin"));
  std::filesystem::remove_all(dir);
}
