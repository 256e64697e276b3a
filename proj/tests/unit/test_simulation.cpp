#include <doctest.h>

#include <fstream>

#include "dirs.hpp"
#include "dualloop/simulation.hpp"
#include "fixtures.hpp"

using namespace dualloop;

namespace {

RunConfig small_config(std::uint64_t seed = 3) {
  RunConfig c;
  c.seed = seed;
  c.run_id = "t";
  c.hyper.embed_dim = 256;
  c.backend.embed_dim = 256;
  return c;
}

}  // namespace

TEST_CASE("a six-round run fills the pool and the trajectories") {
  const RunConfig c = small_config();
  const auto art = run(c);
  CHECK(art.episodes.size() == 6);
  CHECK(art.memory.size() == 6);
  std::size_t reached = 0;
  for (const auto& e : art.episodes) reached += e.reached_goal;
  CHECK(reached == 6);
  for (const auto& t : art.trajectories) {
    CHECK(t.updates.size() == art.steps.size());
    CHECK(t.updates.size() >= 50);
  }
  CHECK(art.adoption.size() == art.steps.size());
  std::size_t total = 0;
  for (auto n : art.report.adoption) total += n;
  CHECK(total == art.steps.size());
}

TEST_CASE("step records are consistent") {
  const auto art = run(small_config(5));
  std::size_t expected_step = 0;
  for (const StepRecord& r : art.steps) {
    CHECK(r.step == ++expected_step);
    for (std::size_t i = 0; i < kPersonaCount; ++i) {
      const auto& a = r.agents[i];
      CHECK(a.r == composite_reward(a.r_p, r.shared_reward, a.w_p, a.w_s));
      CHECK(a.latent_row == r.step * kPersonaCount + i);
    }
    CHECK(r.agents[index_of(PersonaKind::Emotion)].w_s == 0.0);
    CHECK(r.action == r.agents[index_of(r.adopted)].proposed);
    CHECK(r.stamina >= 1);
    CHECK(r.stamina <= 6);
    const auto back = step_record_from_json(to_json(r));
    CHECK(to_json(back) == to_json(r));
  }
}

TEST_CASE("pinned mood: stamina 1 versus 6 and fewer rounds when high") {
  RunConfig low = small_config(11);
  low.persona.pin_mood = 0.0;
  RunConfig high = low;
  high.persona.pin_mood = 2.0;
  const auto a = run(low);
  const auto b = run(high);
  for (const auto& r : a.steps) CHECK(r.stamina == 1);
  for (const auto& r : b.steps) CHECK(r.stamina == 6);
  REQUIRE(a.episodes.size() == b.episodes.size());
  for (std::size_t i = 0; i < a.episodes.size(); ++i) {
    CHECK(b.episodes[i].rounds < a.episodes[i].rounds);
  }
}

TEST_CASE("identical config and seed give byte-identical directories") {
  const RunConfig c = small_config(21);
  const auto d1 = dirs::scratch("sim_a");
  const auto d2 = dirs::scratch("sim_b");
  write_artifacts(run(c), d1);
  write_artifacts(run(c), d2);
  CHECK(dirs::snapshot(d1) == dirs::snapshot(d2));
  const auto d3 = dirs::scratch("sim_c");
  write_artifacts(run(small_config(22)), d3);
  CHECK(dirs::snapshot(d1) != dirs::snapshot(d3));
}

TEST_CASE("map file source is honoured") {
  const auto d = dirs::scratch("sim_map");
  {
    std::ofstream(d / "corridor.txt") << fixture::kCorridorMap;
  }
  RunConfig c = small_config();
  c.map.file = d / "corridor.txt";
  c.rounds = 2;
  const auto art = run(c);
  CHECK(*art.map == fixture::corridor());
  CHECK(art.steps.front().position_before == Cell{0, 4});
}

TEST_CASE("replay reproduces derived outputs") {
  const auto dir = dirs::scratch("sim_replay");
  const auto original = run(small_config(8));
  write_artifacts(original, dir);
  const auto before = dirs::snapshot(dir);

  const auto replayed = replay(dir);
  CHECK(report_json(replayed.report) == report_json(original.report));
  CHECK(dirs::snapshot(dir) == before);

  for (const auto& [name, _] : before) {
    if (name.rfind("t_", 0) == 0 && name.size() > 4 && name.substr(name.size() - 4) == ".csv") {
      std::filesystem::remove(dir / name);
    }
  }
  replay(dir);
  CHECK(dirs::snapshot(dir) == before);

  std::filesystem::remove(dir / "t_report.json");
  analyze_dir(dir);
  CHECK(dirs::snapshot(dir) == before);
}

TEST_CASE("replay names the first bad record") {
  const auto dir = dirs::scratch("sim_corrupt");
  write_artifacts(run(small_config(8)), dir);
  const std::string steps = dirs::read_file(dir / "steps.jsonl");

  SUBCASE("truncated mid-record") {
    std::size_t cut = 0;
    for (int i = 0; i < 4; ++i) cut = steps.find('\n', cut) + 1;
    std::ofstream(dir / "steps.jsonl", std::ios::binary) << steps.substr(0, cut + 40);
    try {
      replay(dir);
      FAIL("expected ReplayError");
    } catch (const ReplayError& e) {
      CHECK(e.record() == 5);
    }
  }
  SUBCASE("missing end marker") {
    const std::size_t last = steps.rfind('{');
    std::ofstream(dir / "steps.jsonl", std::ios::binary) << steps.substr(0, last);
    CHECK_THROWS_AS(replay(dir), ReplayError);
  }
  SUBCASE("tampered composite reward") {
    std::string bad = steps;
    const auto pos = bad.find("\"r\":");
    bad.insert(pos + 4, "9");
    std::ofstream(dir / "steps.jsonl", std::ios::binary) << bad;
    try {
      replay(dir);
      FAIL("expected ReplayError");
    } catch (const ReplayError& e) {
      CHECK(e.record() == 1);
    }
  }
  SUBCASE("short latent blob") {
    std::filesystem::resize_file(dir / "latents.bin", 64);
    CHECK_THROWS_AS(replay(dir), ReplayError);
  }
}

TEST_CASE("backend dimension mismatch is a contract violation") {
  RunConfig c = small_config();
  const BackendFactory factory = [](const RunConfig&) { return std::make_unique<StubBackend>(64); };
  CHECK_THROWS_AS(run(c, factory), ContractViolation);
}

TEST_CASE("contract violations inside a step carry the step context") {
  class BadBackend final : public LanguageBackend {
   public:
    BackendMode mode() const override { return BackendMode::Stub; }
    std::size_t embed_dim() const override { return 256; }
    Suggestion suggest(const AgentContext& ctx) override { return stub_.suggest(ctx); }
    ReflectionRecord reflect(const ReflectionContext& ctx) override {
      auto r = stub_.reflect(ctx);
      if (ctx.step == 3) r.embedding.resize(10);
      return r;
    }
    Vector embed(std::string_view t) override { return stub_.embed(t); }
    std::optional<std::string> complete(const ChatRequest&) override { return std::nullopt; }

   private:
    StubBackend stub_{256};
  };
  try {
    run(small_config(), [](const RunConfig&) { return std::make_unique<BadBackend>(); });
    FAIL("expected ContractViolation");
  } catch (const ContractViolation& e) {
    CHECK(std::string(e.what()).find("global 3") != std::string::npos);
  }
}
