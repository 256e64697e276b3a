#include <doctest.h>

#include "dualloop/config.hpp"

using namespace dualloop;

TEST_CASE("defaults parse from an empty file") {
  const RunConfig c = parse_config("# nothing\n\n");
  CHECK(c.rounds == 6);
  CHECK(c.max_steps_per_episode == 60);
  CHECK(c.hyper.alpha == 0.1);
  CHECK(c.hyper.gamma == 0.9);
  CHECK(c.hyper.eta == 0.1);
  CHECK(c.hyper.beta == 0.1);
  CHECK(c.hyper.retrieval_k == 3);
  CHECK(c.hyper.spike_threshold == 0.6);
  CHECK(c.hyper.embed_dim == 3077);
  CHECK(c.backend.meta_model == "gpt-4o");
  CHECK(c.backend.agent_model == "gpt-4o-mini");
  CHECK(c.backend.mode == BackendMode::Stub);
}

TEST_CASE("values, comments and overrides") {
  const RunConfig c = parse_config(
      "run.seed = 42   # trailing comment\n"
      "run.rounds=3\n"
      "hyper.embed_dim = 128\n"
      "persona.rational.w_p = 0.6\n"
      "persona.emotion.pin_mood = 2\n"
      "backend.mode = http\n"
      "map.traps = 4\n");
  CHECK(c.seed == 42);
  CHECK(c.rounds == 3);
  CHECK(c.hyper.embed_dim == 128);
  CHECK(c.backend.embed_dim == 128);
  CHECK(c.persona.w_p[index_of(PersonaKind::Rational)] == 0.6);
  CHECK(c.persona.pin_mood == 2.0);
  CHECK(c.backend.mode == BackendMode::Http);
  CHECK(c.map.generator.traps == 4);
}

TEST_CASE("rejections") {
  CHECK_THROWS_AS(parse_config("run.unknown = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("run.seed 5\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("run.seed = 1\nrun.seed = 2\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("hyper.alpha = 1.5\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("hyper.gamma = -0.1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("hyper.eta = abc\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("run.rounds = 0\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("persona.emotion.w_s = 0.3\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("persona.emotion.pin_mood = 2.5\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("backend.mode = carrier-pigeon\n"), ConfigError);
  try {
    parse_config("run.seed = 1\n\nbogus.key = 3\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}

TEST_CASE("format_config round trips") {
  RunConfig c = parse_config("run.seed = 9\nhyper.eta = 0.25\npersona.habitual.w_s = 0.35\nbackend.timeout = 12.5\n");
  const std::string text = format_config(c);
  const RunConfig back = parse_config(text);
  CHECK(format_config(back) == text);
  CHECK(back.seed == 9);
  CHECK(back.hyper.eta == 0.25);
  CHECK(back.persona.w_s[index_of(PersonaKind::Habitual)] == 0.35);
  CHECK(back.backend.timeout_seconds == 12.5);
}
