#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <set>

#include "dualloop/base64.hpp"
#include "dualloop/http_backend.hpp"
#include "dualloop/lm_backend.hpp"
#include "dualloop/render.hpp"
#include "dualloop/rng.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"  // Eigen must precede httplib
#include "mock_server.hpp"

using namespace dualloop;

namespace {

AgentContext context_for(PersonaKind kind, const GridMap& map, Cell position) {
  EntityState e = fresh_entity(map, 3);
  e.position = position;
  return {map, e, make_agent(kind), RewardParams{}, 1, {}, {"stay calm"}, "", nullptr};
}

std::uint32_t be32(const std::vector<std::uint8_t>& b, std::size_t at) {
  return (std::uint32_t{b[at]} << 24) | (std::uint32_t{b[at + 1]} << 16) |
         (std::uint32_t{b[at + 2]} << 8) | std::uint32_t{b[at + 3]};
}

std::string random_word(Rng& rng, char first) {
  std::string w(1, first);
  for (int i = 0; i < 6; ++i) w.push_back(static_cast<char>('a' + rng.below(26)));
  return w;
}

}  // namespace

TEST_CASE("hash_embed") {
  const Vector a = hash_embed("Move up toward the goal", 1024);
  CHECK(a == hash_embed("Move up toward the goal", 1024));
  CHECK(a == hash_embed("move UP, toward... the goal!", 1024));
  CHECK(l2_norm(a) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(word_tokens("It's 2 o'clock") == std::vector<std::string>{"it", "s", "2", "o", "clock"});
  CHECK_THROWS_AS(hash_embed("  ...  ", 16), ContractViolation);
}

TEST_CASE("hash_embed: disjoint vocabularies are nearly orthogonal") {
  Rng rng(42);
  for (int trial = 0; trial < 100; ++trial) {
    std::string t1, t2;
    for (int w = 0; w < 8; ++w) {
      t1 += random_word(rng, 'a') + ' ';  // words here start with 'a', in t2 with 'z'
      t2 += random_word(rng, 'z') + ' ';
    }
    CHECK(std::fabs(oracle::cosine(hash_embed(t1, 1024), hash_embed(t2, 1024))) < 0.2);
  }
}

TEST_CASE("stub suggest") {
  StubBackend stub(64);
  const GridMap map = fixture::corner();

  SUBCASE("Rational next to the goal heads for it") {
    CHECK(stub.suggest(context_for(PersonaKind::Rational, map, {9, 8})).action == Direction::Down);
    CHECK(stub.suggest(context_for(PersonaKind::Rational, map, {8, 9})).action == Direction::Right);
  }
  SUBCASE("Habitual repeats its last action") {
    // One-step private rewards from (5,5) with last_action Up: Up 0.2, the others 0.
    AgentContext ctx = context_for(PersonaKind::Habitual, map, {5, 5});
    ctx.agent.last_action = Direction::Up;
    CHECK(stub.suggest(ctx).action == Direction::Up);
    ctx.agent.last_action = Direction::Right;
    CHECK(stub.suggest(ctx).action == Direction::Right);
  }
  SUBCASE("RiskMonitor avoids the trap below the start") {
    const auto s = stub.suggest(context_for(PersonaKind::RiskMonitor, map, {0, 0}));
    CHECK(s.action == Direction::Up);
    CHECK(lookahead_action(context_for(PersonaKind::RiskMonitor, map, {0, 2})) != Direction::Up);
  }
  SUBCASE("same context gives identical output") {
    const auto ctx = context_for(PersonaKind::Emotion, map, {3, 3});
    const auto a = stub.suggest(ctx);
    const auto b = StubBackend(64).suggest(ctx);
    CHECK(a.action == b.action);
    CHECK(a.text == b.text);
    CHECK_FALSE(a.text.empty());
  }
}

TEST_CASE("stub reflect") {
  StubBackend stub(256);
  ReflectionContext ctx{PersonaKind::Rational, 4, Direction::Left, {}, 0.4, true};
  const auto a = stub.reflect(ctx);
  const auto b = stub.reflect(ctx);
  CHECK(a.text == b.text);
  CHECK(a.embedding == b.embedding);
  CHECK(a.reward_used == 0.4);
  CHECK(l2_norm(a.embedding) == doctest::Approx(1.0).epsilon(1e-9));
  ctx.reward = -0.4;
  const auto neg = stub.reflect(ctx);
  CHECK(neg.embedding != a.embedding);
  CHECK(reward_sign_word(0.4) != reward_sign_word(-0.4));
  CHECK(reward_sign_word(0.0) != reward_sign_word(0.4));
}

TEST_CASE("parse_move_reply") {
  auto s = parse_move_reply("MOVE left: the food is there");
  REQUIRE(s);
  CHECK(s->action == Direction::Left);
  CHECK(s->text == "the food is there");
  CHECK(parse_move_reply("move RIGHT: ok"));
  CHECK_FALSE(parse_move_reply("MOVE sideways: hmm"));
  CHECK_FALSE(parse_move_reply("go up"));
}

TEST_CASE("base64 round trip and known vectors") {
  const std::string foobar = "foobar";
  const std::vector<std::uint8_t> bytes(foobar.begin(), foobar.end());
  CHECK(base64_encode(std::span(bytes).subspan(0, 0)) == "");
  CHECK(base64_encode(std::span(bytes).subspan(0, 1)) == "Zg==");
  CHECK(base64_encode(std::span(bytes).subspan(0, 2)) == "Zm8=");
  CHECK(base64_encode(bytes) == "Zm9vYmFy");
  Rng rng(4);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::uint8_t> data(rng.below(200));
    for (auto& b : data) b = static_cast<std::uint8_t>(rng.below(256));
    const auto back = base64_decode(base64_encode(data));
    REQUIRE(back);
    CHECK(*back == data);
  }
  CHECK_FALSE(base64_decode("Zm9v*mFy"));
  CHECK_FALSE(base64_decode("Zm9"));
  CHECK_FALSE(base64_decode("Z==="));
}

TEST_CASE("render_map: stable 320x320 PNG with a matching payload") {
  const GridMap map = fixture::corner();
  const EntityState e = fresh_entity(map, 3);
  const RenderedMap r = render_map(map, e);
  REQUIRE(r.png_bytes.size() > 33);
  const std::vector<std::uint8_t> sig{0x89, 'P', 'N', 'G', '\r', '\n', 0x1A, '\n'};
  CHECK(std::equal(sig.begin(), sig.end(), r.png_bytes.begin()));
  CHECK(std::string(r.png_bytes.begin() + 12, r.png_bytes.begin() + 16) == "IHDR");
  CHECK(be32(r.png_bytes, 16) == 320);
  CHECK(be32(r.png_bytes, 20) == 320);
  CHECK(r.png_bytes[24] == 8);  // bit depth
  CHECK(r.png_bytes[25] == 2);  // RGB
  CHECK(*base64_decode(r.base64_payload) == r.png_bytes);
  CHECK(render_map(map, e).png_bytes == r.png_bytes);
  EntityState moved = e;
  moved.position = {1, 0};
  CHECK(render_map(map, moved).png_bytes != r.png_bytes);
  CHECK(r.data_url().rfind("data:image/png;base64,", 0) == 0);
}

TEST_CASE("prompt templates") {
  const auto& t = PromptTemplates::builtin();
  for (PersonaKind p : kPersonas) CHECK(t.contains("goal_" + std::string(to_string(p))));
  CHECK(render_template("a {x} b {y}", {{"x", "1"}, {"y", "2"}}) == "a 1 b 2");
  CHECK_THROWS_AS(render_template("{missing}", {}), ConfigError);
  CHECK(q_hint_sentence({{Direction::Up, 0.5}, {Direction::Left, 0.25}}).find("up") != std::string::npos);
  const auto parsed = PromptTemplates::parse("# comment\n[one]\nhello\n[two]\nworld\n");
  CHECK(parsed.get("one") == "hello");
  CHECK_THROWS_AS(parsed.get("three"), ConfigError);
}

TEST_CASE("http request and response shapes") {
  auto image = std::make_shared<RenderedMap>(render_map(fixture::corner(), fresh_entity(fixture::corner(), 1)));
  const auto body = build_chat_request({"gpt-4o", "sys", "usr", image});
  CHECK(body["model"] == "gpt-4o");
  CHECK(body["messages"][0]["role"] == "system");
  CHECK(body["messages"][1]["content"][0]["type"] == "text");
  CHECK(body["messages"][1]["content"][1]["type"] == "image_url");
  CHECK(body["messages"][1]["content"][1]["image_url"]["url"] == image->data_url());
  CHECK(build_embedding_request("m", "txt") == nlohmann::json{{"model", "m"}, {"input", "txt"}});
  CHECK(parse_chat_response(nlohmann::json::parse(
            R"({"x":1,"choices":[{"message":{"content":"hi","extra":true}}]})")) == "hi");
  CHECK_FALSE(parse_chat_response(nlohmann::json::parse(R"({"choices":[]})")));
  CHECK(parse_embedding_response(nlohmann::json::parse(R"({"data":[{"embedding":[1,2]}]})")) == Vector{1, 2});
  const auto ep = split_base_url("http://localhost:8080/v1/");
  CHECK(ep.origin == "http://localhost:8080");
  CHECK(ep.path_prefix == "/v1");
  CHECK_THROWS_AS(split_base_url("localhost/v1"), ConfigError);
}

namespace {

BackendConfig http_config(const mock::Server& server) {
  ::setenv("DUALLOOP_TEST_KEY", "sk-test", 1);
  BackendConfig c;
  c.mode = BackendMode::Http;
  c.base_url = server.base_url();
  c.api_key_env = "DUALLOOP_TEST_KEY";
  c.timeout_seconds = 5.0;
  c.max_retries = 2;
  c.backoff_initial_seconds = 0.01;
  c.embed_dim = 32;
  return c;
}

}  // namespace

TEST_CASE("http backend against a local server") {
  mock::Server server;
  const GridMap map = fixture::corner();

  SUBCASE("suggest posts the map image and parses MOVE") {
    server.set_chat_reply([](const nlohmann::json&, std::size_t) { return "MOVE right: food this way"; });
    HttpBackend backend(http_config(server), 1);
    AgentContext ctx = context_for(PersonaKind::Emotion, map, {0, 0});
    ctx.rendered = std::make_shared<RenderedMap>(render_map(map, ctx.entity));
    const auto s = backend.suggest(ctx);
    CHECK(s.action == Direction::Right);
    CHECK(s.text == "food this way");
    CHECK_FALSE(s.fallback);
    const auto cap = server.captured();
    REQUIRE(cap.size() == 1);
    CHECK(cap[0].path == "/v1/chat/completions");
    CHECK(cap[0].authorization == "Bearer sk-test");
    CHECK(cap[0].body["model"] == "gpt-4o-mini");
    const std::string url = cap[0].body["messages"][1]["content"][1]["image_url"]["url"];
    CHECK(url == ctx.rendered->data_url());
    CHECK(*base64_decode(url.substr(url.find(',') + 1)) == ctx.rendered->png_bytes);
  }
  SUBCASE("invalid reply: one re-prompt, then stub fallback with a warning") {
    server.set_chat_reply([](const nlohmann::json&, std::size_t) { return "I am not sure"; });
    HttpBackend backend(http_config(server), 1);
    const auto s = backend.suggest(context_for(PersonaKind::Rational, map, {9, 8}));
    CHECK(s.fallback);
    CHECK(s.action == Direction::Down);
    CHECK(server.captured().size() == 2);
    CHECK_FALSE(backend.take_warnings().empty());
  }
  SUBCASE("retries on server errors until success") {
    server.set_fail_first(2);
    HttpBackend backend(http_config(server), 1);
    const Vector v = backend.embed("hello world");
    CHECK(server.captured().size() == 3);
    CHECK(v.size() == 32);
    CHECK(l2_norm(v) == doctest::Approx(1.0).epsilon(1e-9));
  }
  SUBCASE("retries exhausted: fallback, or BackendError when configured") {
    server.set_fail_first(100);
    HttpBackend lenient(http_config(server), 1);
    CHECK(lenient.embed("hello world") == hash_embed("hello world", 32));
    CHECK(server.captured().size() == 3);
    auto strict_cfg = http_config(server);
    strict_cfg.fail_on_error = true;
    HttpBackend strict(strict_cfg, 1);
    CHECK_THROWS_AS(strict.embed("hello world"), BackendError);
  }
  SUBCASE("embedding responses are resized to the configured dimension") {
    server.set_embedding_length(100);
    HttpBackend backend(http_config(server), 1);
    CHECK(backend.embed("x").size() == 32);
  }
  SUBCASE("transcript mirrors requests and responses") {
    const auto path = std::filesystem::temp_directory_path() / "dualloop_transcript_test.jsonl";
    std::filesystem::remove(path);
    auto cfg = http_config(server);
    cfg.transcript_path = path;
    {
      HttpBackend backend(cfg, 1);
      backend.reflect({PersonaKind::Habitual, 2, Direction::Up, {}, 0.1, false});
    }
    std::ifstream in(path);
    std::string line;
    std::vector<nlohmann::json> records;
    while (std::getline(in, line)) records.push_back(nlohmann::json::parse(line));
    REQUIRE(records.size() == 2);
    CHECK(records[0]["path"] == "/v1/chat/completions");
    CHECK(records[0].contains("request"));
    CHECK(records[0].contains("response"));
    CHECK(records[1]["path"] == "/v1/embeddings");
    std::filesystem::remove(path);
  }
}

TEST_CASE("http backend configuration errors") {
  BackendConfig c;
  c.mode = BackendMode::Http;
  c.api_key_env = "DUALLOOP_SURELY_UNSET_VARIABLE";
  ::unsetenv("DUALLOOP_SURELY_UNSET_VARIABLE");
  CHECK_THROWS_AS(HttpBackend(c, 1), ConfigError);
  ::setenv("DUALLOOP_TEST_KEY", "k", 1);
  c.api_key_env = "DUALLOOP_TEST_KEY";
  c.base_url = "nope";
  CHECK_THROWS_AS(HttpBackend(c, 1), ConfigError);
}

TEST_CASE("closed port degrades to the stub") {
  ::setenv("DUALLOOP_TEST_KEY", "k", 1);
  BackendConfig c;
  c.mode = BackendMode::Http;
  c.base_url = "http://127.0.0.1:1/v1";
  c.api_key_env = "DUALLOOP_TEST_KEY";
  c.max_retries = 1;
  c.backoff_initial_seconds = 0.0;
  c.timeout_seconds = 1.0;
  c.embed_dim = 16;
  HttpBackend backend(c, 3);
  CHECK(backend.embed("abc") == hash_embed("abc", 16));
  const auto w = backend.take_warnings();
  CHECK(w.size() >= 1);
}
