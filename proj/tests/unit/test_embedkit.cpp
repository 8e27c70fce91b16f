#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <mutex>

#include "support/mock_server.hpp"
#include "tcr/common/errors.hpp"
#include "tcr/common/io.hpp"
#include "tcr/common/rng.hpp"
#include "tcr/datagen/datagen.hpp"
#include "tcr/embedkit/embedding.hpp"

using namespace tcr;
using namespace tcr::embedkit;
using tcr::testing::MockServer;

namespace {

long double oracle_cosine(const std::vector<long double>& u, const std::vector<long double>& v) {
  long double uv = 0, uu = 0, vv = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    uv += u[i] * v[i];
    uu += u[i] * u[i];
    vv += v[i] * v[i];
  }
  return uv / std::sqrt(uu * vv);
}

// Replies with one vector per text: [len(text), 1, 0].
void length_embedder(const httplib::Request& req, httplib::Response& res) {
  auto body = json::parse(req.body);
  json rows = json::array();
  for (const auto& t : body["texts"]) rows.push_back({static_cast<double>(t.get<std::string>().size()), 1.0, 0.0});
  res.set_content(json{{"embeddings", rows}}.dump(), "application/json");
}

EmbedConfig remote(const MockServer& m) {
  EmbedConfig cfg;
  cfg.url = m.url("/embed");
  cfg.timeout_ms = 2000;
  return cfg;
}

}  // namespace

TEST_CASE("cosine examples") {
  std::vector<double> e{0.3, -1.2, 4.0};
  CHECK(cosine(e, e) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(cosine(std::vector<double>{1, 0}, std::vector<double>{0, 1}) == 0.0);
  double got = cosine(std::vector<double>{1, 2, 3}, std::vector<double>{4, 5, 6});
  double want = static_cast<double>(oracle_cosine({1, 2, 3}, {4, 5, 6}));
  CHECK(std::abs(got - want) <= 1e-15);
}

TEST_CASE("cosine errors") {
  CHECK_THROWS_AS(cosine(std::vector<double>{1, 2}, std::vector<double>{1, 2, 3}), DimensionError);
  CHECK_THROWS_AS(cosine(std::vector<double>{0, 0}, std::vector<double>{1, 2}), DegenerateVectorError);
}

TEST_CASE("cosine is symmetric and bounded") {
  Rng r(11);
  for (int k = 0; k < 500; ++k) {
    std::size_t d = 1 + r.below(40);
    std::vector<double> u(d), v(d);
    std::vector<long double> ul(d), vl(d);
    for (std::size_t i = 0; i < d; ++i) {
      u[i] = r.normal() * std::pow(10.0, static_cast<double>(r.below(7)) - 3.0);
      v[i] = r.normal();
      ul[i] = u[i];
      vl[i] = v[i];
    }
    double c = cosine(u, v);
    CHECK(c == cosine(v, u));
    CHECK(c >= -1.0);
    CHECK(c <= 1.0);
    CHECK(std::abs(c - static_cast<double>(oracle_cosine(ul, vl))) < 1e-12);
  }
}

TEST_CASE("normalize examples") {
  Embedding v{{3, 4}, EmbedSource::remote};
  auto n = normalize(v);
  CHECK(n.values[0] == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(n.values[1] == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(n.source == EmbedSource::remote);
  CHECK(normalize(n).values == n.values);

  Rng r(3);
  for (int k = 0; k < 100; ++k) {
    Embedding x;
    for (int i = 0; i < 16; ++i) x.values.push_back(r.normal());
    auto nx = normalize(x);
    CHECK(std::abs(norm(nx.values) - 1.0) <= 1e-9);
    auto twice = normalize(nx);
    Embedding scaled = x;
    double c = 0.001 + 1000.0 * r.uniform();
    for (auto& e : scaled.values) e *= c;
    auto ns = normalize(scaled);
    for (int i = 0; i < 16; ++i) {
      CHECK(std::abs(twice.values[i] - nx.values[i]) <= 1e-15);
      CHECK(std::abs(ns.values[i] - nx.values[i]) <= 1e-12);
    }
  }
  CHECK_THROWS_AS(normalize(Embedding{{0, 0, 0}}), DegenerateVectorError);
}

TEST_CASE("hash_embed is deterministic and unit norm") {
  auto a = hash_embed("Paris is the capital of France.", 256, 7);
  auto b = hash_embed("Paris is the capital of France.", 256, 7);
  CHECK(a.values == b.values);
  CHECK(a.dim() == 256);
  CHECK(a.source == EmbedSource::hash_fallback);
  CHECK(cosine(a, b) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(norm(a.values) - 1.0) <= 1e-6);
  CHECK(hash_embed("Paris is the capital of France.", 256, 8).values != a.values);
  CHECK(hash_embed("", 64, 7).dim() == 64);
  CHECK(std::abs(norm(hash_embed("", 64, 7).values) - 1.0) <= 1e-6);
  CHECK_THROWS_AS(hash_embed("x", 7, 7), ConfigError);
}

TEST_CASE("hash_embed places paraphrases nearer than unrelated statements") {
  auto ts = datagen::build_dataset(100, 42);
  double para = 0.0, unrel = 0.0;
  for (const auto& t : ts) {
    auto s = hash_embed(t.statement, 256, 7);
    para += cosine(s, hash_embed(t.paraphrase, 256, 7));
    unrel += cosine(s, hash_embed(t.unrelated, 256, 7));
  }
  para /= 100;
  unrel /= 100;
  if (std::getenv("TCR_PRINT_FIXTURES"))
    std::printf("{\"paraphrase_mean\": %.12f, \"unrelated_mean\": %.12f, \"gap\": %.12f}\n", para, unrel, para - unrel);
  CHECK(para > unrel);
  auto fixture = json::parse(read_file(std::string(TCR_FIXTURES) + "/embed_gap.json"));
  CHECK(std::abs(para - fixture["paraphrase_mean"].get<double>()) <= 1e-9);
  CHECK(std::abs(unrel - fixture["unrelated_mean"].get<double>()) <= 1e-9);
  CHECK(std::abs(para - unrel - fixture["gap"].get<double>()) <= 1e-9);
}

TEST_CASE("fallback embed_batch equals element-wise hash_embed") {
  EmbedConfig cfg;
  cfg.dim = 32;
  cfg.seed = 5;
  std::vector<std::string> texts{"alpha", "beta", "gamma"};
  auto out = embed_batch(texts, cfg);
  REQUIRE(out.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) CHECK(out[i].values == hash_embed(texts[i], 32, 5).values);
  CHECK(embed_batch({"one"}, cfg).size() == 1);
  CHECK_THROWS_AS(embed_batch({}, cfg), EmptyInputError);
}

TEST_CASE("remote embed_batch splits into batches of at most 64") {
  std::mutex mu;
  std::vector<std::size_t> sizes;
  MockServer m([&](const httplib::Request& req, httplib::Response& res) {
    {
      std::lock_guard<std::mutex> lock(mu);
      sizes.push_back(json::parse(req.body)["texts"].size());
    }
    length_embedder(req, res);
  });
  std::vector<std::string> texts;
  for (int i = 0; i < 130; ++i) texts.push_back(std::string(static_cast<std::size_t>(i + 1), 'x'));
  auto out = embed_batch(texts, remote(m));
  REQUIRE(out.size() == 130);
  CHECK(m.requests() == 3);
  std::sort(sizes.begin(), sizes.end());
  CHECK(sizes == std::vector<std::size_t>{2, 64, 64});
  for (std::size_t i = 0; i < out.size(); ++i) {
    CHECK(out[i].source == EmbedSource::remote);
    CHECK(std::abs(norm(out[i].values) - 1.0) <= 1e-9);
    // order preserved: direction encodes the text length
    CHECK(out[i].values[0] / out[i].values[1] == doctest::Approx(static_cast<double>(i + 1)));
  }
}

TEST_CASE("remote embed_batch errors") {
  SUBCASE("http status") {
    MockServer m([](const httplib::Request&, httplib::Response& res) {
      res.status = 503;
      res.set_content("busy", "text/plain");
    });
    try {
      embed_batch({"a"}, remote(m));
      FAIL("expected RemoteEmbedError");
    } catch (const RemoteEmbedError& e) {
      CHECK(e.status() == 503);
    }
  }
  SUBCASE("unreachable") {
    EmbedConfig cfg;
    cfg.url = "http://127.0.0.1:1/embed";
    cfg.timeout_ms = 500;
    try {
      embed_batch({"a"}, cfg);
      FAIL("expected RemoteEmbedError");
    } catch (const RemoteEmbedError& e) {
      CHECK(e.status() == 0);
    }
  }
  SUBCASE("malformed responses") {
    const std::vector<std::string> bodies{
        "not json",
        R"({"vectors": [[1, 2]]})",
        R"({"embeddings": [[1, 2], [3, 4]]})",
        R"({"embeddings": [[]]})",
        R"({"embeddings": [["a", 1]]})",
        R"({"embeddings": [[0, 0]]})",
    };
    for (const auto& body : bodies) {
      CAPTURE(body);
      MockServer m([&](const httplib::Request&, httplib::Response& res) { res.set_content(body, "application/json"); });
      CHECK_THROWS_AS(embed_batch({"a"}, remote(m)), ProtocolError);
    }
  }
  SUBCASE("inconsistent dimensions across rows") {
    MockServer m([](const httplib::Request&, httplib::Response& res) {
      res.set_content(R"({"embeddings": [[1, 2], [1, 2, 3]]})", "application/json");
    });
    CHECK_THROWS_AS(embed_batch({"a", "b"}, remote(m)), ProtocolError);
  }
}
