#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>

#include "tcr/common/errors.hpp"
#include "tcr/common/rng.hpp"
#include "tcr/datagen/lexicon.hpp"
#include "tcr/eval/benchmark.hpp"
#include "tcr/eval/metrics.hpp"

using namespace tcr;
using namespace tcr::eval;
using datagen::ContextType;

namespace {

std::vector<DetectionRecord> records(const std::vector<double>& s, const std::vector<int>& y) {
  std::vector<DetectionRecord> out;
  for (std::size_t i = 0; i < s.size(); ++i) out.push_back({s[i], y[i]});
  return out;
}

// Pairwise formulation: ordered mismatching pairs within each item over
// ordered mismatching pairs across all pairable values.
double alpha_pairwise(const RatingMatrix& m) {
  std::vector<std::vector<int>> units;
  for (std::size_t u = 0; u < m[0].size(); ++u) {
    std::vector<int> v;
    for (const auto& row : m)
      if (row[u]) v.push_back(*row[u]);
    if (v.size() >= 2) units.push_back(v);
  }
  long double n = 0, d_obs = 0;
  std::map<int, long double> counts;
  for (const auto& v : units) {
    n += v.size();
    for (int x : v) counts[x] += 1;
    long double mism = 0;
    for (std::size_t i = 0; i < v.size(); ++i)
      for (std::size_t j = 0; j < v.size(); ++j) mism += i != j && v[i] != v[j];
    d_obs += mism / (v.size() - 1);
  }
  long double d_exp = 0;
  for (const auto& [a, na] : counts)
    for (const auto& [b, nb] : counts)
      if (a != b) d_exp += na * nb;
  return static_cast<double>(1 - (n - 1) * d_obs / d_exp);
}

struct Trained {
  datagen::TripleSet ts;
  decoupler::EncoderPair pair;

  Trained() : ts(datagen::build_dataset(300, 42)) {
    embedkit::EmbedConfig ec;
    ec.dim = 128;
    auto emb = decoupler::embed_triples(ts, ec);
    decoupler::TrainConfig cfg;
    cfg.epochs = 15;
    cfg.d_out = 16;
    cfg.learning_rate = 1e-2;
    pair = decoupler::train(ts, emb, cfg);
  }
};

const Trained& trained() {
  static const Trained t;
  return t;
}

BenchmarkConfig bench_config() {
  BenchmarkConfig cfg;
  cfg.embed.dim = 128;
  return cfg;
}

}  // namespace

TEST_CASE("answer normalization") {
  CHECK(normalize_answer("The Eiffel Tower!") == "eiffel tower");
  CHECK(normalize_answer("A  dog") == "dog");
  CHECK(normalize_answer("  an Apple, a day ") == "apple day");
  CHECK(normalize_answer("") == "");
  for (const char* s : {"The Eiffel Tower!", "A  dog", "Marie Curie.", "the the THE"})
    CHECK(normalize_answer(normalize_answer(s)) == normalize_answer(s));
}

TEST_CASE("exact match and token f1") {
  CHECK(em("Paris", "paris.") == 1);
  CHECK(em("Paris France", "paris") == 0);
  CHECK(f1_token("paris", "paris") == 1.0);
  CHECK(f1_token("london", "paris") == 0.0);
  CHECK(f1_token("paris france", "paris") == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(f1_token("paris", "paris france") == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  for (auto [p, g] : {std::pair{"The Louvre", "louvre"}, {"A cat!", "cat"}, {"x y", "x  y"}})
    if (em(p, g)) CHECK(f1_token(p, g) == 1.0);
}

TEST_CASE("detection f1") {
  auto perfect = records({0.9, 0.8, 0.1, 0.2}, {1, 1, 0, 0});
  CHECK(detection_f1(perfect, 0.5) == 1.0);
  CHECK(detection_f1(perfect, 0.95) == 0.0);

  // tp = 2 (0.9, 0.6), fp = 1 (0.7), fn = 1 (0.3)
  auto mixed = records({0.9, 0.7, 0.6, 0.3, 0.1}, {1, 0, 1, 1, 0});
  CHECK(detection_f1(mixed, 0.5) == doctest::Approx(2.0 * 2 / (2 * 2 + 1 + 1)).epsilon(1e-15));

  CHECK_THROWS_AS(detection_f1(records({0.1, 0.2}, {0, 0}), 0.5), DegenerateInputError);
  CHECK_THROWS_AS(detection_f1(records({0.1, 0.2}, {1, 1}), 0.5), DegenerateInputError);

  Rng r(21);
  std::vector<double> s;
  std::vector<int> y;
  for (int i = 0; i < 300; ++i) {
    y.push_back(static_cast<int>(r.below(2)));
    s.push_back(0.3 * y.back() + r.uniform());
  }
  auto recs = records(s, y);
  auto sweep = sweep_thresholds(recs);
  CHECK(sweep.best_f1 == detection_f1(recs, sweep.best_threshold));
  for (double t : s) CHECK(detection_f1(recs, t) <= sweep.best_f1);
  for (const auto& [t, f] : sweep.curve) CHECK(f == detection_f1(recs, t));
}

TEST_CASE("auroc examples") {
  CHECK(auroc(records({0.1, 0.4, 0.35, 0.8}, {0, 0, 1, 1})) == 0.75);
  CHECK(auroc(records({0.1, 0.2, 0.8, 0.9}, {0, 0, 1, 1})) == 1.0);
  CHECK(auroc(records({0.9, 0.8, 0.2, 0.1}, {0, 0, 1, 1})) == 0.0);
  CHECK(auroc(records({0.5, 0.5, 0.5, 0.5}, {0, 1, 0, 1})) == 0.5);
  CHECK_THROWS_AS(auroc(records({0.1, 0.2}, {1, 1})), DegenerateInputError);
}

TEST_CASE("auroc equals brute force with ties") {
  Rng r(31);
  for (int inst = 0; inst < 100; ++inst) {
    std::size_t n = 2 + r.below(499);
    std::vector<double> s;
    std::vector<int> y;
    for (std::size_t i = 0; i < n; ++i) {
      s.push_back(static_cast<double>(r.below(10)) / 10.0);
      y.push_back(static_cast<int>(r.below(2)));
    }
    y[0] = 0;
    y[1] = 1;
    auto recs = records(s, y);
    CHECK(auroc(recs) == auroc_bruteforce(recs));
  }
}

TEST_CASE("auroc is invariant to monotone transforms") {
  Rng r(32);
  std::vector<double> s, t;
  std::vector<int> y;
  for (int i = 0; i < 200; ++i) {
    y.push_back(i % 2);
    s.push_back(r.normal() + y.back());
    t.push_back(std::exp(3 * s.back()));
  }
  CHECK(auroc(records(s, y)) == auroc(records(t, y)));
}

TEST_CASE("kgrr and mcor") {
  std::vector<OutcomeCase> k;
  for (int i = 0; i < 10; ++i) k.push_back({false, ContextType::golden, i < 7});
  k.push_back({true, ContextType::golden, false});
  k.push_back({false, ContextType::conflicting, true});
  CHECK(kgrr(k) == doctest::Approx(0.7).epsilon(1e-15));

  std::vector<OutcomeCase> m;
  for (int i = 0; i < 10; ++i) m.push_back({true, ContextType::conflicting, i >= 3});
  m.push_back({false, ContextType::conflicting, false});
  m.push_back({true, ContextType::irrelevant, false});
  CHECK(mcor(m) == doctest::Approx(0.3).epsilon(1e-15));

  CHECK_THROWS_AS(kgrr(m), DegenerateInputError);
  CHECK_THROWS_AS(mcor(k), DegenerateInputError);

  auto shuffled = m;
  Rng r(5);
  r.shuffle(shuffled);
  CHECK(mcor(shuffled) == mcor(m));
  auto doubled = m;
  doubled.insert(doubled.end(), m.begin(), m.end());
  CHECK(mcor(doubled) == mcor(m));
}

TEST_CASE("ranks and correlation") {
  std::vector<double> a{3, 1, 2, 2};
  auto ranks = average_ranks(a);
  CHECK(ranks == std::vector<double>{4, 1, 2.5, 2.5});

  std::vector<double> x{1, 2, 3, 4, 5};
  std::vector<double> rev{5, 4, 3, 2, 1};
  std::vector<double> cubed{1, 8, 27, 64, 125};
  CHECK(spearman(x, x) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(spearman(x, rev) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(spearman(x, cubed) == doctest::Approx(1.0).epsilon(1e-15));

  Rng r(8);
  std::vector<double> u, v;
  for (int i = 0; i < 100; ++i) {
    u.push_back(static_cast<double>(r.below(20)));
    v.push_back(u.back() + 5 * r.normal());
  }
  auto ru = average_ranks(u), rv = average_ranks(v);
  long double mu = 0, mv = 0;
  for (int i = 0; i < 100; ++i) {
    mu += ru[i];
    mv += rv[i];
  }
  mu /= 100;
  mv /= 100;
  long double sxy = 0, sxx = 0, syy = 0;
  for (int i = 0; i < 100; ++i) {
    sxy += (ru[i] - mu) * (rv[i] - mv);
    sxx += (ru[i] - mu) * (ru[i] - mu);
    syy += (rv[i] - mv) * (rv[i] - mv);
  }
  CHECK(spearman(u, v) == doctest::Approx(static_cast<double>(sxy / std::sqrt(sxx * syy))).epsilon(1e-12));

  CHECK_THROWS_AS(spearman(x, std::vector<double>{1, 2}), DimensionError);
  CHECK_THROWS_AS(pearson(x, std::vector<double>{2, 2, 2, 2, 2}), DegenerateInputError);
}

TEST_CASE("krippendorff alpha") {
  RatingMatrix perfect{{1, 2, 3, 1}, {1, 2, 3, 1}, {1, 2, 3, 1}};
  CHECK(krippendorff_alpha_nominal(perfect) == doctest::Approx(1.0).epsilon(1e-15));

  // four observers, twelve units, with missing ratings
  std::optional<int> _;
  RatingMatrix published{{1, 2, 3, 3, 2, 1, 4, 1, 2, _, _, _},
                         {1, 2, 3, 3, 2, 2, 4, 1, 2, 5, _, 3},
                         {_, 3, 3, 3, 2, 3, 4, 2, 2, 5, 1, _},
                         {1, 2, 3, 3, 2, 4, 4, 1, 2, 5, 1, _}};
  double a = krippendorff_alpha_nominal(published);
  CHECK(a == doctest::Approx(0.743).epsilon(5e-4 / 0.743));
  CHECK(a == doctest::Approx(alpha_pairwise(published)).epsilon(1e-12));

  Rng r(12);
  RatingMatrix noise(3, std::vector<std::optional<int>>(10000));
  for (auto& row : noise)
    for (auto& cell : row) cell = static_cast<int>(r.below(3));
  double an = krippendorff_alpha_nominal(noise);
  CHECK(std::abs(an) <= 0.05);
  CHECK(an == doctest::Approx(alpha_pairwise(noise)).epsilon(1e-9));

  RatingMatrix sparse(4, std::vector<std::optional<int>>(200));
  for (auto& row : sparse)
    for (auto& cell : row)
      if (r.bernoulli(0.7)) cell = static_cast<int>(r.below(4));
  sparse[0][0] = 0;
  sparse[1][0] = 1;
  CHECK(krippendorff_alpha_nominal(sparse) == doctest::Approx(alpha_pairwise(sparse)).epsilon(1e-12));

  CHECK_THROWS_AS(krippendorff_alpha_nominal(RatingMatrix{{1, 1}}), DegenerateInputError);
  CHECK_THROWS_AS(krippendorff_alpha_nominal(RatingMatrix{{1, 1}, {1}}), DimensionError);
  CHECK_THROWS_AS(krippendorff_alpha_nominal(RatingMatrix{{1, 1}, {1, 1}}), DegenerateInputError);
}

TEST_CASE("read context") {
  using datagen::Relation;
  auto ctx = datagen::render_statement("Louvre", Relation::located_in, "Paris") + " " +
             datagen::render_statement("Alhambra", Relation::located_in, "Granada");
  auto r = read_context(ctx, "Alhambra", Relation::located_in);
  CHECK(r.relevant);
  CHECK_FALSE(r.negated);
  CHECK(r.object == "Granada");
  CHECK_FALSE(read_context(ctx, "Alhambra", Relation::capital_of).relevant);
  CHECK_FALSE(read_context("", "Alhambra", Relation::located_in).relevant);
  auto neg = read_context("The Alhambra is old. Alhambra is not located in Granada.", "Alhambra", Relation::located_in);
  CHECK(neg.relevant);
  CHECK(neg.negated);
  CHECK(neg.object == "Granada");
}

TEST_CASE("benchmark on golden-only cases") {
  datagen::QaOptions opts;
  opts.mix = {1.0, 0.0, 0.0};
  auto cases = datagen::build_qa_cases(trained().ts, opts);
  auto res = run_benchmark(cases, trained().pair, bench_config(), "h");
  CHECK(res.report["qa"]["mcor"].is_null());
  CHECK_FALSE(res.report["qa"]["kgrr"].is_null());
  for (const auto& c : res.cases)
    if (c.outcome.closed_book_correct) CHECK(c.detection.label == 0);
  CHECK(res.cases.size() == cases.size());
}

TEST_CASE("benchmark report") {
  auto cases = datagen::build_qa_cases(trained().ts, datagen::QaOptions{});
  auto cfg = bench_config();
  auto res = run_benchmark(cases, trained().pair, cfg, "abc");
  const auto& rep = res.report;
  CHECK(rep["report_version"] == 1);
  for (const char* k : {"detection", "qa", "baselines", "flip_rates", "verdict_counts", "config"})
    CHECK(rep.contains(k));
  CHECK(rep["config"]["checkpoint_hash"] == "abc");
  CHECK(rep["config"]["n_cases"] == cases.size());
  CHECK(rep["config"]["embed"]["source"] == "hash-fallback");
  CHECK(rep["config"]["embed"]["dim"] == 128);

  double policy_mcor = rep["qa"]["mcor"].get<double>();
  double ctx_mcor = rep["baselines"]["always_context"]["mcor"].get<double>();
  CHECK(policy_mcor < ctx_mcor);

  std::size_t n_verdicts = 0;
  for (const auto& [k, v] : rep["verdict_counts"].items()) n_verdicts += v.get<std::size_t>();
  CHECK(n_verdicts == cases.size());

  for (const auto& c : res.cases) {
    CHECK(c.em <= c.f1 + 1e-15);
    CHECK(c.decision.verdict == policy::decide(c.signals, cfg.policy).verdict);
  }
  CHECK(res.csv.rfind("method,kgrr,mcor,em,f1\ntcr,", 0) == 0);
  CHECK(std::count(res.csv.begin(), res.csv.end(), '\n') == 4);

  auto again = run_benchmark(cases, trained().pair, cfg, "abc");
  CHECK(again.report.dump() == rep.dump());
  CHECK(again.csv == res.csv);
}

TEST_CASE("triple-level detection") {
  embedkit::EmbedConfig ec;
  ec.dim = 128;
  auto d = evaluate_detection(trained().ts, trained().pair, ec, policy::PolicyConfig{}, std::nullopt);
  CHECK(d.n_triples == trained().ts.size());
  CHECK(d.records.size() == 3 * d.n_triples);
  CHECK(d.auroc == auroc(d.records));
  CHECK(d.sweep.best_f1 >= d.f1_at_rule - 1e-15);
  CHECK(d.fact_margin() > 0);
  CHECK(d.sem_margin() > 0);
  auto j = detection_to_json(d);
  CHECK(j["sem_margin"] == d.sem_margin());
  CHECK(j["n_triples"] == d.n_triples);
}
