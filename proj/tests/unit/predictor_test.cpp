#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "../oracles/markov_oracles.hpp"
#include "v2v/error.hpp"
#include "v2v/predictor.hpp"

using namespace v2v::predictor;

namespace {

using Rows = std::map<Context, Distribution>;

Rows random_rows(int order, int levels, std::mt19937_64& rng, double zero_prob = 0.0) {
  Rows rows;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<int> c(order, 0);
  while (true) {
    Distribution p(levels);
    double s = 0.0;
    for (auto& v : p) s += v = (u(rng) < zero_prob ? 0.0 : 0.1 + u(rng));
    if (s == 0.0) p[0] = s = 1.0;
    for (auto& v : p) v /= s;
    rows[c] = p;
    int i = order - 1;
    while (i >= 0 && ++c[i] == levels) c[i--] = 0;
    if (i < 0) break;
  }
  return rows;
}

TransitionFn from_rows(const Rows& rows) {
  return [rows](const Context& c) { return rows.at(c); };
}

}  // namespace

TEST_CASE("discretize") {
  const std::vector<double> edges{0.0, 1.0, 2.0};
  CHECK(discretize(0.5, edges) == 0);
  CHECK(discretize(1.0, edges) == 1);
  CHECK(discretize(1.99, edges) == 1);
  CHECK(discretize(-3.0, edges) == 0);
  CHECK(discretize(2.0, edges) == 1);
  CHECK(discretize(50.0, edges) == 1);
  CHECK_THROWS_AS(discretize(std::nan(""), edges), v2v::DomainError);

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 2.0);
  const int n = 20000;
  int low = 0;
  for (int i = 0; i < n; ++i) low += discretize(u(rng), edges) == 0;
  const double sigma = std::sqrt(0.25 / n);
  CHECK(std::abs(double(low) / n - 0.5) < 3.0 * sigma);
}

TEST_CASE("config validation") {
  MarkovConfig c;
  c.order = 0;
  CHECK_THROWS_AS(c.validate(), v2v::DomainError);
  c = {};
  c.zeta = 0.0;
  CHECK_THROWS_AS(c.validate(), v2v::DomainError);
  c = {};
  c.bin_edges = {0.0, 0.0, 1.0};
  CHECK_THROWS_AS(c.validate(), v2v::DomainError);
  c = {};
  c.bin_edges = {0.0, 1.0};
  CHECK_THROWS_AS(c.validate(), v2v::DomainError);
}

TEST_CASE("frequency estimation") {
  MarkovConfig cfg;

  SUBCASE("deterministic cycle") {
    const auto t = estimate_frequencies({{0, 1, 0, 1, 0, 1, 0}}, cfg);
    CHECK(t.freq.at({0}) == Distribution{0.0, 1.0});
    CHECK(t.freq.at({1}) == Distribution{1.0, 0.0});
  }

  SUBCASE("single observation per context") {
    cfg.bin_edges = {0, 1, 2, 3};
    const auto t = estimate_frequencies({{2, 0}, {1, 1}}, cfg);
    CHECK(t.freq.at({2}) == Distribution{1.0, 0.0, 0.0});
    CHECK(t.freq.at({1}) == Distribution{0.0, 1.0, 0.0});
    CHECK(t.freq.count({0}) == 0);
    CHECK(t.row({0}) == Distribution(3, 1.0 / 3.0));
  }

  SUBCASE("known order-2 chain") {
    std::mt19937_64 rng(2);
    const Rows truth = random_rows(2, 3, rng);
    const auto seq = oracle::sample_chain(truth, {0, 0}, 100000, rng);
    cfg.order = 2;
    cfg.bin_edges = {0, 1, 2, 3};
    const auto t = estimate_frequencies({seq}, cfg);
    double worst = 0.0;
    for (const auto& [c, p] : truth) {
      for (int k = 0; k < 3; ++k) worst = std::max(worst, std::abs(t.freq.at(c)[k] - p[k]));
    }
    CHECK(worst < 0.02);
  }

  CHECK_THROWS_AS(estimate_frequencies({{0}}, cfg), v2v::DomainError);
  CHECK_THROWS_AS(estimate_frequencies({{0, 5}}, cfg), v2v::DomainError);
}

TEST_CASE("confidence factor") {
  CHECK(confidence_factor(0, -0.1) == 0.0);
  CHECK(confidence_factor(10, -0.1) == doctest::Approx(1.0 - std::exp(-1.0)));
  CHECK(confidence_factor(10, -0.1) == doctest::Approx(0.6321).epsilon(1e-4));
  CHECK(confidence_factor(1e6, -0.1) == doctest::Approx(1.0));
  CHECK(confidence_factor(1e6, -0.1) < 1.0 + 1e-15);
  CHECK_THROWS_AS(confidence_factor(-1, -0.1), v2v::DomainError);
  CHECK_THROWS_AS(confidence_factor(1, 0.1), v2v::DomainError);
}

TEST_CASE("smoothing") {
  MarkovConfig cfg;
  cfg.bin_edges = {0, 1, 2, 3};

  TransitionTable t;
  t.order = 1;
  t.levels = 3;

  SUBCASE("hand example") {
    // F = 0.5 needs zeta * C = ln 0.5.
    t.counts[{0}] = {4, 0, 0};
    t.freq[{0}] = {1.0, 0.0, 0.0};
    cfg.zeta = std::log(0.5) / 4.0;
    const auto s = smooth_frequencies(t, cfg);
    CHECK(s.freq.at({0})[0] == doctest::Approx(0.6));
    CHECK(s.freq.at({0})[1] == doctest::Approx(0.2));
    CHECK(s.freq.at({0})[2] == doctest::Approx(0.2));

    cfg.smoothing = Smoothing::verbatim;
    const auto v = smooth_frequencies(t, cfg);
    CHECK(v.freq.at({0})[0] == doctest::Approx(0.75));
    CHECK(v.freq.at({0})[1] == doctest::Approx(0.25));
  }

  SUBCASE("fully observed contexts are untouched") {
    t.counts[{1}] = {1, 2, 1};
    t.freq[{1}] = {0.25, 0.5, 0.25};
    CHECK(smooth_frequencies(t, cfg).freq.at({1}) == t.freq.at({1}));
  }

  SUBCASE("vanishing confidence leaves the row unchanged") {
    t.counts[{0}] = {3, 1, 0};
    t.freq[{0}] = {0.75, 0.25, 0.0};
    cfg.zeta = -1e-300;
    const auto s = smooth_frequencies(t, cfg);
    for (int k = 0; k < 3; ++k) CHECK(s.freq.at({0})[k] == doctest::Approx(t.freq.at({0})[k]));
  }

  SUBCASE("small frequencies are clamped, then renormalized") {
    t.counts[{2}] = {1, 99, 0};
    t.freq[{2}] = {0.01, 0.99, 0.0};
    const auto s = smooth_frequencies(t, cfg);
    const auto& p = s.freq.at({2});
    CHECK(p[0] > 0.0);
    CHECK(p[0] < 1e-8);
    CHECK(p[0] + p[1] + p[2] == doctest::Approx(1.0).epsilon(1e-15));
  }

  SUBCASE("random tables stay valid and smoothing grows with count") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 50; ++trial) {
      const Rows rows = random_rows(1, 4, rng, 0.4);
      cfg.bin_edges = {0, 1, 2, 3, 4};
      const auto seq = oracle::sample_chain(rows, {0}, 30 + trial * 10, rng);
      const auto table = estimate_frequencies({seq}, cfg);
      const auto s = smooth_frequencies(table, cfg);
      for (const auto& [c, p] : s.freq) {
        double sum = 0.0;
        for (int k = 0; k < 4; ++k) {
          CHECK(p[k] >= 0.0);
          if (table.freq.at(c)[k] == 0.0) CHECK(p[k] > 0.0);
          sum += p[k];
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
      }
    }
    // Same frequencies, more observations: more mass on the unseen state.
    TransitionTable a = t, b = t;
    a.counts[{0}] = {2, 2, 0};
    b.counts[{0}] = {20, 20, 0};
    a.freq[{0}] = b.freq[{0}] = {0.5, 0.5, 0.0};
    cfg.bin_edges = {0, 1, 2, 3};
    CHECK(smooth_frequencies(b, cfg).freq.at({0})[2] > smooth_frequencies(a, cfg).freq.at({0})[2]);
  }
}

TEST_CASE("predictor network") {
  MarkovConfig cfg;
  PredictorOptions opts;
  opts.train.epochs = 1500;

  SUBCASE("single context") {
    cfg.bin_edges = {0, 1, 2, 3};
    TransitionTable t;
    t.order = 1;
    t.levels = 3;
    t.counts[{1}] = {2, 5, 3};
    t.freq[{1}] = {0.2, 0.5, 0.3};
    const auto r = train_predictor(t, cfg, opts);
    CHECK(r.max_tv < 0.01);

    // Unseen contexts still produce a distribution.
    for (int c = 0; c < 3; ++c) {
      const auto p = r.model.predict({c});
      double s = 0.0;
      for (double v : p) {
        CHECK(v >= 0.0);
        s += v;
      }
      CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK_THROWS_AS(r.model.predict({0, 1}), v2v::DomainError);
    CHECK_THROWS_AS(r.model.predict({3}), v2v::DomainError);
  }

  SUBCASE("two-state chain") {
    std::mt19937_64 rng(4);
    const Rows truth{{{0}, {0.8, 0.2}}, {{1}, {0.35, 0.65}}};
    const auto seq = oracle::sample_chain(truth, {0}, 20000, rng);
    const auto t = smooth_frequencies(estimate_frequencies({seq}, cfg), cfg);
    const auto r = train_predictor(t, cfg, opts);
    CHECK(r.max_tv < 0.02);
    for (const auto& [c, p] : truth) CHECK(total_variation(r.model.predict(c), p) < 0.02);
  }

  SUBCASE("deterministic and persistent") {
    const Rows truth{{{0}, {0.6, 0.4}}, {{1}, {0.1, 0.9}}};
    std::mt19937_64 rng(5);
    const auto t = estimate_frequencies({oracle::sample_chain(truth, {1}, 500, rng)}, cfg);
    opts.train.epochs = 100;
    const auto a = train_predictor(t, cfg, opts);
    const auto b = train_predictor(t, cfg, opts);
    CHECK(a.model.to_json().dump() == b.model.to_json().dump());
    const auto back = PredictorModel::from_json(nlohmann::json::parse(a.model.to_json().dump()));
    CHECK(back.predict({0}) == a.model.predict({0}));
    auto j = a.model.to_json();
    j["levels"] = 5;
    CHECK_THROWS_AS(PredictorModel::from_json(j), v2v::ConfigError);
  }

  CHECK_THROWS_AS(train_predictor(TransitionTable{}, cfg, opts), v2v::DomainError);
}

TEST_CASE("worst-case horizon") {
  SUBCASE("deterministic chain, one step") {
    const Rows rows{{{0}, {0.0, 1.0, 0.0}}, {{1}, {0.0, 0.0, 1.0}}, {{2}, {1.0, 0.0, 0.0}}};
    CHECK(worst_case_horizon(from_rows(rows), {0}, 1, 0.05) == 1);
    CHECK(worst_case_horizon(from_rows(rows), {2}, 1, 0.05) == 0);
    CHECK(worst_case_horizon(from_rows(rows), {2}, 3, 0.05) == 2);
  }

  SUBCASE("absorbing worst state") {
    const Rows rows{{{0}, {0.9, 0.0, 0.1}}, {{1}, {0.5, 0.5, 0.0}}, {{2}, {0.0, 0.0, 1.0}}};
    for (int h = 1; h <= 5; ++h) CHECK(worst_case_horizon(from_rows(rows), {0}, h, 0.05) == 2);
    // Below the threshold the jump does not count.
    CHECK(worst_case_horizon(from_rows(rows), {0}, 3, 0.2) == 0);
    CHECK(worst_case_horizon(from_rows(rows), {0}, 3, 0.0) == 2);
  }

  SUBCASE("matches exhaustive tree enumeration") {
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 60; ++trial) {
      const int order = 1 + trial % 2;
      const int levels = 2 + trial % 3;
      const Rows rows = random_rows(order, levels, rng, 0.3);
      const auto next = from_rows(rows);
      const int horizon = 1 + trial % 4;
      const double thr = (trial % 5) * 0.1;
      for (const auto& [c, p] : rows) {
        const int tree = oracle::tree_worst(next, c, horizon, thr);
        if (tree < 0) continue;
        CHECK(worst_case_horizon(next, c, horizon, thr) == tree);
      }
    }
  }

  SUBCASE("exceedance rate follows the threshold") {
    // One step ahead, the next level exceeds the reported worst only through
    // levels each below the threshold.
    std::mt19937_64 rng(7);
    const Rows rows = random_rows(1, 4, rng);
    const auto next = from_rows(rows);
    const auto seq = oracle::sample_chain(rows, {0}, 50000, rng);
    const double thr = 0.2;
    long exceed = 0;
    double allowed = 0.0;
    for (std::size_t i = 1; i < seq.size(); ++i) {
      const int w = worst_case_horizon(next, {seq[i - 1]}, 1, thr);
      exceed += seq[i] > w;
      const auto p = rows.at({seq[i - 1]});
      for (int k = w + 1; k < 4; ++k) allowed += p[k];
    }
    const double n = double(seq.size() - 1);
    CHECK(std::abs(exceed / n - allowed / n) < 4.0 * std::sqrt(0.25 / n));
    CHECK(allowed / n <= 3 * thr);
  }

  CHECK_THROWS_AS(worst_case_horizon([](const Context&) { return Distribution{1.0}; }, {0}, 0, 0.05),
                  v2v::DomainError);
}

TEST_CASE("parameter sample files") {
  ParameterSamples s;
  s.t = {0.0, 0.5, 1.0};
  s.noise_level = {0.0, 3.0, 6.0};
  s.n = {6, 6, 8};
  s.lambda = {1.3e-6, 2.6e-6, 1e-7};
  std::stringstream ss;
  write_samples(s, ss);
  const auto back = read_samples(ss);
  CHECK(back.t == s.t);
  CHECK(back.lambda == s.lambda);

  std::stringstream unordered("t,noise_level,n,lambda\n1,0,6,0\n0.5,0,6,0\n");
  CHECK_THROWS_AS(read_samples(unordered), v2v::ConfigError);
  std::stringstream header("time,x\n");
  CHECK_THROWS_AS(read_samples(header), v2v::ConfigError);
}
