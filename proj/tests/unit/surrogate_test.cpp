#include <doctest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "v2v/cellular.hpp"
#include "v2v/error.hpp"
#include "v2v/hybrid.hpp"
#include "v2v/surrogate.hpp"

using namespace v2v::surrogate;

namespace {

double per_slot(double per_ms) { return v2v::cellular::per_slot_rate(per_ms, 13e-6); }

Dataset synthetic(int rows, std::uint64_t seed, double (*target)(const Features&)) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Dataset d;
  for (int i = 0; i < rows; ++i) {
    DelayQuery q{0.005 + 0.1 * u(rng), per_slot(0.05 + 0.2 * u(rng)), double(2 + i % 9), 6.0 * u(rng),
                 u(rng)};
    d.rows.push_back({q, target(q.features())});
  }
  return d;
}

}  // namespace

TEST_CASE("invert_ccdf") {
  const auto grid = v2v::hybrid::log_grid(0.01, 100.0, 200);

  SUBCASE("step") {
    const double x0 = 7.25;
    const double d = invert_ccdf([x0](double x) { return x < x0 ? 1.0 : 0.0; }, 0.05, grid);
    CHECK(d == doctest::Approx(x0).epsilon(1e-10));
  }
  SUBCASE("already below p at zero") {
    CHECK(invert_ccdf([](double) { return 0.01; }, 0.05, grid) == 0.0);
  }
  SUBCASE("exponential") {
    const double d = invert_ccdf([](double x) { return std::exp(-x); }, 0.1, grid);
    CHECK(d == doctest::Approx(std::log(10.0)).epsilon(1e-9));
  }
  SUBCASE("not reached") {
    try {
      invert_ccdf([](double x) { return 1.0 / (1.0 + x); }, 0.001, grid);
      FAIL("expected NotReached");
    } catch (const v2v::RegimeError& e) {
      CHECK(e.name() == "NotReached");
    }
  }
  CHECK_THROWS_AS(invert_ccdf([](double) { return 1.0; }, 1.0, grid), v2v::DomainError);
}

TEST_CASE("query validation and config mapping") {
  CHECK_THROWS_AS(DelayQuery({0.0, 0.0, 10, 0, 0.5}).validate(), v2v::DomainError);
  CHECK_THROWS_AS(DelayQuery({0.01, 0.0, 1, 0, 0.5}).validate(), v2v::DomainError);
  CHECK_THROWS_AS(DelayQuery({0.01, 0.0, 2.5, 0, 0.5}).validate(), v2v::DomainError);
  CHECK_THROWS_AS(DelayQuery({0.01, -1.0, 4, 0, 0.5}).validate(), v2v::DomainError);

  const v2v::hybrid::HybridConfig base;
  const auto c = config_for(base, {0.01, 1e-6, 6, 3.0, 0.25});
  CHECK(c.cellular.n == 6);
  CHECK(c.mmwave.n_vehicles == 6);
  CHECK(c.cellular.lambda == 1e-6);
  CHECK(c.lambda_total == 1e-6);
  CHECK(c.split == 0.25);
  CHECK(10.0 * std::log10(base.mmwave.snr / c.mmwave.snr) == doctest::Approx(3.0));
  CHECK(c.mmwave.v == doctest::Approx(base.mmwave.v + 1.5));
}

TEST_CASE("dataset generation") {
  GridSpec g;
  g.lambda = {per_slot(0.1)};
  g.n = {6};

  SUBCASE("one point matches a direct inversion") {
    const Dataset d = generate_dataset(g);
    REQUIRE(d.rows.size() == 1);
    const v2v::hybrid::HybridModel m(config_for(g.base, d.rows[0].query));
    const double direct = invert_ccdf([&](double x) { return m.delay_ccdf(x); }, 0.01, g.x_grid);
    CHECK(d.rows[0].delay_slots == direct);
    CHECK(m.delay_ccdf(direct) <= 0.01);
  }

  SUBCASE("stricter p needs a longer delay") {
    g.p = {0.01, 0.1};
    g.lambda = {per_slot(0.05), per_slot(0.2)};
    g.noise_level = {0.0, 4.0};
    const Dataset d = generate_dataset(g);
    REQUIRE(d.rows.size() == 8);
    for (std::size_t i = 0; i < d.rows.size(); i += 2) {
      CHECK(d.rows[i].query.p == 0.01);
      CHECK(d.rows[i + 1].query.p == 0.1);
      CHECK(d.rows[i].delay_slots >= d.rows[i + 1].delay_slots);
    }

    const Dataset again = generate_dataset(g);
    for (std::size_t i = 0; i < d.rows.size(); ++i) CHECK(again.rows[i].delay_slots == d.rows[i].delay_slots);

    std::stringstream ss;
    write_csv(d, ss);
    const Dataset back = read_csv(ss);
    REQUIRE(back.rows.size() == d.rows.size());
    for (std::size_t i = 0; i < d.rows.size(); ++i) {
      CHECK(back.rows[i].delay_slots == d.rows[i].delay_slots);
      CHECK(back.rows[i].query.lambda == d.rows[i].query.lambda);
    }
  }

  SUBCASE("unstable points are skipped, not fatal") {
    g.split = {1.0};
    g.lambda = {per_slot(5.0)};
    const Dataset d = generate_dataset(g);
    CHECK(d.rows.empty());
    REQUIRE(d.skipped.size() == 1);
    CHECK(d.skipped[0].reason.find("UnstableRegime") != std::string::npos);
  }
}

TEST_CASE("dataset CSV errors") {
  std::stringstream bad_header("a,b\n");
  CHECK_THROWS_AS(read_csv(bad_header), v2v::ConfigError);
  std::stringstream bad_row("p,lambda,n,noise_level,split,delay_slots\n0.1,x,3,0,0.5,10\n");
  CHECK_THROWS_AS(read_csv(bad_row), v2v::ConfigError);
  std::stringstream empty;
  CHECK_THROWS_AS(read_csv(empty), v2v::IoError);
}

TEST_CASE("training") {
  Hyperparams hp;
  hp.train.epochs = 400;

  SUBCASE("constant target") {
    const Dataset d = synthetic(80, 1, [](const Features&) { return 1234.5; });
    const auto r = train_mlp(d, hp);
    CHECK(r.holdout_rel_error < 1e-3);
    CHECK(r.holdout_rows == 16);
  }

  SUBCASE("linear target") {
    hp.train.epochs = 500;
    const Dataset d = synthetic(1000, 2, [](const Features& f) {
      return 2000.0 - 5000.0 * f[0] + 3e9 * f[1] + 150.0 * f[2] + 40.0 * f[3] - 300.0 * f[4];
    });
    const auto r = train_mlp(d, hp);
    INFO("linear target held-out relative error " << r.holdout_rel_error);
    CHECK(r.holdout_rel_error < 0.02);
    // A training row is reproduced about as well as the training error says.
    const auto pred = predict_delay(r.model, d.rows[0].query);
    CHECK(std::abs(pred.delay_slots - d.rows[0].delay_slots) / d.rows[0].delay_slots < 0.05);
  }

  SUBCASE("accepted loss never increases") {
    const Dataset d = synthetic(100, 3, [](const Features& f) { return 10.0 + 1e7 * f[1] * f[2]; });
    const auto r = train_mlp(d, hp);
    for (std::size_t i = 1; i < r.report.loss.size(); ++i) CHECK(r.report.loss[i] <= r.report.loss[i - 1]);
  }

  SUBCASE("training is deterministic") {
    const Dataset d = synthetic(60, 4, [](const Features& f) { return 10.0 + 100.0 * f[4]; });
    hp.train.epochs = 50;
    const auto a = train_mlp(d, hp);
    const auto b = train_mlp(d, hp);
    CHECK(a.model.to_json().dump() == b.model.to_json().dump());
  }

  CHECK_THROWS_AS(train_mlp(synthetic(49, 5, [](const Features&) { return 1.0; }), hp), v2v::DomainError);
}

TEST_CASE("non-finite loss is reported as divergence") {
  v2v::nn::Mlp net({2, 4, 1}, 1);
  const std::vector<std::vector<double>> x{{0.0, 1.0}, {1.0, 0.0}};
  const v2v::nn::LossFn nan_loss = [](std::size_t, std::span<const double>, std::span<double> dy) {
    dy[0] = 0.0;
    return std::nan("");
  };
  try {
    v2v::nn::train(net, x, nan_loss, {});
    FAIL("expected Diverged");
  } catch (const v2v::ConvergenceError& e) {
    CHECK(e.name() == "Diverged");
  }
}

TEST_CASE("prediction") {
  MlpModel m;
  m.net = v2v::nn::Mlp({kFeatures, 8, 8, 1}, 9);
  for (int i = 0; i < kFeatures; ++i) {
    m.in_mean[i] = 0.0;
    m.in_scale[i] = 1.0;
    m.box_lo[i] = 0.0;
    m.box_hi[i] = 20.0;
  }
  m.out_mean = 5.0;
  m.out_scale = 2.0;

  SUBCASE("zero weights give the denormalized bias") {
    for (auto& l : m.net.layers()) {
      std::fill(l.w.begin(), l.w.end(), 0.0);
      std::fill(l.b.begin(), l.b.end(), 0.0);
    }
    m.net.layers().back().b[0] = 0.5;
    const auto p = predict_delay(m, {0.01, 0.0, 4, 0, 0.5});
    CHECK(p.delay_slots == doctest::Approx(std::expm1(0.5 * 2.0 + 5.0)));
    CHECK_FALSE(p.extrapolated);
  }

  SUBCASE("outside the box is flagged") {
    CHECK(predict_delay(m, {0.01, 0.0, 40, 0, 0.5}).extrapolated);
  }

  SUBCASE("never negative") {
    m.out_mean = -50.0;
    CHECK(predict_delay(m, {0.01, 0.0, 4, 0, 0.5}).delay_slots >= 0.0);
  }

  SUBCASE("pure and stable through JSON") {
    const DelayQuery q{0.02, 1e-6, 6, 2.0, 0.5};
    const double a = predict_delay(m, q).delay_slots;
    CHECK(predict_delay(m, q).delay_slots == a);
    const MlpModel back = MlpModel::from_json(nlohmann::json::parse(m.to_json().dump()));
    CHECK(predict_delay(back, q).delay_slots == a);
  }

  SUBCASE("malformed documents") {
    auto j = m.to_json();
    j["schema"] = "other/9";
    CHECK_THROWS_AS(MlpModel::from_json(j), v2v::ConfigError);
    j = m.to_json();
    j["network"]["layers"][0]["bias"] = std::vector<double>{1.0};
    CHECK_THROWS_AS(MlpModel::from_json(j), v2v::ConfigError);
    j = m.to_json();
    j.erase("input_mean");
    CHECK_THROWS_AS(MlpModel::from_json(j), v2v::ConfigError);
  }
}
