#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "../oracles/snc_oracles.hpp"
#include "v2v/error.hpp"
#include "v2v/snc.hpp"

using namespace v2v::snc;

TEST_CASE("minplus of two rates is the smaller rate") {
  const Curve r = minplus_convolve(Curve::affine(3.0), Curve::affine(5.0));
  for (double t : {0.0, 0.5, 1.0, 7.0, 100.0}) CHECK(r(t) == doctest::Approx(3.0 * t));
}

TEST_CASE("minplus with the zero curve is a(0)") {
  const Curve a({{0.0, 2.0}, {1.0, 4.0}, {3.0, 5.0}});
  const Curve zero({{0.0, 0.0}, {1.0, 0.0}});
  const Curve r = minplus_convolve(a, zero);
  for (double t : {0.0, 0.3, 2.0, 10.0}) CHECK(r(t) == doctest::Approx(2.0));
}

TEST_CASE("minplus matches dense-grid oracle on random 3-segment curves") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const Curve a = oracle::random_curve(rng, 3, 20);
    const Curve b = oracle::random_curve(rng, 3, 20);
    const Curve r = minplus_convolve(a, b);
    for (int t = 0; t <= 20; ++t) {
      CHECK(r(t) == doctest::Approx(oracle::minplus_brute(a, b, t)).epsilon(1e-9));
    }
  }
}

TEST_CASE("minplus is commutative, associative and below min(a, b)") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    // The min(a, b) property needs a(0) = b(0) = 0.
    const Curve a = oracle::random_curve(rng, 3, 20, false);
    const Curve b = oracle::random_curve(rng, 4, 20, false);
    const Curve c = oracle::random_curve(rng, 2, 20);
    const Curve ab = minplus_convolve(a, b);
    const Curve ba = minplus_convolve(b, a);
    const Curve l = minplus_convolve(ab, c);
    const Curve r = minplus_convolve(a, minplus_convolve(b, c));
    for (double t = 0.0; t <= 50.0; t += 0.37) {
      CHECK(std::abs(ab(t) - ba(t)) <= 1e-9 * (1.0 + ab(t)));
      CHECK(std::abs(l(t) - r(t)) <= 1e-9 * (1.0 + l(t)));
      CHECK(ab(t) <= std::min(a(t), b(t)) + 1e-9);
    }
  }
}

TEST_CASE("curve rejects invalid breakpoints") {
  CHECK_THROWS_AS(Curve({{1.0, 0.0}}), v2v::DomainError);
  CHECK_THROWS_AS(Curve({{0.0, 1.0}, {1.0, 0.5}}), v2v::DomainError);
  CHECK_THROWS_AS(Curve({{0.0, 0.0}, {0.0, 1.0}}), v2v::DomainError);
}

TEST_CASE("tail-bound convolution") {
  const auto e = TailBound::exponential(1.0);
  CHECK(convolve_tailbounds(e, e, 2.0) == doctest::Approx(2.0 * std::exp(-1.0)).epsilon(1e-10));
  CHECK(convolve_tailbounds(TailBound::zero(), e, 3.0) == doctest::Approx(std::exp(-3.0)));
  CHECK(convolve_tailbounds(e, e, -1.0) == 1.0);

  SUBCASE("exponential with a step matches the 1e-4 grid oracle") {
    const auto f = [](double u) { return 0.8 * std::exp(-0.7 * u); };
    const auto g = [](double u) { return u < 0.5 ? 1.0 : 0.3 * std::exp(-0.2 * u); };
    const TailBound tf(f), tg(g);
    for (int x = 0; x <= 10; ++x) {
      CHECK(std::abs(convolve_tailbounds(tf, tg, x) - oracle::tail_conv_brute(f, g, x)) <= 1e-6);
    }
  }

  SUBCASE("non-increasing and below f(0) + g(x)") {
    const TailBound f([](double u) { return 0.5 * std::exp(-u); });
    const TailBound g([](double u) { return std::exp(-0.3 * u * u); });
    double prev = 1.0;
    for (double x = 0.0; x <= 8.0; x += 0.25) {
      const double v = convolve_tailbounds(f, g, x);
      CHECK(v <= prev + 1e-12);
      CHECK(v <= std::min(1.0, f(0.0) + g(x)) + 1e-12);
      prev = v;
    }
  }
}

TEST_CASE("Stieltjes convolution") {
  const auto a = [](double z) { return z < 0.0 ? 1.0 : std::exp(-z); };

  SUBCASE("unit step reproduces a(x)") {
    StieltjesOptions o;
    o.window_lo = -1.0;
    o.window_hi = 1.0;
    const auto step = [](double y) { return y < 0.0 ? 0.0 : 1.0; };
    CHECK(stieltjes_convolve(a, step, 1.5, o).value == doctest::Approx(a(1.5)).epsilon(1e-3));
  }

  SUBCASE("constant integrand gives total variation") {
    StieltjesOptions o;
    o.window_hi = 4.0;
    const auto b = [](double y) { return 3.0 * (1.0 - std::exp(-y)); };
    const auto one = [](double) { return 1.0; };
    CHECK(stieltjes_convolve(one, b, 0.0, o).value ==
          doctest::Approx(b(4.0) - b(0.0)).epsilon(1e-12));
  }

  SUBCASE("exponential pair matches Simpson quadrature") {
    StieltjesOptions o;
    o.window_hi = 20.0;
    o.tolerance = 1e-8;
    o.max_halvings = 12;
    const auto b = [](double y) { return 1.0 - std::exp(-2.0 * y); };
    for (double x : {0.5, 1.0, 3.0, 7.0}) {
      const double ref =
          oracle::simpson([&](double y) { return a(x - y) * 2.0 * std::exp(-2.0 * y); }, 0.0, 20.0,
                          2000000);
      CHECK(std::abs(stieltjes_convolve(a, b, x, o).value - ref) <= 1e-4);
    }
  }

  SUBCASE("too few halvings throws NonConvergent") {
    StieltjesOptions o;
    o.initial_steps = 1;
    o.max_halvings = 1;
    o.tolerance = 1e-15;
    o.window_hi = 10.0;
    const auto b = [](double y) { return 1.0 - std::exp(-y); };
    CHECK_THROWS_AS(stieltjes_convolve(a, b, 8.0, o), v2v::ConvergenceError);
  }
}

TEST_CASE("horizontal deviation") {
  CHECK(horizontal_deviation(Curve::affine(1.0), Curve::affine(4.0), 2.0) == doctest::Approx(0.5));
  const Curve c({{0.0, 0.0}, {2.0, 1.0}, {5.0, 7.0}});
  CHECK(horizontal_deviation(c, c, 0.0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK_THROWS_AS(horizontal_deviation(Curve::affine(5.0), Curve::affine(4.0), 0.0),
                  v2v::RegimeError);

  SUBCASE("bump matches dense grid within one step") {
    // Arrival burst between t=2 and t=3 against a rate-latency service.
    const Curve alpha({{0.0, 0.0}, {2.0, 1.0}, {3.0, 6.0}, {10.0, 9.5}});
    const Curve beta({{0.0, 0.0}, {1.0, 0.0}, {2.0, 1.0}});
    for (double x : {0.0, 0.5, 2.0}) {
      const double ref = oracle::deviation_brute(alpha, beta, x, 20.0, 0.01);
      CHECK(std::abs(horizontal_deviation(alpha, beta, x) - ref) <= 0.01 + 1e-9);
    }
  }

  SUBCASE("non-decreasing in x and in alpha") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 10; ++trial) {
      const Curve a = oracle::random_curve(rng, 3, 10);
      const Curve b = minplus_convolve(Curve({{0.0, 0.0}, {2.0, 0.0}, {3.0, 5.0}}),
                                       Curve::affine(a.final_rate() + 0.5));
      double prev = 0.0;
      for (double x = 0.0; x <= 5.0; x += 0.5) {
        const double h = horizontal_deviation(a, b, x);
        CHECK(h >= prev - 1e-12);
        prev = h;
      }
      std::vector<Breakpoint> up(a.breakpoints().begin(), a.breakpoints().end());
      for (auto& p : up) p.value += 1.0;
      CHECK(horizontal_deviation(Curve(up), b, 0.0) >= horizontal_deviation(a, b, 0.0) - 1e-12);
    }
  }
}

TEST_CASE("aggregate arrivals") {
  const auto p = poisson_arrival(0.3, 0.5);
  const std::vector<StochasticArrival> one{p};
  CHECK(aggregate_arrivals(one).rate() == doctest::Approx(p.rate()));

  const std::vector<StochasticArrival> two{p, p};
  const auto sum = aggregate_arrivals(two);
  CHECK(sum.rate() == doctest::Approx(2.0 * p.rate()));
  CHECK(sum.burst() == doctest::Approx(2.0 * p.burst()));

  const std::vector<StochasticArrival> mixed{p, poisson_arrival(0.3, 0.7)};
  try {
    aggregate_arrivals(mixed);
    FAIL("expected MismatchedTheta");
  } catch (const v2v::DomainError& e) {
    CHECK(e.name() == "MismatchedTheta");
  }

  SUBCASE("Monte Carlo MGF of three independent Poisson flows") {
    const double theta = 0.4, t = 3.0;
    const std::vector<double> rates{0.2, 0.5, 1.1};
    std::vector<StochasticArrival> flows;
    for (double r : rates) flows.push_back(poisson_arrival(r, theta));
    const auto agg = aggregate_arrivals(flows);
    std::mt19937_64 rng(17);
    double mgf = 0.0;
    const int samples = 200000;
    for (int s = 0; s < samples; ++s) {
      int total = 0;
      for (double r : rates) total += std::poisson_distribution<int>(r * t)(rng);
      mgf += std::exp(theta * total);
    }
    mgf /= samples;
    const double bound = std::exp(theta * (agg.rate() * t + agg.burst()));
    CHECK(mgf <= bound * 1.01);
    CHECK(mgf >= bound * 0.97);  // Poisson meets the envelope with equality
  }
}
