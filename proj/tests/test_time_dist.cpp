// Copyright 2026 The tdpm Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "test_util.hpp"
#include "tdpm/errors.hpp"
#include "tdpm/time_dist.hpp"

using namespace tdpm;
using tdpm::testing::unit_weights;

namespace {

std::vector<double> draws(const TimeDist& d, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<double> xs(static_cast<std::size_t>(n));
  for (auto& x : xs) x = sample_time(d, rng);
  return xs;
}

double mean(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

}  // namespace

TEST_SUITE("time_dist") {

TEST_CASE("log weights") {
  CHECK(time_log_weight(Exponential{2.0}, 0.0) == 0.0);
  CHECK(time_log_weight(Weibull{2.0, 1.5}, 1.5) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(time_log_weight(Geometric{0.5}, 3.0) == doctest::Approx(std::log(0.125)).epsilon(1e-15));
  // rounding and the >= 1 clamp on the geometric support
  CHECK(time_log_weight(Geometric{0.5}, 0.0) == doctest::Approx(std::log(0.5)));
  CHECK(time_log_weight(Geometric{0.5}, 2.6) == doctest::Approx(std::log(0.125)));
}

TEST_CASE("log weights never exceed zero") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 20.0);
  for (int i = 0; i < 1000; ++i) {
    const double tau = u(rng);
    CHECK(time_log_weight(Geometric{0.3}, tau) <= 0.0);
    CHECK(time_log_weight(Exponential{1.7}, tau) <= 0.0);
    CHECK(time_log_weight(Weibull{2.5, 1.2}, tau) <= 0.0);
  }
}

TEST_CASE("parameter checks") {
  CHECK_FALSE(check_params(Geometric{1.0}));
  CHECK(check_params(Geometric{0.0}));
  CHECK(check_params(Geometric{1.5}));
  CHECK(check_params(Exponential{0.0}));
  CHECK(check_params(Weibull{-1.0, 1.0}));
  CHECK_THROWS_AS(require_valid(Weibull{1.0, 0.0}), InvalidArgument);
  CHECK(parse_time_family("weibull") == TimeFamily::weibull);
  CHECK_THROWS_AS(parse_time_family("gamma"), InvalidArgument);
}

TEST_CASE("sampling means") {
  const int n = 100000;
  auto e = draws(Exponential{4.0}, n, 1);
  CHECK(std::abs(mean(e) - 0.25) < 3.0 * 0.25 / std::sqrt(n));

  auto w = draws(Weibull{1.0, 2.0}, n, 2);
  CHECK(std::abs(mean(w) - 2.0) < 3.0 * 2.0 / std::sqrt(n));

  for (double x : draws(Geometric{1.0}, 1000, 3)) CHECK(x == 1.0);

  // Geometric(0.3): mean 1/p, sd sqrt(1-p)/p
  auto g = draws(Geometric{0.3}, n, 4);
  CHECK(std::abs(mean(g) - 1.0 / 0.3) < 3.0 * std::sqrt(0.7) / 0.3 / std::sqrt(n));
}

TEST_CASE("medians") {
  CHECK(time_median(Exponential{0.2}) == doctest::Approx(5.0 * std::log(2.0)));
  CHECK(time_median(Geometric{0.5}) == 1.0);
  CHECK(time_median(Weibull{2.0, 3.0}) == doctest::Approx(3.0 * std::sqrt(std::log(2.0))));
}

TEST_CASE("geometric fit") {
  CHECK(fit_geometric(unit_weights(std::vector<double>(50, 2.0))).p == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(fit_geometric(unit_weights(std::vector<double>(50, 1.0))).p == 1.0);
  const double p = fit_geometric(unit_weights(draws(Geometric{0.3}, 100000, 11))).p;
  CHECK(std::abs(p - 0.3) < 0.01);
}

TEST_CASE("exponential fit") {
  CHECK(fit_exponential(unit_weights(std::vector<double>(50, 4.0))).rate == doctest::Approx(0.25).epsilon(1e-15));
  std::vector<WeightedTimeSample> s{{4.0, 0.5}, {2.0, 1.0}};
  CHECK(fit_exponential(s).rate == doctest::Approx(0.375).epsilon(1e-15));
  const double rate = fit_exponential(unit_weights(draws(Exponential{2.0}, 100000, 12))).rate;
  CHECK(std::abs(rate - 2.0) < 0.05);
}

TEST_CASE("weibull fit recovers parameters") {
  for (auto truth : {Weibull{1.0, 3.0}, Weibull{3.5, 1.2}}) {
    const Weibull w = fit_weibull(unit_weights(draws(truth, 100000, 13)));
    CHECK(std::abs(w.shape / truth.shape - 1.0) < 0.03);
    CHECK(std::abs(w.scale / truth.scale - 1.0) < 0.03);
  }
}

TEST_CASE("weight duplication and scaling") {
  const auto xs = draws(Weibull{2.5, 1.3}, 2000, 14);
  auto base = unit_weights(xs);
  std::vector<WeightedTimeSample> dup, scaled;
  for (const auto& s : base) {
    dup.push_back({s.tau, 0.5});
    dup.push_back({s.tau, 0.5});
    scaled.push_back({s.tau, 37.5});
  }
  const Weibull a = fit_weibull(base), b = fit_weibull(dup), c = fit_weibull(scaled);
  CHECK(std::abs(a.shape - b.shape) <= 1e-9 * a.shape);
  CHECK(std::abs(a.scale - b.scale) <= 1e-9 * a.scale);
  CHECK(std::abs(a.shape - c.shape) <= 1e-9 * a.shape);
  CHECK(std::abs(a.scale - c.scale) <= 1e-9 * a.scale);

  const double e1 = fit_exponential(base).rate, e2 = fit_exponential(scaled).rate;
  CHECK(std::abs(e1 - e2) <= 1e-9 * e1);
  const auto gx = draws(Geometric{0.4}, 2000, 15);
  auto g1 = unit_weights(gx), g2 = unit_weights(gx);
  for (auto& s : g2) s.weight = 0.01;
  CHECK(std::abs(fit_geometric(g1).p - fit_geometric(g2).p) <= 1e-9);
}

TEST_CASE("weibull at unit shape matches exponential") {
  const auto xs = draws(Exponential{0.7}, 5000, 16);
  const auto s = unit_weights(xs);
  const double scale = weibull_profile_scale(s, 1.0);
  CHECK(std::abs(scale * fit_exponential(s).rate - 1.0) < 1e-6);
}

TEST_CASE("weibull score matches finite differences") {
  const auto s = unit_weights(draws(Weibull{3.0, 1.4}, 20000, 17));
  const Weibull w = fit_weibull(s);
  const double total = static_cast<double>(s.size());
  const double h = 1e-5;
  for (double k : {0.9 * w.shape, w.shape, 1.1 * w.shape}) {
    const double fd = (weibull_weighted_loglik(s, k + h, w.scale) - weibull_weighted_loglik(s, k - h, w.scale)) / (2 * h);
    const double an = weibull_shape_score(s, k, w.scale);
    if (k == w.shape) {
      CHECK(std::abs(an) / total < 1e-8);
      CHECK(std::abs(fd - an) / total < 1e-5);
    } else {
      CHECK(std::abs(fd - an) <= 1e-5 * std::abs(an));
    }
  }
}

TEST_CASE("degenerate weibull data") {
  std::vector<WeightedTimeSample> same{{2.0, 1.0}, {2.0, 3.0}};
  CHECK_THROWS_AS(fit_weibull(same), DegenerateData);
  const Weibull w = fit_weibull_or_exponential(same);
  CHECK(w.shape == 1.0);
  CHECK(w.scale == doctest::Approx(2.0));
  std::vector<WeightedTimeSample> none{{2.0, 0.0}};
  CHECK_THROWS(fit_exponential(none));
}

TEST_CASE("zero intervals use the floor in continuous fits") {
  std::vector<WeightedTimeSample> s{{0.0, 1.0}, {0.0, 1.0}};
  CHECK(fit_exponential(s).rate == doctest::Approx(2.0));
  TimeFitOptions opt;
  opt.zero_floor = 0.25;
  CHECK(fit_exponential(s, opt).rate == doctest::Approx(4.0));
}

}  // TEST_SUITE
