// Copyright 2026 The tdpm Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "test_util.hpp"
#include "tdpm/em.hpp"
#include "tdpm/errors.hpp"
#include "tdpm/generator.hpp"
#include "tdpm/inference.hpp"

using namespace tdpm;
using tdpm::testing::make_seq;
using tdpm::testing::random_model;

namespace {

std::vector<EventSequence> sampled(const ModelParams& p, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return sample_dataset(p, n, rng);
}

}  // namespace

TEST_SUITE("em") {

TEST_CASE("config validation") {
  FitConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.epsilon = 1.0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg = FitConfig{};
  cfg.n_classes = 0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg = FitConfig{};
  cfg.loglik_rel_tol = 0.0;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  CHECK(parse_init_mode("frequency_seeded") == InitMode::frequency_seeded);
}

TEST_CASE("initial stages are equal-length blocks") {
  CHECK(initial_stages(8, 4) == StageSeq{1, 1, 2, 2, 3, 3, 4, 4});
  CHECK(initial_stages(3, 1) == StageSeq{1, 1, 1});
  // short sequences never skip a stage
  CHECK(initial_stages(2, 4) == StageSeq{1, 2});
}

TEST_CASE("initial responsibilities") {
  std::vector<EventSequence> data{make_seq({1, 0}, {0, 0}), make_seq({2, 0}, {0, 0})};
  FitConfig cfg;
  cfg.n_classes = 2;
  const std::vector<int> hints{0, 1};
  const auto r = initial_responsibilities(data, 3, cfg, hints);
  CHECK(r[0][0] == doctest::Approx(0.6 / 1.1));
  CHECK(r[0][1] == doctest::Approx(0.5 / 1.1));
  CHECK(r[1][1] == doctest::Approx(0.6 / 1.1));

  cfg.init_mode = InitMode::provided_labels;
  const auto hard = initial_responsibilities(data, 3, cfg, hints);
  CHECK(hard[1][0] == 0.0);
  CHECK(hard[1][1] == 1.0);

  cfg.n_classes = 1;
  CHECK(initial_responsibilities(data, 3, cfg, {})[0][0] == 1.0);

  cfg.n_classes = 2;
  const std::vector<int> bad{0, 2};
  CHECK_THROWS_AS(initial_responsibilities(data, 3, cfg, bad), InvalidArgument);
  CHECK_THROWS_AS(initialize({}, ActionVocab::with_actions(2), cfg), DataError);
}

TEST_CASE("frequency clustering separates disjoint action sets") {
  std::vector<EventSequence> data;
  for (int i = 0; i < 6; ++i) {
    data.push_back(i % 2 ? make_seq({1, 2, 1, 0}, {0, 1, 1, 0}) : make_seq({3, 4, 4, 0}, {0, 1, 1, 0}));
  }
  const auto l = frequency_cluster_labels(data, 5, 2, 0);
  for (int i = 2; i < 6; ++i) CHECK(l[static_cast<std::size_t>(i)] == l[static_cast<std::size_t>(i % 2)]);
  CHECK(l[0] != l[1]);
}

TEST_CASE("single-stage e_step counts bigrams") {
  ModelParams p(ActionVocab::with_actions(3), {1, 1}, 1, TimeFamily::geometric);
  const auto seq = make_seq({1, 2, 1, 2, 3, 0}, {0, 1, 2, 3, 4, 0});
  const auto st = e_step(p, {seq});
  CHECK(st.n(1, 0, 0, 2) == doctest::Approx(2.0));
  CHECK(st.n(2, 0, 0, 1) == doctest::Approx(1.0));
  CHECK(st.n(2, 0, 0, 3) == doctest::Approx(1.0));
  CHECK(st.n(3, 0, 0, 0) == doctest::Approx(1.0));
  CHECK(st.n(1, 0, 0, 1) == 0.0);
  CHECK(st.i(0, 1) == doctest::Approx(1.0));
  CHECK(st.t(1, 2, 0).size() == 2);
  CHECK(st.t(3, 0, 0).empty());

  const auto two = e_step(p, {seq, seq});
  for (std::size_t j = 0; j < st.trans.size(); ++j) CHECK(two.trans[j] == 2.0 * st.trans[j]);
  for (std::size_t j = 0; j < st.stage.size(); ++j) CHECK(two.stage[j] == 2.0 * st.stage[j]);
  CHECK(two.total_loglik == 2.0 * st.total_loglik);
}

TEST_CASE("e_step statistics match enumeration") {
  std::mt19937_64 rng(41);
  for (int trial = 0; trial < 20; ++trial) {
    const int r = 1 + trial % 3, k = 1 + trial % 2;
    const auto p = random_model(rng, tdpm::testing::family_at(trial), 3, {1, r}, k);
    const auto seq = oracle::random_sequence(p, 3 + static_cast<std::size_t>(trial % 4), rng);
    const auto st = e_step(p, {seq});

    // direct sum over every (stage path, class) configuration
    std::vector<long double> trans(st.trans.size(), 0), stage(st.stage.size(), 0), resp(static_cast<std::size_t>(k), 0);
    const auto paths = oracle::stage_paths(seq.length(), r, 1, r);
    long double z = 0;
    for (int c = 0; c < k; ++c) {
      for (const auto& s : paths) z += p.theta_c(c) * oracle::joint_given_class(p, seq, s, c, true);
    }
    const auto A = static_cast<std::size_t>(p.n_actions()), R = static_cast<std::size_t>(r), K = static_cast<std::size_t>(k);
    for (int c = 0; c < k; ++c) {
      const auto cc = static_cast<std::size_t>(c);
      for (const auto& s : paths) {
        const long double w = p.theta_c(c) * oracle::joint_given_class(p, seq, s, c, true) / z;
        resp[cc] += w;
        for (std::size_t i = 1; i < seq.length(); ++i) {
          const auto a = static_cast<std::size_t>(seq.actions[i - 1]), b = static_cast<std::size_t>(seq.actions[i]);
          const auto ps = static_cast<std::size_t>(s[i - 1] - 1);
          trans[((a * R + ps) * K + cc) * A + b] += w;
          stage[((b * R + ps) * K + cc) * 2 + static_cast<std::size_t>(s[i] - s[i - 1])] += w;
        }
      }
    }
    for (std::size_t j = 0; j < trans.size(); ++j) CHECK(std::abs(trans[j] - st.trans[j]) < 1e-9);
    for (std::size_t j = 0; j < stage.size(); ++j) CHECK(std::abs(stage[j] - st.stage[j]) < 1e-9);
    for (std::size_t c = 0; c < K; ++c) CHECK(std::abs(resp[c] - st.resp[c]) < 1e-9);
    CHECK(std::abs(std::log(z) - st.total_loglik) < 1e-9);
  }
}

TEST_CASE("responsibilities sum to the number of sequences") {
  std::mt19937_64 rng(42);
  const auto p = random_model(rng, TimeFamily::weibull, 4, {2, 3}, 3);
  const auto data = sampled(p, 50, 1);
  const auto st = e_step(p, data);
  double s = 0.0;
  for (double x : st.resp) s += x;
  CHECK(std::abs(s - 50.0) < 1e-6);
  CHECK(st.n_sequences == 50);
}

TEST_CASE("m_step closed forms") {
  ModelParams p(ActionVocab::with_actions(1), {1, 1}, 2, TimeFamily::geometric);
  SufficientStats st(p);
  st.n(1, 0, 0, 1) = 3.0;
  st.n(1, 0, 0, 0) = 1.0;
  st.resp = {30.0, 10.0};
  st.i(0, 1) = 30.0;
  st.i(1, 1) = 10.0;
  st.n_sequences = 40;
  FitConfig cfg;
  cfg.n_classes = 2;
  cfg.alpha0 = 0.0;
  const auto q = m_step(st, cfg);
  CHECK(q.theta_a(1, 0, 0, 1) == doctest::Approx(0.75));
  CHECK(q.theta_a(1, 0, 0, 0) == doctest::Approx(0.25));
  CHECK(q.theta_c(0) == doctest::Approx(0.75));
  CHECK(q.theta_c(1) == doctest::Approx(0.25));
  // class 1 had no transition weight and keeps its previous row
  CHECK(q.theta_a(1, 0, 1, 1) == p.theta_a(1, 0, 1, 1));

  cfg.alpha0 = 1.0;
  const auto sm = m_step(st, cfg);
  CHECK(sm.theta_a(1, 0, 0, 1) == doctest::Approx(4.0 / 6.0));
}

TEST_CASE("single-stage single-class fit recovers bigram frequencies") {
  std::mt19937_64 rng(43);
  const auto truth = random_model(rng, TimeFamily::geometric, 4, {1, 1}, 1);
  const auto data = sampled(truth, 2000, 2);
  FitConfig cfg;
  cfg.alpha0 = 0.0;
  const auto res = fit(data, truth.vocab(), cfg);

  // empirical bigram frequencies by direct counting
  const int nA = truth.n_actions();
  std::vector<double> cnt(static_cast<std::size_t>(nA * nA), 0.0);
  for (const auto& s : data) {
    for (std::size_t i = 1; i < s.length(); ++i) cnt[static_cast<std::size_t>(s.actions[i - 1] * nA + s.actions[i])] += 1;
  }
  for (ActionId a = 1; a < nA; ++a) {
    double row = 0.0, tv = 0.0;
    for (ActionId b = 0; b < nA; ++b) row += cnt[static_cast<std::size_t>(a * nA + b)];
    for (ActionId b = 0; b < nA; ++b) {
      CHECK(res.params.theta_a(a, 0, 0, b) == doctest::Approx(cnt[static_cast<std::size_t>(a * nA + b)] / row).epsilon(1e-9));
      tv += std::abs(res.params.theta_a(a, 0, 0, b) - truth.theta_a(a, 0, 0, b));
    }
    CHECK(tv / 2 < 0.02);
  }
}

TEST_CASE("geometric EM is monotone") {
  std::mt19937_64 rng(44);
  for (int trial = 0; trial < 4; ++trial) {
    const auto truth = random_model(rng, TimeFamily::geometric, 5, {2, 3}, 2);
    const auto data = sampled(truth, 100, 100 + static_cast<std::uint64_t>(trial));
    FitConfig cfg;
    cfg.n_classes = 2;
    cfg.stages = {2, 3};
    cfg.alpha0 = 0.0;
    cfg.max_iters = 30;
    const auto res = fit(data, truth.vocab(), cfg);
    const auto& it = res.trace.iterations;
    for (std::size_t i = 1; i < it.size(); ++i) CHECK(it[i].total_loglik >= it[i - 1].total_loglik - 1e-8);
    CHECK(validate_model(res.params).ok());
  }
}

TEST_CASE("smoothed objective is monotone with alpha0 > 0") {
  std::mt19937_64 rng(45);
  const auto truth = random_model(rng, TimeFamily::geometric, 5, {2, 3}, 2);
  const auto data = sampled(truth, 100, 7);
  FitConfig cfg;
  cfg.n_classes = 2;
  cfg.stages = {2, 3};
  cfg.alpha0 = 0.5;
  cfg.max_iters = 30;
  const auto res = fit(data, truth.vocab(), cfg);
  const auto& it = res.trace.iterations;
  for (std::size_t i = 1; i < it.size(); ++i) CHECK(it[i].objective >= it[i - 1].objective - 1e-8);
}

TEST_CASE("determinism") {
  std::mt19937_64 rng(46);
  const auto truth = random_model(rng, TimeFamily::weibull, 4, {2, 3}, 2);
  const auto data = sampled(truth, 80, 3);
  FitConfig cfg;
  cfg.n_classes = 2;
  cfg.stages = {2, 3};
  cfg.family = TimeFamily::weibull;
  cfg.max_iters = 15;
  const auto a = fit(data, truth.vocab(), cfg), b = fit(data, truth.vocab(), cfg);
  CHECK(a.trace.to_csv() == b.trace.to_csv());
  CHECK(serialize_model(a.params) == serialize_model(b.params));
  CHECK(a.trace.to_csv().rfind("iteration,total_loglik,mean_loglik,objective,max_param_delta,skipped\n", 0) == 0);
}

TEST_CASE("swapping class hints swaps the fitted classes") {
  std::mt19937_64 rng(47);
  const auto truth = random_model(rng, TimeFamily::exponential, 4, {1, 2}, 2);
  auto data = sampled(truth, 120, 4);
  FitConfig cfg;
  cfg.n_classes = 2;
  cfg.stages = {1, 2};
  cfg.family = TimeFamily::exponential;
  cfg.max_iters = 20;
  const auto a = fit(data, truth.vocab(), cfg);
  for (auto& s : data) s.class_hint = 1 - *s.class_hint;
  const auto b = fit(data, truth.vocab(), cfg);
  const double la = a.trace.iterations.back().total_loglik, lb = b.trace.iterations.back().total_loglik;
  CHECK(std::abs(la - lb) <= 1e-9 * std::abs(la));
  CHECK(a.params.theta_c(0) == doctest::Approx(b.params.theta_c(1)).epsilon(1e-9));
  CHECK(a.params.theta_a(1, 0, 0, 2) == doctest::Approx(b.params.theta_a(1, 0, 1, 2)).epsilon(1e-9));
}

TEST_CASE("untimed EM ignores the intervals") {
  std::mt19937_64 rng(48);
  const auto truth = random_model(rng, TimeFamily::exponential, 4, {2, 3}, 2);
  const auto data = sampled(truth, 100, 5);
  auto scaled = data;
  for (auto& s : scaled) {
    for (auto& t : s.times) t *= 3.0;
  }
  FitConfig cfg;
  cfg.n_classes = 2;
  cfg.stages = {2, 3};
  cfg.family = TimeFamily::exponential;
  cfg.time_in_em = false;
  cfg.max_iters = 25;
  const auto a = fit(data, truth.vocab(), cfg), b = fit(scaled, truth.vocab(), cfg);
  CHECK(a.params.theta_a_data() == b.params.theta_a_data());
  CHECK(a.params.theta_s_data() == b.params.theta_s_data());
  CHECK(a.params.theta_c_data() == b.params.theta_c_data());
  for (ActionId x = 1; x < 5; ++x) {
    for (ActionId y = 1; y < 5; ++y) {
      if (!a.params.time_fitted(x, y, 0)) continue;
      const double ra = std::get<Exponential>(a.params.theta_t(x, y, 0)).rate;
      const double rb = std::get<Exponential>(b.params.theta_t(x, y, 0)).rate;
      CHECK(ra == doctest::Approx(3.0 * rb).epsilon(1e-9));
    }
  }
}

}  // TEST_SUITE
