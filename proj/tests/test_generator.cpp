// Copyright 2026 The tdpm Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "test_util.hpp"
#include "tdpm/errors.hpp"
#include "tdpm/experiment.hpp"
#include "tdpm/generator.hpp"
#include "tdpm/inference.hpp"

using namespace tdpm;
using tdpm::testing::random_model;

TEST_SUITE("generator") {

TEST_CASE("hyper-prior validation") {
  ModelHyperPrior h;
  CHECK_NOTHROW(h.validate());
  h.alpha_A = 0.0;
  CHECK_THROWS_AS(h.validate(), InvalidArgument);
  h = ModelHyperPrior{};
  h.weibull_shape_lo = 6.0;
  CHECK_THROWS_AS(h.validate(), InvalidArgument);
}

TEST_CASE("stage-row Dirichlet means") {
  std::mt19937_64 rng(51);
  const std::vector<double> asym{0.7, 0.3}, sym{0.4, 0.4};
  double a = 0.0, b = 0.0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    a += sample_dirichlet(asym, rng)[0];
    b += sample_dirichlet(sym, rng)[0];
  }
  CHECK(std::abs(a / n - 0.7) < 0.02);
  CHECK(std::abs(b / n - 0.5) < 0.02);
}

TEST_CASE("time hyper-law means") {
  std::mt19937_64 rng(52);
  const ModelHyperPrior h;
  const int n = 10000;
  double g = 0.0, e = 0.0, ws = 0.0, wl = 0.0;
  for (int i = 0; i < n; ++i) {
    g += std::get<Geometric>(sample_time_params(TimeFamily::geometric, h, rng)).p;
    e += std::get<Exponential>(sample_time_params(TimeFamily::exponential, h, rng)).rate;
    const auto w = std::get<Weibull>(sample_time_params(TimeFamily::weibull, h, rng));
    CHECK(w.shape >= 2.0);
    CHECK(w.shape <= 5.0);
    ws += w.shape;
    wl += w.scale;
  }
  CHECK(std::abs(g / n - 5.0 / 7.0) < 0.01);
  CHECK(std::abs(e / n - 2.0) < 0.05);
  CHECK(std::abs(ws / n - 3.5) < 0.05);
  CHECK(std::abs(wl / n - 1.25) < 0.01);
}

TEST_CASE("sampled models are valid and stay in the last stage") {
  std::mt19937_64 rng(53);
  for (int f = 0; f < 3; ++f) {
    const auto p = random_model(rng, tdpm::testing::family_at(f), 5, {2, 4}, 3);
    CHECK(validate_model(p).ok());
    for (ActionId a = 0; a < p.n_actions(); ++a) {
      for (int c = 0; c < 3; ++c) CHECK(p.theta_s(a, 3, c, 3) == 1.0);
    }
    for (int c = 0; c < 3; ++c) CHECK(p.pi_a(c, p.vocab().end_id()) == 0.0);
  }
}

TEST_CASE("categorical sampling") {
  std::mt19937_64 rng(54);
  const std::vector<double> w{0.0, 3.0, 1.0};
  int hits[3] = {0, 0, 0};
  for (int i = 0; i < 40000; ++i) ++hits[sample_categorical(w, rng)];
  CHECK(hits[0] == 0);
  CHECK(std::abs(hits[1] / 40000.0 - 0.75) < 0.01);
  const std::vector<double> zero{0.0, 0.0};
  CHECK_THROWS_AS(sample_categorical(zero, rng), InvalidArgument);
}

TEST_CASE("END-only transitions give length-two sequences") {
  ModelParams p(ActionVocab::with_actions(3), {1, 2}, 1, TimeFamily::exponential);
  for (ActionId a = 1; a < 4; ++a) {
    for (int s = 0; s < 2; ++s) {
      for (ActionId b = 0; b < 4; ++b) p.theta_a(a, s, 0, b) = b == 0 ? 1.0 : 0.0;
    }
  }
  std::mt19937_64 rng(55);
  for (const auto& s : sample_dataset(p, 200, rng)) {
    CHECK(s.length() == 2);
    CHECK(s.actions[1] == 0);
    CHECK(s.times == std::vector<double>{0.0, 0.0});
  }
}

TEST_CASE("single stage samples are all ones") {
  std::mt19937_64 rng(56);
  const auto p = random_model(rng, TimeFamily::geometric, 4, {1, 1}, 2);
  for (const auto& s : sample_dataset(p, 200, rng)) CHECK(s.stage_truth == StageSeq(s.length(), 1));
}

TEST_CASE("samples satisfy sequence invariants") {
  std::mt19937_64 rng(57);
  const auto p = random_model(rng, TimeFamily::weibull, 5, {2, 3}, 2);
  SamplerOptions opt;
  opt.complete = true;
  for (const auto& s : sample_dataset(p, 300, rng, opt)) {
    CHECK_NOTHROW(validate_sequence(s, p.vocab()));
    REQUIRE(s.stage_truth.size() == s.length());
    CHECK(s.stage_truth[0] == 1);
    for (std::size_t i = 1; i < s.length(); ++i) {
      const int d = s.stage_truth[i] - s.stage_truth[i - 1];
      CHECK((d == 0 || d == 1));
    }
    CHECK(s.stage_truth.back() == 3);
    CHECK(s.complete);
    CHECK(*s.class_hint >= 0);
    CHECK(*s.class_hint < 2);
    CHECK(std::isfinite(log_joint(p, s, s.stage_truth, *s.class_hint)));
  }
}

TEST_CASE("bigram frequencies match the model") {
  std::mt19937_64 rng(58);
  auto p = random_model(rng, TimeFamily::geometric, 3, {1, 2}, 2);
  // extra END mass keeps sequences short
  for (ActionId a = 1; a < 4; ++a) {
    for (int s = 0; s < 2; ++s) {
      for (int c = 0; c < 2; ++c) {
        for (ActionId b = 0; b < 4; ++b) p.theta_a(a, s, c, b) = 0.7 * p.theta_a(a, s, c, b) + (b == 0 ? 0.3 : 0.0);
      }
    }
  }
  REQUIRE(validate_model(p).ok());
  SamplerOptions opt;
  opt.max_len = 10000;
  std::vector<double> counts(16, 0.0);
  double total = 0.0;
  for (const auto& s : sample_dataset(p, 100000, rng, opt)) {
    for (std::size_t i = 1; i < s.length(); ++i) {
      counts[static_cast<std::size_t>(s.actions[i - 1] * 4 + s.actions[i])] += 1.0;
      total += 1.0;
    }
  }
  const auto ref = oracle::expected_bigram_share(p);
  double tv = 0.0;
  for (std::size_t j = 0; j < 16; ++j) tv += std::abs(counts[j] / total - static_cast<double>(ref[j]));
  CHECK(tv / 2 < 1e-2);
}

TEST_CASE("true model out-scores independent models") {
  std::mt19937_64 rng(59);
  for (int trial = 0; trial < 5; ++trial) {
    const auto truth = random_model(rng, tdpm::testing::family_at(trial), 5, {1, 2}, 2);
    const auto other = random_model(rng, tdpm::testing::family_at(trial), 5, {1, 2}, 2);
    const auto data = sample_dataset(truth, 10000, rng);
    CHECK(mean_log_likelihood(truth, data) > mean_log_likelihood(other, data));
  }
}

TEST_CASE("seed determinism") {
  std::mt19937_64 g(60);
  const auto p = random_model(g, TimeFamily::exponential, 4, {1, 3}, 2);
  std::mt19937_64 a(7), b(7);
  CHECK(sample_dataset(p, 50, a) == sample_dataset(p, 50, b));
  std::mt19937_64 h1(9), h2(9);
  CHECK(serialize_model(random_model(h1, TimeFamily::weibull, 3, {1, 2}, 2)) ==
        serialize_model(random_model(h2, TimeFamily::weibull, 3, {1, 2}, 2)));
}

TEST_CASE("unreachable END is reported") {
  ModelParams p(ActionVocab::with_actions(2), {1, 1}, 1, TimeFamily::geometric);
  for (ActionId a = 1; a < 3; ++a) {
    p.theta_a(a, 0, 0, 0) = 0.0;
    p.theta_a(a, 0, 0, 1) = 0.5;
    p.theta_a(a, 0, 0, 2) = 0.5;
  }
  SamplerOptions opt;
  opt.max_len = 10;
  std::mt19937_64 rng(61);
  Sampler sampler(p, opt);
  CHECK_THROWS_AS(sampler.sample(rng), ValidationError);
  CHECK(sampler.attempts() == 10000);
  CHECK(sampler.accepted() == 0);
}

}  // TEST_SUITE
