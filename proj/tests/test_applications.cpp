// Copyright 2026 The tdpm Authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"
#include "test_util.hpp"
#include "tdpm/applications.hpp"
#include "tdpm/errors.hpp"
#include "tdpm/generator.hpp"

using namespace tdpm;
using tdpm::testing::make_seq;
using tdpm::testing::random_model;
using tdpm::testing::separated_model;

namespace {

std::vector<double> predicted(const std::vector<PredictionRecord>& r) {
  std::vector<double> out;
  for (const auto& x : r) out.push_back(x.predicted);
  return out;
}

}  // namespace

TEST_SUITE("applications") {

TEST_CASE("options") {
  CHECK(parse_prediction_mode("median") == PredictionMode::nonparametric_median);
  CHECK(parse_prediction_mode("empirical") == PredictionMode::empirical_parametric);
  CHECK(parse_prediction_mode("argmax") == PredictionMode::argmax);
  CHECK_THROWS_AS(parse_prediction_mode("mean"), InvalidArgument);
  PredictOptions o;
  o.n_samples = 500;
  CHECK_THROWS_AS(o.validate(), InvalidArgument);
  o.n_samples = 1;
  CHECK_THROWS_AS(o.validate(), InvalidArgument);
  o.n_samples = 3;
  o.start_t = 0;
  CHECK_THROWS_AS(o.validate(), InvalidArgument);
}

TEST_CASE("single class: mixture equals argmax") {
  std::mt19937_64 rng(71);
  const auto p = random_model(rng, TimeFamily::exponential, 4, {1, 2}, 1);
  const auto data = sample_dataset(p, 30, rng);
  PredictOptions o;
  o.seed = 5;
  const auto mix = predict_dataset(p, data, o);
  o.mode = PredictionMode::argmax;
  const auto arg = predict_dataset(p, data, o);
  CHECK(!mix.empty());
  CHECK(predicted(mix) == predicted(arg));
}

TEST_CASE("degenerate posterior reproduces argmax draws") {
  std::mt19937_64 rng(72);
  const auto p = random_model(rng, TimeFamily::weibull, 3, {1, 1}, 2);
  const std::vector<double> q{1.0, 0.0};
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    std::mt19937_64 c1(seed), t1(seed + 100), c2(seed), t2(seed + 100);
    const double a = predict_from_posterior(p, q, 1, 2, PredictionMode::mixture, 101, c1, t1);
    const double b = predict_from_posterior(p, q, 1, 2, PredictionMode::argmax, 101, c2, t2);
    CHECK(a == b);
  }
}

TEST_CASE("geometric median prediction") {
  ModelParams p(ActionVocab::with_actions(2), {1, 1}, 1, TimeFamily::geometric);
  p.theta_t(1, 2, 0) = Geometric{0.6};
  p.set_time_fitted(1, 2, 0, true);
  const std::vector<ActionId> acts{1, 2};
  const std::vector<double> times{0.0};
  PredictOptions o;
  o.n_samples = 5001;
  CHECK(predict_next_time(p, acts, times, o) == 1.0);
}

TEST_CASE("exponential median prediction") {
  ModelParams p(ActionVocab::with_actions(2), {1, 1}, 1, TimeFamily::exponential);
  p.theta_t(1, 2, 0) = Exponential{0.2};
  p.set_time_fitted(1, 2, 0, true);
  std::mt19937_64 c(1), t(2);
  const std::vector<double> q{1.0};
  const double med = predict_from_posterior(p, q, 1, 2, PredictionMode::mixture, 5001, c, t);
  // sample median standard error is about 0.07 here
  CHECK(std::abs(med - 5.0 * std::log(2.0)) < 0.25);
}

TEST_CASE("prediction determinism") {
  std::mt19937_64 rng(73);
  const auto p = random_model(rng, TimeFamily::exponential, 4, {1, 2}, 2);
  const auto data = sample_dataset(p, 20, rng);
  PredictOptions o;
  o.seed = 11;
  CHECK(predicted(predict_dataset(p, data, o)) == predicted(predict_dataset(p, data, o)));
  o.seed = 12;
  CHECK(predicted(predict_dataset(p, data, o)) != predicted(predict_dataset(p, data, PredictOptions{})));
}

TEST_CASE("prediction targets skip END and honor start_t") {
  ModelParams p(ActionVocab::with_actions(2), {1, 1}, 1, TimeFamily::geometric);
  for (ActionId a = 0; a < 3; ++a) {
    for (ActionId b = 0; b < 3; ++b) p.set_time_fitted(a, b, 0, true);
  }
  const std::vector<EventSequence> data{make_seq({1, 2, 1, 0}, {0, 3, 4, 0})};
  PredictOptions o;
  o.n_samples = 3;
  const auto r = predict_dataset(p, data, o);
  REQUIRE(r.size() == 2);
  CHECK(r[0].pos == 1);
  CHECK(r[1].pos == 2);
  CHECK(r[1].observed == 4.0);
  o.start_t = 2;
  CHECK(predict_dataset(p, data, o).size() == 1);
}

TEST_CASE("unseen cells") {
  ModelParams p(ActionVocab::with_actions(2), {1, 1}, 1, TimeFamily::exponential);
  const std::vector<EventSequence> data{make_seq({1, 2, 0}, {0, 3, 0})};
  PredictOptions o;
  o.n_samples = 3;
  CHECK_THROWS_AS(predict_dataset(p, data, o), DataError);
  const std::vector<EventSequence> train{make_seq({2, 1, 0}, {0, 2, 0})};
  const auto r = predict_dataset(p, data, o, &train);
  REQUIRE(r.size() == 1);
  CHECK(r[0].fallback);
  CHECK(mae_report(r, p.vocab()).n_fallbacks == 1);
}

TEST_CASE("baselines") {
  const auto vocab = ActionVocab::with_actions(3);
  const std::vector<EventSequence> train{make_seq({1, 2, 3, 0}, {0, 4, 7, 0}), make_seq({1, 2, 0}, {0, 4, 0}),
                                         make_seq({1, 2, 3, 0}, {0, 4, 7, 0})};
  const auto med = fit_nonparametric_median(train, vocab);
  CHECK(med.at(1, 2) == 4.0);
  CHECK(med.at(2, 3) == 7.0);
  bool fb = false;
  CHECK(med.at(3, 1, &fb) == 4.0);  // pooled median of {4, 4, 4, 7, 7}
  CHECK(fb);
  CHECK(evaluate_mae(med, train, vocab).overall == 0.0);

  const std::vector<EventSequence> even{make_seq({1, 2, 0}, {0, 2, 0}), make_seq({1, 2, 0}, {0, 5, 0})};
  CHECK(fit_nonparametric_median(even, vocab).at(1, 2) == 3.5);

  const auto emp = fit_empirical_parametric(train, vocab, TimeFamily::exponential);
  CHECK(emp.at(1, 2) == doctest::Approx(4.0 * std::log(2.0)));
  const auto geo = fit_empirical_parametric(train, vocab, TimeFamily::geometric);
  // p = 1/4: smallest n with 1 - (3/4)^n >= 1/2
  CHECK(geo.at(1, 2) == 3.0);
}

TEST_CASE("MAE report aggregates") {
  std::mt19937_64 rng(74);
  const auto p = random_model(rng, TimeFamily::weibull, 4, {1, 2}, 2);
  const auto data = sample_dataset(p, 40, rng);
  PredictOptions o;
  o.n_samples = 11;
  const auto preds = predict_dataset(p, data, o);
  const auto rep = mae_report(preds, p.vocab());
  double weighted = 0.0;
  std::size_t n = 0;
  for (ActionId a = 0; a < p.n_actions(); ++a) {
    for (ActionId b = 0; b < p.n_actions(); ++b) {
      const auto c = rep.count[static_cast<std::size_t>(a * p.n_actions() + b)];
      weighted += rep.pair_mae(a, b) * static_cast<double>(c);
      n += c;
    }
  }
  CHECK(n == preds.size());
  CHECK(rep.n_predictions == preds.size());
  CHECK(std::abs(weighted / static_cast<double>(n) - rep.overall) < 1e-9);
  CHECK(rep.overall >= 0.0);
  const std::string csv = rep.to_csv();
  CHECK(csv.rfind("from,to,count,mae\n__overall__,,", 0) == 0);
  CHECK(rep.render_top_pairs(3).find("overall MAE") == 0);
}

TEST_CASE("classification") {
  ModelParams one(ActionVocab::with_actions(3), {1, 2}, 1, TimeFamily::geometric);
  const auto seq = make_seq({1, 2, 3, 0}, {0, 1, 2, 0});
  CHECK(classify(one, seq).cls == 0);

  ModelParams sym(ActionVocab::with_actions(3), {1, 2}, 2, TimeFamily::geometric);
  const auto c = classify(sym, seq);
  CHECK(c.cls == 0);
  CHECK(c.posterior[0] == c.posterior[1]);

  const auto p = separated_model(TimeFamily::exponential);
  std::mt19937_64 rng(75);
  const auto data = sample_dataset(p, 300, rng);
  const auto cls = classify_all(p, data);
  int hits = 0;
  for (std::size_t i = 0; i < data.size(); ++i) hits += cls[i].cls == *data[i].class_hint;
  CHECK(hits >= 285);
  const std::string csv = classifications_csv(data, cls);
  CHECK(csv.rfind("id,class,p0,p1\ns1,", 0) == 0);
}

TEST_CASE("classification ignores the scale of theta_C") {
  std::mt19937_64 rng(76);
  const auto p = random_model(rng, TimeFamily::geometric, 4, {1, 2}, 3);
  auto scaled = p;
  for (int c = 0; c < 3; ++c) scaled.theta_c(c) *= 7.5;
  for (const auto& s : sample_dataset(p, 100, rng)) CHECK(classify(p, s).cls == classify(scaled, s).cls);
}

TEST_CASE("representative") {
  // k = 1, r = 1, untimed; every step from a1 has probability 1/3
  ModelParams p(ActionVocab::with_actions(2), {1, 1}, 1, TimeFamily::geometric);
  p.pi_a(0, 1) = 1.0 / 3.0;
  p.pi_a(0, 2) = 2.0 / 3.0;
  const auto once = make_seq({1, 0}, {0, 0});
  const auto twice = make_seq({1, 1, 1, 0}, {0, 0, 0, 0});
  const auto r1 = representative(p, {once, twice}, 0, false);
  CHECK(r1.index == 0);
  CHECK(r1.score == doctest::Approx(std::log(1.0 / 3.0)).epsilon(1e-14));
  CHECK(r1.class_size == 2);
  CHECK(representative(p, {twice, once}, 0, false).index == 0);
  // (log(2/3) + log(1/3)) / 2 beats log(1/3)
  CHECK(representative(p, {once, twice, make_seq({2, 0}, {0, 0})}, 0, false).index == 2);
  CHECK(representative(p, {twice}, 0, false).index == 0);
  CHECK_THROWS_AS(representative(p, {}, 0, false), DataError);
}

TEST_CASE("representative maximizes the normalized score") {
  const auto p = separated_model(TimeFamily::geometric);
  std::mt19937_64 rng(77);
  const auto data = sample_dataset(p, 150, rng);
  const CompiledModel cm(p);
  for (int c = 0; c < 2; ++c) {
    const auto rep = representative(p, data, c);
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (classify(cm, data[i]).cls != c) continue;
      const double s = class_log_likelihoods(cm, data[i])[static_cast<std::size_t>(c)] /
                       static_cast<double>(data[i].length());
      CHECK(s <= rep.score + 1e-12 * std::abs(rep.score));
    }
    const std::string ann = representative_annotations_csv(p, data[rep.index], c);
    CHECK(ann.rfind("position,action,tau,elapsed,stage,stage_prob\n", 0) == 0);
  }
  // a class nobody falls into
  ModelParams lop = p;
  lop.theta_c(0) = 1.0 - 1e-300;
  lop.theta_c(1) = 1e-300;
  CHECK_THROWS_AS(representative(lop, data, 1), DataError);
}

TEST_CASE("MAE table shape") {
  const auto p = separated_model(TimeFamily::weibull);
  std::mt19937_64 rng(78);
  const auto train = sample_dataset(p, 60, rng);
  const auto test = sample_dataset(p, 20, rng);
  MaeTableConfig cfg;
  cfg.fit.n_classes = 2;
  cfg.fit.stages = {1, 2};
  cfg.fit.max_iters = 5;
  cfg.predict.n_samples = 5;
  const auto t = mae_table(train, test, p.vocab(), cfg);
  CHECK(MaeTable::row_names() ==
        std::vector<std::string>{"empirical", "untimed_mixture", "untimed_argmax", "proposed_mixture", "proposed_argmax"});
  CHECK(MaeTable::col_names() == std::vector<std::string>{"geometric", "exponential", "weibull", "median"});
  for (int r = 0; r < MaeTable::kRows; ++r) {
    for (int c = 0; c < MaeTable::kCols; ++c) CHECK(t.at(r, c).has_value() == (c < 3 || r == 0));
  }
  const std::string csv = t.to_csv();
  CHECK(csv.rfind("method,geometric,exponential,weibull,median\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 6);
}

}  // TEST_SUITE
