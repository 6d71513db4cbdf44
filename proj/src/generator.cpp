// Copyright 2026 The tdpm Authors
// SPDX-License-Identifier: Apache-2.0

#include "tdpm/generator.hpp"

#include <algorithm>
#include <string>

#include "tdpm/errors.hpp"
#include "tdpm/inference.hpp"

namespace tdpm {

void ModelHyperPrior::validate() const {
  for (double x : {alpha_C, alpha_A, alpha_S_stay, alpha_S_advance, geometric_beta_a, geometric_beta_b,
                   exponential_gamma_shape, exponential_gamma_rate, weibull_shape_lo, weibull_scale_lo}) {
    if (!(x > 0.0)) throw InvalidArgument("hyper-parameters must be positive");
  }
  if (weibull_shape_hi < weibull_shape_lo || weibull_scale_hi < weibull_scale_lo) {
    throw InvalidArgument("uniform hyper-law bounds are reversed");
  }
}

std::vector<double> sample_dirichlet(std::span<const double> alpha, std::mt19937_64& rng) {
  std::vector<double> x(alpha.size());
  double tot = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    std::gamma_distribution<double> g(alpha[i], 1.0);
    x[i] = g(rng);
    tot += x[i];
  }
  if (!(tot > 0.0)) {
    // All gamma draws underflowed (tiny concentrations): put the mass on one entry.
    std::uniform_int_distribution<std::size_t> pick(0, alpha.size() - 1);
    std::fill(x.begin(), x.end(), 0.0);
    x[pick(rng)] = 1.0;
    return x;
  }
  for (double& v : x) v /= tot;
  return x;
}

int sample_categorical(std::span<const double> weights, std::mt19937_64& rng) {
  double tot = 0.0;
  for (double w : weights) tot += w;
  if (!(tot > 0.0)) throw InvalidArgument("categorical weights sum to zero");
  std::uniform_real_distribution<double> u(0.0, tot);
  const double x = u(rng);
  double acc = 0.0;
  int last = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    acc += weights[i];
    last = static_cast<int>(i);
    if (x < acc) return last;
  }
  return last;
}

TimeDist sample_time_params(TimeFamily family, const ModelHyperPrior& h, std::mt19937_64& rng) {
  switch (family) {
    case TimeFamily::geometric: {
      std::gamma_distribution<double> ga(h.geometric_beta_a, 1.0), gb(h.geometric_beta_b, 1.0);
      const double x = ga(rng), y = gb(rng);
      return Geometric{std::clamp(x / (x + y), 1e-6, 1.0)};
    }
    case TimeFamily::exponential: {
      std::gamma_distribution<double> g(h.exponential_gamma_shape, 1.0 / h.exponential_gamma_rate);
      return Exponential{std::max(g(rng), 1e-6)};
    }
    case TimeFamily::weibull: {
      std::uniform_real_distribution<double> shape(h.weibull_shape_lo, h.weibull_shape_hi);
      std::uniform_real_distribution<double> scale(h.weibull_scale_lo, h.weibull_scale_hi);
      const double k = shape(rng);
      return Weibull{k, scale(rng)};
    }
  }
  throw InvalidArgument("unknown time family");
}

ModelParams sample_model(const ActionVocab& vocab, StageRange stages, int n_classes, TimeFamily family,
                         const ModelHyperPrior& hyper, std::mt19937_64& rng) {
  hyper.validate();
  ModelParams p(vocab, stages, n_classes, family);
  const int nA = p.n_actions(), r = p.n_stages(), k = n_classes;
  const ActionId end = vocab.end_id();

  const auto tc = sample_dirichlet(std::vector<double>(static_cast<std::size_t>(k), hyper.alpha_C), rng);
  for (int c = 0; c < k; ++c) p.theta_c(c) = tc[static_cast<std::size_t>(c)];

  const std::vector<double> alpha_start(static_cast<std::size_t>(nA - 1), hyper.alpha_A);
  const std::vector<double> alpha_next(static_cast<std::size_t>(nA), hyper.alpha_A);
  const std::vector<double> alpha_stage{hyper.alpha_S_stay, hyper.alpha_S_advance};
  for (int c = 0; c < k; ++c) {
    const auto pi = sample_dirichlet(alpha_start, rng);
    std::size_t j = 0;
    for (ActionId a = 0; a < nA; ++a) p.pi_a(c, a) = a == end ? 0.0 : pi[j++];
  }
  for (ActionId a = 0; a < nA; ++a) {
    for (int s = 0; s < r; ++s) {
      for (int c = 0; c < k; ++c) {
        if (a != end) {
          const auto row = sample_dirichlet(alpha_next, rng);
          for (ActionId b = 0; b < nA; ++b) p.theta_a(a, s, c, b) = row[static_cast<std::size_t>(b)];
        }
        if (s + 1 < r) {
          const auto st = sample_dirichlet(alpha_stage, rng);
          p.theta_s(a, s, c, s) = st[0];
          p.theta_s(a, s, c, s + 1) = st[1];
        }
      }
    }
  }
  for (ActionId a = 0; a < nA; ++a) {
    for (ActionId b = 0; b < nA; ++b) {
      for (int c = 0; c < k; ++c) {
        p.theta_t(a, b, c) = sample_time_params(family, hyper, rng);
        p.set_time_fitted(a, b, c, true);
      }
    }
  }
  require_valid_model(p);
  return p;
}

Sampler::Sampler(const ModelParams& params, SamplerOptions opt) : params_(params), opt_(opt) {
  require_valid_model(params_);
  buf_.resize(static_cast<std::size_t>(std::max(params_.n_actions(), params_.n_classes())));
}

SampledSequence Sampler::sample(std::mt19937_64& rng) {
  const ModelParams& p = params_;
  const int nA = p.n_actions(), k = p.n_classes();
  const ActionId end = p.vocab().end_id();
  const StageWindow window = terminal_window(p.stages(), opt_.complete);
  std::span<double> w(buf_);

  for (;;) {
    ++attempts_;
    SampledSequence out;
    for (int c = 0; c < k; ++c) w[static_cast<std::size_t>(c)] = p.theta_c(c);
    const int c = sample_categorical(w.first(static_cast<std::size_t>(k)), rng);
    out.cls = c;

    for (ActionId a = 0; a < nA; ++a) w[static_cast<std::size_t>(a)] = p.pi_a(c, a);
    ActionId a = sample_categorical(w.first(static_cast<std::size_t>(nA)), rng);
    int s = 1;
    out.seq.actions.push_back(a);
    out.seq.times.push_back(0.0);
    out.stages.push_back(s);

    while (a != end && out.seq.actions.size() < opt_.max_len) {
      for (ActionId b = 0; b < nA; ++b) w[static_cast<std::size_t>(b)] = p.theta_a(a, s - 1, c, b);
      const ActionId next = sample_categorical(w.first(static_cast<std::size_t>(nA)), rng);
      const double stay = p.theta_s(next, s - 1, c, s - 1);
      const double adv = s < p.n_stages() ? p.theta_s(next, s - 1, c, s) : 0.0;
      const double pair[2] = {stay, adv};
      const int next_s = s + sample_categorical(pair, rng);
      const double tau = next == end ? 0.0 : sample_time(p.theta_t(a, next, c), rng);
      out.seq.actions.push_back(next);
      out.seq.times.push_back(tau);
      out.stages.push_back(next_s);
      a = next;
      s = next_s;
    }

    const bool ok = a == end && s >= window.lo && s <= window.hi;
    if (ok) {
      ++accepted_;
      out.seq.complete = opt_.complete;
      return out;
    }
    if (attempts_ >= opt_.rejection_window && accepted_ * 100 < attempts_) {
      throw ValidationError("END unreachable: over 99% of " + std::to_string(attempts_) +
                            " draws rejected (length cap or terminal stage window)");
    }
  }
}

SampledSequence sample_sequence(const ModelParams& params, std::mt19937_64& rng, const SamplerOptions& opt) {
  Sampler sampler(params, opt);
  return sampler.sample(rng);
}

std::vector<EventSequence> sample_dataset(const ModelParams& params, std::size_t n, std::mt19937_64& rng,
                                          const SamplerOptions& opt) {
  Sampler sampler(params, opt);
  std::vector<EventSequence> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    SampledSequence s = sampler.sample(rng);
    s.seq.id = "s" + std::to_string(i + 1);
    s.seq.class_hint = s.cls;
    s.seq.stage_truth = std::move(s.stages);
    out.push_back(std::move(s.seq));
  }
  return out;
}

}  // namespace tdpm
