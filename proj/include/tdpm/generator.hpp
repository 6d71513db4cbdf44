// Copyright 2026 The tdpm Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef TDPM_GENERATOR_HPP
#define TDPM_GENERATOR_HPP

#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include "tdpm/model.hpp"

namespace tdpm {

/// Hyper-laws for random models. Dirichlet concentrations for the
/// categoricals; Beta / Gamma / uniform laws for the time cells.
struct ModelHyperPrior {
  double alpha_C = 1.0;
  double alpha_A = 1.0;
  double alpha_S_stay = 0.7;
  double alpha_S_advance = 0.3;
  double geometric_beta_a = 5.0;
  double geometric_beta_b = 2.0;
  double exponential_gamma_shape = 2.0;
  double exponential_gamma_rate = 1.0;
  double weibull_shape_lo = 2.0;
  double weibull_shape_hi = 5.0;
  double weibull_scale_lo = 1.0;
  double weibull_scale_hi = 1.5;

  void validate() const;
};

std::vector<double> sample_dirichlet(std::span<const double> alpha, std::mt19937_64& rng);

/// Index drawn with probability proportional to weights.
int sample_categorical(std::span<const double> weights, std::mt19937_64& rng);

TimeDist sample_time_params(TimeFamily family, const ModelHyperPrior& hyper, std::mt19937_64& rng);

/// Random model. theta_S rows draw (stay, advance) from the asymmetric
/// Dirichlet; the last stage always stays.
ModelParams sample_model(const ActionVocab& vocab, StageRange stages, int n_classes, TimeFamily family,
                         const ModelHyperPrior& hyper, std::mt19937_64& rng);

struct SampledSequence {
  EventSequence seq;
  StageSeq stages;
  int cls = 0;
};

struct SamplerOptions {
  std::size_t max_len = 500;
  /// Complete sequences must end in stage r_plus.
  bool complete = false;
  /// Fail when, after this many attempts, under 1% were accepted.
  std::size_t rejection_window = 10000;
};

/// Draws sequences from the generative process, rejecting draws that exceed
/// max_len or end outside the terminal stage window. Intervals into END are 0.
class Sampler {
 public:
  explicit Sampler(const ModelParams& params, SamplerOptions opt = {});

  SampledSequence sample(std::mt19937_64& rng);

  std::size_t attempts() const { return attempts_; }
  std::size_t accepted() const { return accepted_; }

 private:
  const ModelParams& params_;
  SamplerOptions opt_;
  std::size_t attempts_ = 0;
  std::size_t accepted_ = 0;
  std::vector<double> buf_;
};

SampledSequence sample_sequence(const ModelParams& params, std::mt19937_64& rng,
                                const SamplerOptions& opt = {});

/// n sequences with ids "s1".."sn" and class_hint / stage_truth filled in.
std::vector<EventSequence> sample_dataset(const ModelParams& params, std::size_t n,
                                          std::mt19937_64& rng, const SamplerOptions& opt = {});

}  // namespace tdpm

#endif  // TDPM_GENERATOR_HPP
