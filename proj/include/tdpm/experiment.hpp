// Copyright 2026 The tdpm Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef TDPM_EXPERIMENT_HPP
#define TDPM_EXPERIMENT_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "tdpm/em.hpp"
#include "tdpm/generator.hpp"

namespace tdpm {

/// Synthetic recovery run: sample a true model per (family, seed), fit on
/// nested training sets of growing size, and score both models on the
/// training sets and a shared test set.
struct SyntheticConfig {
  int n_actions = 10;  // excluding END
  int n_classes = 2;
  StageRange stages{3, 4};
  std::vector<TimeFamily> families{TimeFamily::geometric, TimeFamily::exponential, TimeFamily::weibull};
  std::vector<std::size_t> n_grid{300, 500, 800, 1000, 1200, 1500, 2000, 3000};
  std::size_t n_test = 4000;
  int n_seeds = 5;
  std::uint64_t seed = 0;
  ModelHyperPrior hyper;
  SamplerOptions sampler;
  /// n_classes, stages and family are taken from the fields above. The
  /// training labels come from the sampler, so uniform_eps seeds each
  /// sequence toward its generating class.
  FitConfig fit;

  void validate() const;
};

struct SyntheticRow {
  TimeFamily family = TimeFamily::geometric;
  int seed = 0;
  std::size_t n = 0;
  /// Mean per-sequence log-likelihoods.
  double fitted_train = 0.0, fitted_test = 0.0, true_train = 0.0, true_test = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct SyntheticReport {
  std::vector<SyntheticRow> rows;
  /// family,seed,N,fitted_train,fitted_test,true_train,true_test
  std::string to_csv() const;
};

/// Mean per-sequence log-likelihood with time factors.
double mean_log_likelihood(const ModelParams& params, const std::vector<EventSequence>& data);

SyntheticReport run_synthetic_experiment(const SyntheticConfig& cfg,
                                         const std::function<void(const SyntheticRow&)>& progress = {});

}  // namespace tdpm

#endif  // TDPM_EXPERIMENT_HPP
