// Copyright 2026 The tdpm Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef TDPM_EM_HPP
#define TDPM_EM_HPP

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tdpm/model.hpp"

namespace tdpm {

enum class InitMode { uniform_eps, provided_labels, frequency_seeded };

std::string_view to_string(InitMode m);
InitMode parse_init_mode(std::string_view name);

struct FitConfig {
  int n_classes = 1;
  StageRange stages{1, 1};
  TimeFamily family = TimeFamily::geometric;
  int max_iters = 200;
  double loglik_rel_tol = 1e-6;
  int min_iters = 5;
  std::uint64_t seed = 0;
  InitMode init_mode = InitMode::uniform_eps;
  /// Extra responsibility given to the hinted class before renormalizing.
  double epsilon = 0.1;
  /// Pseudo-count added to every admissible entry of theta_A, theta_S, pi_A.
  double alpha0 = 1e-3;
  /// When false, EM runs with unit time factors and theta_T is fit once at
  /// the end from the final class responsibilities.
  bool time_in_em = true;
  /// Replacement for zero intervals in continuous-family fits.
  double zero_time_floor = 0.5;

  void validate() const;
};

struct FitIteration {
  int iteration = 0;
  double total_loglik = 0.0;
  double mean_loglik = 0.0;
  /// total_loglik plus the smoothing prior; equal to it when alpha0 = 0.
  double objective = 0.0;
  double max_param_delta = 0.0;
  double seconds = 0.0;
  std::size_t skipped = 0;
};

struct FitTrace {
  std::vector<FitIteration> iterations;
  bool converged = false;

  /// Header: iteration,total_loglik,mean_loglik,objective,max_param_delta,
  /// skipped[,seconds]. Wall time is opt-in so reruns stay byte-identical.
  std::string to_csv(bool include_timing = false) const;
};

/// Expected counts gathered by the E-step. Layouts follow ModelParams:
/// trans [a][s][c][a'], stage [a'][s][c][step], init [c][a], time [a][a'][c].
struct SufficientStats {
  int n_actions = 0, n_stages = 0, n_classes = 0;
  std::vector<double> trans;
  std::vector<double> stage;
  std::vector<double> resp;
  std::vector<double> init;
  std::vector<std::vector<WeightedTimeSample>> time;
  std::size_t n_sequences = 0;
  std::size_t skipped = 0;
  double total_loglik = 0.0;
  /// Parameters retained for cells that receive no weight.
  ModelParams previous;

  explicit SufficientStats(const ModelParams& prev);
  SufficientStats() = default;

  double& n(ActionId a, int s, int c, ActionId b) {
    return trans[((static_cast<std::size_t>(a) * n_stages + s) * n_classes + c) * n_actions + b];
  }
  double& m(ActionId a, int s, int c, int step) {
    return stage[((static_cast<std::size_t>(a) * n_stages + s) * n_classes + c) * 2 + step];
  }
  double& i(int c, ActionId a) { return init[static_cast<std::size_t>(c) * n_actions + a]; }
  std::vector<WeightedTimeSample>& t(ActionId a, ActionId b, int c) {
    return time[(static_cast<std::size_t>(a) * n_actions + b) * n_classes + c];
  }
  double n(ActionId a, int s, int c, ActionId b) const {
    return trans[((static_cast<std::size_t>(a) * n_stages + s) * n_classes + c) * n_actions + b];
  }
  double m(ActionId a, int s, int c, int step) const {
    return stage[((static_cast<std::size_t>(a) * n_stages + s) * n_classes + c) * 2 + step];
  }
  double i(int c, ActionId a) const { return init[static_cast<std::size_t>(c) * n_actions + a]; }
  const std::vector<WeightedTimeSample>& t(ActionId a, ActionId b, int c) const {
    return time[(static_cast<std::size_t>(a) * n_actions + b) * n_classes + c];
  }

  /// Adds another accumulator of the same shape (sums are associative).
  void merge(const SufficientStats& other);
};

/// Equal-length contiguous stage blocks over m positions, capped at one
/// advance per step.
StageSeq initial_stages(std::size_t m, int r_plus);

/// Per-sequence initial class responsibilities (n x k).
std::vector<std::vector<double>> initial_responsibilities(const std::vector<EventSequence>& data,
                                                          int n_actions, const FitConfig& cfg,
                                                          std::span<const int> labels);

/// Cosine-similarity k-medoids labels over action-frequency vectors.
std::vector<int> frequency_cluster_labels(const std::vector<EventSequence>& data, int n_actions,
                                          int k, ActionId end_id);

/// Initial parameters from hard equal-length stages, initial responsibilities,
/// and a class-pooled time fit. labels may be empty, in which case
/// class_hint fields are used when present.
ModelParams initialize(const std::vector<EventSequence>& data, const ActionVocab& vocab,
                       const FitConfig& cfg, std::span<const int> labels = {});

SufficientStats e_step(const ModelParams& params, const std::vector<EventSequence>& data,
                       bool use_time = true);

ModelParams m_step(const SufficientStats& stats, const FitConfig& cfg);

/// Refits every time cell with weight from the stats, keeping the rest.
void fit_time_cells(ModelParams& params, const SufficientStats& stats, const FitConfig& cfg);

/// log prior implied by alpha0 smoothing (zero when alpha0 = 0).
double smoothing_log_prior(const ModelParams& params, double alpha0);

double max_param_delta(const ModelParams& a, const ModelParams& b);

struct FitResult {
  ModelParams params;
  FitTrace trace;
};

FitResult fit(const std::vector<EventSequence>& data, const ActionVocab& vocab, const FitConfig& cfg,
              std::span<const int> labels = {});

}  // namespace tdpm

#endif  // TDPM_EM_HPP
