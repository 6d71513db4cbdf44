// Copyright 2026 The tdpm Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef TDPM_INFERENCE_HPP
#define TDPM_INFERENCE_HPP

#include <cstddef>
#include <optional>
#include <vector>

#include "tdpm/logspace.hpp"
#include "tdpm/model.hpp"

namespace tdpm {

/// Dense row-major matrix.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }
  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  const std::vector<double>& data() const { return data_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Inclusive window of admissible final stage values (1-based).
struct StageWindow {
  int lo = 1;
  int hi = 1;
};

/// [r_plus, r_plus] for complete sequences, [r_minus, r_plus] otherwise.
StageWindow terminal_window(const StageRange& stages, bool complete);

/// [1, r_plus]: any final stage. Used for prefixes.
StageWindow relaxed_window(const StageRange& stages);

struct InferenceOptions {
  bool use_time = true;
  /// Overrides the completeness-based terminal window.
  std::optional<StageWindow> terminal;
};

/// Log-space copy of a model's parameters, built once and shared read-only
/// across sequences.
class CompiledModel {
 public:
  explicit CompiledModel(const ModelParams& params);

  const ModelParams& params() const { return *params_; }
  int n_actions() const { return nA_; }
  int n_stages() const { return r_; }
  int n_classes() const { return k_; }

  double log_theta_c(int c) const { return log_theta_c_[static_cast<std::size_t>(c)]; }
  double log_pi(int c, ActionId a) const {
    return log_pi_[static_cast<std::size_t>(c) * static_cast<std::size_t>(nA_) +
                   static_cast<std::size_t>(a)];
  }
  double log_a(ActionId a, int s, int c, ActionId next) const {
    return log_a_[((static_cast<std::size_t>(a) * static_cast<std::size_t>(r_) +
                    static_cast<std::size_t>(s)) *
                       static_cast<std::size_t>(k_) +
                   static_cast<std::size_t>(c)) *
                      static_cast<std::size_t>(nA_) +
                  static_cast<std::size_t>(next)];
  }
  /// log theta_S(next | a, s, c) for next in {s, s+1}; step is 0 or 1.
  double log_s(ActionId a, int s, int c, int step) const {
    return log_s_[((static_cast<std::size_t>(a) * static_cast<std::size_t>(r_) +
                    static_cast<std::size_t>(s)) *
                       static_cast<std::size_t>(k_) +
                   static_cast<std::size_t>(c)) *
                      2 +
                  static_cast<std::size_t>(step)];
  }

  /// Per-position time log weights, m x k.
  Matrix time_log_weights(const EventSequence& seq, bool use_time) const;

 private:
  const ModelParams* params_;
  int nA_, r_, k_;
  std::vector<double> log_theta_c_, log_pi_, log_a_, log_s_;
};

/// Per-class pairwise stage posterior: entry (i, s, step) is
/// p(s_{i-1} = s, s_i = s + step | c, a, tau), for i >= 1.
class PairTable {
 public:
  PairTable() = default;
  PairTable(std::size_t m, std::size_t r) : m_(m), r_(r), data_(m * r * 2, 0.0) {}
  double& operator()(std::size_t i, std::size_t s, std::size_t step) {
    return data_[(i * r_ + s) * 2 + step];
  }
  double operator()(std::size_t i, std::size_t s, std::size_t step) const {
    return data_[(i * r_ + s) * 2 + step];
  }
  std::size_t length() const { return m_; }
  std::size_t stages() const { return r_; }

 private:
  std::size_t m_ = 0, r_ = 0;
  std::vector<double> data_;
};

struct ClassTables {
  Matrix log_f;           // m x r
  Matrix log_g;           // m x r
  Matrix stage_marginal;  // m x r
  PairTable stage_pair;
  double log_lik = kNegInf;  // log p(a, tau | c)
};

struct PosteriorTables {
  std::vector<ClassTables> classes;
  std::vector<double> class_post;
  double loglik = kNegInf;  // log p(a, tau)
};

/// Forward table log f_c(i, s), row i = position, column s = stage index.
Matrix forward(const CompiledModel& model, int c, const EventSequence& seq,
               const InferenceOptions& opt = {});
Matrix forward(const ModelParams& params, int c, const EventSequence& seq,
               const InferenceOptions& opt = {});

/// Backward table log g_c(i, s) with the terminal window applied at i = m.
Matrix backward(const CompiledModel& model, int c, const EventSequence& seq,
                const InferenceOptions& opt = {});
Matrix backward(const ModelParams& params, int c, const EventSequence& seq,
                const InferenceOptions& opt = {});

/// Exact stage and class posteriors. Throws ZeroLikelihood when every class
/// assigns the sequence zero probability.
PosteriorTables posteriors(const CompiledModel& model, const EventSequence& seq,
                           const InferenceOptions& opt = {});
PosteriorTables posteriors(const ModelParams& params, const EventSequence& seq,
                           const InferenceOptions& opt = {});

/// Same posteriors by enumerating every admissible stage sequence. log_f and
/// log_g are left empty. Limited to m <= 12 and r_plus <= 4.
PosteriorTables brute_force_posteriors(const ModelParams& params, const EventSequence& seq,
                                       const InferenceOptions& opt = {});

/// Every monotone unit-step stage sequence of length m starting at 1 and
/// ending inside the window.
std::vector<StageSeq> enumerate_stage_sequences(std::size_t m, int r_plus, StageWindow window);

double sequence_log_likelihood(const CompiledModel& model, const EventSequence& seq,
                               const InferenceOptions& opt = {});
double sequence_log_likelihood(const ModelParams& params, const EventSequence& seq,
                               const InferenceOptions& opt = {});

/// log p(a, tau | c) for every class; -inf entries allowed.
std::vector<double> class_log_likelihoods(const CompiledModel& model, const EventSequence& seq,
                                          const InferenceOptions& opt = {});

/// q_t(c) = p(c | a_1..a_t, tau_1..tau_t) for every prefix length t = 1..m
/// (row t-1), with the terminal window relaxed. Rows whose prefix has zero
/// probability under every class are all zero.
Matrix prefix_class_posteriors(const CompiledModel& model, const EventSequence& seq,
                               bool use_time = true);

}  // namespace tdpm

#endif  // TDPM_INFERENCE_HPP
