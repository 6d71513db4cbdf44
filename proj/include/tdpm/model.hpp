// Copyright 2026 The tdpm Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef TDPM_MODEL_HPP
#define TDPM_MODEL_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tdpm/time_dist.hpp"

namespace tdpm {

using ActionId = int;

/// Action labels. The reserved END label terminates every sequence and is
/// stored at end_id (index 0 for vocabularies built here).
class ActionVocab {
 public:
  static constexpr std::string_view kEndLabel = "__END__";

  ActionVocab();
  ActionVocab(std::vector<std::string> names, ActionId end_id);

  /// END plus n generic labels "a1".."an".
  static ActionVocab with_actions(int n);

  /// Id of label, appending it when new.
  ActionId add(std::string_view label);
  std::optional<ActionId> find(std::string_view label) const;

  const std::string& name(ActionId id) const { return names_.at(static_cast<std::size_t>(id)); }
  const std::vector<std::string>& names() const { return names_; }
  int size() const { return static_cast<int>(names_.size()); }
  ActionId end_id() const { return end_id_; }
  bool is_end(ActionId a) const { return a == end_id_; }

  bool operator==(const ActionVocab&) const = default;

 private:
  std::vector<std::string> names_;
  ActionId end_id_ = 0;
};

/// Admissible final-stage window [r_minus, r_plus]; stages take values 1..r_plus.
struct StageRange {
  int r_minus = 1;
  int r_plus = 1;

  void validate() const;
  bool operator==(const StageRange&) const = default;
};

/// Stage values (1-based), one per position of a sequence.
using StageSeq = std::vector<int>;

/// One record: actions a_1..a_m ending with END, intervals tau_1..tau_m in
/// days with tau_1 = 0.
struct EventSequence {
  std::string id;
  std::vector<ActionId> actions;
  std::vector<double> times;
  /// Complete sequences must end in stage r_plus; incomplete ones anywhere in
  /// [r_minus, r_plus].
  bool complete = false;
  std::optional<int> class_hint;
  StageSeq stage_truth;

  std::size_t length() const { return actions.size(); }
  bool operator==(const EventSequence&) const = default;
};

/// Throws DataError naming the first violated invariant.
void validate_sequence(const EventSequence& seq, const ActionVocab& vocab);

/// Full parameter set. Tensor accessors take 0-based stage indices; class and
/// action ids are 0-based as well.
///
/// Layouts (row-major):
///   theta_c [c], pi_a [c][a], pi_s [a][c][s], theta_a [a][s][c][a'],
///   theta_s [a'][s][c][s'], theta_t [a][a'][c].
class ModelParams {
 public:
  ModelParams() = default;

  /// Uniform model: every categorical uniform over its admissible support.
  ModelParams(ActionVocab vocab, StageRange stages, int n_classes, TimeFamily family);

  const ActionVocab& vocab() const { return vocab_; }
  const StageRange& stages() const { return stages_; }
  TimeFamily family() const { return family_; }
  int n_actions() const { return vocab_.size(); }
  int n_stages() const { return stages_.r_plus; }
  int n_classes() const { return n_classes_; }

  double& theta_c(int c) { return theta_c_[idx_c(c)]; }
  double theta_c(int c) const { return theta_c_[idx_c(c)]; }
  double& pi_a(int c, ActionId a) { return pi_a_[idx_pa(c, a)]; }
  double pi_a(int c, ActionId a) const { return pi_a_[idx_pa(c, a)]; }
  double& pi_s(ActionId a, int c, int s) { return pi_s_[idx_ps(a, c, s)]; }
  double pi_s(ActionId a, int c, int s) const { return pi_s_[idx_ps(a, c, s)]; }
  double& theta_a(ActionId a, int s, int c, ActionId next) { return theta_a_[idx_ta(a, s, c, next)]; }
  double theta_a(ActionId a, int s, int c, ActionId next) const {
    return theta_a_[idx_ta(a, s, c, next)];
  }
  double& theta_s(ActionId a, int s, int c, int next) { return theta_s_[idx_ts(a, s, c, next)]; }
  double theta_s(ActionId a, int s, int c, int next) const {
    return theta_s_[idx_ts(a, s, c, next)];
  }
  TimeDist& theta_t(ActionId a, ActionId next, int c) { return theta_t_[idx_tt(a, next, c)]; }
  const TimeDist& theta_t(ActionId a, ActionId next, int c) const {
    return theta_t_[idx_tt(a, next, c)];
  }
  /// True once the cell has been estimated from observed intervals.
  bool time_fitted(ActionId a, ActionId next, int c) const {
    return time_fitted_[idx_tt(a, next, c)] != 0;
  }
  void set_time_fitted(ActionId a, ActionId next, int c, bool v) {
    time_fitted_[idx_tt(a, next, c)] = v ? 1 : 0;
  }

  const std::vector<double>& theta_c_data() const { return theta_c_; }
  const std::vector<double>& pi_a_data() const { return pi_a_; }
  const std::vector<double>& pi_s_data() const { return pi_s_; }
  const std::vector<double>& theta_a_data() const { return theta_a_; }
  const std::vector<double>& theta_s_data() const { return theta_s_; }
  const std::vector<TimeDist>& theta_t_data() const { return theta_t_; }

  /// Copy with classes reordered: new class j takes old class order[j].
  ModelParams permute_classes(const std::vector<int>& order) const;

 private:
  std::size_t idx_c(int c) const { return static_cast<std::size_t>(c); }
  std::size_t idx_pa(int c, ActionId a) const {
    return static_cast<std::size_t>(c) * A() + static_cast<std::size_t>(a);
  }
  std::size_t idx_ps(ActionId a, int c, int s) const {
    return (static_cast<std::size_t>(a) * K() + static_cast<std::size_t>(c)) * R() +
           static_cast<std::size_t>(s);
  }
  std::size_t idx_ta(ActionId a, int s, int c, ActionId next) const {
    return ((static_cast<std::size_t>(a) * R() + static_cast<std::size_t>(s)) * K() +
            static_cast<std::size_t>(c)) *
               A() +
           static_cast<std::size_t>(next);
  }
  std::size_t idx_ts(ActionId a, int s, int c, int next) const {
    return ((static_cast<std::size_t>(a) * R() + static_cast<std::size_t>(s)) * K() +
            static_cast<std::size_t>(c)) *
               R() +
           static_cast<std::size_t>(next);
  }
  std::size_t idx_tt(ActionId a, ActionId next, int c) const {
    return (static_cast<std::size_t>(a) * A() + static_cast<std::size_t>(next)) * K() +
           static_cast<std::size_t>(c);
  }
  std::size_t A() const { return static_cast<std::size_t>(vocab_.size()); }
  std::size_t R() const { return static_cast<std::size_t>(stages_.r_plus); }
  std::size_t K() const { return static_cast<std::size_t>(n_classes_); }

  ActionVocab vocab_;
  StageRange stages_;
  int n_classes_ = 0;
  TimeFamily family_ = TimeFamily::geometric;
  std::vector<double> theta_c_;
  std::vector<double> pi_a_;
  std::vector<double> pi_s_;
  std::vector<double> theta_a_;
  std::vector<double> theta_s_;
  std::vector<TimeDist> theta_t_;
  std::vector<std::uint8_t> time_fitted_;
};

struct ValidationReport {
  std::vector<std::string> issues;
  bool ok() const { return issues.empty(); }
  std::string to_string() const;
};

ValidationReport validate_model(const ModelParams& params, double tol = 1e-9);

/// Throws ValidationError carrying the full report when the model is invalid.
void require_valid_model(const ModelParams& params);

struct JointOptions {
  /// When false every time factor is 1.
  bool use_time = true;
};

/// Log time factor of position i (0-based) of seq under class c. The first
/// position and the appended END transition contribute 0.
double step_time_log_weight(const ModelParams& params, const EventSequence& seq, std::size_t i,
                            int c);

/// log p(a, tau, s, c) of a fully observed configuration; -inf when any
/// factor is zero. Throws InvalidArgument when stages do not start at 1 or
/// are not non-decreasing unit steps.
double log_joint(const ModelParams& params, const EventSequence& seq, const StageSeq& stages, int c,
                 const JointOptions& opt = {});

/// JSON document with vocab, stage range, family and all tensors as
/// row-major nested arrays. Reals use the shortest round-trip rendering.
std::string serialize_model(const ModelParams& params);
ModelParams deserialize_model(std::string_view text);
void save_model(const ModelParams& params, const std::string& path);
ModelParams load_model(const std::string& path);

}  // namespace tdpm

#endif  // TDPM_MODEL_HPP
