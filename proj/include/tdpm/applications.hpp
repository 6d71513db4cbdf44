// Copyright 2026 The tdpm Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef TDPM_APPLICATIONS_HPP
#define TDPM_APPLICATIONS_HPP

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tdpm/em.hpp"
#include "tdpm/inference.hpp"
#include "tdpm/model.hpp"

namespace tdpm {

enum class PredictionMode { mixture, argmax, empirical_parametric, nonparametric_median };

std::string_view to_string(PredictionMode m);
/// Accepts the long names plus "empirical" and "median".
PredictionMode parse_prediction_mode(std::string_view name);

struct PredictOptions {
  PredictionMode mode = PredictionMode::mixture;
  /// Draws per prediction; odd so the sample median is a draw.
  int n_samples = 501;
  std::uint64_t seed = 0;
  /// Time factors in the prefix class posterior.
  bool use_time = true;
  /// First 1-based prefix length t to predict from (targets tau_{t+1}).
  int start_t = 1;

  void validate() const;
};

/// Per-pair point predictions for the baselines, with a pooled fallback for
/// pairs absent from the training set.
struct PairTimeTable {
  int n_actions = 0;
  std::vector<double> value;
  std::vector<unsigned char> seen;
  double fallback = 0.0;

  double at(ActionId a, ActionId b, bool* used_fallback = nullptr) const;
};

/// Observed (a, a') intervals, excluding the first position and END targets.
std::vector<std::vector<double>> pair_intervals(const std::vector<EventSequence>& data, int n_actions,
                                                ActionId end_id);

/// Analytic median of one family fit per pair, ignoring classes and stages.
PairTimeTable fit_empirical_parametric(const std::vector<EventSequence>& train, const ActionVocab& vocab,
                                       TimeFamily family, const TimeFitOptions& opt = {});

/// Training median per pair (midpoint for even counts).
PairTimeTable fit_nonparametric_median(const std::vector<EventSequence>& train, const ActionVocab& vocab);

/// Median of n draws of tau for the transition prev -> next. Mixture draws a
/// class from q with class_rng and then a time with time_rng; argmax always
/// uses the first maximizer of q. Keeping the two engines apart makes a
/// degenerate mixture reproduce argmax draw for draw.
/// Cells never fit from data use fallback when given, else throw DataError.
double predict_from_posterior(const ModelParams& params, std::span<const double> q, ActionId prev,
                              ActionId next, PredictionMode mode, int n_samples, std::mt19937_64& class_rng,
                              std::mt19937_64& time_rng, const TimeDist* fallback = nullptr,
                              bool* used_fallback = nullptr);

/// Predicts tau_{t+1} given a_1..a_{t+1} and tau_1..tau_t. Model modes only.
double predict_next_time(const ModelParams& params, std::span<const ActionId> actions,
                         std::span<const double> times, const PredictOptions& opt,
                         const TimeDist* fallback = nullptr);

/// One predicted interval: tau at position `pos` (0-based) of sequence `seq`.
struct PredictionRecord {
  std::size_t seq = 0;
  std::size_t pos = 0;
  ActionId prev = 0;
  ActionId next = 0;
  double observed = 0.0;
  double predicted = 0.0;
  bool fallback = false;
};

/// Predictions for every target tau_{t+1}, t = start_t..m-1, whose action is
/// not END. Baseline modes need train; for model modes train (when given)
/// supplies the pooled fallback for cells never fit from data.
std::vector<PredictionRecord> predict_dataset(const ModelParams& params, const std::vector<EventSequence>& data,
                                              const PredictOptions& opt,
                                              const std::vector<EventSequence>* train = nullptr);

/// id,position,from,to,observed,predicted,fallback
std::string predictions_csv(const std::vector<PredictionRecord>& preds, const std::vector<EventSequence>& data,
                            const ActionVocab& vocab);

struct MaeReport {
  std::vector<std::string> labels;
  double overall = 0.0;
  std::size_t n_predictions = 0;
  std::size_t n_fallbacks = 0;
  /// n_actions x n_actions, row = previous action.
  std::vector<double> abs_error_sum;
  std::vector<std::size_t> count;

  int n_actions() const { return static_cast<int>(labels.size()); }
  double pair_mae(ActionId a, ActionId b) const;
  /// One overall row, then one row per observed pair.
  std::string to_csv() const;
  /// Text table of the most frequent pairs.
  std::string render_top_pairs(std::size_t top = 15) const;
};

MaeReport mae_report(const std::vector<PredictionRecord>& preds, const ActionVocab& vocab);

/// MAE over the targets of predict_dataset.
MaeReport evaluate_mae(const ModelParams& params, const std::vector<EventSequence>& test,
                       const PredictOptions& opt, const std::vector<EventSequence>* train = nullptr);

MaeReport evaluate_mae(const PairTimeTable& baseline, const std::vector<EventSequence>& test,
                       const ActionVocab& vocab, int start_t = 1);

struct Classification {
  int cls = 0;
  std::vector<double> posterior;
};

/// argmax_c p(c | a, tau); ties go to the lowest class index.
Classification classify(const CompiledModel& model, const EventSequence& seq, bool use_time = true);
Classification classify(const ModelParams& params, const EventSequence& seq, bool use_time = true);

std::vector<Classification> classify_all(const ModelParams& params, const std::vector<EventSequence>& data,
                                         bool use_time = true);

/// id,class,p0..p{k-1}
std::string classifications_csv(const std::vector<EventSequence>& data,
                                 const std::vector<Classification>& cls);

struct Representative {
  std::size_t index = 0;
  double score = 0.0;  // log p(a, tau | c) / |a|
  std::size_t class_size = 0;
};

/// Best length-normalized log p(a, tau | c) among the sequences classified
/// into c; ties go to the earliest. DataError when the class is empty.
Representative representative(const ModelParams& params, const std::vector<EventSequence>& data, int c,
                              bool use_time = true);

/// position,action,tau,elapsed,stage,stage_prob: most probable stage per
/// position under class c.
std::string representative_annotations_csv(const ModelParams& params, const EventSequence& seq, int c,
                                           bool use_time = true);

/// Rows empirical, untimed_mixture, untimed_argmax, proposed_mixture,
/// proposed_argmax; columns geometric, exponential, weibull, median. Only the
/// empirical row has a median entry.
struct MaeTable {
  static constexpr int kRows = 5;
  static constexpr int kCols = 4;
  static const std::vector<std::string>& row_names();
  static const std::vector<std::string>& col_names();

  std::vector<std::optional<double>> cells = std::vector<std::optional<double>>(kRows * kCols);

  std::optional<double>& at(int row, int col) { return cells[static_cast<std::size_t>(row * kCols + col)]; }
  const std::optional<double>& at(int row, int col) const {
    return cells[static_cast<std::size_t>(row * kCols + col)];
  }
  std::string to_csv() const;
};

struct MaeTableConfig {
  FitConfig fit;
  PredictOptions predict;
  std::vector<TimeFamily> families{TimeFamily::geometric, TimeFamily::exponential, TimeFamily::weibull};
};

/// Fits untimed and timed models per family on train and fills the table on
/// test. fit.family and predict.mode are overridden per cell.
MaeTable mae_table(const std::vector<EventSequence>& train, const std::vector<EventSequence>& test,
                   const ActionVocab& vocab, const MaeTableConfig& cfg);

}  // namespace tdpm

#endif  // TDPM_APPLICATIONS_HPP
