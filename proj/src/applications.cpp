// Copyright 2026 The tdpm Authors
// SPDX-License-Identifier: Apache-2.0

#include "tdpm/applications.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "tdpm/errors.hpp"
#include "text_util.hpp"

namespace tdpm {

namespace {

using detail::csv_field;
using detail::fmt17;

enum : std::uint64_t { kClassStream = 0, kTimeStream = 1 };

// Independent engine per (sequence, position, purpose) so results do not
// depend on evaluation order.
std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t seq_index, std::uint64_t pos,
                            std::uint64_t purpose) {
  std::seed_seq ss{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                   static_cast<std::uint32_t>(seq_index), static_cast<std::uint32_t>(seq_index >> 32),
                   static_cast<std::uint32_t>(pos), static_cast<std::uint32_t>(purpose)};
  return std::mt19937_64(ss);
}

double median_in_place(std::vector<double>& x) {
  const std::size_t n = x.size();
  const auto mid = x.begin() + static_cast<std::ptrdiff_t>(n / 2);
  std::nth_element(x.begin(), mid, x.end());
  if (n % 2 == 1) return *mid;
  const double hi = *mid;
  const double lo = *std::max_element(x.begin(), mid);
  return 0.5 * (lo + hi);
}

bool is_model_mode(PredictionMode m) {
  return m == PredictionMode::mixture || m == PredictionMode::argmax;
}

int first_argmax(std::span<const double> q) {
  int best = 0;
  for (std::size_t c = 1; c < q.size(); ++c) {
    if (q[c] > q[static_cast<std::size_t>(best)]) best = static_cast<int>(c);
  }
  return best;
}

MaeReport empty_report(const ActionVocab& vocab) {
  MaeReport r;
  r.labels = vocab.names();
  const auto n = static_cast<std::size_t>(vocab.size());
  r.abs_error_sum.assign(n * n, 0.0);
  r.count.assign(n * n, 0);
  return r;
}

void add_error(MaeReport& r, ActionId a, ActionId b, double err) {
  const auto idx = static_cast<std::size_t>(a) * r.labels.size() + static_cast<std::size_t>(b);
  r.abs_error_sum[idx] += err;
  ++r.count[idx];
  ++r.n_predictions;
}

void finish(MaeReport& r) {
  // Pair sums are added in a fixed order so overall is reproducible.
  double tot = 0.0;
  for (double x : r.abs_error_sum) tot += x;
  r.overall = r.n_predictions ? tot / static_cast<double>(r.n_predictions) : 0.0;
}

TimeDist pooled_fit(const std::vector<EventSequence>& train, const ActionVocab& vocab, TimeFamily family) {
  std::vector<WeightedTimeSample> all;
  for (const auto& v : pair_intervals(train, vocab.size(), vocab.end_id())) {
    for (double t : v) all.push_back({t, 1.0});
  }
  if (all.empty()) throw DataError("training set has no observed intervals");
  return fit_time(family, all);
}

}  // namespace

std::string_view to_string(PredictionMode m) {
  switch (m) {
    case PredictionMode::mixture: return "mixture";
    case PredictionMode::argmax: return "argmax";
    case PredictionMode::empirical_parametric: return "empirical_parametric";
    case PredictionMode::nonparametric_median: return "nonparametric_median";
  }
  return "?";
}

PredictionMode parse_prediction_mode(std::string_view name) {
  if (name == "mixture") return PredictionMode::mixture;
  if (name == "argmax") return PredictionMode::argmax;
  if (name == "empirical" || name == "empirical_parametric") return PredictionMode::empirical_parametric;
  if (name == "median" || name == "nonparametric_median") return PredictionMode::nonparametric_median;
  throw InvalidArgument("unknown prediction mode '" + std::string(name) + "'");
}

void PredictOptions::validate() const {
  if (n_samples < 3 || n_samples % 2 == 0) throw InvalidArgument("n_samples must be odd and >= 3");
  if (start_t < 1) throw InvalidArgument("start_t must be >= 1");
}

double PairTimeTable::at(ActionId a, ActionId b, bool* used_fallback) const {
  const auto idx = static_cast<std::size_t>(a) * static_cast<std::size_t>(n_actions) + static_cast<std::size_t>(b);
  const bool ok = idx < seen.size() && seen[idx];
  if (used_fallback) *used_fallback = !ok;
  return ok ? value[idx] : fallback;
}

std::vector<std::vector<double>> pair_intervals(const std::vector<EventSequence>& data, int n_actions,
                                                ActionId end_id) {
  const auto n = static_cast<std::size_t>(n_actions);
  std::vector<std::vector<double>> out(n * n);
  for (const auto& seq : data) {
    for (std::size_t i = 1; i < seq.length(); ++i) {
      const ActionId a = seq.actions[i - 1], b = seq.actions[i];
      if (b == end_id) continue;
      out[static_cast<std::size_t>(a) * n + static_cast<std::size_t>(b)].push_back(seq.times[i]);
    }
  }
  return out;
}

PairTimeTable fit_empirical_parametric(const std::vector<EventSequence>& train, const ActionVocab& vocab,
                                       TimeFamily family, const TimeFitOptions& opt) {
  PairTimeTable t;
  t.n_actions = vocab.size();
  const auto cells = pair_intervals(train, vocab.size(), vocab.end_id());
  t.value.assign(cells.size(), 0.0);
  t.seen.assign(cells.size(), 0);
  std::vector<WeightedTimeSample> all;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (cells[i].empty()) continue;
    std::vector<WeightedTimeSample> w;
    w.reserve(cells[i].size());
    for (double x : cells[i]) w.push_back({x, 1.0});
    all.insert(all.end(), w.begin(), w.end());
    t.value[i] = time_median(fit_time(family, w, opt));
    t.seen[i] = 1;
  }
  if (all.empty()) throw DataError("training set has no observed intervals");
  t.fallback = time_median(fit_time(family, all, opt));
  return t;
}

PairTimeTable fit_nonparametric_median(const std::vector<EventSequence>& train, const ActionVocab& vocab) {
  PairTimeTable t;
  t.n_actions = vocab.size();
  auto cells = pair_intervals(train, vocab.size(), vocab.end_id());
  t.value.assign(cells.size(), 0.0);
  t.seen.assign(cells.size(), 0);
  std::vector<double> all;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (cells[i].empty()) continue;
    all.insert(all.end(), cells[i].begin(), cells[i].end());
    t.value[i] = median_in_place(cells[i]);
    t.seen[i] = 1;
  }
  if (all.empty()) throw DataError("training set has no observed intervals");
  t.fallback = median_in_place(all);
  return t;
}

double predict_from_posterior(const ModelParams& params, std::span<const double> q, ActionId prev,
                              ActionId next, PredictionMode mode, int n_samples, std::mt19937_64& class_rng,
                              std::mt19937_64& time_rng, const TimeDist* fallback, bool* used_fallback) {
  if (!is_model_mode(mode)) throw InvalidArgument("predict_from_posterior needs mixture or argmax mode");
  const int k = params.n_classes();
  if (static_cast<int>(q.size()) != k) throw InvalidArgument("class posterior has the wrong size");
  if (n_samples < 1) throw InvalidArgument("n_samples must be positive");
  if (used_fallback) *used_fallback = false;

  std::vector<const TimeDist*> cell(static_cast<std::size_t>(k));
  for (int c = 0; c < k; ++c) {
    if (params.time_fitted(prev, next, c)) {
      cell[static_cast<std::size_t>(c)] = &params.theta_t(prev, next, c);
    } else if (fallback) {
      cell[static_cast<std::size_t>(c)] = fallback;
      if (used_fallback) *used_fallback = true;
    } else {
      cell[static_cast<std::size_t>(c)] = nullptr;
    }
  }

  std::vector<double> cdf(q.size());
  std::partial_sum(q.begin(), q.end(), cdf.begin());
  const double total = cdf.back();
  if (!(total > 0.0)) throw InvalidArgument("class posterior sums to zero");
  const int cstar = first_argmax(q);
  std::uniform_real_distribution<double> u(0.0, total);

  std::vector<double> draws(static_cast<std::size_t>(n_samples));
  for (auto& d : draws) {
    int c = cstar;
    if (mode == PredictionMode::mixture) {
      const double x = u(class_rng);
      c = static_cast<int>(std::upper_bound(cdf.begin(), cdf.end(), x) - cdf.begin());
      c = std::min(c, k - 1);
      while (q[static_cast<std::size_t>(c)] <= 0.0 && c > 0) --c;
    }
    const TimeDist* dist = cell[static_cast<std::size_t>(c)];
    if (!dist) {
      throw DataError("unseen transition " + params.vocab().name(prev) + " -> " + params.vocab().name(next) +
                      ": time cell was never fit");
    }
    d = sample_time(*dist, time_rng);
  }
  return median_in_place(draws);
}

double predict_next_time(const ModelParams& params, std::span<const ActionId> actions,
                         std::span<const double> times, const PredictOptions& opt, const TimeDist* fallback) {
  opt.validate();
  if (!is_model_mode(opt.mode)) throw InvalidArgument("baseline modes are evaluated through evaluate_mae");
  if (times.empty() || actions.size() != times.size() + 1) {
    throw InvalidArgument("need t >= 1 intervals and t + 1 actions");
  }
  EventSequence prefix;
  prefix.actions.assign(actions.begin(), actions.end() - 1);
  prefix.times.assign(times.begin(), times.end());
  const CompiledModel compiled(params);
  const Matrix q = prefix_class_posteriors(compiled, prefix, opt.use_time);
  const std::size_t t = times.size();
  std::vector<double> row(static_cast<std::size_t>(params.n_classes()));
  for (std::size_t c = 0; c < row.size(); ++c) row[c] = q(t - 1, c);
  if (std::all_of(row.begin(), row.end(), [](double x) { return x == 0.0; })) {
    throw ZeroLikelihood("prefix has zero probability under every class");
  }
  auto class_rng = make_engine(opt.seed, 0, t, kClassStream);
  auto time_rng = make_engine(opt.seed, 0, t, kTimeStream);
  return predict_from_posterior(params, row, actions[t - 1], actions[t], opt.mode, opt.n_samples, class_rng,
                                time_rng, fallback);
}

double MaeReport::pair_mae(ActionId a, ActionId b) const {
  const auto idx = static_cast<std::size_t>(a) * labels.size() + static_cast<std::size_t>(b);
  return count[idx] ? abs_error_sum[idx] / static_cast<double>(count[idx]) : 0.0;
}

std::string MaeReport::to_csv() const {
  std::ostringstream os;
  os << "from,to,count,mae\n";
  os << "__overall__,," << n_predictions << ',' << fmt17(overall) << '\n';
  const auto n = labels.size();
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      if (!count[a * n + b]) continue;
      os << csv_field(labels[a]) << ',' << csv_field(labels[b]) << ',' << count[a * n + b] << ','
         << fmt17(pair_mae(static_cast<ActionId>(a), static_cast<ActionId>(b))) << '\n';
    }
  }
  return os.str();
}

std::string MaeReport::render_top_pairs(std::size_t top) const {
  const auto n = labels.size();
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < count.size(); ++i) {
    if (count[i]) idx.push_back(i);
  }
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) { return count[x] > count[y]; });
  if (idx.size() > top) idx.resize(top);
  std::ostringstream os;
  os << "overall MAE " << std::fixed << std::setprecision(4) << overall << " over " << n_predictions
     << " predictions";
  if (n_fallbacks) os << " (" << n_fallbacks << " fallbacks)";
  os << '\n';
  for (std::size_t i : idx) {
    os << "  " << std::left << std::setw(16) << labels[i / n] << " -> " << std::setw(16) << labels[i % n]
       << std::right << std::setw(8) << count[i] << std::setw(12)
       << pair_mae(static_cast<ActionId>(i / n), static_cast<ActionId>(i % n)) << '\n';
  }
  return os.str();
}

std::vector<PredictionRecord> predict_dataset(const ModelParams& params, const std::vector<EventSequence>& data,
                                              const PredictOptions& opt, const std::vector<EventSequence>* train) {
  opt.validate();
  const ActionVocab& vocab = params.vocab();
  std::vector<PredictionRecord> out;
  const auto targets = [&](auto&& emit) {
    for (std::size_t n = 0; n < data.size(); ++n) {
      const EventSequence& seq = data[n];
      validate_sequence(seq, vocab);
      for (std::size_t j = static_cast<std::size_t>(opt.start_t); j < seq.length(); ++j) {
        if (seq.actions[j] == vocab.end_id()) continue;
        PredictionRecord rec;
        rec.seq = n;
        rec.pos = j;
        rec.prev = seq.actions[j - 1];
        rec.next = seq.actions[j];
        rec.observed = seq.times[j];
        emit(rec);
        out.push_back(rec);
      }
    }
  };

  if (!is_model_mode(opt.mode)) {
    if (!train) throw InvalidArgument("baseline modes need a training set");
    const PairTimeTable table = opt.mode == PredictionMode::empirical_parametric
                                    ? fit_empirical_parametric(*train, vocab, params.family())
                                    : fit_nonparametric_median(*train, vocab);
    targets([&](PredictionRecord& rec) { rec.predicted = table.at(rec.prev, rec.next, &rec.fallback); });
    return out;
  }

  std::optional<TimeDist> fallback;
  if (train) fallback = pooled_fit(*train, vocab, params.family());
  const TimeDist* fb = fallback ? &*fallback : nullptr;
  const CompiledModel compiled(params);
  const auto k = static_cast<std::size_t>(params.n_classes());
  std::vector<double> row(k);
  std::size_t cached = data.size();
  Matrix q;
  targets([&](PredictionRecord& rec) {
    if (cached != rec.seq) {
      q = prefix_class_posteriors(compiled, data[rec.seq], opt.use_time);
      cached = rec.seq;
    }
    for (std::size_t c = 0; c < k; ++c) row[c] = q(rec.pos - 1, c);
    bool prior = false;
    if (std::all_of(row.begin(), row.end(), [](double x) { return x == 0.0; })) {
      // Prefix impossible under the model: predict from the class prior.
      for (std::size_t c = 0; c < k; ++c) row[c] = params.theta_c(static_cast<int>(c));
      prior = true;
    }
    auto class_rng = make_engine(opt.seed, rec.seq, rec.pos, kClassStream);
    auto time_rng = make_engine(opt.seed, rec.seq, rec.pos, kTimeStream);
    bool cell_fb = false;
    rec.predicted = predict_from_posterior(params, row, rec.prev, rec.next, opt.mode, opt.n_samples, class_rng,
                                           time_rng, fb, &cell_fb);
    rec.fallback = prior || cell_fb;
  });
  return out;
}

std::string predictions_csv(const std::vector<PredictionRecord>& preds, const std::vector<EventSequence>& data,
                            const ActionVocab& vocab) {
  std::ostringstream os;
  os << "id,position,from,to,observed,predicted,fallback\n";
  for (const auto& p : preds) {
    os << csv_field(data.at(p.seq).id) << ',' << p.pos + 1 << ',' << csv_field(vocab.name(p.prev)) << ','
       << csv_field(vocab.name(p.next)) << ',' << fmt17(p.observed) << ',' << fmt17(p.predicted) << ','
       << (p.fallback ? 1 : 0) << '\n';
  }
  return os.str();
}

MaeReport mae_report(const std::vector<PredictionRecord>& preds, const ActionVocab& vocab) {
  MaeReport rep = empty_report(vocab);
  for (const auto& p : preds) {
    add_error(rep, p.prev, p.next, std::abs(p.observed - p.predicted));
    if (p.fallback) ++rep.n_fallbacks;
  }
  finish(rep);
  return rep;
}

MaeReport evaluate_mae(const ModelParams& params, const std::vector<EventSequence>& test,
                       const PredictOptions& opt, const std::vector<EventSequence>* train) {
  if (test.empty()) throw DataError("test set is empty");
  return mae_report(predict_dataset(params, test, opt, train), params.vocab());
}

MaeReport evaluate_mae(const PairTimeTable& baseline, const std::vector<EventSequence>& test,
                       const ActionVocab& vocab, int start_t) {
  if (test.empty()) throw DataError("test set is empty");
  if (start_t < 1) throw InvalidArgument("start_t must be >= 1");
  if (baseline.n_actions != vocab.size()) throw InvalidArgument("baseline table does not match the vocabulary");
  std::vector<PredictionRecord> preds;
  for (std::size_t n = 0; n < test.size(); ++n) {
    const EventSequence& seq = test[n];
    validate_sequence(seq, vocab);
    for (std::size_t j = static_cast<std::size_t>(start_t); j < seq.length(); ++j) {
      if (seq.actions[j] == vocab.end_id()) continue;
      PredictionRecord rec{n, j, seq.actions[j - 1], seq.actions[j], seq.times[j], 0.0, false};
      rec.predicted = baseline.at(rec.prev, rec.next, &rec.fallback);
      preds.push_back(rec);
    }
  }
  return mae_report(preds, vocab);
}

Classification classify(const CompiledModel& model, const EventSequence& seq, bool use_time) {
  InferenceOptions opt;
  opt.use_time = use_time;
  const std::vector<double> ll = class_log_likelihoods(model, seq, opt);
  const std::size_t k = ll.size();
  std::vector<double> joint(k);
  for (std::size_t c = 0; c < k; ++c) {
    joint[c] = ll[c] == kNegInf ? kNegInf : ll[c] + model.log_theta_c(static_cast<int>(c));
  }
  const double z = log_sum_exp(joint);
  if (z == kNegInf) throw ZeroLikelihood("sequence '" + seq.id + "' has zero likelihood under every class");
  Classification out;
  out.posterior.resize(k);
  for (std::size_t c = 0; c < k; ++c) out.posterior[c] = joint[c] == kNegInf ? 0.0 : std::exp(joint[c] - z);
  // Compare unnormalized log scores so exact ties stay exact.
  int best = 0;
  for (std::size_t c = 1; c < k; ++c) {
    if (joint[c] > joint[static_cast<std::size_t>(best)]) best = static_cast<int>(c);
  }
  out.cls = best;
  return out;
}

Classification classify(const ModelParams& params, const EventSequence& seq, bool use_time) {
  return classify(CompiledModel(params), seq, use_time);
}

std::vector<Classification> classify_all(const ModelParams& params, const std::vector<EventSequence>& data,
                                         bool use_time) {
  const CompiledModel compiled(params);
  std::vector<Classification> out;
  out.reserve(data.size());
  for (const auto& seq : data) {
    validate_sequence(seq, params.vocab());
    out.push_back(classify(compiled, seq, use_time));
  }
  return out;
}

std::string classifications_csv(const std::vector<EventSequence>& data, const std::vector<Classification>& cls) {
  if (data.size() != cls.size()) throw InvalidArgument("one classification per sequence is required");
  std::ostringstream os;
  os << "id,class";
  const std::size_t k = cls.empty() ? 0 : cls.front().posterior.size();
  for (std::size_t c = 0; c < k; ++c) os << ",p" << c;
  os << '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    os << csv_field(data[i].id) << ',' << cls[i].cls;
    for (double p : cls[i].posterior) os << ',' << fmt17(p);
    os << '\n';
  }
  return os.str();
}

Representative representative(const ModelParams& params, const std::vector<EventSequence>& data, int c,
                              bool use_time) {
  if (c < 0 || c >= params.n_classes()) throw InvalidArgument("class id out of range");
  if (data.empty()) throw DataError("dataset is empty");
  const CompiledModel compiled(params);
  InferenceOptions opt;
  opt.use_time = use_time;
  Representative best;
  bool found = false;
  for (std::size_t i = 0; i < data.size(); ++i) {
    validate_sequence(data[i], params.vocab());
    const Classification cl = classify(compiled, data[i], use_time);
    if (cl.cls != c) continue;
    ++best.class_size;
    const double ll = class_log_likelihoods(compiled, data[i], opt)[static_cast<std::size_t>(c)];
    const double score = ll / static_cast<double>(data[i].length());
    // Scores within rounding of each other count as ties.
    if (!found || score > best.score + 1e-12 * std::max(1.0, std::abs(best.score))) {
      best.index = i;
      best.score = score;
      found = true;
    }
  }
  if (!found) throw DataError("no sequence is classified into class " + std::to_string(c));
  return best;
}

std::string representative_annotations_csv(const ModelParams& params, const EventSequence& seq, int c,
                                           bool use_time) {
  if (c < 0 || c >= params.n_classes()) throw InvalidArgument("class id out of range");
  validate_sequence(seq, params.vocab());
  InferenceOptions opt;
  opt.use_time = use_time;
  const PosteriorTables post = posteriors(params, seq, opt);
  const ClassTables& ct = post.classes[static_cast<std::size_t>(c)];
  if (ct.log_lik == kNegInf) throw ZeroLikelihood("sequence has zero likelihood under class " + std::to_string(c));
  std::ostringstream os;
  os << "position,action,tau,elapsed,stage,stage_prob\n";
  double elapsed = 0.0;
  for (std::size_t i = 0; i < seq.length(); ++i) {
    elapsed += seq.times[i];
    std::size_t best = 0;
    for (std::size_t s = 1; s < ct.stage_marginal.cols(); ++s) {
      if (ct.stage_marginal(i, s) > ct.stage_marginal(i, best)) best = s;
    }
    os << i + 1 << ',' << csv_field(params.vocab().name(seq.actions[i])) << ',' << fmt17(seq.times[i]) << ','
       << fmt17(elapsed) << ',' << best + 1 << ',' << fmt17(ct.stage_marginal(i, best)) << '\n';
  }
  return os.str();
}

const std::vector<std::string>& MaeTable::row_names() {
  static const std::vector<std::string> names{"empirical", "untimed_mixture", "untimed_argmax",
                                              "proposed_mixture", "proposed_argmax"};
  return names;
}

const std::vector<std::string>& MaeTable::col_names() {
  static const std::vector<std::string> names{"geometric", "exponential", "weibull", "median"};
  return names;
}

std::string MaeTable::to_csv() const {
  std::ostringstream os;
  os << "method";
  for (const auto& c : col_names()) os << ',' << c;
  os << '\n';
  for (int r = 0; r < kRows; ++r) {
    os << row_names()[static_cast<std::size_t>(r)];
    for (int c = 0; c < kCols; ++c) {
      os << ',';
      if (const auto& v = at(r, c)) os << fmt17(*v);
    }
    os << '\n';
  }
  return os.str();
}

MaeTable mae_table(const std::vector<EventSequence>& train, const std::vector<EventSequence>& test,
                   const ActionVocab& vocab, const MaeTableConfig& cfg) {
  if (train.empty() || test.empty()) throw DataError("mae_table needs non-empty train and test sets");
  cfg.predict.validate();
  MaeTable table;
  const int start_t = cfg.predict.start_t;
  table.at(0, 3) = evaluate_mae(fit_nonparametric_median(train, vocab), test, vocab, start_t).overall;

  for (TimeFamily fam : cfg.families) {
    const int col = static_cast<int>(fam);
    table.at(0, col) = evaluate_mae(fit_empirical_parametric(train, vocab, fam), test, vocab, start_t).overall;
    for (bool timed : {false, true}) {
      FitConfig fc = cfg.fit;
      fc.family = fam;
      fc.time_in_em = timed;
      const FitResult fitted = fit(train, vocab, fc);
      for (PredictionMode mode : {PredictionMode::mixture, PredictionMode::argmax}) {
        PredictOptions po = cfg.predict;
        po.mode = mode;
        po.use_time = timed;
        const int row = (timed ? 3 : 1) + (mode == PredictionMode::argmax ? 1 : 0);
        table.at(row, col) = evaluate_mae(fitted.params, test, po, &train).overall;
      }
    }
  }
  return table;
}

}  // namespace tdpm
