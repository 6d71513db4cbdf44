// Copyright 2026 The tdpm Authors
// SPDX-License-Identifier: Apache-2.0

#include "tdpm/em.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <sstream>

#include "tdpm/errors.hpp"
#include "tdpm/inference.hpp"
#include "tdpm/logspace.hpp"
#include "text_util.hpp"

namespace tdpm {

namespace {

using detail::fmt17;

// Pseudo-count used when turning hard initial assignments into parameters.
// Keeps every transition admissible at the start of EM even when alpha0 = 0.
constexpr double kInitPseudoCount = 1e-3;

// Largest geometric p the M-step may return; p = 1 would give every longer
// interval in that cell zero probability.
constexpr double kMaxFittedGeometricP = 1.0 - 1e-6;

TimeFitOptions time_options(const FitConfig& cfg) {
  TimeFitOptions opt;
  opt.zero_floor = cfg.zero_time_floor;
  return opt;
}

TimeDist fit_cell(TimeFamily family, std::span<const WeightedTimeSample> samples,
                  const TimeFitOptions& base, const TimeDist* previous) {
  TimeFitOptions opt = base;
  if (previous) {
    if (const auto* w = std::get_if<Weibull>(previous)) opt.shape_hint = w->shape;
  }
  TimeDist d = fit_time(family, samples, opt);
  if (auto* g = std::get_if<Geometric>(&d)) g->p = std::min(g->p, kMaxFittedGeometricP);
  return d;
}

std::vector<int> resolve_labels(const std::vector<EventSequence>& data, std::span<const int> labels) {
  if (!labels.empty()) {
    if (labels.size() != data.size()) throw InvalidArgument("one label per sequence is required");
    return {labels.begin(), labels.end()};
  }
  std::vector<int> out;
  for (const auto& s : data) {
    if (!s.class_hint) return {};
    out.push_back(*s.class_hint);
  }
  return out;
}

// Categorical part of the M-step. pseudo is the per-entry pseudo-count.
void m_step_categorical(const SufficientStats& st, double pseudo, ModelParams& p) {
  const int nA = st.n_actions, r = st.n_stages, k = st.n_classes;
  const ActionId end = p.vocab().end_id();
  const SufficientStats& S = st;

  double rt = 0.0;
  for (double x : st.resp) rt += x;
  if (rt > 0.0) {
    for (int c = 0; c < k; ++c) p.theta_c(c) = st.resp[static_cast<std::size_t>(c)] / rt;
  }

  for (int c = 0; c < k; ++c) {
    double tot = 0.0;
    for (ActionId a = 0; a < nA; ++a) {
      if (a != end) tot += S.i(c, a) + pseudo;
    }
    if (tot > 0.0) {
      for (ActionId a = 0; a < nA; ++a) p.pi_a(c, a) = a == end ? 0.0 : (S.i(c, a) + pseudo) / tot;
    }
  }

  for (ActionId a = 0; a < nA; ++a) {
    for (int s = 0; s < r; ++s) {
      for (int c = 0; c < k; ++c) {
        if (a != end) {
          double tot = 0.0;
          for (ActionId b = 0; b < nA; ++b) tot += S.n(a, s, c, b) + pseudo;
          if (tot > 0.0) {
            for (ActionId b = 0; b < nA; ++b) p.theta_a(a, s, c, b) = (S.n(a, s, c, b) + pseudo) / tot;
          }
        }
        if (s + 1 < r) {
          const double stay = S.m(a, s, c, 0) + pseudo;
          const double adv = S.m(a, s, c, 1) + pseudo;
          if (stay + adv > 0.0) {
            p.theta_s(a, s, c, s) = stay / (stay + adv);
            p.theta_s(a, s, c, s + 1) = adv / (stay + adv);
          }
        }
      }
    }
  }
}

double vec_delta(const std::vector<double>& x, const std::vector<double>& y) {
  double d = 0.0;
  for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) d = std::max(d, std::abs(x[i] - y[i]));
  return d;
}

std::vector<double> time_param_vector(const ModelParams& p) {
  std::vector<double> out;
  for (const auto& d : p.theta_t_data()) {
    if (const auto* g = std::get_if<Geometric>(&d)) {
      out.push_back(g->p);
    } else if (const auto* e = std::get_if<Exponential>(&d)) {
      out.push_back(e->rate);
    } else {
      const auto& w = std::get<Weibull>(d);
      out.push_back(w.shape);
      out.push_back(w.scale);
    }
  }
  return out;
}

}  // namespace

std::string_view to_string(InitMode m) {
  switch (m) {
    case InitMode::uniform_eps:
      return "uniform_eps";
    case InitMode::provided_labels:
      return "provided_labels";
    case InitMode::frequency_seeded:
      return "frequency_seeded";
  }
  return "unknown";
}

InitMode parse_init_mode(std::string_view name) {
  if (name == "uniform_eps") return InitMode::uniform_eps;
  if (name == "provided_labels") return InitMode::provided_labels;
  if (name == "frequency_seeded") return InitMode::frequency_seeded;
  throw InvalidArgument("unknown init mode '" + std::string(name) + "'");
}

void FitConfig::validate() const {
  if (n_classes < 1) throw InvalidArgument("n_classes must be >= 1");
  stages.validate();
  if (max_iters < 1) throw InvalidArgument("max_iters must be >= 1");
  if (min_iters < 0) throw InvalidArgument("min_iters must be >= 0");
  if (!(loglik_rel_tol > 0.0)) throw InvalidArgument("loglik_rel_tol must be > 0");
  if (!(epsilon >= 0.0 && epsilon < 1.0)) throw InvalidArgument("epsilon must lie in [0, 1)");
  if (!(alpha0 >= 0.0)) throw InvalidArgument("alpha0 must be >= 0");
  if (!(zero_time_floor > 0.0)) throw InvalidArgument("zero_time_floor must be > 0");
}

std::string FitTrace::to_csv(bool include_timing) const {
  std::ostringstream os;
  os << "iteration,total_loglik,mean_loglik,objective,max_param_delta,skipped";
  if (include_timing) os << ",seconds";
  os << '\n';
  for (const auto& it : iterations) {
    os << it.iteration << ',' << fmt17(it.total_loglik) << ',' << fmt17(it.mean_loglik) << ','
       << fmt17(it.objective) << ',' << fmt17(it.max_param_delta) << ',' << it.skipped;
    if (include_timing) os << ',' << fmt17(it.seconds);
    os << '\n';
  }
  return os.str();
}

SufficientStats::SufficientStats(const ModelParams& prev)
    : n_actions(prev.n_actions()),
      n_stages(prev.n_stages()),
      n_classes(prev.n_classes()),
      previous(prev) {
  const auto A = static_cast<std::size_t>(n_actions);
  const auto R = static_cast<std::size_t>(n_stages);
  const auto K = static_cast<std::size_t>(n_classes);
  trans.assign(A * R * K * A, 0.0);
  stage.assign(A * R * K * 2, 0.0);
  resp.assign(K, 0.0);
  init.assign(K * A, 0.0);
  time.assign(A * A * K, {});
}

void SufficientStats::merge(const SufficientStats& o) {
  if (o.trans.size() != trans.size() || o.n_classes != n_classes) {
    throw InvalidArgument("cannot merge statistics of different shapes");
  }
  for (std::size_t j = 0; j < trans.size(); ++j) trans[j] += o.trans[j];
  for (std::size_t j = 0; j < stage.size(); ++j) stage[j] += o.stage[j];
  for (std::size_t j = 0; j < resp.size(); ++j) resp[j] += o.resp[j];
  for (std::size_t j = 0; j < init.size(); ++j) init[j] += o.init[j];
  for (std::size_t j = 0; j < time.size(); ++j) time[j].insert(time[j].end(), o.time[j].begin(), o.time[j].end());
  n_sequences += o.n_sequences;
  skipped += o.skipped;
  total_loglik += o.total_loglik;
}

StageSeq initial_stages(std::size_t m, int r_plus) {
  StageSeq s(m, 1);
  for (std::size_t i = 1; i < m; ++i) {
    const int block = static_cast<int>(i * static_cast<std::size_t>(r_plus) / m) + 1;
    s[i] = std::min(block, s[i - 1] + 1);
  }
  return s;
}

std::vector<int> frequency_cluster_labels(const std::vector<EventSequence>& data, int n_actions,
                                          int k, ActionId end_id) {
  const std::size_t n = data.size();
  std::vector<int> labels(n, 0);
  if (k <= 1 || n == 0) return labels;

  // Unit-normalized action-frequency vectors.
  std::vector<std::vector<double>> v(n, std::vector<double>(static_cast<std::size_t>(n_actions), 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (ActionId a : data[i].actions) {
      if (a != end_id) v[i][static_cast<std::size_t>(a)] += 1.0;
    }
    double norm = 0.0;
    for (double x : v[i]) norm += x * x;
    norm = std::sqrt(norm);
    if (norm > 0.0) {
      for (double& x : v[i]) x /= norm;
    }
  }
  auto dist = [&](std::size_t i, std::size_t j) {
    double dot = 0.0;
    for (std::size_t a = 0; a < v[i].size(); ++a) dot += v[i][a] * v[j][a];
    return 1.0 - dot;
  };

  // Seeding: the most central sequence, then repeatedly the farthest one.
  std::vector<std::size_t> medoids;
  {
    std::size_t best = 0;
    double best_sum = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
      double s = 0.0;
      for (std::size_t j = 0; j < n; ++j) s += dist(i, j);
      if (s < best_sum) {
        best_sum = s;
        best = i;
      }
    }
    medoids.push_back(best);
  }
  std::vector<double> nearest(n);
  for (std::size_t i = 0; i < n; ++i) nearest[i] = dist(i, medoids[0]);
  while (medoids.size() < static_cast<std::size_t>(k) && medoids.size() < n) {
    std::size_t far = 0;
    for (std::size_t i = 1; i < n; ++i) {
      if (nearest[i] > nearest[far]) far = i;
    }
    medoids.push_back(far);
    for (std::size_t i = 0; i < n; ++i) nearest[i] = std::min(nearest[i], dist(i, far));
  }

  for (int iter = 0; iter < 20; ++iter) {
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double bd = dist(i, medoids[0]);
      for (std::size_t c = 1; c < medoids.size(); ++c) {
        const double d = dist(i, medoids[c]);
        if (d < bd) {
          bd = d;
          best = static_cast<int>(c);
        }
      }
      labels[i] = best;
    }
    bool changed = false;
    for (std::size_t c = 0; c < medoids.size(); ++c) {
      std::size_t best = medoids[c];
      double best_cost = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] != static_cast<int>(c)) continue;
        double cost = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
          if (labels[j] == static_cast<int>(c)) cost += dist(i, j);
        }
        if (cost < best_cost) {
          best_cost = cost;
          best = i;
        }
      }
      if (best != medoids[c]) {
        medoids[c] = best;
        changed = true;
      }
    }
    if (!changed) break;
  }
  return labels;
}

std::vector<std::vector<double>> initial_responsibilities(const std::vector<EventSequence>& data,
                                                          int n_actions, const FitConfig& cfg,
                                                          std::span<const int> labels_in) {
  const int k = cfg.n_classes;
  const std::size_t n = data.size();
  std::vector<std::vector<double>> resp(n, std::vector<double>(static_cast<std::size_t>(k), 1.0 / k));
  if (k == 1) return resp;

  std::vector<int> labels;
  switch (cfg.init_mode) {
    case InitMode::provided_labels:
      labels = resolve_labels(data, labels_in);
      if (labels.empty()) throw InvalidArgument("provided_labels initialization needs class labels");
      break;
    case InitMode::uniform_eps:
      labels = resolve_labels(data, labels_in);
      if (labels.empty()) {
        // No hints: random hints break the symmetry between classes.
        std::mt19937_64 rng(cfg.seed);
        std::uniform_int_distribution<int> pick(0, k - 1);
        labels.resize(n);
        for (auto& l : labels) l = pick(rng);
      }
      break;
    case InitMode::frequency_seeded: {
      ActionId end = 0;
      for (const auto& s : data) {
        if (!s.actions.empty()) {
          end = s.actions.back();
          break;
        }
      }
      labels = frequency_cluster_labels(data, n_actions, k, end);
      break;
    }
  }
  for (int l : labels) {
    if (l < 0 || l >= k) throw InvalidArgument("class label " + std::to_string(l) + " out of range");
  }
  for (std::size_t i = 0; i < n; ++i) {
    auto& r = resp[i];
    const auto hinted = static_cast<std::size_t>(labels[i]);
    if (cfg.init_mode == InitMode::provided_labels) {
      std::fill(r.begin(), r.end(), 0.0);
      r[hinted] = 1.0;
    } else {
      r[hinted] += cfg.epsilon;
      for (double& x : r) x /= 1.0 + cfg.epsilon;
    }
  }
  return resp;
}

ModelParams initialize(const std::vector<EventSequence>& data, const ActionVocab& vocab,
                       const FitConfig& cfg, std::span<const int> labels) {
  cfg.validate();
  if (data.empty()) throw DataError("empty dataset");
  for (const auto& s : data) validate_sequence(s, vocab);

  ModelParams base(vocab, cfg.stages, cfg.n_classes, cfg.family);
  const auto resp = initial_responsibilities(data, vocab.size(), cfg, labels);
  const ActionId end = vocab.end_id();
  const int k = cfg.n_classes;

  SufficientStats st(base);
  std::vector<WeightedTimeSample> all_times;
  std::vector<std::vector<WeightedTimeSample>> pooled(static_cast<std::size_t>(vocab.size() * vocab.size()));
  for (std::size_t n = 0; n < data.size(); ++n) {
    const auto& seq = data[n];
    const StageSeq stages = initial_stages(seq.length(), cfg.stages.r_plus);
    for (int c = 0; c < k; ++c) {
      const double q = resp[n][static_cast<std::size_t>(c)];
      st.resp[static_cast<std::size_t>(c)] += q;
      st.i(c, seq.actions[0]) += q;
      for (std::size_t i = 1; i < seq.length(); ++i) {
        const int ps = stages[i - 1] - 1;
        st.n(seq.actions[i - 1], ps, c, seq.actions[i]) += q;
        st.m(seq.actions[i], ps, c, stages[i] - stages[i - 1]) += q;
      }
    }
    for (std::size_t i = 1; i < seq.length(); ++i) {
      if (seq.actions[i] == end) continue;
      const WeightedTimeSample w{seq.times[i], 1.0};
      pooled[static_cast<std::size_t>(seq.actions[i - 1] * vocab.size() + seq.actions[i])].push_back(w);
      all_times.push_back(w);
    }
    ++st.n_sequences;
  }

  ModelParams p = base;
  m_step_categorical(st, std::max(cfg.alpha0, kInitPseudoCount), p);

  // Time cells: one fit per action pair shared by every class; pairs without
  // data take the fit over all observed intervals.
  const TimeFitOptions topt = time_options(cfg);
  const bool any_times = !all_times.empty();
  const TimeDist fallback = any_times ? fit_cell(cfg.family, all_times, topt, nullptr)
                                      : base.theta_t(0, 0, 0);
  for (ActionId a = 0; a < vocab.size(); ++a) {
    for (ActionId b = 0; b < vocab.size(); ++b) {
      const auto& cell = pooled[static_cast<std::size_t>(a * vocab.size() + b)];
      const bool has = !cell.empty();
      const TimeDist d = has ? fit_cell(cfg.family, cell, topt, nullptr) : fallback;
      for (int c = 0; c < k; ++c) {
        p.theta_t(a, b, c) = d;
        p.set_time_fitted(a, b, c, has);
      }
    }
  }
  return p;
}

SufficientStats e_step(const ModelParams& params, const std::vector<EventSequence>& data, bool use_time) {
  SufficientStats st(params);
  const CompiledModel compiled(params);
  const ActionId end = params.vocab().end_id();
  const int k = params.n_classes();
  const int r = params.n_stages();
  InferenceOptions opt;
  opt.use_time = use_time;

  for (const auto& seq : data) {
    PosteriorTables post;
    try {
      post = posteriors(compiled, seq, opt);
    } catch (const ZeroLikelihood&) {
      ++st.skipped;
      continue;
    }
    ++st.n_sequences;
    st.total_loglik += post.loglik;
    const std::size_t m = seq.length();
    for (int c = 0; c < k; ++c) {
      const double q = post.class_post[static_cast<std::size_t>(c)];
      if (q == 0.0) continue;
      const ClassTables& ct = post.classes[static_cast<std::size_t>(c)];
      st.resp[static_cast<std::size_t>(c)] += q;
      st.i(c, seq.actions[0]) += q;
      for (std::size_t i = 1; i < m; ++i) {
        const ActionId prev = seq.actions[i - 1];
        const ActionId cur = seq.actions[i];
        for (int s = 0; s < r; ++s) {
          const double stay = ct.stage_pair(i, static_cast<std::size_t>(s), 0);
          const double adv = s + 1 < r ? ct.stage_pair(i, static_cast<std::size_t>(s), 1) : 0.0;
          if (stay == 0.0 && adv == 0.0) continue;
          st.n(prev, s, c, cur) += q * (stay + adv);
          st.m(cur, s, c, 0) += q * stay;
          st.m(cur, s, c, 1) += q * adv;
        }
        if (cur != end) st.t(prev, cur, c).push_back({seq.times[i], q});
      }
    }
  }
  return st;
}

void fit_time_cells(ModelParams& p, const SufficientStats& st, const FitConfig& cfg) {
  const TimeFitOptions topt = time_options(cfg);
  const ActionId end = p.vocab().end_id();
  for (ActionId a = 0; a < st.n_actions; ++a) {
    if (a == end) continue;
    for (ActionId b = 0; b < st.n_actions; ++b) {
      if (b == end) continue;
      for (int c = 0; c < st.n_classes; ++c) {
        const auto& samples = st.t(a, b, c);
        double w = 0.0;
        for (const auto& x : samples) w += x.weight;
        if (!(w > 0.0)) continue;
        p.theta_t(a, b, c) = fit_cell(cfg.family, samples, topt, &st.previous.theta_t(a, b, c));
        p.set_time_fitted(a, b, c, true);
      }
    }
  }
}

ModelParams m_step(const SufficientStats& stats, const FitConfig& cfg) {
  ModelParams p = stats.previous;
  m_step_categorical(stats, cfg.alpha0, p);
  if (cfg.time_in_em) fit_time_cells(p, stats, cfg);
  return p;
}

double smoothing_log_prior(const ModelParams& p, double alpha0) {
  if (alpha0 <= 0.0) return 0.0;
  const int nA = p.n_actions(), r = p.n_stages(), k = p.n_classes();
  const ActionId end = p.vocab().end_id();
  double acc = 0.0;
  for (int c = 0; c < k; ++c) {
    for (ActionId a = 0; a < nA; ++a) {
      if (a != end) acc += safe_log(p.pi_a(c, a));
    }
  }
  for (ActionId a = 0; a < nA; ++a) {
    for (int s = 0; s < r; ++s) {
      for (int c = 0; c < k; ++c) {
        if (a != end) {
          for (ActionId b = 0; b < nA; ++b) acc += safe_log(p.theta_a(a, s, c, b));
        }
        if (s + 1 < r) acc += safe_log(p.theta_s(a, s, c, s)) + safe_log(p.theta_s(a, s, c, s + 1));
      }
    }
  }
  return alpha0 * acc;
}

double max_param_delta(const ModelParams& a, const ModelParams& b) {
  double d = 0.0;
  d = std::max(d, vec_delta(a.theta_c_data(), b.theta_c_data()));
  d = std::max(d, vec_delta(a.pi_a_data(), b.pi_a_data()));
  d = std::max(d, vec_delta(a.theta_a_data(), b.theta_a_data()));
  d = std::max(d, vec_delta(a.theta_s_data(), b.theta_s_data()));
  d = std::max(d, vec_delta(time_param_vector(a), time_param_vector(b)));
  return d;
}

FitResult fit(const std::vector<EventSequence>& data, const ActionVocab& vocab, const FitConfig& cfg,
              std::span<const int> labels) {
  using clock = std::chrono::steady_clock;
  FitResult result;
  result.params = initialize(data, vocab, cfg, labels);
  ModelParams previous = result.params;
  double prev_ll = kNegInf;
  SufficientStats last;

  for (int it = 1; it <= cfg.max_iters; ++it) {
    const auto t0 = clock::now();
    SufficientStats st = e_step(result.params, data, cfg.time_in_em);
    FitIteration row;
    row.iteration = it;
    row.total_loglik = st.total_loglik;
    row.mean_loglik = st.n_sequences ? st.total_loglik / static_cast<double>(st.n_sequences) : kNegInf;
    row.objective = st.total_loglik + smoothing_log_prior(result.params, cfg.alpha0);
    row.max_param_delta = it == 1 ? 0.0 : max_param_delta(previous, result.params);
    row.skipped = st.skipped;

    const bool done = it > cfg.min_iters && prev_ll != kNegInf &&
                      (row.objective - prev_ll) <= cfg.loglik_rel_tol * std::abs(prev_ll);
    prev_ll = row.objective;
    if (done || it == cfg.max_iters) {
      row.seconds = std::chrono::duration<double>(clock::now() - t0).count();
      result.trace.iterations.push_back(row);
      result.trace.converged = done;
      last = std::move(st);
      break;
    }
    previous = result.params;
    result.params = m_step(st, cfg);
    row.seconds = std::chrono::duration<double>(clock::now() - t0).count();
    result.trace.iterations.push_back(row);
  }

  if (!cfg.time_in_em) {
    // Untimed EM: fit every time cell once from the final responsibilities.
    fit_time_cells(result.params, last, cfg);
  }
  require_valid_model(result.params);
  return result;
}

}  // namespace tdpm
