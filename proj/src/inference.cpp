// Copyright 2026 The tdpm Authors
// SPDX-License-Identifier: Apache-2.0

#include "tdpm/inference.hpp"

#include <algorithm>
#include <cmath>

#include "tdpm/errors.hpp"

namespace tdpm {

namespace {

StageWindow window_for(const ModelParams& p, const EventSequence& seq, const InferenceOptions& opt) {
  StageWindow w = opt.terminal ? *opt.terminal : terminal_window(p.stages(), seq.complete);
  if (w.lo < 1 || w.hi > p.n_stages() || w.lo > w.hi) {
    throw InvalidArgument("terminal window outside the model's stage range");
  }
  return w;
}

void check_inputs(const CompiledModel& model, const EventSequence& seq) {
  if (seq.actions.size() != seq.times.size() || seq.actions.empty()) {
    throw DataError("sequence actions and times must be non-empty and of equal length");
  }
  for (ActionId a : seq.actions) {
    if (a < 0 || a >= model.n_actions()) throw DataError("action id outside the model vocabulary");
  }
}

void check_class(const CompiledModel& model, int c) {
  if (c < 0 || c >= model.n_classes()) throw InvalidArgument("class id out of range");
}

Matrix forward_impl(const CompiledModel& M, int c, const EventSequence& seq, const Matrix& tw) {
  const std::size_t m = seq.length();
  const int r = M.n_stages();
  Matrix f(m, static_cast<std::size_t>(r), kNegInf);
  const ActionId a0 = seq.actions[0];
  f(0, 0) = M.log_pi(c, a0) + safe_log(M.params().pi_s(a0, c, 0));
  for (std::size_t i = 1; i < m; ++i) {
    const ActionId prev = seq.actions[i - 1];
    const ActionId cur = seq.actions[i];
    const double t = tw(i, static_cast<std::size_t>(c));
    const int top = std::min<int>(r - 1, static_cast<int>(i));
    for (int s = 0; s <= top; ++s) {
      double stay = f(i - 1, s) + M.log_a(prev, s, c, cur) + M.log_s(cur, s, c, 0);
      double adv = kNegInf;
      if (s > 0) adv = f(i - 1, s - 1) + M.log_a(prev, s - 1, c, cur) + M.log_s(cur, s - 1, c, 1);
      double v = log_add(stay, adv);
      f(i, static_cast<std::size_t>(s)) = v == kNegInf ? kNegInf : v + t;
    }
  }
  return f;
}

Matrix backward_impl(const CompiledModel& M, int c, const EventSequence& seq, const Matrix& tw,
                     StageWindow w) {
  const std::size_t m = seq.length();
  const int r = M.n_stages();
  Matrix g(m, static_cast<std::size_t>(r), kNegInf);
  for (int s = w.lo - 1; s <= w.hi - 1; ++s) g(m - 1, static_cast<std::size_t>(s)) = 0.0;
  for (std::size_t i = m - 1; i-- > 0;) {
    const ActionId cur = seq.actions[i];
    const ActionId next = seq.actions[i + 1];
    const double t = tw(i + 1, static_cast<std::size_t>(c));
    for (int s = 0; s < r; ++s) {
      const double la = M.log_a(cur, s, c, next);
      double stay = g(i + 1, s) + la + M.log_s(next, s, c, 0);
      double adv = kNegInf;
      if (s + 1 < r) adv = g(i + 1, s + 1) + la + M.log_s(next, s, c, 1);
      double v = log_add(stay, adv);
      g(i, static_cast<std::size_t>(s)) = v == kNegInf ? kNegInf : v + t;
    }
  }
  return g;
}

double terminal_log_lik(const Matrix& f, StageWindow w) {
  const std::size_t last = f.rows() - 1;
  double acc = kNegInf;
  for (int s = w.lo - 1; s <= w.hi - 1; ++s) acc = log_add(acc, f(last, static_cast<std::size_t>(s)));
  return acc;
}

void normalize_class_posterior(PosteriorTables& out, const CompiledModel& M) {
  const int k = M.n_classes();
  std::vector<double> joint(static_cast<std::size_t>(k));
  for (int c = 0; c < k; ++c) {
    const double l = out.classes[static_cast<std::size_t>(c)].log_lik;
    joint[static_cast<std::size_t>(c)] = l == kNegInf ? kNegInf : M.log_theta_c(c) + l;
  }
  out.loglik = log_sum_exp(joint);
  if (out.loglik == kNegInf) {
    throw ZeroLikelihood("sequence has zero likelihood under every class");
  }
  out.class_post.assign(static_cast<std::size_t>(k), 0.0);
  for (int c = 0; c < k; ++c) {
    const double j = joint[static_cast<std::size_t>(c)];
    out.class_post[static_cast<std::size_t>(c)] = j == kNegInf ? 0.0 : std::exp(j - out.loglik);
  }
}

}  // namespace

StageWindow terminal_window(const StageRange& stages, bool complete) {
  return complete ? StageWindow{stages.r_plus, stages.r_plus}
                  : StageWindow{stages.r_minus, stages.r_plus};
}

StageWindow relaxed_window(const StageRange& stages) { return StageWindow{1, stages.r_plus}; }

CompiledModel::CompiledModel(const ModelParams& params)
    : params_(&params),
      nA_(params.n_actions()),
      r_(params.n_stages()),
      k_(params.n_classes()) {
  log_theta_c_.resize(static_cast<std::size_t>(k_));
  for (int c = 0; c < k_; ++c) log_theta_c_[static_cast<std::size_t>(c)] = safe_log(params.theta_c(c));
  log_pi_.resize(static_cast<std::size_t>(k_ * nA_));
  for (int c = 0; c < k_; ++c) {
    for (ActionId a = 0; a < nA_; ++a) {
      log_pi_[static_cast<std::size_t>(c * nA_ + a)] = safe_log(params.pi_a(c, a));
    }
  }
  log_a_.resize(static_cast<std::size_t>(nA_ * r_ * k_ * nA_));
  log_s_.resize(static_cast<std::size_t>(nA_ * r_ * k_ * 2));
  std::size_t ia = 0, is = 0;
  for (ActionId a = 0; a < nA_; ++a) {
    for (int s = 0; s < r_; ++s) {
      for (int c = 0; c < k_; ++c) {
        for (ActionId b = 0; b < nA_; ++b) log_a_[ia++] = safe_log(params.theta_a(a, s, c, b));
        log_s_[is++] = safe_log(params.theta_s(a, s, c, s));
        log_s_[is++] = s + 1 < r_ ? safe_log(params.theta_s(a, s, c, s + 1)) : kNegInf;
      }
    }
  }
}

Matrix CompiledModel::time_log_weights(const EventSequence& seq, bool use_time) const {
  Matrix tw(seq.length(), static_cast<std::size_t>(k_), 0.0);
  if (!use_time) return tw;
  for (std::size_t i = 1; i < seq.length(); ++i) {
    for (int c = 0; c < k_; ++c) {
      tw(i, static_cast<std::size_t>(c)) = step_time_log_weight(*params_, seq, i, c);
    }
  }
  return tw;
}

Matrix forward(const CompiledModel& model, int c, const EventSequence& seq,
               const InferenceOptions& opt) {
  check_inputs(model, seq);
  check_class(model, c);
  return forward_impl(model, c, seq, model.time_log_weights(seq, opt.use_time));
}

Matrix forward(const ModelParams& params, int c, const EventSequence& seq,
               const InferenceOptions& opt) {
  return forward(CompiledModel(params), c, seq, opt);
}

Matrix backward(const CompiledModel& model, int c, const EventSequence& seq,
                const InferenceOptions& opt) {
  check_inputs(model, seq);
  check_class(model, c);
  return backward_impl(model, c, seq, model.time_log_weights(seq, opt.use_time),
                       window_for(model.params(), seq, opt));
}

Matrix backward(const ModelParams& params, int c, const EventSequence& seq,
                const InferenceOptions& opt) {
  return backward(CompiledModel(params), c, seq, opt);
}

PosteriorTables posteriors(const CompiledModel& M, const EventSequence& seq,
                           const InferenceOptions& opt) {
  check_inputs(M, seq);
  const StageWindow w = window_for(M.params(), seq, opt);
  const Matrix tw = M.time_log_weights(seq, opt.use_time);
  const std::size_t m = seq.length();
  const std::size_t r = static_cast<std::size_t>(M.n_stages());
  const int k = M.n_classes();

  PosteriorTables out;
  out.classes.resize(static_cast<std::size_t>(k));
  for (int c = 0; c < k; ++c) {
    ClassTables& ct = out.classes[static_cast<std::size_t>(c)];
    ct.log_f = forward_impl(M, c, seq, tw);
    ct.log_g = backward_impl(M, c, seq, tw, w);
    ct.log_lik = terminal_log_lik(ct.log_f, w);
    ct.stage_marginal = Matrix(m, r, 0.0);
    ct.stage_pair = PairTable(m, r);
    if (ct.log_lik == kNegInf) continue;
    const double L = ct.log_lik;
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t s = 0; s < r; ++s) {
        const double v = ct.log_f(i, s) + ct.log_g(i, s);
        ct.stage_marginal(i, s) = v == kNegInf ? 0.0 : std::exp(v - L);
      }
    }
    for (std::size_t i = 1; i < m; ++i) {
      const ActionId prev = seq.actions[i - 1];
      const ActionId cur = seq.actions[i];
      const double t = tw(i, static_cast<std::size_t>(c));
      for (std::size_t s = 0; s < r; ++s) {
        const double fs = ct.log_f(i - 1, s);
        if (fs == kNegInf) continue;
        const double base = fs + M.log_a(prev, static_cast<int>(s), c, cur) + t - L;
        for (std::size_t step = 0; step < 2 && s + step < r; ++step) {
          const double v =
              base + M.log_s(cur, static_cast<int>(s), c, static_cast<int>(step)) + ct.log_g(i, s + step);
          ct.stage_pair(i, s, step) = v == kNegInf || std::isnan(v) ? 0.0 : std::exp(v);
        }
      }
    }
  }
  normalize_class_posterior(out, M);
  return out;
}

PosteriorTables posteriors(const ModelParams& params, const EventSequence& seq,
                           const InferenceOptions& opt) {
  return posteriors(CompiledModel(params), seq, opt);
}

std::vector<StageSeq> enumerate_stage_sequences(std::size_t m, int r_plus, StageWindow window) {
  std::vector<StageSeq> out;
  if (m == 0) return out;
  StageSeq cur(m, 1);
  // Depth-first over stay/advance choices.
  auto rec = [&](auto&& self, std::size_t i) -> void {
    if (i == m) {
      if (cur[m - 1] >= window.lo && cur[m - 1] <= window.hi) out.push_back(cur);
      return;
    }
    for (int step = 0; step <= 1; ++step) {
      const int s = cur[i - 1] + step;
      if (s > r_plus) continue;
      cur[i] = s;
      self(self, i + 1);
    }
  };
  rec(rec, 1);
  return out;
}

PosteriorTables brute_force_posteriors(const ModelParams& params, const EventSequence& seq,
                                       const InferenceOptions& opt) {
  const std::size_t m = seq.length();
  if (m > 12 || params.n_stages() > 4) {
    throw InvalidArgument("instance too large for enumeration (m <= 12, r_plus <= 4)");
  }
  validate_sequence(seq, params.vocab());
  const StageWindow w = window_for(params, seq, opt);
  const auto paths = enumerate_stage_sequences(m, params.n_stages(), w);
  const std::size_t r = static_cast<std::size_t>(params.n_stages());
  const int k = params.n_classes();

  // Class-conditional joint: the same model with every class weight set to 1.
  ModelParams conditional = params;
  for (int c = 0; c < k; ++c) conditional.theta_c(c) = 1.0;
  const JointOptions jo{opt.use_time};

  PosteriorTables out;
  out.classes.resize(static_cast<std::size_t>(k));
  for (int c = 0; c < k; ++c) {
    ClassTables& ct = out.classes[static_cast<std::size_t>(c)];
    std::vector<double> lj(paths.size());
    for (std::size_t p = 0; p < paths.size(); ++p) lj[p] = log_joint(conditional, seq, paths[p], c, jo);
    ct.log_lik = log_sum_exp(lj);
    ct.stage_marginal = Matrix(m, r, 0.0);
    ct.stage_pair = PairTable(m, r);
    if (ct.log_lik == kNegInf) continue;
    for (std::size_t p = 0; p < paths.size(); ++p) {
      if (lj[p] == kNegInf) continue;
      const double prob = std::exp(lj[p] - ct.log_lik);
      const StageSeq& s = paths[p];
      for (std::size_t i = 0; i < m; ++i) {
        ct.stage_marginal(i, static_cast<std::size_t>(s[i] - 1)) += prob;
        if (i > 0) {
          ct.stage_pair(i, static_cast<std::size_t>(s[i - 1] - 1),
                        static_cast<std::size_t>(s[i] - s[i - 1])) += prob;
        }
      }
    }
  }
  CompiledModel compiled(params);
  normalize_class_posterior(out, compiled);
  return out;
}

std::vector<double> class_log_likelihoods(const CompiledModel& model, const EventSequence& seq,
                                          const InferenceOptions& opt) {
  check_inputs(model, seq);
  const StageWindow w = window_for(model.params(), seq, opt);
  const Matrix tw = model.time_log_weights(seq, opt.use_time);
  std::vector<double> out(static_cast<std::size_t>(model.n_classes()));
  for (int c = 0; c < model.n_classes(); ++c) {
    out[static_cast<std::size_t>(c)] = terminal_log_lik(forward_impl(model, c, seq, tw), w);
  }
  return out;
}

double sequence_log_likelihood(const CompiledModel& model, const EventSequence& seq,
                               const InferenceOptions& opt) {
  const auto per_class = class_log_likelihoods(model, seq, opt);
  std::vector<double> joint(per_class.size());
  for (std::size_t c = 0; c < per_class.size(); ++c) {
    joint[c] = per_class[c] == kNegInf ? kNegInf : model.log_theta_c(static_cast<int>(c)) + per_class[c];
  }
  const double ll = log_sum_exp(joint);
  if (ll == kNegInf) throw ZeroLikelihood("sequence has zero likelihood under every class");
  return ll;
}

double sequence_log_likelihood(const ModelParams& params, const EventSequence& seq,
                               const InferenceOptions& opt) {
  return sequence_log_likelihood(CompiledModel(params), seq, opt);
}

Matrix prefix_class_posteriors(const CompiledModel& model, const EventSequence& seq, bool use_time) {
  check_inputs(model, seq);
  const Matrix tw = model.time_log_weights(seq, use_time);
  const std::size_t m = seq.length();
  const std::size_t k = static_cast<std::size_t>(model.n_classes());
  const std::size_t r = static_cast<std::size_t>(model.n_stages());
  Matrix joint(m, k, kNegInf);
  for (std::size_t c = 0; c < k; ++c) {
    const Matrix f = forward_impl(model, static_cast<int>(c), seq, tw);
    for (std::size_t t = 0; t < m; ++t) {
      double acc = kNegInf;
      for (std::size_t s = 0; s < r; ++s) acc = log_add(acc, f(t, s));
      joint(t, c) = acc == kNegInf ? kNegInf : acc + model.log_theta_c(static_cast<int>(c));
    }
  }
  Matrix q(m, k, 0.0);
  std::vector<double> row(k);
  for (std::size_t t = 0; t < m; ++t) {
    for (std::size_t c = 0; c < k; ++c) row[c] = joint(t, c);
    const double z = log_sum_exp(row);
    if (z == kNegInf) continue;
    for (std::size_t c = 0; c < k; ++c) q(t, c) = row[c] == kNegInf ? 0.0 : std::exp(row[c] - z);
  }
  return q;
}

}  // namespace tdpm
