// Copyright 2026 The tdpm Authors
// SPDX-License-Identifier: Apache-2.0

#include "tdpm/model.hpp"

#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "tdpm/errors.hpp"
#include "tdpm/logspace.hpp"

namespace tdpm {

namespace {

std::string fmt_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

TimeDist default_time_dist(TimeFamily family) {
  switch (family) {
    case TimeFamily::geometric:
      return Geometric{0.5};
    case TimeFamily::exponential:
      return Exponential{1.0};
    case TimeFamily::weibull:
      return Weibull{1.0, 1.0};
  }
  return Geometric{0.5};
}

}  // namespace

// --- ActionVocab -------------------------------------------------------------

ActionVocab::ActionVocab() : names_{std::string(kEndLabel)}, end_id_(0) {}

ActionVocab::ActionVocab(std::vector<std::string> names, ActionId end_id)
    : names_(std::move(names)), end_id_(end_id) {
  if (end_id_ < 0 || end_id_ >= size()) throw InvalidArgument("vocab end_id out of range");
  if (names_[static_cast<std::size_t>(end_id_)] != kEndLabel) {
    throw InvalidArgument("vocab end_id must name the reserved label __END__");
  }
  std::set<std::string> seen;
  for (const auto& n : names_) {
    if (n.empty()) throw InvalidArgument("vocab labels must be non-empty");
    if (!seen.insert(n).second) throw InvalidArgument("duplicate vocab label '" + n + "'");
  }
}

ActionVocab ActionVocab::with_actions(int n) {
  ActionVocab v;
  for (int i = 1; i <= n; ++i) v.add("a" + std::to_string(i));
  return v;
}

ActionId ActionVocab::add(std::string_view label) {
  if (auto id = find(label)) return *id;
  if (label.empty()) throw DataError("action labels must be non-empty");
  names_.emplace_back(label);
  return size() - 1;
}

std::optional<ActionId> ActionVocab::find(std::string_view label) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == label) return static_cast<ActionId>(i);
  }
  return std::nullopt;
}

void StageRange::validate() const {
  if (r_minus < 1 || r_plus < r_minus) {
    throw InvalidArgument("stage range must satisfy 1 <= r_minus <= r_plus (got " +
                          std::to_string(r_minus) + ":" + std::to_string(r_plus) + ")");
  }
}

void validate_sequence(const EventSequence& seq, const ActionVocab& vocab) {
  const std::size_t m = seq.actions.size();
  auto where = [&] { return seq.id.empty() ? std::string("sequence") : "sequence '" + seq.id + "'"; };
  if (m != seq.times.size()) throw DataError(where() + ": actions and times differ in length");
  if (m < 2) throw DataError(where() + ": needs at least one action plus END");
  if (seq.times[0] != 0.0) throw DataError(where() + ": first interval must be 0");
  for (std::size_t i = 0; i < m; ++i) {
    ActionId a = seq.actions[i];
    if (a < 0 || a >= vocab.size()) throw DataError(where() + ": action id out of range");
    if (vocab.is_end(a) != (i + 1 == m)) {
      throw DataError(where() + ": END must occur exactly once, as the final action");
    }
    if (!(seq.times[i] >= 0.0) || !std::isfinite(seq.times[i])) {
      throw DataError(where() + ": negative or non-finite interval");
    }
  }
}

// --- ModelParams -------------------------------------------------------------

ModelParams::ModelParams(ActionVocab vocab, StageRange stages, int n_classes, TimeFamily family)
    : vocab_(std::move(vocab)), stages_(stages), n_classes_(n_classes), family_(family) {
  stages_.validate();
  if (n_classes_ < 1) throw InvalidArgument("number of classes must be >= 1");
  if (vocab_.size() < 2) throw InvalidArgument("vocabulary needs at least one action besides END");
  const int nA = n_actions(), r = n_stages(), k = n_classes_;
  const ActionId end = vocab_.end_id();

  theta_c_.assign(K(), 1.0 / k);
  pi_a_.assign(K() * A(), 0.0);
  pi_s_.assign(A() * K() * R(), 0.0);
  theta_a_.assign(A() * R() * K() * A(), 0.0);
  theta_s_.assign(A() * R() * K() * R(), 0.0);
  theta_t_.assign(A() * A() * K(), default_time_dist(family));
  time_fitted_.assign(A() * A() * K(), 0);

  for (int c = 0; c < k; ++c) {
    for (ActionId a = 0; a < nA; ++a) {
      if (a != end) pi_a(c, a) = 1.0 / (nA - 1);
      pi_s(a, c, 0) = 1.0;
      for (int s = 0; s < r; ++s) {
        if (a != end) {
          for (ActionId b = 0; b < nA; ++b) theta_a(a, s, c, b) = 1.0 / nA;
        }
        if (s + 1 < r) {
          theta_s(a, s, c, s) = 0.5;
          theta_s(a, s, c, s + 1) = 0.5;
        } else {
          theta_s(a, s, c, s) = 1.0;
        }
      }
    }
  }
}

ModelParams ModelParams::permute_classes(const std::vector<int>& order) const {
  if (static_cast<int>(order.size()) != n_classes_) {
    throw InvalidArgument("class permutation has wrong size");
  }
  ModelParams out = *this;
  const int nA = n_actions(), r = n_stages();
  for (int j = 0; j < n_classes_; ++j) {
    const int c = order[static_cast<std::size_t>(j)];
    out.theta_c(j) = theta_c(c);
    for (ActionId a = 0; a < nA; ++a) {
      out.pi_a(j, a) = pi_a(c, a);
      for (int s = 0; s < r; ++s) {
        out.pi_s(a, j, s) = pi_s(a, c, s);
        for (ActionId b = 0; b < nA; ++b) out.theta_a(a, s, j, b) = theta_a(a, s, c, b);
        for (int t = 0; t < r; ++t) out.theta_s(a, s, j, t) = theta_s(a, s, c, t);
      }
      for (ActionId b = 0; b < nA; ++b) {
        out.theta_t(a, b, j) = theta_t(a, b, c);
        out.set_time_fitted(a, b, j, time_fitted(a, b, c));
      }
    }
  }
  return out;
}

// --- validation --------------------------------------------------------------

std::string ValidationReport::to_string() const {
  std::ostringstream os;
  for (const auto& i : issues) os << i << '\n';
  return os.str();
}

ValidationReport validate_model(const ModelParams& p, double tol) {
  ValidationReport rep;
  auto issue = [&rep](std::string s) { rep.issues.push_back(std::move(s)); };
  const int nA = p.n_actions(), r = p.n_stages(), k = p.n_classes();
  const ActionId end = p.vocab().end_id();
  const auto& names = p.vocab().names();

  auto cell = [&](ActionId a, int s, int c) {
    return "(a=" + names[static_cast<std::size_t>(a)] + ",s=" + std::to_string(s + 1) +
           ",c=" + std::to_string(c) + ")";
  };
  auto check_entries = [&](const std::vector<double>& v, const char* what) {
    for (double x : v) {
      if (!std::isfinite(x)) {
        issue(std::string(what) + " has non-finite entries");
        return;
      }
      if (x < 0.0) {
        issue(std::string("negative mass in ") + what);
        return;
      }
    }
  };
  check_entries(p.theta_c_data(), "theta_C");
  check_entries(p.pi_a_data(), "pi_A");
  check_entries(p.pi_s_data(), "pi_S");
  check_entries(p.theta_a_data(), "theta_A");
  check_entries(p.theta_s_data(), "theta_S");

  double sc = 0.0;
  for (int c = 0; c < k; ++c) sc += p.theta_c(c);
  if (std::abs(sc - 1.0) > tol) issue("theta_C not normalized (sum=" + fmt_double(sc) + ")");

  for (int c = 0; c < k; ++c) {
    double s = 0.0;
    for (ActionId a = 0; a < nA; ++a) s += p.pi_a(c, a);
    if (std::abs(s - 1.0) > tol) {
      issue("pi_A not normalized for c=" + std::to_string(c) + " (sum=" + fmt_double(s) + ")");
    }
    if (p.pi_a(c, end) != 0.0) issue("pi_A assigns mass to END for c=" + std::to_string(c));
  }

  for (ActionId a = 0; a < nA; ++a) {
    for (int c = 0; c < k; ++c) {
      double s = 0.0;
      for (int t = 0; t < r; ++t) s += p.pi_s(a, c, t);
      if (std::abs(s - 1.0) > tol) {
        issue("pi_S not normalized at (a=" + names[static_cast<std::size_t>(a)] +
              ",c=" + std::to_string(c) + ")");
      }
      if (std::abs(p.pi_s(a, c, 0) - 1.0) > tol) {
        issue("pi_S puts mass off stage 1 at (a=" + names[static_cast<std::size_t>(a)] +
              ",c=" + std::to_string(c) + ")");
      }
    }
  }

  for (ActionId a = 0; a < nA; ++a) {
    for (int s = 0; s < r; ++s) {
      for (int c = 0; c < k; ++c) {
        double sa = 0.0;
        for (ActionId b = 0; b < nA; ++b) sa += p.theta_a(a, s, c, b);
        if (a == end) {
          if (sa != 0.0) issue("transition mass out of END at " + cell(a, s, c));
        } else if (std::abs(sa - 1.0) > tol) {
          issue("theta_A not normalized at " + cell(a, s, c) + " (sum=" + fmt_double(sa) + ")");
        }

        double ss = 0.0, skip = 0.0, back = 0.0;
        for (int t = 0; t < r; ++t) {
          double v = p.theta_s(a, s, c, t);
          ss += v;
          if (t < s) back += v;
          if (t > s + 1) skip += v;
        }
        if (std::abs(ss - 1.0) > tol) {
          issue("theta_S not normalized at " + cell(a, s, c) + " (sum=" + fmt_double(ss) + ")");
        }
        if (skip > 0.0) issue("stage-skip mass at " + cell(a, s, c));
        if (back > 0.0) issue("backward stage mass at " + cell(a, s, c));
      }
    }
  }

  for (ActionId a = 0; a < nA; ++a) {
    for (ActionId b = 0; b < nA; ++b) {
      for (int c = 0; c < k; ++c) {
        const TimeDist& d = p.theta_t(a, b, c);
        if (family_of(d) != p.family()) {
          issue("time cell family mismatch at (" + names[static_cast<std::size_t>(a)] + "->" +
                names[static_cast<std::size_t>(b)] + ",c=" + std::to_string(c) + ")");
        } else if (auto why = check_params(d)) {
          issue("invalid time parameters at (" + names[static_cast<std::size_t>(a)] + "->" +
                names[static_cast<std::size_t>(b)] + ",c=" + std::to_string(c) + "): " + *why);
        }
      }
    }
  }
  return rep;
}

void require_valid_model(const ModelParams& params) {
  ValidationReport rep = validate_model(params);
  if (!rep.ok()) throw ValidationError("invalid model:\n" + rep.to_string());
}

// --- joint probability -------------------------------------------------------

double step_time_log_weight(const ModelParams& params, const EventSequence& seq, std::size_t i,
                            int c) {
  if (i == 0) return 0.0;
  const ActionId next = seq.actions[i];
  if (params.vocab().is_end(next)) return 0.0;
  return time_log_weight(params.theta_t(seq.actions[i - 1], next, c), seq.times[i]);
}

double log_joint(const ModelParams& params, const EventSequence& seq, const StageSeq& stages, int c,
                 const JointOptions& opt) {
  validate_sequence(seq, params.vocab());
  const std::size_t m = seq.length();
  if (stages.size() != m) throw InvalidArgument("stage sequence length differs from sequence");
  if (c < 0 || c >= params.n_classes()) throw InvalidArgument("class id out of range");
  if (stages[0] != 1) throw InvalidArgument("stage sequence must start at stage 1");
  for (std::size_t i = 1; i < m; ++i) {
    int step = stages[i] - stages[i - 1];
    if (step != 0 && step != 1) {
      throw InvalidArgument("stage sequence must be non-decreasing with unit steps");
    }
  }
  if (stages[m - 1] > params.n_stages()) throw InvalidArgument("stage exceeds r_plus");

  double lp = safe_log(params.theta_c(c));
  lp += safe_log(params.pi_a(c, seq.actions[0]));
  lp += safe_log(params.pi_s(seq.actions[0], c, stages[0] - 1));
  for (std::size_t i = 1; i < m && lp != kNegInf; ++i) {
    const int prev_s = stages[i - 1] - 1;
    const int cur_s = stages[i] - 1;
    lp += safe_log(params.theta_a(seq.actions[i - 1], prev_s, c, seq.actions[i]));
    lp += safe_log(params.theta_s(seq.actions[i], prev_s, c, cur_s));
    if (opt.use_time && lp != kNegInf) lp += step_time_log_weight(params, seq, i, c);
  }
  return lp;
}

}  // namespace tdpm
