// Copyright 2026 The tdpm Authors
// SPDX-License-Identifier: Apache-2.0

#include "tdpm/time_dist.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "tdpm/errors.hpp"
#include "tdpm/logspace.hpp"

namespace tdpm {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double total_weight(std::span<const WeightedTimeSample> samples) {
  double w = 0.0;
  for (const auto& s : samples) {
    if (s.weight < 0.0 || !std::isfinite(s.weight)) {
      throw InvalidArgument("time sample weight must be finite and non-negative");
    }
    if (s.tau < 0.0 || !std::isfinite(s.tau)) {
      throw InvalidArgument("time sample interval must be finite and non-negative");
    }
    w += s.weight;
  }
  return w;
}

double continuous_value(double tau, const TimeFitOptions& opt) {
  return tau > 0.0 ? tau : opt.zero_floor;
}

// Log-domain view of the positively weighted samples, shifted so that the
// largest log-interval is zero. Keeps x^k finite over the whole shape bracket.
struct WeibullData {
  std::vector<double> w;
  std::vector<double> y;  // log x - log_max
  double log_max = 0.0;
  double total_w = 0.0;
  double mean_log = 0.0;  // weighted mean of y
};

WeibullData prepare_weibull(std::span<const WeightedTimeSample> samples, const TimeFitOptions& opt) {
  WeibullData d;
  d.total_w = total_weight(samples);
  if (d.total_w <= 0.0) throw DataError("weibull fit: total weight is zero");
  d.log_max = -std::numeric_limits<double>::infinity();
  for (const auto& s : samples) {
    if (s.weight <= 0.0) continue;
    double lx = std::log(continuous_value(s.tau, opt));
    d.w.push_back(s.weight);
    d.y.push_back(lx);
    d.log_max = std::max(d.log_max, lx);
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < d.y.size(); ++i) {
    d.y[i] -= d.log_max;
    acc += d.w[i] * d.y[i];
  }
  d.mean_log = acc / d.total_w;
  return d;
}

struct ProfileEval {
  double score = 0.0;  // profile score h(k)
  double slope = 0.0;  // h'(k)
  double log_mean_pow = 0.0;  // log(sum w e^{k y} / W)
};

ProfileEval profile_eval(const WeibullData& d, double k) {
  // Weighted moments of y under the tilted weights w e^{k y}.
  double s0 = 0.0, s1 = 0.0, s2 = 0.0;
  for (std::size_t i = 0; i < d.y.size(); ++i) {
    double t = d.w[i] * std::exp(k * d.y[i]);
    s0 += t;
    s1 += t * d.y[i];
    s2 += t * d.y[i] * d.y[i];
  }
  ProfileEval e;
  double m1 = s1 / s0;
  double var = std::max(0.0, s2 / s0 - m1 * m1);
  e.score = m1 - 1.0 / k - d.mean_log;
  e.slope = var + 1.0 / (k * k);
  e.log_mean_pow = std::log(s0 / d.total_w);
  return e;
}

double profile_scale(const WeibullData& d, double k, const ProfileEval& e) {
  return std::exp(d.log_max + e.log_mean_pow / k);
}

}  // namespace

std::string_view to_string(TimeFamily f) {
  switch (f) {
    case TimeFamily::geometric:
      return "geometric";
    case TimeFamily::exponential:
      return "exponential";
    case TimeFamily::weibull:
      return "weibull";
  }
  return "unknown";
}

TimeFamily parse_time_family(std::string_view name) {
  if (name == "geometric") return TimeFamily::geometric;
  if (name == "exponential") return TimeFamily::exponential;
  if (name == "weibull") return TimeFamily::weibull;
  throw InvalidArgument("unknown time family '" + std::string(name) + "'");
}

TimeFamily family_of(const TimeDist& d) {
  return std::visit(overloaded{[](const Geometric&) { return TimeFamily::geometric; },
                               [](const Exponential&) { return TimeFamily::exponential; },
                               [](const Weibull&) { return TimeFamily::weibull; }},
                    d);
}

std::optional<std::string> check_params(const TimeDist& d) {
  return std::visit(
      overloaded{[](const Geometric& g) -> std::optional<std::string> {
                   if (!(g.p > 0.0 && g.p <= 1.0)) {
                     return "geometric p=" + std::to_string(g.p) + " outside (0, 1]";
                   }
                   return std::nullopt;
                 },
                 [](const Exponential& e) -> std::optional<std::string> {
                   if (!(e.rate > 0.0) || !std::isfinite(e.rate)) {
                     return "exponential rate=" + std::to_string(e.rate) + " not positive";
                   }
                   return std::nullopt;
                 },
                 [](const Weibull& w) -> std::optional<std::string> {
                   if (!(w.shape > 0.0) || !(w.scale > 0.0) || !std::isfinite(w.shape) ||
                       !std::isfinite(w.scale)) {
                     return "weibull shape=" + std::to_string(w.shape) +
                            " scale=" + std::to_string(w.scale) + " not positive";
                   }
                   return std::nullopt;
                 }},
      d);
}

void require_valid(const TimeDist& d) {
  if (auto why = check_params(d)) throw InvalidArgument(*why);
}

double time_log_weight(const TimeDist& d, double tau) {
  if (!(tau >= 0.0)) throw InvalidArgument("time interval must be non-negative");
  require_valid(d);
  return std::visit(overloaded{[tau](const Geometric& g) {
                                 double t = geometric_support_value(tau);
                                 if (t == 1.0) return std::log(g.p);
                                 if (g.p == 1.0) return kNegInf;
                                 return std::log(g.p) + (t - 1.0) * std::log1p(-g.p);
                               },
                               [tau](const Exponential& e) { return -e.rate * tau; },
                               [tau](const Weibull& w) { return -std::pow(tau / w.scale, w.shape); }},
                    d);
}

double time_log_density(const TimeDist& d, double tau) {
  if (!(tau >= 0.0)) throw InvalidArgument("time interval must be non-negative");
  require_valid(d);
  return std::visit(
      overloaded{[&](const Geometric&) { return time_log_weight(d, tau); },
                 [tau](const Exponential& e) { return std::log(e.rate) - e.rate * tau; },
                 [tau](const Weibull& w) {
                   if (tau == 0.0) {
                     if (w.shape < 1.0) return std::numeric_limits<double>::infinity();
                     return w.shape == 1.0 ? -std::log(w.scale) : kNegInf;
                   }
                   double z = tau / w.scale;
                   return std::log(w.shape) - std::log(w.scale) + (w.shape - 1.0) * std::log(z) -
                          std::pow(z, w.shape);
                 }},
      d);
}

double sample_time(const TimeDist& d, std::mt19937_64& rng) {
  require_valid(d);
  return std::visit(overloaded{[&rng](const Geometric& g) {
                                 if (g.p >= 1.0) return 1.0;
                                 std::geometric_distribution<long long> dist(g.p);
                                 return static_cast<double>(dist(rng) + 1);
                               },
                               [&rng](const Exponential& e) {
                                 std::exponential_distribution<double> dist(e.rate);
                                 return dist(rng);
                               },
                               [&rng](const Weibull& w) {
                                 std::weibull_distribution<double> dist(w.shape, w.scale);
                                 return dist(rng);
                               }},
                    d);
}

double time_median(const TimeDist& d) {
  require_valid(d);
  return std::visit(overloaded{[](const Geometric& g) {
                                 if (g.p >= 1.0) return 1.0;
                                 // smallest t with 1 - (1-p)^t >= 1/2
                                 double t = std::ceil(std::log(0.5) / std::log1p(-g.p) - 1e-12);
                                 return std::max(1.0, t);
                               },
                               [](const Exponential& e) { return std::log(2.0) / e.rate; },
                               [](const Weibull& w) {
                                 return w.scale * std::pow(std::log(2.0), 1.0 / w.shape);
                               }},
                    d);
}

Geometric fit_geometric(std::span<const WeightedTimeSample> samples, const TimeFitOptions& opt) {
  double w = total_weight(samples);
  if (w <= 0.0) throw DataError("geometric fit: total weight is zero");
  double wt = 0.0;
  for (const auto& s : samples) wt += s.weight * geometric_support_value(s.tau);
  double p = w / wt;
  return Geometric{std::clamp(p, opt.min_geometric_p, 1.0)};
}

Exponential fit_exponential(std::span<const WeightedTimeSample> samples, const TimeFitOptions& opt) {
  double w = total_weight(samples);
  if (w <= 0.0) throw DataError("exponential fit: total weight is zero");
  double wt = 0.0;
  for (const auto& s : samples) wt += s.weight * continuous_value(s.tau, opt);
  if (!(wt > 0.0)) throw DataError("exponential fit: weighted interval sum is zero");
  return Exponential{std::clamp(w / wt, opt.min_rate, opt.max_rate)};
}

Weibull fit_weibull(std::span<const WeightedTimeSample> samples, const TimeFitOptions& opt) {
  WeibullData d = prepare_weibull(samples, opt);
  bool distinct = false;
  for (double y : d.y) {
    if (y != d.y.front()) {
      distinct = true;
      break;
    }
  }
  if (!distinct) {
    throw DegenerateData("weibull fit: fewer than two distinct weighted intervals");
  }

  double lo = opt.min_shape;
  double hi = opt.max_shape;
  ProfileEval at_lo = profile_eval(d, lo);
  if (at_lo.score >= 0.0) return Weibull{lo, profile_scale(d, lo, at_lo)};
  ProfileEval at_hi = profile_eval(d, hi);
  if (at_hi.score <= 0.0) return Weibull{hi, profile_scale(d, hi, at_hi)};

  double k = 0.0;
  if (opt.shape_hint && *opt.shape_hint > lo && *opt.shape_hint < hi) {
    k = *opt.shape_hint;
  } else {
    // Moment estimate: sd(log x) ~ pi / (k sqrt 6).
    double var = 0.0;
    for (std::size_t i = 0; i < d.y.size(); ++i) {
      double dy = d.y[i] - d.mean_log;
      var += d.w[i] * dy * dy;
    }
    var /= d.total_w;
    k = std::clamp(1.2825 / std::sqrt(var), lo * 2.0, hi * 0.5);
  }

  ProfileEval e = profile_eval(d, k);
  for (int it = 0; it < opt.max_iter && std::abs(e.score) >= opt.score_tol; ++it) {
    if (e.score < 0.0) {
      lo = k;
    } else {
      hi = k;
    }
    double next = k - e.score / e.slope;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == k || hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * k) break;
    k = next;
    e = profile_eval(d, k);
  }
  return Weibull{k, profile_scale(d, k, e)};
}

Weibull fit_weibull_or_exponential(std::span<const WeightedTimeSample> samples,
                                   const TimeFitOptions& opt) {
  try {
    return fit_weibull(samples, opt);
  } catch (const DegenerateData&) {
    Exponential e = fit_exponential(samples, opt);
    return Weibull{1.0, 1.0 / e.rate};
  }
}

TimeDist fit_time(TimeFamily family, std::span<const WeightedTimeSample> samples,
                  const TimeFitOptions& opt) {
  switch (family) {
    case TimeFamily::geometric:
      return fit_geometric(samples, opt);
    case TimeFamily::exponential:
      return fit_exponential(samples, opt);
    case TimeFamily::weibull:
      return fit_weibull_or_exponential(samples, opt);
  }
  throw InvalidArgument("unknown time family");
}

double weibull_weighted_loglik(std::span<const WeightedTimeSample> samples, double shape,
                               double scale, const TimeFitOptions& opt) {
  double ll = 0.0;
  for (const auto& s : samples) {
    if (s.weight <= 0.0) continue;
    double z = continuous_value(s.tau, opt) / scale;
    ll += s.weight *
          (std::log(shape) - std::log(scale) + (shape - 1.0) * std::log(z) - std::pow(z, shape));
  }
  return ll;
}

double weibull_profile_scale(std::span<const WeightedTimeSample> samples, double shape,
                             const TimeFitOptions& opt) {
  WeibullData d = prepare_weibull(samples, opt);
  return profile_scale(d, shape, profile_eval(d, shape));
}

double weibull_shape_score(std::span<const WeightedTimeSample> samples, double shape, double scale,
                           const TimeFitOptions& opt) {
  double g = 0.0;
  for (const auto& s : samples) {
    if (s.weight <= 0.0) continue;
    double lz = std::log(continuous_value(s.tau, opt) / scale);
    g += s.weight * (1.0 / shape + lz - std::exp(shape * lz) * lz);
  }
  return g;
}

}  // namespace tdpm
