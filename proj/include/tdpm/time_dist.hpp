// Copyright 2026 The tdpm Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef TDPM_TIME_DIST_HPP
#define TDPM_TIME_DIST_HPP

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <variant>

namespace tdpm {

/// Family tag shared by every time cell of a model.
enum class TimeFamily { geometric, exponential, weibull };

std::string_view to_string(TimeFamily f);
TimeFamily parse_time_family(std::string_view name);

/// Geometric on {1, 2, ...}: P(t) = p (1-p)^(t-1).
struct Geometric {
  double p = 0.5;
};

struct Exponential {
  double rate = 1.0;
};

struct Weibull {
  double shape = 1.0;
  double scale = 1.0;
};

/// Inter-event time distribution, in days.
using TimeDist = std::variant<Geometric, Exponential, Weibull>;

TimeFamily family_of(const TimeDist& d);

/// Empty optional when the parameters are admissible, otherwise a reason.
std::optional<std::string> check_params(const TimeDist& d);

/// Throws InvalidArgument on inadmissible parameters.
void require_valid(const TimeDist& d);

/// Observed intervals are rounded and clamped to >= 1 for the geometric family.
inline double geometric_support_value(double tau) {
  double r = std::round(tau);
  return r < 1.0 ? 1.0 : r;
}

/// Weight of an interval inside the joint model. Continuous families use the
/// survival value log(1 - F(tau)); the geometric family uses its log pmf.
double time_log_weight(const TimeDist& d, double tau);

/// Log density (pdf or pmf) of the standard distribution. Used for fitting
/// diagnostics only.
double time_log_density(const TimeDist& d, double tau);

/// A draw from the family's standard distribution.
double sample_time(const TimeDist& d, std::mt19937_64& rng);

/// Analytic median of the standard distribution.
double time_median(const TimeDist& d);

struct WeightedTimeSample {
  double tau = 0.0;
  double weight = 0.0;
};

struct TimeFitOptions {
  /// Replacement value for intervals equal to zero in continuous fits.
  double zero_floor = 0.5;
  double min_geometric_p = 1e-6;
  double min_rate = 1e-6;
  double max_rate = 1e6;
  double min_shape = 1e-2;
  double max_shape = 1e2;
  double score_tol = 1e-10;
  int max_iter = 200;
  /// Optional starting shape for the Weibull root search.
  std::optional<double> shape_hint;
};

Geometric fit_geometric(std::span<const WeightedTimeSample> samples, const TimeFitOptions& opt = {});
Exponential fit_exponential(std::span<const WeightedTimeSample> samples,
                            const TimeFitOptions& opt = {});

/// Weighted Weibull MLE via the profile score in the shape. Throws
/// DegenerateData when fewer than two distinct positively weighted intervals
/// exist.
Weibull fit_weibull(std::span<const WeightedTimeSample> samples, const TimeFitOptions& opt = {});

/// fit_weibull, falling back to shape 1 (the exponential MLE) on
/// degenerate data.
Weibull fit_weibull_or_exponential(std::span<const WeightedTimeSample> samples,
                                   const TimeFitOptions& opt = {});

/// Dispatches on the family.
TimeDist fit_time(TimeFamily family, std::span<const WeightedTimeSample> samples,
                  const TimeFitOptions& opt = {});

/// Weighted Weibull log-likelihood (pdf) with the same zero handling as
/// fit_weibull, and its analytic derivative in the shape.
double weibull_weighted_loglik(std::span<const WeightedTimeSample> samples, double shape,
                               double scale, const TimeFitOptions& opt = {});
/// Scale maximizing the weighted likelihood at a fixed shape.
double weibull_profile_scale(std::span<const WeightedTimeSample> samples, double shape,
                             const TimeFitOptions& opt = {});
double weibull_shape_score(std::span<const WeightedTimeSample> samples, double shape, double scale,
                           const TimeFitOptions& opt = {});

}  // namespace tdpm

#endif  // TDPM_TIME_DIST_HPP
