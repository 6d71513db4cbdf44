// Copyright 2026 The tdpm Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef TDPM_LOGSPACE_HPP
#define TDPM_LOGSPACE_HPP

#include <cmath>
#include <limits>
#include <span>

namespace tdpm {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

inline double safe_log(double x) { return x > 0.0 ? std::log(x) : kNegInf; }

/// log(exp(a) + exp(b)); -inf operands are absorbed.
inline double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  if (a < b) std::swap(a, b);
  return a + std::log1p(std::exp(b - a));
}

inline double log_sum_exp(std::span<const double> xs) {
  double hi = kNegInf;
  for (double x : xs) hi = x > hi ? x : hi;
  if (hi == kNegInf) return kNegInf;
  double acc = 0.0;
  for (double x : xs) {
    if (x != kNegInf) acc += std::exp(x - hi);
  }
  return hi + std::log(acc);
}

}  // namespace tdpm

#endif  // TDPM_LOGSPACE_HPP
