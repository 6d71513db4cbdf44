// Copyright 2026 The tdpm Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef TDPM_SRC_TEXT_UTIL_HPP
#define TDPM_SRC_TEXT_UTIL_HPP

#include <cstdio>
#include <string>
#include <string_view>

namespace tdpm::detail {

/// 17 significant digits: round-trips every double.
inline std::string fmt17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// Quotes a CSV field when it contains a separator, quote or newline.
inline std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  out += '"';
  return out;
}

}  // namespace tdpm::detail

#endif  // TDPM_SRC_TEXT_UTIL_HPP
