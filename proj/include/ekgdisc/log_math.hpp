#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "ekgdisc/error.hpp"

namespace ekgdisc {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

namespace detail {

inline constexpr std::size_t kFactorialTableSize = 4097;

// log2(n!) in extended precision for n < kFactorialTableSize.
inline const std::vector<long double>& log2_factorial_table() {
  static const std::vector<long double> table = [] {
    std::vector<long double> t(kFactorialTableSize);
    t[0] = 0.0L;
    for (std::size_t i = 1; i < t.size(); ++i) {
      t[i] = t[i - 1] + std::log2(static_cast<long double>(i));
    }
    return t;
  }();
  return table;
}

inline long double log2_factorial_ld(std::size_t n) {
  const auto& table = log2_factorial_table();
  if (n < table.size()) return table[n];
  constexpr long double kLn2 = 0.693147180559945309417232121458176568L;
  return std::lgamma(static_cast<long double>(n) + 1.0L) / kLn2;
}

}  // namespace detail

inline double log2_factorial(std::size_t n) {
  return static_cast<double>(detail::log2_factorial_ld(n));
}

/// log2 of the binomial coefficient C(n, k).
inline double log_choose(std::size_t n, std::size_t k) {
  if (k > n) {
    throw Error(ErrorCode::InvalidArgument, "log_choose: k > n");
  }
  if (k == 0 || k == n) return 0.0;
  const long double v = detail::log2_factorial_ld(n) -
                        detail::log2_factorial_ld(k) -
                        detail::log2_factorial_ld(n - k);
  return std::max(0.0, static_cast<double>(v));
}

/// log2(2^a + 2^b), with -inf as the additive identity.
inline double log_add_exp2(double a, double b) {
  if (a < b) std::swap(a, b);
  if (b == kNegInf) return a;
  return a + std::log2(1.0 + std::exp2(b - a));
}

/// log2 of sum_i 2^values[i]; shifted by the maximum for stability.
inline double log_sum_exp2(std::span<const double> values) {
  if (values.empty()) {
    throw Error(ErrorCode::InvalidArgument, "log_sum_exp2: empty input");
  }
  const double top = *std::max_element(values.begin(), values.end());
  if (top == kNegInf) return kNegInf;
  if (std::isinf(top)) return top;
  double sum = 0.0;
  for (double v : values) sum += std::exp2(v - top);
  return top + std::log2(sum);
}

}  // namespace ekgdisc
