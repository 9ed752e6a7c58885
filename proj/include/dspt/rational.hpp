#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace dspt {

/// Exact rational with 64-bit numerator/denominator. Comparisons are exact
/// (128-bit cross multiplication), so boundary decisions like `w >= a - eps`
/// never depend on floating-point rounding.
struct rat64 {
  std::int64_t num = 0;
  std::int64_t den = 1;  // always > 0

  constexpr rat64() = default;
  constexpr rat64(std::int64_t n, std::int64_t d) : num(n), den(d) {}

  double to_double() const { return static_cast<double>(num) / static_cast<double>(den); }
};

inline int rat_cmp(const rat64& a, const rat64& b) {
  const __int128 lhs = static_cast<__int128>(a.num) * b.den;
  const __int128 rhs = static_cast<__int128>(b.num) * a.den;
  if (lhs < rhs) return -1;
  if (lhs > rhs) return 1;
  return 0;
}

inline bool operator==(const rat64& a, const rat64& b) { return rat_cmp(a, b) == 0; }
inline bool operator!=(const rat64& a, const rat64& b) { return rat_cmp(a, b) != 0; }
inline bool operator<(const rat64& a, const rat64& b) { return rat_cmp(a, b) < 0; }
inline bool operator<=(const rat64& a, const rat64& b) { return rat_cmp(a, b) <= 0; }
inline bool operator>(const rat64& a, const rat64& b) { return rat_cmp(a, b) > 0; }
inline bool operator>=(const rat64& a, const rat64& b) { return rat_cmp(a, b) >= 0; }

/// Denominator used when converting real-valued interval endpoints to exact
/// rationals. All endpoint math in the library goes through this granularity
/// so that the index and the brute-force oracle make identical boundary
/// decisions.
inline constexpr std::int64_t kEndpointDen = 1'000'000'000'000LL;

/// Snap a real endpoint to the fixed 1e-12 grid.
inline rat64 endpoint_from_double(double x) {
  if (!std::isfinite(x)) throw std::invalid_argument("endpoint_from_double: non-finite value");
  if (std::fabs(x) > 1e6) throw std::invalid_argument("endpoint_from_double: endpoint out of range");
  return rat64(std::llround(x * static_cast<double>(kEndpointDen)), kEndpointDen);
}

/// a - b for two endpoint rationals (shared denominator, exact).
inline rat64 endpoint_sub(const rat64& a, const rat64& b) {
  if (a.den != kEndpointDen || b.den != kEndpointDen)
    throw std::invalid_argument("endpoint_sub: expects endpoint-granularity rationals");
  return rat64(a.num - b.num, kEndpointDen);
}

inline rat64 endpoint_add(const rat64& a, const rat64& b) {
  if (a.den != kEndpointDen || b.den != kEndpointDen)
    throw std::invalid_argument("endpoint_add: expects endpoint-granularity rationals");
  return rat64(a.num + b.num, kEndpointDen);
}

inline std::string to_string(const rat64& r) {
  return std::to_string(r.num) + "/" + std::to_string(r.den);
}

}  // namespace dspt
