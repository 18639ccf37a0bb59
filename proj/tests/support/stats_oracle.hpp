#pragma once

// Reference statistics for cross-checking: Student t tails from Boost.Math
// and Mann-Whitney p-values by listing every rank assignment.

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

namespace oracle {

inline double t_two_sided(double t, double df) {
  boost::math::students_t dist(df);
  return 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
}

struct TRef {
  double t;
  double df;
  double p;
};

inline TRef welch_reference(const std::vector<double>& a, const std::vector<double>& b) {
  auto mv = [](const std::vector<double>& x) {
    long double m = 0;
    for (double v : x) m += v;
    m /= x.size();
    long double ss = 0;
    for (double v : x) ss += (v - m) * (v - m);
    return std::pair<double, double>(static_cast<double>(m),
                                     static_cast<double>(ss / (x.size() - 1)));
  };
  const auto [m1, v1] = mv(a);
  const auto [m2, v2] = mv(b);
  const double q1 = v1 / a.size(), q2 = v2 / b.size();
  const double t = (m1 - m2) / std::sqrt(q1 + q2);
  const double df = (q1 + q2) * (q1 + q2) / (q1 * q1 / (a.size() - 1) + q2 * q2 / (b.size() - 1));
  return {t, df, t_two_sided(t, df)};
}

inline TRef paired_reference(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n = a.size();
  long double m = 0;
  for (std::size_t i = 0; i < n; ++i) m += a[i] - b[i];
  m /= n;
  long double ss = 0;
  for (std::size_t i = 0; i < n; ++i) ss += (a[i] - b[i] - m) * (a[i] - b[i] - m);
  const double sd = static_cast<double>(std::sqrt(ss / (n - 1)));
  const double t = static_cast<double>(m) / (sd / std::sqrt(static_cast<double>(n)));
  const double df = static_cast<double>(n - 1);
  return {t, df, t_two_sided(t, df)};
}

// Tie-free inputs only. Walks every choice of n1 ranks out of n1 + n2.
inline double mann_whitney_enumerated_p(const std::vector<double>& a,
                                        const std::vector<double>& b, double* u_out = nullptr) {
  const std::size_t n1 = a.size(), n = a.size() + b.size();
  double u_obs = 0;
  for (double x : a) {
    for (double y : b) u_obs += x > y ? 1.0 : 0.0;
  }
  if (u_out) *u_out = u_obs;

  std::vector<bool> pick(n, false);
  std::fill(pick.begin(), pick.begin() + static_cast<std::ptrdiff_t>(n1), true);
  std::sort(pick.begin(), pick.end());
  double total = 0, le = 0, ge = 0;
  do {
    // U = number of (picked, unpicked) pairs with the picked rank higher.
    double u = 0;
    std::size_t unpicked_below = 0;
    for (std::size_t r = 0; r < n; ++r) {
      if (pick[r]) {
        u += static_cast<double>(unpicked_below);
      } else {
        ++unpicked_below;
      }
    }
    total += 1;
    le += u <= u_obs ? 1 : 0;
    ge += u >= u_obs ? 1 : 0;
  } while (std::next_permutation(pick.begin(), pick.end()));
  return std::min(1.0, 2.0 * std::min(le, ge) / total);
}

}  // namespace oracle
