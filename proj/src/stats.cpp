#include "geeg/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "geeg/error.hpp"

namespace geeg {
namespace {

void require_sample(std::span<const double> x, const char* what) {
  if (x.size() < 2) {
    throw Error(ErrorCode::TooShortInput, std::string(what) + " needs >= 2 values");
  }
  for (double v : x) {
    if (!std::isfinite(v)) {
      throw Error(ErrorCode::NonFiniteInput, std::string(what) + " has a non-finite value");
    }
  }
}

double mean(std::span<const double> x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double sample_variance(std::span<const double> x, double m) {
  double ss = 0.0;
  for (double v : x) ss += (v - m) * (v - m);
  return ss / static_cast<double>(x.size() - 1);
}

// Modified Lentz evaluation of the incomplete beta continued fraction.
double beta_continued_fraction(double a, double b, double x) {
  constexpr double tiny = 1e-300;
  constexpr double eps = 1e-16;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 100000; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < eps) return h;
  }
  throw Error(ErrorCode::InvalidSpec, "incomplete beta continued fraction did not converge");
}

}  // namespace

std::string_view to_string(TestMethod m) noexcept {
  switch (m) {
    case TestMethod::Welch: return "welch";
    case TestMethod::MannWhitney: return "mannwhitney";
    case TestMethod::Paired: return "paired";
  }
  return "?";
}

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0) || !(x >= 0.0 && x <= 1.0)) {
    throw Error(ErrorCode::InvalidSpec, "incomplete beta arguments out of range");
  }
  if (x == 0.0 || x == 1.0) return x;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_two_sided(double t, double df) {
  if (!(df > 0.0)) throw Error(ErrorCode::InvalidSpec, "t distribution needs df > 0");
  if (std::isnan(t)) return std::numeric_limits<double>::quiet_NaN();
  if (std::isinf(t)) return 0.0;
  const double p = regularized_incomplete_beta(0.5 * df, 0.5, df / (df + t * t));
  return std::clamp(p, 0.0, 1.0);
}

double normal_cdf(double z) noexcept { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

TestResult welch_t(std::span<const double> a, std::span<const double> b) {
  require_sample(a, "welch_t first group");
  require_sample(b, "welch_t second group");
  const double n1 = static_cast<double>(a.size()), n2 = static_cast<double>(b.size());
  const double m1 = mean(a), m2 = mean(b);
  const double v1 = sample_variance(a, m1), v2 = sample_variance(b, m2);
  if (v1 == 0.0 && v2 == 0.0) {
    throw Error(ErrorCode::DegenerateInput, "both groups have zero variance");
  }
  const double s1 = v1 / n1, s2 = v2 / n2;
  const double se2 = s1 + s2;

  TestResult r;
  r.method = TestMethod::Welch;
  r.n1 = a.size();
  r.n2 = b.size();
  r.statistic = (m1 - m2) / std::sqrt(se2);
  r.df = se2 * se2 / (s1 * s1 / (n1 - 1.0) + s2 * s2 / (n2 - 1.0));
  r.p_two_sided = student_t_two_sided(r.statistic, *r.df);
  return r;
}

double mann_whitney_exact_p(double u, std::size_t n1, std::size_t n2) {
  // counts[k] = number of rank arrangements with U == k, built up one
  // observation at a time: f(i, j, k) = f(i-1, j, k-j) + f(i, j-1, k).
  const std::size_t max_u = n1 * n2;
  std::vector<std::vector<double>> f(n2 + 1, std::vector<double>(max_u + 1, 0.0));
  for (std::size_t j = 0; j <= n2; ++j) f[j][0] = 1.0;
  for (std::size_t i = 1; i <= n1; ++i) {
    std::vector<std::vector<double>> g(n2 + 1, std::vector<double>(max_u + 1, 0.0));
    g[0][0] = 1.0;
    for (std::size_t j = 1; j <= n2; ++j) {
      for (std::size_t k = 0; k <= i * j; ++k) {
        g[j][k] = (k >= j ? f[j][k - j] : 0.0) + g[j - 1][k];
      }
    }
    f = std::move(g);
  }
  const auto& counts = f[n2];
  const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
  double lower = 0.0, upper = 0.0;
  for (std::size_t k = 0; k <= max_u; ++k) {
    const double kk = static_cast<double>(k);
    if (kk <= u + 1e-9) lower += counts[k];
    if (kk >= u - 1e-9) upper += counts[k];
  }
  return std::min(1.0, 2.0 * std::min(lower, upper) / total);
}

TestResult mann_whitney_u(std::span<const double> a, std::span<const double> b) {
  require_sample(a, "mann_whitney_u first group");
  require_sample(b, "mann_whitney_u second group");
  const std::size_t n1 = a.size(), n2 = b.size(), n = n1 + n2;

  std::vector<std::pair<double, bool>> pooled;  // value, belongs to a
  pooled.reserve(n);
  for (double v : a) pooled.emplace_back(v, true);
  for (double v : b) pooled.emplace_back(v, false);
  std::sort(pooled.begin(), pooled.end(),
            [](const auto& x, const auto& y) { return x.first < y.first; });

  double rank_sum_a = 0.0;
  double tie_term = 0.0;  // sum of t^3 - t over tie groups
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && pooled[j].first == pooled[i].first) ++j;
    const double midrank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (pooled[k].second) rank_sum_a += midrank;
    }
    const double t = static_cast<double>(j - i);
    tie_term += t * t * t - t;
    i = j;
  }

  TestResult r;
  r.method = TestMethod::MannWhitney;
  r.n1 = n1;
  r.n2 = n2;
  const double dn1 = static_cast<double>(n1), dn2 = static_cast<double>(n2);
  r.statistic = rank_sum_a - dn1 * (dn1 + 1.0) / 2.0;

  if (n <= 20 && tie_term == 0.0) {
    r.exact = true;
    r.p_two_sided = mann_whitney_exact_p(r.statistic, n1, n2);
    return r;
  }
  const double dn = static_cast<double>(n);
  const double mu = dn1 * dn2 / 2.0;
  const double var = dn1 * dn2 / 12.0 * ((dn + 1.0) - tie_term / (dn * (dn - 1.0)));
  if (!(var > 0.0)) {
    r.p_two_sided = 1.0;
    return r;
  }
  const double z = std::max(0.0, std::abs(r.statistic - mu) - 0.5) / std::sqrt(var);
  r.p_two_sided = std::min(1.0, 2.0 * normal_cdf(-z));
  return r;
}

TestResult paired_t(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw Error(ErrorCode::LengthMismatch,
                "paired_t needs equal lengths (" + std::to_string(a.size()) + " vs " +
                    std::to_string(b.size()) + ")");
  }
  require_sample(a, "paired_t first series");
  require_sample(b, "paired_t second series");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
  const double md = mean(d);
  const double vd = sample_variance(d, md);
  // Differences that agree up to rounding (b = a + c) count as constant.
  double scale = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    scale = std::max({scale, std::abs(a[i]), std::abs(b[i])});
  }
  if (!(std::sqrt(vd) > 1e-12 * scale)) {
    throw Error(ErrorCode::DegenerateInput, "paired differences have zero spread");
  }
  TestResult r;
  r.method = TestMethod::Paired;
  r.n1 = a.size();
  r.n2 = b.size();
  r.statistic = md / std::sqrt(vd / static_cast<double>(d.size()));
  r.df = static_cast<double>(d.size() - 1);
  r.p_two_sided = student_t_two_sided(r.statistic, *r.df);
  return r;
}

}  // namespace geeg
