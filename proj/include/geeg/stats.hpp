#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>

namespace geeg {

enum class TestMethod { Welch, MannWhitney, Paired };
std::string_view to_string(TestMethod m) noexcept;

struct TestResult {
  TestMethod method = TestMethod::Welch;
  double statistic = 0.0;     // t, or U of the first sample
  std::optional<double> df;   // absent for Mann-Whitney
  double p_two_sided = 1.0;
  std::size_t n1 = 0;
  std::size_t n2 = 0;
  bool exact = false;         // Mann-Whitney p from the exact null distribution
};

// I_x(a, b) by continued fraction, relative accuracy around 1e-14.
double regularized_incomplete_beta(double a, double b, double x);

// Two-sided tail P(|T| >= |t|) of Student's t with df degrees of freedom.
double student_t_two_sided(double t, double df);

double normal_cdf(double z) noexcept;

// Welch's unequal-variance t with Welch-Satterthwaite df. Throws
// TooShortInput for n < 2, NonFiniteInput, or DegenerateInput when both
// groups have zero variance.
TestResult welch_t(std::span<const double> a, std::span<const double> b);

// U = R1 - n1(n1+1)/2 with midranks. Exact two-sided p when n1 + n2 <= 20
// and there are no ties, otherwise the normal approximation with tie and
// continuity corrections.
TestResult mann_whitney_u(std::span<const double> a, std::span<const double> b);

// Exact two-sided p for U with the given sizes: min(1, 2 * smaller tail).
double mann_whitney_exact_p(double u, std::size_t n1, std::size_t n2);

// One-sample t on a - b, df = n - 1. Throws LengthMismatch, TooShortInput or
// DegenerateInput when all differences are equal.
TestResult paired_t(std::span<const double> a, std::span<const double> b);

}  // namespace geeg
