#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace xmodal {

struct ProportionSample {
  std::size_t successes = 0;
  std::size_t trials = 0;
  std::string label;
};

struct ChiSquareResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

// Regularized lower/upper incomplete gamma P(a, x), Q(a, x); series below
// x < a + 1, Lentz continued fraction above.
double regularized_gamma_p(double a, double x);
double regularized_gamma_q(double a, double x);

// Survival function of the chi-square distribution.
double chi_square_sf(double statistic, double degrees_of_freedom);

// Pearson chi-square on the 2x2 success/failure table, no continuity
// correction, 1 degree of freedom. Degenerate tables give (0, 1).
ChiSquareResult two_proportion_chisq(const ProportionSample& a, const ProportionSample& b);

// Holm step-down adjustment, returned in input order.
std::vector<double> holm_adjust(std::span<const double> p_values);

}  // namespace xmodal
