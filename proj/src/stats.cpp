#include "xmodal/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "xmodal/error.hpp"

namespace xmodal {
namespace {

constexpr double kEps = 1e-15;
constexpr int kMaxIterations = 10000;

double gamma_series(double a, double x) {
  double term = 1.0 / a;
  double sum = term;
  for (int n = 1; n < kMaxIterations; ++n) {
    term *= x / (a + n);
    sum += term;
    if (std::abs(term) < std::abs(sum) * kEps) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double gamma_continued_fraction(double a, double x) {
  constexpr double kTiny = std::numeric_limits<double>::min() / kEps;
  double b = x + 1.0 - a;
  double c = 1.0 / kTiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < kMaxIterations; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double regularized_gamma_p(double a, double x) {
  if (!(a > 0.0) || x < 0.0) throw Error(ErrorCode::kInvalidArgument, "incomplete gamma domain");
  if (x == 0.0) return 0.0;
  if (x < a + 1.0) return gamma_series(a, x);
  return 1.0 - gamma_continued_fraction(a, x);
}

double regularized_gamma_q(double a, double x) {
  if (!(a > 0.0) || x < 0.0) throw Error(ErrorCode::kInvalidArgument, "incomplete gamma domain");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - gamma_series(a, x);
  return gamma_continued_fraction(a, x);
}

double chi_square_sf(double statistic, double degrees_of_freedom) {
  if (statistic <= 0.0) return 1.0;
  return regularized_gamma_q(0.5 * degrees_of_freedom, 0.5 * statistic);
}

ChiSquareResult two_proportion_chisq(const ProportionSample& a, const ProportionSample& b) {
  if (a.trials == 0 || b.trials == 0) {
    throw Error(ErrorCode::kInvalidArgument, "proportion samples need at least one trial");
  }
  if (a.successes > a.trials || b.successes > b.trials) {
    throw Error(ErrorCode::kInvalidArgument, "successes exceed trials");
  }
  const double n1 = static_cast<double>(a.trials);
  const double n2 = static_cast<double>(b.trials);
  const double s = static_cast<double>(a.successes + b.successes);
  const double n = n1 + n2;
  const double f = n - s;
  if (s == 0.0 || f == 0.0) return {};
  const double observed[2][2] = {
      {static_cast<double>(a.successes), n1 - static_cast<double>(a.successes)},
      {static_cast<double>(b.successes), n2 - static_cast<double>(b.successes)}};
  const double row[2] = {n1, n2};
  const double col[2] = {s, f};
  double stat = 0.0;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) {
      const double expected = row[i] * col[j] / n;
      const double d = observed[i][j] - expected;
      stat += d * d / expected;
    }
  }
  return {stat, chi_square_sf(stat, 1.0)};
}

std::vector<double> holm_adjust(std::span<const double> p_values) {
  for (auto p : p_values) {
    if (!(p >= 0.0 && p <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "p-value outside [0, 1]");
  }
  const std::size_t m = p_values.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return p_values[x] < p_values[y]; });
  std::vector<double> out(m);
  double running = 0.0;
  for (std::size_t rank = 0; rank < m; ++rank) {
    const double scaled = std::min(1.0, static_cast<double>(m - rank) * p_values[order[rank]]);
    running = std::max(running, scaled);
    out[order[rank]] = running;
  }
  return out;
}

}  // namespace xmodal
