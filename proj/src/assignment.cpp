#include "xmodal/assignment.hpp"

#include <algorithm>
#include <limits>

#include "xmodal/error.hpp"

namespace xmodal {

Assignment solve_assignment(std::span<const double> cost, std::size_t m) {
  if (cost.size() != m * m) {
    throw Error(ErrorCode::kDimensionMismatch, "cost matrix is not m x m");
  }
  constexpr double kInf = std::numeric_limits<double>::infinity();
  constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

  // 1-based columns; column 0 is the virtual source of each augmentation.
  std::vector<double> u(m + 1, 0.0), v(m + 1, 0.0);
  std::vector<std::size_t> row_of_col(m + 1, kNone);
  std::vector<std::size_t> way(m + 1, 0);
  std::vector<double> min_to(m + 1);
  std::vector<char> used(m + 1);

  for (std::size_t i = 0; i < m; ++i) {
    row_of_col[0] = i;
    std::size_t j0 = 0;
    std::fill(min_to.begin(), min_to.end(), kInf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = row_of_col[j0];
      double delta = kInf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double reduced = cost[i0 * m + (j - 1)] - u[i0 + 1] - v[j];
        if (reduced < min_to[j]) {
          min_to[j] = reduced;
          way[j] = j0;
        }
        if (min_to[j] < delta) {
          delta = min_to[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[row_of_col[j] + 1] += delta;
          v[j] -= delta;
        } else {
          min_to[j] -= delta;
        }
      }
      j0 = j1;
    } while (row_of_col[j0] != kNone);
    do {
      const std::size_t j1 = way[j0];
      row_of_col[j0] = row_of_col[j1];
      j0 = j1;
    } while (j0 != 0);
  }

  Assignment out;
  out.column_of_row.assign(m, 0);
  for (std::size_t j = 1; j <= m; ++j) out.column_of_row[row_of_col[j]] = j - 1;
  for (std::size_t i = 0; i < m; ++i) out.cost += cost[i * m + out.column_of_row[i]];
  return out;
}

}  // namespace xmodal
