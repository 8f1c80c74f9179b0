#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace xmodal {

struct Assignment {
  std::vector<std::size_t> column_of_row;
  double cost = 0.0;  // sum of cost[i][column_of_row[i]], accumulated by row
};

// Exact min-cost perfect matching on a square row-major cost matrix using
// shortest augmenting paths with dual potentials, O(m^3).
Assignment solve_assignment(std::span<const double> cost, std::size_t m);

}  // namespace xmodal
