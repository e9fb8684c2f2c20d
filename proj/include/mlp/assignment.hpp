#pragma once

#include <Eigen/Dense>
#include <vector>

namespace mlp {

/// Exact minimum-cost perfect matching on a square cost matrix (Hungarian
/// method, O(n^3)). Returns row -> column.
std::vector<int> solve_assignment(const Eigen::MatrixXd& cost);

}  // namespace mlp
