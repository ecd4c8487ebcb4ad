#pragma once

#include <Eigen/Dense>
#include <vector>

namespace topo {

/// row_to_col[i] is the column assigned to row i; every row is assigned.
struct Assignment {
  std::vector<int> row_to_col;
  double cost = 0.0;
};

/// Minimum-cost assignment of every row of an M x N matrix (M <= N) to a
/// distinct column. Among optimal assignments the lexicographically smallest
/// row_to_col is returned, so ties resolve the same way on every run.
Assignment hungarian(const Eigen::MatrixXd& cost);

/// Maximum bipartite matching (Hopcroft-Karp). adjacency[u] lists right
/// vertices in [0, n_right). Returns the matching size; match_left[u] is the
/// partner of u or -1.
int max_bipartite_matching(const std::vector<std::vector<int>>& adjacency, int n_right,
                           std::vector<int>* match_left = nullptr);

}  // namespace topo
