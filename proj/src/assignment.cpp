#include "topo/assignment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>

#include "topo/error.hpp"

namespace topo {

namespace {

// Shortest augmenting paths with row/column potentials (rectangular form,
// rows <= cols). Row and column indices are 1-based internally. On return
// u (rows) and v (cols) are optimal duals: a(i,j) - u[i] - v[j] >= 0, with
// equality on every edge any optimal assignment can use.
struct Solution {
  std::vector<int> row_to_col;
  std::vector<double> u, v;
};

Solution solve(const Eigen::MatrixXd& a) {
  const int n = static_cast<int>(a.rows()), m = static_cast<int>(a.cols());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0), minv(m + 1);
  std::vector<int> p(m + 1, 0), way(m + 1, 0);
  std::vector<char> used(m + 1);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = a(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  Solution out;
  out.row_to_col.assign(n, -1);
  for (int j = 1; j <= m; ++j) {
    if (p[j] != 0) out.row_to_col[p[j] - 1] = j - 1;
  }
  out.u.assign(u.begin() + 1, u.end());
  out.v.assign(v.begin() + 1, v.end());
  return out;
}

double total(const Eigen::MatrixXd& a, const std::vector<int>& row_to_col) {
  double s = 0.0;
  for (std::size_t i = 0; i < row_to_col.size(); ++i) s += a(static_cast<Eigen::Index>(i), row_to_col[i]);
  return s;
}

bool same_cost(double x, double y) { return std::abs(x - y) <= 1e-12 * std::max(1.0, std::abs(y)); }

}  // namespace

Assignment hungarian(const Eigen::MatrixXd& cost) {
  const auto rows = cost.rows(), cols = cost.cols();
  require(rows <= cols, "assignment needs at least as many columns as rows");
  require(cost.allFinite(), "assignment cost matrix has non-finite entries");
  Assignment out;
  if (rows == 0) return out;
  const Solution first = solve(cost);
  out.row_to_col = first.row_to_col;
  out.cost = total(cost, out.row_to_col);
  const double slack_tol = 1e-9 * std::max(1.0, cost.cwiseAbs().maxCoeff());

  // Lexicographic tie-break: walk rows in order and move each to the smallest
  // column that still admits an optimal completion of the remaining rows.
  std::vector<char> taken(cols, 0);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const int current = out.row_to_col[i];
    for (int j = 0; j < current; ++j) {
      if (taken[j] || cost(i, j) - first.u[i] - first.v[j] > slack_tol) continue;
      // Remaining rows i+1.. over columns not fixed by rows 0..i.
      std::vector<int> free_cols;
      for (int c = 0; c < cols; ++c) {
        if (!taken[c] && c != j) free_cols.push_back(c);
      }
      const Eigen::Index rest = rows - i - 1;
      std::vector<int> candidate(out.row_to_col.begin(), out.row_to_col.begin() + i);
      candidate.push_back(j);
      if (rest > 0) {
        Eigen::MatrixXd sub(rest, static_cast<Eigen::Index>(free_cols.size()));
        for (Eigen::Index r = 0; r < rest; ++r) {
          for (std::size_t c = 0; c < free_cols.size(); ++c) sub(r, static_cast<Eigen::Index>(c)) = cost(i + 1 + r, free_cols[c]);
        }
        for (int c : solve(sub).row_to_col) candidate.push_back(free_cols[c]);
      }
      const double value = total(cost, candidate);
      if (same_cost(value, out.cost)) {
        out.row_to_col = std::move(candidate);
        break;
      }
    }
    taken[out.row_to_col[i]] = 1;
  }
  out.cost = total(cost, out.row_to_col);
  return out;
}

int max_bipartite_matching(const std::vector<std::vector<int>>& adjacency, int n_right, std::vector<int>* match_left) {
  const int n_left = static_cast<int>(adjacency.size());
  constexpr int kInf = std::numeric_limits<int>::max();
  std::vector<int> left(n_left, -1), right(n_right, -1), dist(n_left);

  auto bfs = [&] {
    std::queue<int> q;
    bool found = false;
    for (int u = 0; u < n_left; ++u) {
      dist[u] = left[u] < 0 ? 0 : kInf;
      if (left[u] < 0) q.push(u);
    }
    while (!q.empty()) {
      const int u = q.front();
      q.pop();
      for (int w : adjacency[u]) {
        const int next = right[w];
        if (next < 0) {
          found = true;
        } else if (dist[next] == kInf) {
          dist[next] = dist[u] + 1;
          q.push(next);
        }
      }
    }
    return found;
  };
  std::vector<std::size_t> it(n_left);
  auto dfs = [&](auto&& self, int u) -> bool {
    for (; it[u] < adjacency[u].size(); ++it[u]) {
      const int w = adjacency[u][it[u]];
      const int next = right[w];
      if (next < 0 || (dist[next] == dist[u] + 1 && self(self, next))) {
        left[u] = w;
        right[w] = u;
        return true;
      }
    }
    dist[u] = kInf;
    return false;
  };

  int size = 0;
  while (bfs()) {
    std::fill(it.begin(), it.end(), 0);
    for (int u = 0; u < n_left; ++u) {
      if (left[u] < 0 && dfs(dfs, u)) ++size;
    }
  }
  if (match_left) *match_left = std::move(left);
  return size;
}

}  // namespace topo
