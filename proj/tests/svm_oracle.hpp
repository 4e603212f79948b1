#pragma once

#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

namespace camo::test {

// Exhaustive active-set solution of the SVM dual
//   max sum(a) - 1/2 a^T Q a,  Q_ij = y_i y_j K_ij,  y^T a = 0,  0 <= a_i <= C_i.
// Every index is tried at its lower bound, its upper bound or free; for each
// pattern the equality-constrained stationarity system is solved directly and
// kept if feasible. The optimum of a convex QP is one of these candidates.
inline double brute_force_dual(const Eigen::MatrixXd& K, const std::vector<int>& y, const std::vector<double>& C) {
  const int n = static_cast<int>(y.size());
  Eigen::MatrixXd Q(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) Q(i, j) = y[i] * y[j] * K(i, j);
  int patterns = 1;
  for (int i = 0; i < n; ++i) patterns *= 3;
  double best = -std::numeric_limits<double>::infinity();
  std::vector<int> state(n);
  for (int p = 0; p < patterns; ++p) {
    int code = p;
    std::vector<int> free;
    Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) {
      state[i] = code % 3;
      code /= 3;
      if (state[i] == 1) a[i] = C[i];
      if (state[i] == 2) free.push_back(i);
    }
    const int f = static_cast<int>(free.size());
    if (f > 0) {
      // [Q_FF  -y_F] [a_F]   [1 - Q_F,fixed a_fixed]
      // [y_F^T   0 ] [ b ] = [-y_fixed^T a_fixed    ]
      Eigen::MatrixXd M = Eigen::MatrixXd::Zero(f + 1, f + 1);
      Eigen::VectorXd rhs(f + 1);
      double fixed_sum = 0.0;
      for (int i = 0; i < n; ++i) fixed_sum += y[i] * a[i];
      for (int r = 0; r < f; ++r) {
        const int i = free[r];
        double s = 1.0;
        for (int j = 0; j < n; ++j)
          if (state[j] != 2) s -= Q(i, j) * a[j];
        rhs[r] = s;
        for (int c = 0; c < f; ++c) M(r, c) = Q(i, free[c]);
        M(r, f) = -y[i];
        M(f, r) = y[i];
      }
      rhs[f] = -fixed_sum;
      Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
      if (!lu.isInvertible()) continue;
      const Eigen::VectorXd sol = lu.solve(rhs);
      bool ok = true;
      for (int r = 0; r < f; ++r) {
        if (sol[r] < -1e-12 || sol[r] > C[free[r]] + 1e-12) ok = false;
        a[free[r]] = sol[r];
      }
      if (!ok) continue;
    }
    double eq = 0.0;
    for (int i = 0; i < n; ++i) eq += y[i] * a[i];
    if (std::abs(eq) > 1e-9) continue;
    const double obj = a.sum() - 0.5 * a.dot(Q * a);
    best = std::max(best, obj);
  }
  return best;
}

}  // namespace camo::test
