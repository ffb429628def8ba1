#ifndef ILI_LINALG_HPP_
#define ILI_LINALG_HPP_

#include <vector>

#include "ili/matrix.hpp"

namespace ili {

struct RegressionResult {
  std::vector<double> coefficients;
  double residual_sum_squares = 0.0;
  std::size_t iterations = 0;
  bool used_jitter = false;  // set when the normal equations needed a ridge fallback
};

// Column-wise standardization to zero mean and unit population variance
// (divide by n).  Columns with zero variance become all-zeros columns.
// Requires at least 2 rows.
DenseMatrix standardize_columns(const DenseMatrix& m);

// Ordinary least squares via the normal equations and a Cholesky solve.
// Rank-deficient systems fall back to a small ridge jitter instead of
// failing; the result is flagged through used_jitter.
RegressionResult ols_fit(const DenseMatrix& x, const std::vector<double>& y);

// Cyclic coordinate descent for
//   (1/2n) * ||y - x b||^2 + lambda_reg * ||b||_1,
// warm-started at zero.  Converges when the largest coordinate change in a
// sweep drops below 1e-8, capped at 10000 sweeps.
RegressionResult lasso_fit(const DenseMatrix& x, const std::vector<double>& y,
                           double lambda_reg);

// Solves a * x = b for symmetric positive definite a (in place copy).
// Falls back to growing diagonal jitter when the factorization breaks down;
// returns true if jitter was needed.
bool solve_spd(DenseMatrix a, std::vector<double> b, std::vector<double>* x);

double soft_threshold(double v, double t);

}  // namespace ili

#endif  // ILI_LINALG_HPP_
