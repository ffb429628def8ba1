#include "ili/linalg.hpp"

#include <cmath>
#include <stdexcept>

namespace ili {

DenseMatrix standardize_columns(const DenseMatrix& m) {
  if (m.rows < 2)
    throw std::invalid_argument("standardize_columns: need at least 2 rows");
  const double n = static_cast<double>(m.rows);
  DenseMatrix out(m.rows, m.cols);
  for (std::size_t c = 0; c < m.cols; ++c) {
    double mean = 0.0;
    for (std::size_t r = 0; r < m.rows; ++r) mean += m.at(r, c);
    mean /= n;
    double var = 0.0;
    for (std::size_t r = 0; r < m.rows; ++r) {
      double d = m.at(r, c) - mean;
      var += d * d;
    }
    var /= n;
    if (var < 1e-24) {
      for (std::size_t r = 0; r < m.rows; ++r) out.at(r, c) = 0.0;
    } else {
      const double inv_sd = 1.0 / std::sqrt(var);
      for (std::size_t r = 0; r < m.rows; ++r)
        out.at(r, c) = (m.at(r, c) - mean) * inv_sd;
    }
  }
  return out;
}

namespace {

// Plain Cholesky; returns false if a non-positive pivot shows up.
bool cholesky(DenseMatrix& a) {
  const std::size_t n = a.rows;
  for (std::size_t j = 0; j < n; ++j) {
    double d = a.at(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= a.at(j, k) * a.at(j, k);
    if (!(d > 0.0)) return false;
    const double l = std::sqrt(d);
    a.at(j, j) = l;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a.at(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= a.at(i, k) * a.at(j, k);
      a.at(i, j) = s / l;
    }
  }
  return true;
}

void cholesky_solve(const DenseMatrix& l, std::vector<double>& b) {
  const std::size_t n = l.rows;
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= l.at(i, k) * b[k];
    b[i] = s / l.at(i, i);
  }
  for (std::size_t ii = n; ii > 0; --ii) {
    const std::size_t i = ii - 1;
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= l.at(k, i) * b[k];
    b[i] = s / l.at(i, i);
  }
}

}  // namespace

bool solve_spd(DenseMatrix a, std::vector<double> b, std::vector<double>* x) {
  const std::size_t n = a.rows;
  if (a.cols != n || b.size() != n)
    throw std::invalid_argument("solve_spd: shape mismatch");
  DenseMatrix l = a;
  bool jittered = false;
  double jitter = 1e-10;
  while (!cholesky(l)) {
    jittered = true;
    l = a;
    for (std::size_t i = 0; i < n; ++i) l.at(i, i) += jitter;
    jitter *= 100.0;
    if (jitter > 1e6)
      throw std::runtime_error("solve_spd: factorization failed");
  }
  cholesky_solve(l, b);
  *x = std::move(b);
  return jittered;
}

RegressionResult ols_fit(const DenseMatrix& x, const std::vector<double>& y) {
  if (x.rows != y.size())
    throw std::invalid_argument("ols_fit: row count does not match y");
  if (x.rows < x.cols)
    throw std::invalid_argument("ols_fit: fewer rows than columns");
  RegressionResult res;
  res.iterations = 1;
  if (x.cols == 0) {
    double rss = 0.0;
    for (double v : y) rss += v * v;
    res.residual_sum_squares = rss;
    return res;
  }
  DenseMatrix gram = matmul_ta(x, x);
  std::vector<double> xty(x.cols, 0.0);
  for (std::size_t r = 0; r < x.rows; ++r) {
    const double* row = x.row_ptr(r);
    for (std::size_t c = 0; c < x.cols; ++c) xty[c] += row[c] * y[r];
  }
  res.used_jitter = solve_spd(gram, xty, &res.coefficients);
  double rss = 0.0;
  for (std::size_t r = 0; r < x.rows; ++r) {
    const double* row = x.row_ptr(r);
    double pred = 0.0;
    for (std::size_t c = 0; c < x.cols; ++c) pred += row[c] * res.coefficients[c];
    const double e = y[r] - pred;
    rss += e * e;
  }
  res.residual_sum_squares = rss;
  return res;
}

double soft_threshold(double v, double t) {
  if (v > t) return v - t;
  if (v < -t) return v + t;
  return 0.0;
}

RegressionResult lasso_fit(const DenseMatrix& x, const std::vector<double>& y,
                           double lambda_reg) {
  if (lambda_reg < 0.0)
    throw std::invalid_argument("lasso_fit: lambda_reg must be >= 0");
  if (x.rows != y.size())
    throw std::invalid_argument("lasso_fit: row count does not match y");
  const std::size_t n = x.rows;
  const std::size_t p = x.cols;
  const double inv_n = 1.0 / static_cast<double>(n);

  std::vector<double> col_sq(p, 0.0);  // (1/n) <x_k, x_k>
  for (std::size_t r = 0; r < n; ++r) {
    const double* row = x.row_ptr(r);
    for (std::size_t c = 0; c < p; ++c) col_sq[c] += row[c] * row[c];
  }
  for (std::size_t c = 0; c < p; ++c) col_sq[c] *= inv_n;

  std::vector<double> beta(p, 0.0);
  std::vector<double> resid(y);  // y - x beta, maintained incrementally

  const double tol = 1e-8;
  const std::size_t max_sweeps = 10000;
  std::size_t sweep = 0;
  for (; sweep < max_sweeps; ++sweep) {
    double max_change = 0.0;
    for (std::size_t k = 0; k < p; ++k) {
      if (col_sq[k] == 0.0) continue;  // dead column stays at zero
      double rho = 0.0;
      for (std::size_t r = 0; r < n; ++r) rho += x.at(r, k) * resid[r];
      rho = rho * inv_n + col_sq[k] * beta[k];
      const double new_beta = soft_threshold(rho, lambda_reg) / col_sq[k];
      const double delta = new_beta - beta[k];
      if (delta != 0.0) {
        for (std::size_t r = 0; r < n; ++r) resid[r] -= delta * x.at(r, k);
        beta[k] = new_beta;
      }
      max_change = std::max(max_change, std::abs(delta));
    }
    if (max_change < tol) {
      ++sweep;
      break;
    }
  }

  RegressionResult res;
  res.coefficients = std::move(beta);
  res.iterations = sweep;
  double rss = 0.0;
  for (double e : resid) rss += e * e;
  res.residual_sum_squares = rss;
  return res;
}

}  // namespace ili
