#include "smuciv/banded.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "smuciv/errors.hpp"

namespace smuciv {

SymBandMatrix::SymBandMatrix(int n, int bw)
    : n_(n), bw_(std::min(bw, n > 0 ? n - 1 : 0)),
      data_(static_cast<std::size_t>(n) * (std::min(bw, n > 0 ? n - 1 : 0) + 1), 0.0) {
  if (n < 0 || bw < 0) throw ConfigError("banded matrix dimensions must be non-negative");
}

double SymBandMatrix::operator()(int i, int j) const {
  if (i < j) std::swap(i, j);
  if (i - j > bw_) return 0.0;
  return lower(i, j);
}

void SymBandMatrix::add(int i, int j, double v) {
  if (i < j) std::swap(i, j);
  if (i - j > bw_)
    throw NumericalError("entry (" + std::to_string(i) + "," + std::to_string(j) +
                         ") lies outside the half-bandwidth " + std::to_string(bw_));
  lower(i, j) += v;
}

Eigen::VectorXd SymBandMatrix::multiply(const Eigen::VectorXd& x) const {
  Eigen::VectorXd y = Eigen::VectorXd::Zero(n_);
  for (int j = 0; j < n_; ++j) {
    const int last = std::min(n_ - 1, j + bw_);
    y(j) += lower(j, j) * x(j);
    for (int i = j + 1; i <= last; ++i) {
      const double a = lower(i, j);
      y(i) += a * x(j);
      y(j) += a * x(i);
    }
  }
  return y;
}

Eigen::MatrixXd SymBandMatrix::to_dense() const {
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n_, n_);
  for (int j = 0; j < n_; ++j)
    for (int i = j; i <= std::min(n_ - 1, j + bw_); ++i) d(i, j) = d(j, i) = lower(i, j);
  return d;
}

BandCholesky::BandCholesky(const SymBandMatrix& K)
    : n_(K.size()), bw_(K.bandwidth()), data_(static_cast<std::size_t>(n_) * (bw_ + 1), 0.0) {
  const int w = bw_ + 1;
  for (int j = 0; j < n_; ++j)
    for (int i = j; i <= std::min(n_ - 1, j + bw_); ++i) data_[j * w + (i - j)] = K.lower(i, j);

  // Right-looking column update restricted to the band.
  for (int j = 0; j < n_; ++j) {
    double* col = &data_[static_cast<std::size_t>(j) * w];
    const double d = col[0];
    if (!(d > 0.0) || !std::isfinite(d))
      throw NumericalError("banded Cholesky failed at pivot " + std::to_string(j) +
                           " (value " + std::to_string(d) + ")");
    const double ljj = std::sqrt(d);
    col[0] = ljj;
    const int last = std::min(n_ - 1, j + bw_);
    for (int i = j + 1; i <= last; ++i) col[i - j] /= ljj;
    for (int k = j + 1; k <= last; ++k) {
      const double lkj = col[k - j];
      if (lkj == 0.0) continue;
      double* ck = &data_[static_cast<std::size_t>(k) * w];
      for (int i = k; i <= last; ++i) ck[i - k] -= col[i - j] * lkj;
    }
  }
}

Eigen::VectorXd BandCholesky::solve_lower(const Eigen::VectorXd& b) const {
  Eigen::VectorXd x = b;
  for (int j = 0; j < n_; ++j) {
    x(j) /= l(j, j);
    const double xj = x(j);
    const int last = std::min(n_ - 1, j + bw_);
    for (int i = j + 1; i <= last; ++i) x(i) -= l(i, j) * xj;
  }
  return x;
}

Eigen::VectorXd BandCholesky::solve_upper(const Eigen::VectorXd& b) const {
  Eigen::VectorXd x = b;
  for (int j = n_ - 1; j >= 0; --j) {
    const int last = std::min(n_ - 1, j + bw_);
    double s = x(j);
    for (int i = j + 1; i <= last; ++i) s -= l(i, j) * x(i);
    x(j) = s / l(j, j);
  }
  return x;
}

Eigen::VectorXd BandCholesky::solve(const Eigen::VectorXd& b) const {
  return solve_upper(solve_lower(b));
}

double BandCholesky::log_det() const {
  double s = 0.0;
  for (int j = 0; j < n_; ++j) s += std::log(l(j, j));
  return 2.0 * s;
}

}  // namespace smuciv
