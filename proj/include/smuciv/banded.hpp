#pragma once

#include <vector>

#include <Eigen/Dense>

namespace smuciv {

// Symmetric matrix with half-bandwidth `bw`, stored as its lower band in
// column-major order: element (i, j), 0 <= i - j <= bw, lives at
// j * (bw + 1) + (i - j). Entries outside the band are structural zeros.
class SymBandMatrix {
 public:
  SymBandMatrix() = default;
  SymBandMatrix(int n, int bw);

  int size() const { return n_; }
  int bandwidth() const { return bw_; }

  // Symmetric read access; returns 0 outside the band.
  double operator()(int i, int j) const;
  // Accumulate v into (i, j) and, implicitly, (j, i). Throws NumericalError
  // if (i, j) lies outside the band.
  void add(int i, int j, double v);
  // Direct access to a stored lower-band entry (i >= j).
  double& lower(int i, int j) { return data_[static_cast<std::size_t>(j) * (bw_ + 1) + (i - j)]; }
  double lower(int i, int j) const {
    return data_[static_cast<std::size_t>(j) * (bw_ + 1) + (i - j)];
  }

  Eigen::VectorXd multiply(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd to_dense() const;

 private:
  int n_ = 0;
  int bw_ = 0;
  std::vector<double> data_;
};

// Banded Cholesky factor K = L L'. O(n bw^2) time, O(n bw) storage.
class BandCholesky {
 public:
  // Throws NumericalError with the failing pivot index when K is not
  // positive definite.
  explicit BandCholesky(const SymBandMatrix& K);

  int size() const { return n_; }
  int bandwidth() const { return bw_; }

  // Solves L x = b.
  Eigen::VectorXd solve_lower(const Eigen::VectorXd& b) const;
  // Solves L' x = b.
  Eigen::VectorXd solve_upper(const Eigen::VectorXd& b) const;
  // Solves K x = b.
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
  double log_det() const;

 private:
  double l(int i, int j) const { return data_[static_cast<std::size_t>(j) * (bw_ + 1) + (i - j)]; }

  int n_ = 0;
  int bw_ = 0;
  std::vector<double> data_;
};

}  // namespace smuciv
