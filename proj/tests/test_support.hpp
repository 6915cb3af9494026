#pragma once

#include <cmath>

#include <Eigen/Dense>

#include "smuciv/errors.hpp"
#include "smuciv/mcmc.hpp"
#include "smuciv/model.hpp"
#include "smuciv/rng.hpp"

namespace smuciv::testing {

// Random parameter/prior/data instance for comparisons against the dense
// oracle. Values are generic (no special structure), not realistic.
struct Instance {
  ModelSpec spec;
  ParameterDraw draw;
  StructuralMatrices mats;
  int T = 0;
  Eigen::VectorXd y;  // 4T, stacked (g, pi, r, m) per period
};

inline Eigen::MatrixXd random_matrix(int r, int c, double sd, Rng& rng) {
  Eigen::MatrixXd m(r, c);
  for (int j = 0; j < c; ++j)
    for (int i = 0; i < r; ++i) m(i, j) = sd * standard_normal(rng);
  return m;
}

inline Instance random_instance(int p, int T, Rng& rng, Variant v = Variant::Baseline) {
  Instance in;
  in.T = T;
  in.spec.p = p;
  in.spec.variant = v;
  PriorConfig& pr = in.spec.prior;
  pr.tau00_mean = random_matrix(4, 1, 2.0, rng);
  const Eigen::MatrixXd a = random_matrix(4, 4, 1.0, rng);
  pr.V_tau00 = a * a.transpose() + Eigen::Matrix4d::Identity();
  pr.sigma_sq = (random_matrix(3, 1, 0.5, rng).array().exp()).matrix();

  ParameterDraw& d = in.draw;
  d.Phi.clear();
  for (int l = 0; l < p; ++l) d.Phi.push_back(Matrix3(random_matrix(3, 3, 0.3 / (l + 1), rng)));
  const Mask7 mask = restriction_mask(v);
  Matrix6 B = Matrix6::Identity() + Matrix6(random_matrix(6, 6, 0.3, rng));
  for (int j = 0; j < 6; ++j)
    for (int i = 0; i < 6; ++i)
      if (!mask(i, j)) B(i, j) = 0.0;
  d.B = B;
  d.beta = beta_free(v) ? 0.5 + 0.3 * standard_normal(rng) : 0.0;
  d.alpha = 0.5 + std::abs(standard_normal(rng));
  d.kappa1 = 0.2 + 0.6 * uniform01(rng);
  d.kappa2 = 0.2 + 0.6 * uniform01(rng);
  in.mats = assemble_structural(in.spec, d);
  in.y = random_matrix(4 * T, 1, 3.0, rng);
  return in;
}

inline double max_rel_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const double scale = std::max(1.0, b.cwiseAbs().maxCoeff());
  return (a - b).cwiseAbs().maxCoeff() / scale;
}

}  // namespace smuciv::testing
