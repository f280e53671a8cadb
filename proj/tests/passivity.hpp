#pragma once
// Randomized passivity trajectories for the filtered sector channel, shared by
// the unit and acceptance suites.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>

#include "imsynth/plant.hpp"
#include "imsynth/transform.hpp"

namespace imsynth::testing {

using numkit::Matrix;
using numkit::Vector;

/// Random lambda in Lambda_ell^rho with lambda_0 = 1.
inline Vector random_multiplier(std::mt19937_64& rng, int ell, double rho) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vector w(ell);
  double weighted = 0.0;
  for (int j = 0; j < ell; ++j) {
    w(j) = u(rng);
    weighted += w(j) * std::pow(rho, -(j + 1));
  }
  const double budget = u(rng);
  Vector lambda(ell + 1);
  lambda(0) = 1.0;
  for (int j = 0; j < ell; ++j) lambda(j + 1) = weighted > 0.0 ? -budget * w(j) / weighted : 0.0;
  return lambda;
}

struct PassivityOutcome {
  int trajectories = 0;
  int violations = 0;   // steps with sum q'r < -1e-9 * scale
  double worst = 0.0;   // smallest sum / scale seen
};

/// Gradient of f(z) = z' H z / 2 with spec(H) in [mu, L]. P-hat is driven by a
/// random weighted iterate u with q = (H - mu) u, and the running sum of q' r
/// is compared against -1e-9 * sum |q| |p|.
inline PassivityOutcome run_passivity_suite(const plant::PlantRealization& pl, int count,
                                            std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  PassivityOutcome out;
  for (int trial = 0; trial < count; ++trial) {
    const double mu = 0.1 + 2.0 * uni(rng);
    const double L = mu * (1.5 + 50.0 * uni(rng));
    const double rho = 0.3 + 0.69 * uni(rng);
    const int ell = 1 + trial % 3;
    const int d = 1 + trial % 4;
    const int horizon = 1 + static_cast<int>(uni(rng) * 200);
    const auto params = transform::MultiplierParams::make(random_multiplier(rng, ell, rho), rho);
    const auto ph = transform::assemble_transformed_plant(pl, mu, L, rho, params);

    Matrix basis(d, d);
    for (int i = 0; i < d * d; ++i) basis.data()[i] = g(rng);
    const Matrix qm = Eigen::HouseholderQR<Matrix>(basis).householderQ();
    Vector spec(d);
    for (int i = 0; i < d; ++i) spec(i) = mu + (L - mu) * uni(rng);
    const Matrix hess = qm * spec.asDiagonal() * qm.transpose();

    Matrix x = Matrix::Zero(ph.states(), d);
    double sum = 0.0, scale = 0.0;
    for (int k = 0; k < horizon; ++k) {
      Vector u(d);
      for (int i = 0; i < d; ++i) u(i) = g(rng);
      const Vector q = (hess - mu * Matrix::Identity(d, d)) * u;
      const Vector r = (ph.Cz * x).transpose() + ph.Dzw(0, 0) * q + ph.Dz(0, 0) * u;
      x = ph.A * x + ph.Bw * q.transpose() + ph.B * u.transpose();
      sum += q.dot(r);
      scale += q.norm() * ((L - mu) * u - q).norm();
      out.worst = std::min(out.worst, sum / std::max(scale, 1e-300));
      if (sum < -1e-9 * scale) ++out.violations;
    }
    ++out.trajectories;
  }
  return out;
}

}  // namespace imsynth::testing
