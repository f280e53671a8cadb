#include "imsynth/plant.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "imsynth/errors.hpp"

namespace imsynth::plant {

StateSpace PlantRealization::state_space() const {
  return StateSpace(A, B, C, Matrix::Zero(1, 1));
}

PlantRealization build_H(const exo::HarmonicSet& harmonics) {
  if (harmonics.values.empty()) throw DomainError("build_H: empty harmonic set");
  if (!harmonics.contains(Complex(1.0, 0.0))) {
    throw DomainError("build_H: harmonic set must contain 1 (fixed-point requirement)");
  }
  numkit::Polynomial den = numkit::poly_from_roots(harmonics.values).snapped(1e-12);
  const int n = den.degree();
  Matrix a = Matrix::Zero(n, n);
  a.block(0, 1, n - 1, n - 1).setIdentity();
  for (int i = 0; i < n; ++i) a(n - 1, i) = -den.coefficient(i);
  Matrix b = Matrix::Zero(n, 1);
  b(n - 1, 0) = 1.0;
  Matrix c = Matrix::Zero(1, n);
  c(0, n - 1) = 1.0;
  return {a, b, c, harmonics, den};
}

GeneralizedPlant build_generalized_plant(const PlantRealization& plant) {
  const int n = plant.n();
  Matrix b = Matrix::Zero(n, 2);
  b.col(0) = plant.B;
  Matrix c = Matrix::Zero(2, n);
  c.row(1) = plant.C;
  Matrix d = Matrix::Zero(2, 2);
  d(0, 1) = 1.0;
  return {StateSpace(plant.A, b, c, d)};
}

Algorithm::Algorithm(Matrix a, Matrix b, Matrix c, AlgorithmInfo info)
    : a_(std::move(a)), b_(std::move(b)), c_(std::move(c)), info_(std::move(info)) {
  const auto n = a_.rows();
  if (n == 0 || a_.cols() != n || b_.rows() != n || b_.cols() != 1 || c_.rows() != 1 ||
      c_.cols() != n) {
    throw DimensionError("Algorithm: expected A n x n, B n x 1, C 1 x n with n >= 1");
  }
  if (!a_.allFinite() || !b_.allFinite() || !c_.allFinite()) {
    throw DomainError("Algorithm: non-finite entry");
  }
  const auto dec = numkit::eig_with_vectors(a_);
  std::size_t best = 0;
  for (std::size_t i = 1; i < dec.values.size(); ++i) {
    if (std::abs(dec.values[i] - 1.0) < std::abs(dec.values[best] - 1.0)) best = i;
  }
  if (std::abs(dec.values[best] - 1.0) > 1e-6) {
    throw StructureError("Algorithm: A has no eigenvalue at 1, so no fixed point exists");
  }
  const numkit::CVector v = dec.vectors.col(static_cast<Eigen::Index>(best));
  const double seen = std::abs((c_.cast<Complex>() * v)(0, 0));
  if (seen <= 1e-8 * std::max(1.0, c_.norm()) * v.norm()) {
    throw StructureError("Algorithm: the eigenvalue at 1 is not observable through C");
  }
}

StateSpace Algorithm::state_space() const { return StateSpace(a_, b_, c_, Matrix::Zero(1, 1)); }

bool StructureReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed(); });
}

std::string StructureReport::summary() const {
  std::ostringstream os;
  os.precision(4);
  os << "internal-model structure check (tol " << tol << "): "
     << (passed() ? "PASS" : "FAIL") << '\n';
  for (const auto& c : checks) {
    os << "  harmonic angle " << std::arg(c.harmonic) << ": eigenvalue distance "
       << c.eigen_distance << (c.has_eigenvalue ? " ok" : " MISSING") << ", non-resonance margin "
       << c.resonance_margin << (c.non_resonant ? " ok" : " RESONANT") << '\n';
  }
  return os.str();
}

StructureReport verify_internal_model_structure(const Algorithm& alg,
                                                const exo::HarmonicSet& harmonics, double tol) {
  if (!(tol > 0.0)) throw DomainError("verify_internal_model_structure: tol must be positive");
  const auto spectrum = numkit::eig(alg.A());
  const int n = alg.order();
  StructureReport report;
  report.tol = tol;
  for (Complex w : harmonics.values) {
    HarmonicCheck check;
    check.harmonic = w;
    check.eigen_distance = std::numeric_limits<double>::infinity();
    for (Complex l : spectrum) check.eigen_distance = std::min(check.eigen_distance, std::abs(l - w));
    numkit::CMatrix m = numkit::CMatrix::Zero(n + 1, n + 1);
    m.topLeftCorner(n, n) = alg.A().cast<Complex>() - w * numkit::CMatrix::Identity(n, n);
    m.topRightCorner(n, 1) = alg.B().cast<Complex>();
    m.bottomLeftCorner(1, n) = alg.C().cast<Complex>();
    Eigen::JacobiSVD<numkit::CMatrix> svd(m);
    check.resonance_margin = svd.singularValues()(n);
    check.has_eigenvalue = check.eigen_distance <= tol;
    check.non_resonant = check.resonance_margin >= tol;
    report.checks.push_back(check);
  }
  return report;
}

}  // namespace imsynth::plant
