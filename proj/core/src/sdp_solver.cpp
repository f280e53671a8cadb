// Log-det barrier path following for small dense LMI systems.
//
// Equalities are eliminated with an orthonormal null-space basis. Phase I
// maximizes a common slack s with F_j(y) - margin_j I - s I >= 0; phase II
// (only when an objective is present) minimizes it from the phase I point.

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "imsynth/errors.hpp"
#include "imsynth/lmi.hpp"

namespace imsynth::lmi {

namespace {

struct Block {
  Matrix c0;
  std::vector<std::pair<int, Matrix>> terms;
};

class Barrier {
 public:
  Barrier(std::vector<Block> blocks, int nvars, int ball_dims, double radius)
      : blocks_(std::move(blocks)), nvars_(nvars), ball_dims_(ball_dims), r2_(radius * radius) {}

  double degree() const {
    double d = ball_dims_ > 0 ? 1.0 : 0.0;
    for (const auto& b : blocks_) d += static_cast<double>(b.c0.rows());
    return d;
  }

  Matrix assemble(const Block& b, const Vector& v) const {
    Matrix s = b.c0;
    for (const auto& [k, m] : b.terms) s.noalias() += v(k) * m;
    return s;
  }

  /// Barrier value, or +inf outside the domain.
  double value(const Vector& v) const {
    double phi = 0.0;
    for (const auto& b : blocks_) {
      Eigen::LLT<Matrix> llt(assemble(b, v));
      if (llt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
      const auto& l = llt.matrixLLT();
      for (int i = 0; i < l.rows(); ++i) {
        if (!(l(i, i) > 0.0)) return std::numeric_limits<double>::infinity();
        phi -= 2.0 * std::log(l(i, i));
      }
    }
    if (ball_dims_ > 0) {
      const double slack = r2_ - v.head(ball_dims_).squaredNorm();
      if (!(slack > 0.0)) return std::numeric_limits<double>::infinity();
      phi -= std::log(slack);
    }
    return phi;
  }

  /// Gradient and Hessian of the barrier; false outside the domain.
  bool derivatives(const Vector& v, Vector& g, Matrix& h) const {
    g = Vector::Zero(nvars_);
    h = Matrix::Zero(nvars_, nvars_);
    for (const auto& b : blocks_) {
      const auto n = b.c0.rows();
      Eigen::LLT<Matrix> llt(assemble(b, v));
      if (llt.info() != Eigen::Success) return false;
      const Matrix linv = llt.matrixL().solve(Matrix::Identity(n, n));
      const auto nt = static_cast<Eigen::Index>(b.terms.size());
      Matrix w(n * n, nt);
      for (Eigen::Index t = 0; t < nt; ++t) {
        const Matrix wk = linv * b.terms[t].second * linv.transpose();
        w.col(t) = Eigen::Map<const Vector>(wk.data(), n * n);
        g(b.terms[t].first) -= wk.trace();
      }
      const Matrix gram = w.transpose() * w;
      for (Eigen::Index a = 0; a < nt; ++a) {
        for (Eigen::Index c = 0; c < nt; ++c) h(b.terms[a].first, b.terms[c].first) += gram(a, c);
      }
    }
    if (ball_dims_ > 0) {
      const auto y = v.head(ball_dims_);
      const double slack = r2_ - y.squaredNorm();
      if (!(slack > 0.0)) return false;
      g.head(ball_dims_) += 2.0 * y / slack;
      h.topLeftCorner(ball_dims_, ball_dims_) +=
          (2.0 / slack) * Matrix::Identity(ball_dims_, ball_dims_) + (4.0 / (slack * slack)) * y * y.transpose();
    }
    return true;
  }

  double min_eig(const Vector& v) const {
    double out = std::numeric_limits<double>::infinity();
    for (const auto& b : blocks_) {
      Eigen::SelfAdjointEigenSolver<Matrix> es(assemble(b, v), Eigen::EigenvaluesOnly);
      out = std::min(out, es.eigenvalues().minCoeff());
    }
    return out;
  }

 private:
  std::vector<Block> blocks_;
  int nvars_;
  int ball_dims_;
  double r2_;
};

enum class Centering { Converged, EarlyStop, Breakdown };

struct NewtonTracker {
  int steps = 0;
  std::string note;
};

/// Minimizes t c^T v + barrier(v) from a strictly feasible v.
template <class Stop>
Centering center(const Barrier& barrier, Vector& v, double t, const Vector& c, int max_newton,
                 NewtonTracker& tracker, Stop&& stop) {
  Vector g;
  Matrix h;
  double f = t * c.dot(v) + barrier.value(v);
  for (int it = 0; it < max_newton; ++it) {
    if (stop(v)) return Centering::EarlyStop;
    if (!barrier.derivatives(v, g, h)) {
      tracker.note = "iterate left the barrier domain";
      return Centering::Breakdown;
    }
    const Vector grad = t * c + g;
    Vector d = h.diagonal();
    for (Eigen::Index i = 0; i < d.size(); ++i) d(i) = d(i) > 0.0 ? 1.0 / std::sqrt(d(i)) : 1.0;
    const Matrix hs = d.asDiagonal() * h * d.asDiagonal();
    const Vector gs = d.asDiagonal() * grad;
    Eigen::LDLT<Matrix> ldlt(hs);
    if (ldlt.info() != Eigen::Success) {
      tracker.note = "Newton system factorization failed";
      return Centering::Breakdown;
    }
    const Vector step = -(d.asDiagonal() * ldlt.solve(gs)).eval();
    if (!step.allFinite()) {
      tracker.note = "non-finite Newton step";
      return Centering::Breakdown;
    }
    const double dec2 = -grad.dot(step);
    ++tracker.steps;
    if (dec2 < 0.0) {
      tracker.note = "Newton direction is not a descent direction";
      return Centering::Breakdown;
    }
    if (dec2 <= 1e-10) return Centering::Converged;
    double alpha = 1.0;
    bool accepted = false;
    const double slack = 1e-13 * (std::abs(f) + 1.0);
    while (alpha > 1e-14) {
      const Vector trial = v + alpha * step;
      const double ft = t * c.dot(trial) + barrier.value(trial);
      if (std::isfinite(ft) && ft <= f - 0.25 * alpha * dec2 + slack) {
        v = trial;
        f = ft;
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) {
      // Rounding floor: the decrement is already tiny relative to f.
      if (dec2 <= 1e-6) return Centering::Converged;
      tracker.note = "line search failed";
      return Centering::Breakdown;
    }
  }
  tracker.note = "Newton iteration limit";
  return Centering::Breakdown;
}

struct Reduced {
  Vector xp;
  Matrix z;
  bool identity = false;
  int dims = 0;
  bool consistent = true;
  double eq_residual = 0.0;

  Vector lift(const Vector& y) const { return identity ? Vector(xp + y) : Vector(xp + z * y); }
};

Reduced eliminate_equalities(const LmiProblem& p) {
  Reduced r;
  const int m = p.num_vars();
  const Matrix& e = p.equality_matrix();
  r.xp = Vector::Zero(m);
  if (e.rows() == 0) {
    r.identity = true;
    r.dims = m;
    return r;
  }
  Eigen::JacobiSVD<Matrix> svd(e, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double smax = sv.size() > 0 ? sv(0) : 0.0;
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv(i) > 1e-12 * std::max(smax, 1.0)) ++rank;
  }
  const Matrix& u = svd.matrixU();
  const Matrix& v = svd.matrixV();
  Vector coeff = u.leftCols(rank).transpose() * p.equality_rhs();
  for (int i = 0; i < rank; ++i) coeff(i) /= sv(i);
  r.xp = v.leftCols(rank) * coeff;
  r.eq_residual = (e * r.xp - p.equality_rhs()).lpNorm<Eigen::Infinity>();
  r.consistent = r.eq_residual <= 1e-10 * std::max(1.0, p.equality_rhs().lpNorm<Eigen::Infinity>());
  r.z = v.rightCols(m - rank);
  r.dims = m - rank;
  return r;
}

/// Constraint blocks in reduced coordinates with margins subtracted.
std::vector<Block> reduced_blocks(const LmiProblem& p, const Reduced& red) {
  std::vector<Block> out;
  for (const auto& c : p.constraints()) {
    const auto n = c.f.rows();
    Block b;
    b.c0 = c.f.constant() - p.margin(c) * Matrix::Identity(n, n);
    for (const auto& [i, m] : c.f.terms()) b.c0 += red.xp(i) * m;
    if (red.identity) {
      for (const auto& [i, m] : c.f.terms()) b.terms.emplace_back(i, m);
    } else {
      for (int k = 0; k < red.dims; ++k) {
        Matrix g = Matrix::Zero(n, n);
        bool any = false;
        for (const auto& [i, m] : c.f.terms()) {
          const double zik = red.z(i, k);
          if (zik != 0.0) {
            g += zik * m;
            any = true;
          }
        }
        if (any && numkit::max_abs(g) > 0.0) b.terms.emplace_back(k, std::move(g));
      }
    }
    out.push_back(std::move(b));
  }
  return out;
}

void finish(const LmiProblem& p, const Reduced& red, const Vector& y, Feasibility& out) {
  out.x = red.lift(y);
  const auto check = verify_point(p, out.x);
  out.worst_residual = check.worst_residual;
  out.equality_residual = check.equality_residual;
  if (p.has_objective()) out.objective = p.objective().dot(out.x);
  if (check.ok) {
    out.status = Status::Feasible;
  } else {
    out.status = Status::Inconclusive;
    std::ostringstream os;
    os << "; witness failed dense verification (worst residual " << check.worst_residual << " in '"
       << check.worst_constraint << "', equality residual " << check.equality_residual << ')';
    out.diagnostics += os.str();
  }
}

void minimize_objective(const LmiProblem& p, const Reduced& red, const std::vector<Block>& base,
                        const SolverOptions& opt, Vector& y, Feasibility& out) {
  const Barrier barrier(base, red.dims, red.dims, opt.radius);
  const Vector c = red.identity ? p.objective()
                                                                 : Vector(red.z.transpose() * p.objective());
  if (c.norm() == 0.0) return;
  const double degree = barrier.degree();
  NewtonTracker tracker;
  double t = 1.0;
  for (int outer = 0; outer < opt.max_outer; ++outer) {
    Vector trial = y;
    const auto res = center(barrier, trial, t, c, opt.max_newton, tracker, [](const Vector&) { return false; });
    out.newton_steps += tracker.steps;
    tracker.steps = 0;
    if (res == Centering::Breakdown) {
      out.diagnostics += "; objective phase stopped early: " + tracker.note;
      return;
    }
    y = trial;
    const double obj = p.objective().dot(red.lift(y));
    if (degree / t <= opt.objective_gap * std::max(1.0, std::abs(obj))) return;
    t *= opt.t_growth;
  }
  out.diagnostics += "; objective phase hit the outer iteration limit";
}

}  // namespace

Feasibility solve_feasibility(const LmiProblem& problem, const SolverOptions& opt) {
  Feasibility out;
  const Reduced red = eliminate_equalities(problem);
  out.x = red.xp;
  if (!red.consistent) {
    out.status = Status::Infeasible;
    std::ostringstream os;
    os << "equality constraints are inconsistent (residual " << red.eq_residual << ')';
    out.diagnostics = os.str();
    return out;
  }
  const std::vector<Block> base = reduced_blocks(problem, red);
  const int ny = red.dims;

  // Phase I in (y, s).
  Vector y0 = Vector::Zero(ny);
  double lam0 = std::numeric_limits<double>::infinity();
  {
    const Barrier probe(base, ny, 0, opt.radius);
    lam0 = base.empty() ? 1.0 : probe.min_eig(y0);
  }
  if (!std::isfinite(lam0)) {
    out.diagnostics = "non-finite constraint data";
    return out;
  }
  Vector y = y0;
  if (!(opt.stop_at_feasible && lam0 > 0.0)) {
    std::vector<Block> blocks = base;
    for (auto& b : blocks) b.terms.emplace_back(ny, -Matrix::Identity(b.c0.rows(), b.c0.rows()));
    const double s0 = lam0 - 1.0 - 0.1 * std::abs(lam0);
    const double cap = std::max(opt.margin_cap, s0 + 1.0);
    Block capb;
    capb.c0 = Matrix::Constant(1, 1, cap);
    capb.terms.emplace_back(ny, -Matrix::Ones(1, 1));
    blocks.push_back(std::move(capb));
    const Barrier barrier(std::move(blocks), ny + 1, ny, opt.radius);
    const double degree = barrier.degree();
    Vector v(ny + 1);
    v << y0, s0;
    Vector c = Vector::Zero(ny + 1);
    c(ny) = -1.0;
    NewtonTracker tracker;
    double t = 1.0;
    bool done = false;
    for (int outer = 0; outer < opt.max_outer && !done; ++outer) {
      auto stop = [&](const Vector& w) { return opt.stop_at_feasible && w(ny) > 0.0; };
      const auto res = center(barrier, v, t, c, opt.max_newton, tracker, stop);
      out.newton_steps += tracker.steps;
      tracker.steps = 0;
      const double s = v(ny);
      out.slack = s;
      if (res == Centering::EarlyStop) {
        done = true;
        break;
      }
      if (res == Centering::Breakdown) {
        if (s > 0.0) {
          done = true;
          out.diagnostics = "max-margin phase stopped early: " + tracker.note;
          break;
        }
        out.status = Status::Inconclusive;
        std::ostringstream os;
        os << "solver breakdown (" << tracker.note << ") at slack " << s << ", t = " << t;
        out.diagnostics = os.str();
        out.x = red.lift(v.head(ny));
        out.worst_residual = verify_point(problem, out.x).worst_residual;
        return out;
      }
      const double bound = s + degree / t;
      if (bound < 0.0) {
        out.status = Status::Infeasible;
        std::ostringstream os;
        os << "no strictly feasible point: best slack " << s << ", upper bound " << bound
           << " after " << out.newton_steps << " Newton steps";
        out.diagnostics = os.str();
        out.x = red.lift(v.head(ny));
        out.worst_residual = verify_point(problem, out.x).worst_residual;
        return out;
      }
      if (!opt.stop_at_feasible && s > 0.0 &&
          (degree / t <= opt.margin_gap * s || cap - s <= opt.margin_gap * cap)) {
        done = true;
      }
      t *= opt.t_growth;
    }
    if (!done || !(v(ny) > 0.0)) {
      out.status = Status::Inconclusive;
      std::ostringstream os;
      os << "outer iteration limit reached at slack " << v(ny);
      out.diagnostics = os.str();
      out.x = red.lift(v.head(ny));
      out.worst_residual = verify_point(problem, out.x).worst_residual;
      return out;
    }
    y = v.head(ny);
  } else {
    out.slack = lam0;
  }

  if (problem.has_objective() && ny > 0) minimize_objective(problem, red, base, opt, y, out);
  finish(problem, red, y, out);
  if (out.diagnostics.starts_with("; ")) out.diagnostics.erase(0, 2);
  return out;
}

}  // namespace imsynth::lmi
