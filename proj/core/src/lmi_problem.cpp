#include <algorithm>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include "imsynth/errors.hpp"
#include "imsynth/lmi.hpp"

namespace imsynth::lmi {

void LmiProblem::grow(const VarBlock& v) {
  num_vars_ += v.count();
  vars_.push_back(v);
  eq_matrix_.conservativeResizeLike(Matrix::Zero(eq_matrix_.rows(), num_vars_));
  if (has_objective_) objective_.conservativeResizeLike(Vector::Zero(num_vars_));
}

VarBlock LmiProblem::add_symmetric(std::string name, int n) {
  if (n < 1) throw DimensionError("add_symmetric: size must be positive");
  VarBlock v{std::move(name), VarBlock::Kind::Symmetric, num_vars_, n, n};
  grow(v);
  return v;
}

VarBlock LmiProblem::add_full(std::string name, int rows, int cols) {
  if (rows < 1 || cols < 1) throw DimensionError("add_full: shape must be positive");
  VarBlock v{std::move(name), VarBlock::Kind::Full, num_vars_, rows, cols};
  grow(v);
  return v;
}

AffineExpr LmiProblem::expr(const VarBlock& v) const {
  AffineExpr out = AffineExpr::zero(v.rows, v.cols);
  int k = v.offset;
  if (v.kind == VarBlock::Kind::Symmetric) {
    for (int j = 0; j < v.rows; ++j) {
      for (int i = 0; i <= j; ++i) {
        Matrix e = Matrix::Zero(v.rows, v.rows);
        e(i, j) = 1.0;
        e(j, i) = 1.0;
        out += AffineExpr::term(k++, std::move(e));
      }
    }
  } else {
    for (int j = 0; j < v.cols; ++j) {
      for (int i = 0; i < v.rows; ++i) {
        Matrix e = Matrix::Zero(v.rows, v.cols);
        e(i, j) = 1.0;
        out += AffineExpr::term(k++, std::move(e));
      }
    }
  }
  return out;
}

Matrix LmiProblem::value(const VarBlock& v, const Vector& x) const {
  if (x.size() < v.offset + v.count()) throw DimensionError("LmiProblem::value: vector too short");
  Matrix out(v.rows, v.cols);
  int k = v.offset;
  if (v.kind == VarBlock::Kind::Symmetric) {
    for (int j = 0; j < v.rows; ++j) {
      for (int i = 0; i <= j; ++i) {
        out(i, j) = x(k);
        out(j, i) = x(k);
        ++k;
      }
    }
  } else {
    for (int j = 0; j < v.cols; ++j) {
      for (int i = 0; i < v.rows; ++i) out(i, j) = x(k++);
    }
  }
  return out;
}

void LmiProblem::set_margin(std::size_t index, double margin) {
  if (index >= constraints_.size()) throw DimensionError("LmiProblem::set_margin: no such constraint");
  if (!(margin >= 0.0)) throw DomainError("LmiProblem::set_margin: margin must be non-negative");
  constraints_[index].strict = false;
  constraints_[index].margin = margin;
}

void LmiProblem::assign(const VarBlock& v, const Matrix& m, Vector& x) const {
  if (m.rows() != v.rows || m.cols() != v.cols) throw DimensionError("LmiProblem::assign: shape mismatch");
  if (x.size() != num_vars_) throw DimensionError("LmiProblem::assign: vector has wrong length");
  int k = v.offset;
  if (v.kind == VarBlock::Kind::Symmetric) {
    for (int j = 0; j < v.rows; ++j) {
      for (int i = 0; i <= j; ++i) x(k++) = 0.5 * (m(i, j) + m(j, i));
    }
  } else {
    for (int j = 0; j < v.cols; ++j) {
      for (int i = 0; i < v.rows; ++i) x(k++) = m(i, j);
    }
  }
}

namespace {

void require_symmetric(const std::string& name, const AffineExpr& f) {
  auto bad = [](const Matrix& m) {
    return m.rows() != m.cols() || !numkit::is_symmetric(m, 1e-12);
  };
  if (bad(f.constant()) ||
      std::any_of(f.terms().begin(), f.terms().end(), [&](const auto& t) { return bad(t.second); })) {
    throw DimensionError("constraint '" + name + "' is not a symmetric matrix function");
  }
}

/// Averages away rounding asymmetry left by products like M^T X M.
AffineExpr symmetrized(const AffineExpr& f) {
  AffineExpr s = f + f.transpose();
  s *= 0.5;
  return s;
}

}  // namespace

void LmiProblem::add_strict(std::string name, const AffineExpr& f) {
  require_symmetric(name, f);
  constraints_.push_back({std::move(name), symmetrized(f), true, 0.0});
}

void LmiProblem::add_lmi(std::string name, const AffineExpr& f, double margin) {
  if (!(margin >= 0.0)) throw DomainError("add_lmi: margin must be non-negative");
  require_symmetric(name, f);
  constraints_.push_back({std::move(name), symmetrized(f), false, margin});
}

void LmiProblem::add_equality(const AffineExpr& lhs) {
  const int rows = lhs.rows() * lhs.cols();
  Matrix e(eq_matrix_.rows() + rows, num_vars_);
  e.setZero();
  if (eq_matrix_.rows() > 0) e.topLeftCorner(eq_matrix_.rows(), eq_matrix_.cols()) = eq_matrix_;
  Vector rhs(eq_rhs_.size() + rows);
  rhs.head(eq_rhs_.size()) = eq_rhs_;
  int r = static_cast<int>(eq_matrix_.rows());
  for (int j = 0; j < lhs.cols(); ++j) {
    for (int i = 0; i < lhs.rows(); ++i, ++r) {
      rhs(r) = -lhs.constant()(i, j);
      for (const auto& [k, m] : lhs.terms()) {
        if (k >= num_vars_) throw DimensionError("add_equality: unknown decision variable");
        e(r, k) = m(i, j);
      }
    }
  }
  eq_matrix_ = std::move(e);
  eq_rhs_ = std::move(rhs);
}

void LmiProblem::set_objective(const AffineExpr& objective) {
  if (objective.rows() != 1 || objective.cols() != 1) {
    throw DimensionError("set_objective: objective must be 1 x 1");
  }
  objective_ = Vector::Zero(num_vars_);
  for (const auto& [k, m] : objective.terms()) {
    if (k >= num_vars_) throw DimensionError("set_objective: unknown decision variable");
    objective_(k) = m(0, 0);
  }
  has_objective_ = true;
}

double LmiProblem::scale() const {
  double s = 1.0;
  for (const auto& c : constraints_) {
    if (c.strict) s = std::max(s, numkit::max_abs(c.f.constant()));
  }
  return s;
}

void LmiProblem::write_sparse(std::ostream& os) const {
  // Columns: constraint block row col var coefficient. var 0 is the constant
  // term, decision variables are 1-based; only the upper triangle is listed.
  // Equalities use constraint index 0 with row = equation, col = 1.
  const auto flags = os.flags();
  os << std::setprecision(17);
  os << "# vars " << num_vars_ << " lmis " << constraints_.size() << " equalities "
     << eq_matrix_.rows() << '\n';
  for (std::size_t j = 0; j < constraints_.size(); ++j) {
    const auto& c = constraints_[j];
    os << "# lmi " << j + 1 << ' ' << c.name << " size " << c.size() << " margin " << margin(c)
       << '\n';
    auto emit = [&](int var, const Matrix& m) {
      for (int col = 0; col < m.cols(); ++col) {
        for (int row = 0; row <= col; ++row) {
          if (m(row, col) != 0.0) {
            os << j + 1 << " 1 " << row + 1 << ' ' << col + 1 << ' ' << var << ' ' << m(row, col)
               << '\n';
          }
        }
      }
    };
    emit(0, c.f.constant());
    for (const auto& [k, m] : c.f.terms()) emit(k + 1, m);
  }
  for (int r = 0; r < eq_matrix_.rows(); ++r) {
    if (eq_rhs_(r) != 0.0) os << "0 1 " << r + 1 << " 1 0 " << eq_rhs_(r) << '\n';
    for (int k = 0; k < eq_matrix_.cols(); ++k) {
      if (eq_matrix_(r, k) != 0.0) os << "0 1 " << r + 1 << " 1 " << k + 1 << ' ' << eq_matrix_(r, k) << '\n';
    }
  }
  if (has_objective_) {
    for (int k = 0; k < objective_.size(); ++k) {
      if (objective_(k) != 0.0) os << "# objective " << k + 1 << ' ' << objective_(k) << '\n';
    }
  }
  os.flags(flags);
}

std::string to_string(Status s) {
  switch (s) {
    case Status::Feasible: return "feasible";
    case Status::Infeasible: return "infeasible";
    case Status::Inconclusive: return "inconclusive";
  }
  return "unknown";
}

Verification verify_point(const LmiProblem& problem, const Vector& x) {
  if (x.size() != problem.num_vars()) throw DimensionError("verify_point: wrong vector length");
  Verification v;
  v.worst_residual = std::numeric_limits<double>::infinity();
  const double scale = problem.scale();
  for (const auto& c : problem.constraints()) {
    Matrix f = c.f.constant();
    for (const auto& [k, m] : c.f.terms()) f.noalias() += x(k) * m;
    Eigen::SelfAdjointEigenSolver<Matrix> es(f, Eigen::EigenvaluesOnly);
    const double r = es.eigenvalues().minCoeff() - problem.margin(c);
    if (r < v.worst_residual) {
      v.worst_residual = r;
      v.worst_constraint = c.name;
    }
  }
  if (problem.constraints().empty()) v.worst_residual = 0.0;
  if (problem.equality_matrix().rows() > 0) {
    v.equality_residual =
        (problem.equality_matrix() * x - problem.equality_rhs()).lpNorm<Eigen::Infinity>();
  }
  v.ok = x.allFinite() && v.worst_residual >= -1e-7 * scale && v.equality_residual <= 1e-8 * scale;
  return v;
}

}  // namespace imsynth::lmi
