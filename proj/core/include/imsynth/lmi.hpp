#pragma once

// Affine matrix expressions, semidefinite feasibility problems and the
// interior-point engine that decides them.

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "imsynth/numkit.hpp"

namespace imsynth::lmi {

using numkit::Matrix;
using numkit::Vector;

/// Matrix-valued affine function of the decision vector:
/// F(x) = constant + sum_i x_i * terms[i].
class AffineExpr {
 public:
  AffineExpr() = default;
  explicit AffineExpr(Matrix constant);
  static AffineExpr zero(int rows, int cols);
  static AffineExpr term(int index, Matrix coefficient);

  int rows() const { return static_cast<int>(constant_.rows()); }
  int cols() const { return static_cast<int>(constant_.cols()); }
  const Matrix& constant() const { return constant_; }
  const std::map<int, Matrix>& terms() const { return terms_; }
  Matrix coefficient(int index) const;
  bool is_constant() const { return terms_.empty(); }

  Matrix evaluate(const Vector& x) const;
  AffineExpr transpose() const;
  AffineExpr block(int row, int col, int rows, int cols) const;

  AffineExpr& operator+=(const AffineExpr& other);
  AffineExpr& operator-=(const AffineExpr& other);
  AffineExpr& operator*=(double s);

  friend AffineExpr operator+(AffineExpr a, const AffineExpr& b) { return a += b; }
  friend AffineExpr operator-(AffineExpr a, const AffineExpr& b) { return a -= b; }
  friend AffineExpr operator-(AffineExpr a) { return a *= -1.0; }
  friend AffineExpr operator*(double s, AffineExpr a) { return a *= s; }
  friend AffineExpr operator*(const Matrix& m, const AffineExpr& a);
  friend AffineExpr operator*(const AffineExpr& a, const Matrix& m);

 private:
  Matrix constant_;
  std::map<int, Matrix> terms_;
};

/// a + a^T
AffineExpr sym(const AffineExpr& a);
/// m^T x m
AffineExpr congruence(const Matrix& m, const AffineExpr& x);
/// Scalar (1 x 1) expression times a constant matrix.
AffineExpr scalar_times(const AffineExpr& s, const Matrix& m);
AffineExpr trace(const AffineExpr& a);
AffineExpr hcat(const std::vector<AffineExpr>& parts);
AffineExpr vcat(const std::vector<AffineExpr>& parts);
/// Block matrix from rows of blocks.
AffineExpr blocks(const std::vector<std::vector<AffineExpr>>& rows);
AffineExpr block_diag(const AffineExpr& a, const AffineExpr& b);

/// A contiguous range of decision variables viewed as a matrix.
struct VarBlock {
  enum class Kind { Symmetric, Full };
  std::string name;
  Kind kind = Kind::Full;
  int offset = 0;
  int rows = 0;
  int cols = 0;

  int count() const { return kind == Kind::Symmetric ? rows * (rows + 1) / 2 : rows * cols; }
};

struct Constraint {
  std::string name;
  AffineExpr f;
  bool strict = false;   // margin taken from the problem scale
  double margin = 0.0;   // used when not strict

  int size() const { return f.rows(); }
};

/// F_j(x) >= margin_j I for every constraint, E x = e, optional min c^T x.
class LmiProblem {
 public:
  VarBlock add_symmetric(std::string name, int n);
  VarBlock add_full(std::string name, int rows, int cols);
  VarBlock add_scalar(std::string name) { return add_full(std::move(name), 1, 1); }
  AffineExpr expr(const VarBlock& v) const;
  Matrix value(const VarBlock& v, const Vector& x) const;
  /// Writes m into the entries of x that belong to v.
  void assign(const VarBlock& v, const Matrix& m, Vector& x) const;

  /// F(x) >= margin_rel * scale * I. Throws DimensionError when F is not symmetric.
  void add_strict(std::string name, const AffineExpr& f);
  /// F(x) >= margin * I with an explicit margin >= 0.
  void add_lmi(std::string name, const AffineExpr& f, double margin = 0.0);
  /// Turns constraint `index` into F(x) >= margin * I.
  void set_margin(std::size_t index, double margin);
  /// Every entry of lhs(x) equals zero.
  void add_equality(const AffineExpr& lhs);
  /// Minimize the 1 x 1 expression.
  void set_objective(const AffineExpr& objective);

  int num_vars() const { return num_vars_; }
  const std::vector<VarBlock>& variables() const { return vars_; }
  const std::vector<Constraint>& constraints() const { return constraints_; }
  const Matrix& equality_matrix() const { return eq_matrix_; }
  const Vector& equality_rhs() const { return eq_rhs_; }
  bool has_objective() const { return has_objective_; }
  const Vector& objective() const { return objective_; }

  /// Largest absolute entry of the constant blocks of strict constraints, at least 1.
  double scale() const;
  double margin_rel() const { return margin_rel_; }
  void set_margin_rel(double r) { margin_rel_ = r; }
  double margin(const Constraint& c) const { return c.strict ? margin_rel_ * scale() : c.margin; }

  /// Sparse text dump; see README for the column layout.
  void write_sparse(std::ostream& os) const;

 private:
  void grow(const VarBlock& v);

  std::vector<VarBlock> vars_;
  std::vector<Constraint> constraints_;
  Matrix eq_matrix_ = Matrix::Zero(0, 0);
  Vector eq_rhs_ = Vector::Zero(0);
  Vector objective_ = Vector::Zero(0);
  bool has_objective_ = false;
  int num_vars_ = 0;
  double margin_rel_ = 1e-7;
};

enum class Status { Feasible, Infeasible, Inconclusive };

std::string to_string(Status s);

struct SolverOptions {
  /// Stop phase I as soon as every constraint holds; otherwise maximize the
  /// common margin (up to margin_cap) for a well-centred witness.
  bool stop_at_feasible = true;
  double margin_cap = 1.0;
  /// Relative gap at which the max-margin phase stops.
  double margin_gap = 1e-3;
  /// Decision vectors are confined to a ball of this radius around the
  /// least-norm equality solution.
  double radius = 1e6;
  double t_growth = 8.0;
  int max_outer = 60;
  int max_newton = 100;
  double objective_gap = 1e-9;
};

struct Feasibility {
  Status status = Status::Inconclusive;
  Vector x;
  /// min_j (lambda_min(F_j(x)) - margin_j), recomputed densely.
  double worst_residual = 0.0;
  double equality_residual = 0.0;
  /// Best common margin reached by the search (phase I slack).
  double slack = 0.0;
  double objective = 0.0;
  int newton_steps = 0;
  std::string diagnostics;

  bool feasible() const { return status == Status::Feasible; }
};

Feasibility solve_feasibility(const LmiProblem& problem, const SolverOptions& options = {});

struct Verification {
  bool ok = false;
  double worst_residual = 0.0;
  double equality_residual = 0.0;
  std::string worst_constraint;
};

/// Dense recheck of a candidate point against every constraint.
Verification verify_point(const LmiProblem& problem, const Vector& x);

}  // namespace imsynth::lmi
