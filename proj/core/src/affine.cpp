#include <sstream>

#include "imsynth/errors.hpp"
#include "imsynth/lmi.hpp"

namespace imsynth::lmi {

namespace {

void require_same_shape(const AffineExpr& a, const AffineExpr& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    std::ostringstream os;
    os << "AffineExpr " << op << ": shape " << a.rows() << 'x' << a.cols() << " vs " << b.rows()
       << 'x' << b.cols();
    throw DimensionError(os.str());
  }
}

}  // namespace

AffineExpr::AffineExpr(Matrix constant) : constant_(std::move(constant)) {}

AffineExpr AffineExpr::zero(int rows, int cols) { return AffineExpr(Matrix::Zero(rows, cols)); }

AffineExpr AffineExpr::term(int index, Matrix coefficient) {
  AffineExpr e(Matrix::Zero(coefficient.rows(), coefficient.cols()));
  e.terms_.emplace(index, std::move(coefficient));
  return e;
}

Matrix AffineExpr::coefficient(int index) const {
  auto it = terms_.find(index);
  return it == terms_.end() ? Matrix::Zero(rows(), cols()) : it->second;
}

Matrix AffineExpr::evaluate(const Vector& x) const {
  Matrix out = constant_;
  for (const auto& [i, m] : terms_) {
    if (i >= x.size()) throw DimensionError("AffineExpr::evaluate: decision vector too short");
    out += x(i) * m;
  }
  return out;
}

AffineExpr AffineExpr::transpose() const {
  AffineExpr out(constant_.transpose());
  for (const auto& [i, m] : terms_) out.terms_.emplace(i, m.transpose());
  return out;
}

AffineExpr AffineExpr::block(int row, int col, int nrows, int ncols) const {
  if (row < 0 || col < 0 || row + nrows > rows() || col + ncols > cols()) {
    throw DimensionError("AffineExpr::block out of range");
  }
  AffineExpr out(constant_.block(row, col, nrows, ncols));
  for (const auto& [i, m] : terms_) out.terms_.emplace(i, m.block(row, col, nrows, ncols));
  return out;
}

AffineExpr& AffineExpr::operator+=(const AffineExpr& other) {
  require_same_shape(*this, other, "+");
  constant_ += other.constant_;
  for (const auto& [i, m] : other.terms_) {
    auto [it, inserted] = terms_.emplace(i, m);
    if (!inserted) it->second += m;
  }
  return *this;
}

AffineExpr& AffineExpr::operator-=(const AffineExpr& other) {
  require_same_shape(*this, other, "-");
  constant_ -= other.constant_;
  for (const auto& [i, m] : other.terms_) {
    auto [it, inserted] = terms_.emplace(i, -m);
    if (!inserted) it->second -= m;
  }
  return *this;
}

AffineExpr& AffineExpr::operator*=(double s) {
  constant_ *= s;
  for (auto& [i, m] : terms_) m *= s;
  return *this;
}

AffineExpr operator*(const Matrix& m, const AffineExpr& a) {
  if (m.cols() != a.rows()) throw DimensionError("AffineExpr: left product shape mismatch");
  AffineExpr out(m * a.constant_);
  for (const auto& [i, c] : a.terms_) out.terms_.emplace(i, m * c);
  return out;
}

AffineExpr operator*(const AffineExpr& a, const Matrix& m) {
  if (a.cols() != m.rows()) throw DimensionError("AffineExpr: right product shape mismatch");
  AffineExpr out(a.constant_ * m);
  for (const auto& [i, c] : a.terms_) out.terms_.emplace(i, c * m);
  return out;
}

AffineExpr sym(const AffineExpr& a) { return a + a.transpose(); }

AffineExpr congruence(const Matrix& m, const AffineExpr& x) { return m.transpose() * x * m; }

AffineExpr scalar_times(const AffineExpr& s, const Matrix& m) {
  if (s.rows() != 1 || s.cols() != 1) throw DimensionError("scalar_times: expression is not 1 x 1");
  AffineExpr out(s.constant()(0, 0) * m);
  for (const auto& [i, c] : s.terms()) out += AffineExpr::term(i, c(0, 0) * m);
  return out;
}

AffineExpr trace(const AffineExpr& a) {
  if (a.rows() != a.cols()) throw DimensionError("trace: expression is not square");
  AffineExpr out(Matrix::Constant(1, 1, a.constant().trace()));
  for (const auto& [i, c] : a.terms()) out += AffineExpr::term(i, Matrix::Constant(1, 1, c.trace()));
  return out;
}

AffineExpr hcat(const std::vector<AffineExpr>& parts) {
  if (parts.empty()) throw DimensionError("hcat: no parts");
  const int r = parts.front().rows();
  int c = 0;
  for (const auto& p : parts) {
    if (p.rows() != r) throw DimensionError("hcat: row counts differ");
    c += p.cols();
  }
  AffineExpr out = AffineExpr::zero(r, c);
  int at = 0;
  for (const auto& p : parts) {
    Matrix pad = Matrix::Zero(p.cols(), c);
    pad.middleCols(at, p.cols()).setIdentity();
    out += p * pad;
    at += p.cols();
  }
  return out;
}

AffineExpr vcat(const std::vector<AffineExpr>& parts) {
  std::vector<AffineExpr> t;
  t.reserve(parts.size());
  for (const auto& p : parts) t.push_back(p.transpose());
  return hcat(t).transpose();
}

AffineExpr blocks(const std::vector<std::vector<AffineExpr>>& rows) {
  std::vector<AffineExpr> stacked;
  stacked.reserve(rows.size());
  for (const auto& r : rows) stacked.push_back(hcat(r));
  return vcat(stacked);
}

AffineExpr block_diag(const AffineExpr& a, const AffineExpr& b) {
  return blocks({{a, AffineExpr::zero(a.rows(), b.cols())},
                 {AffineExpr::zero(b.rows(), a.cols()), b}});
}

}  // namespace imsynth::lmi
