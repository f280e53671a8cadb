#include "imsynth/exo.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <sstream>

#include "imsynth/errors.hpp"

namespace imsynth::exo {

namespace {

constexpr double kModulusTol = 1e-8;
constexpr double kAngleTol = 1e-9;

double angle_between(Complex a, Complex b) { return std::abs(std::arg(a * std::conj(b))); }

bool contains_angle(const std::vector<Complex>& set, Complex w) {
  return std::any_of(set.begin(), set.end(),
                     [&](Complex v) { return angle_between(v, w) <= kAngleTol; });
}

void sort_harmonics(std::vector<Complex>& v) {
  // 1 first, then (theta, -theta) pairs with increasing theta, -1 last.
  std::sort(v.begin(), v.end(), [](Complex a, Complex b) {
    const double ta = std::abs(std::arg(a)), tb = std::abs(std::arg(b));
    if (std::abs(ta - tb) > kAngleTol) return ta < tb;
    return std::arg(a) > std::arg(b);
  });
}

/// If the set is exactly the m-th roots of unity, return them in exact form.
std::optional<std::vector<Complex>> as_roots_of_unity(const std::vector<Complex>& v) {
  const auto m = static_cast<int>(v.size());
  for (Complex w : v) {
    if (std::abs(std::pow(w, m) - 1.0) > 1e-8 * m) return std::nullopt;
  }
  std::vector<Complex> exact;
  exact.reserve(v.size());
  for (int k = 0; k < m; ++k) {
    // Exact values for the axis points keep polynomial coefficients integral.
    const int num = 4 * k;
    if (num % m == 0) {
      const int quarter = (num / m) % 4;
      static constexpr double re[] = {1.0, 0.0, -1.0, 0.0};
      static constexpr double im[] = {0.0, 1.0, 0.0, -1.0};
      exact.emplace_back(re[quarter], im[quarter]);
    } else {
      exact.push_back(std::polar(1.0, 2.0 * M_PI * k / m));
    }
  }
  return exact;
}

}  // namespace

Exosystem validate_exosystem(const Matrix& s) {
  if (s.rows() != s.cols()) throw DimensionError("validate_exosystem: S is not square");
  auto dec = numkit::eig_with_vectors(s);
  for (Complex l : dec.values) {
    if (std::abs(std::abs(l) - 1.0) > kModulusTol) {
      std::ostringstream os;
      os << "exosystem eigenvalue " << l << " has modulus " << std::abs(l)
         << " (unit modulus required)";
      throw AssumptionViolation(os.str());
    }
  }
  if (s.rows() > 0) {
    Eigen::JacobiSVD<numkit::CMatrix> svd(dec.vectors);
    const auto& sv = svd.singularValues();
    const double cond = sv(0) / std::max(sv(sv.size() - 1), 1e-300);
    if (cond > 1e8) {
      std::ostringstream os;
      os << "exosystem matrix is not diagonalizable (eigenvector condition number " << cond << ")";
      throw AssumptionViolation(os.str());
    }
  }
  return {s, std::move(dec.values)};
}

Vector step_exosystem(const Exosystem& exo, const Vector& theta) {
  if (theta.size() != exo.p()) throw DimensionError("step_exosystem: theta has wrong length");
  return exo.S * theta;
}

HarmonicPolicy HarmonicPolicy::parse(std::string_view text) {
  if (text == "closure") return closure();
  std::string_view digits = text;
  if (digits.starts_with("degree:")) digits.remove_prefix(7);
  int d = 0;
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), d);
  if (ec != std::errc{} || ptr != digits.data() + digits.size() || d < 0) {
    throw DomainError("harmonic policy must be 'closure' or 'degree:<d>', got '" +
                      std::string(text) + "'");
  }
  return max_degree(d);
}

std::string HarmonicPolicy::to_string() const {
  return kind == Kind::Closure ? std::string("closure") : "degree:" + std::to_string(degree);
}

bool HarmonicSet::contains(Complex w, double angle_tol) const {
  return std::any_of(values.begin(), values.end(),
                     [&](Complex v) { return angle_between(v, w) <= angle_tol; });
}

std::string HarmonicSet::describe() const {
  std::ostringstream os;
  os.precision(6);
  os << '{';
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) os << ", ";
    os << std::arg(values[i]);
  }
  os << '}';
  return os.str();
}

HarmonicSet harmonic_closure(std::span<const Complex> lambda, HarmonicPolicy policy) {
  for (Complex l : lambda) {
    if (std::abs(std::abs(l) - 1.0) > kModulusTol) {
      std::ostringstream os;
      os << "harmonic_closure: eigenvalue " << l << " is not unit modulus";
      throw DomainError(os.str());
    }
  }
  std::vector<Complex> set{Complex(1.0, 0.0)};
  std::vector<Complex> frontier = set;
  int level = 0;
  while (!frontier.empty()) {
    if (policy.kind == HarmonicPolicy::Kind::Degree && level >= policy.degree) break;
    std::vector<Complex> next;
    for (Complex a : frontier) {
      for (Complex l : lambda) {
        Complex v = a * l;
        v /= std::abs(v);
        if (!contains_angle(set, v) && !contains_angle(next, v)) next.push_back(v);
      }
    }
    set.insert(set.end(), next.begin(), next.end());
    if (policy.kind == HarmonicPolicy::Kind::Closure &&
        set.size() > static_cast<std::size_t>(policy.cap)) {
      std::ostringstream os;
      os << "harmonic closure exceeded " << policy.cap
         << " elements without stabilizing; the frequencies are likely not rational multiples "
            "of pi. Use a max-degree policy (e.g. degree:1) instead";
      throw ClosureOverflow(os.str());
    }
    frontier = std::move(next);
    ++level;
  }
  if (policy.kind == HarmonicPolicy::Kind::Closure) {
    if (auto exact = as_roots_of_unity(set)) set = std::move(*exact);
  } else {
    // Products of conjugate-closed tuples stay conjugate-closed; re-pair exactly.
    for (Complex& v : set) {
      if (std::abs(v.imag()) <= kAngleTol) v = Complex(v.real() > 0 ? 1.0 : -1.0, 0.0);
    }
  }
  sort_harmonics(set);
  // Force exact conjugate symmetry between adjacent pair members.
  for (std::size_t i = 0; i + 1 < set.size(); ++i) {
    if (set[i].imag() > 0 && angle_between(set[i + 1], std::conj(set[i])) <= kAngleTol) {
      set[i + 1] = std::conj(set[i]);
      ++i;
    }
  }
  return {std::move(set), {lambda.begin(), lambda.end()}, policy};
}

// ----------------------------------------------------------------- Frequency

namespace {

std::string strip(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (c != ' ' && c != '\t') out.push_back(c);
  }
  return out;
}

std::optional<long> parse_long(std::string_view s) {
  if (s.empty()) return std::nullopt;
  long v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

}  // namespace

Frequency Frequency::parse(std::string_view text) {
  const std::string s = strip(text);
  Frequency f;
  f.text = std::string(text);
  const auto pi_pos = s.find("pi");
  if (pi_pos != std::string::npos) {
    std::string_view head(s.data(), pi_pos);
    std::string_view tail(s.data() + pi_pos + 2, s.size() - pi_pos - 2);
    if (head.ends_with('*')) head.remove_suffix(1);
    long num = 1, den = 1;
    if (!head.empty()) {
      auto v = parse_long(head);
      if (!v) throw DomainError("cannot parse frequency '" + std::string(text) + "'");
      num = *v;
    }
    if (!tail.empty()) {
      if (!tail.starts_with('/')) throw DomainError("cannot parse frequency '" + std::string(text) + "'");
      auto v = parse_long(tail.substr(1));
      if (!v || *v <= 0) throw DomainError("cannot parse frequency '" + std::string(text) + "'");
      den = *v;
    }
    const long g = std::gcd(num, den);
    if (g > 1) {
      num /= g;
      den /= g;
    }
    f.pi_fraction = std::make_pair(num, den);
    f.radians = M_PI * static_cast<double>(num) / static_cast<double>(den);
  } else {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
      throw DomainError("cannot parse frequency '" + std::string(text) + "'");
    }
    f.radians = v;
    if (v == 0.0) f.pi_fraction = std::make_pair(0L, 1L);
  }
  if (f.radians < 0.0 || f.radians > M_PI + 1e-12) {
    throw DomainError("frequency '" + std::string(text) + "' must lie in [0, pi]");
  }
  return f;
}

Frequency Frequency::from_radians(double r) {
  Frequency f;
  f.radians = r;
  std::ostringstream os;
  os.precision(17);
  os << r;
  f.text = os.str();
  if (r == 0.0) f.pi_fraction = std::make_pair(0L, 1L);
  return f;
}

namespace {

bool is_zero_freq(const Frequency& f) {
  return f.pi_fraction ? f.pi_fraction->first == 0 : f.radians == 0.0;
}

bool is_pi_freq(const Frequency& f) {
  return f.pi_fraction ? (f.pi_fraction->first == 1 && f.pi_fraction->second == 1)
                       : std::abs(f.radians - M_PI) <= 1e-12;
}

std::pair<double, double> cos_sin(const Frequency& f) {
  if (f.pi_fraction) {
    // Exact values on the axes keep rotation blocks integral.
    const auto [num, den] = *f.pi_fraction;
    if ((2 * num) % den == 0) {
      const long q = ((2 * num) / den) % 4;
      static constexpr double c[] = {1.0, 0.0, -1.0, 0.0};
      static constexpr double s[] = {0.0, 1.0, 0.0, -1.0};
      return {c[q], s[q]};
    }
  }
  return {std::cos(f.radians), std::sin(f.radians)};
}

}  // namespace

std::vector<Complex> eigenvalues_for(const Frequency& f) {
  if (is_zero_freq(f)) return {Complex(1.0, 0.0)};
  if (is_pi_freq(f)) return {Complex(-1.0, 0.0)};
  const auto [c, s] = cos_sin(f);
  return {Complex(c, s), Complex(c, -s)};
}

std::vector<Complex> eigenvalues_for(std::span<const Frequency> fs) {
  std::vector<Complex> out;
  for (const auto& f : fs) {
    const auto l = eigenvalues_for(f);
    out.insert(out.end(), l.begin(), l.end());
  }
  return out;
}

Matrix exosystem_matrix(std::span<const Frequency> fs) {
  std::vector<Matrix> blocks;
  std::vector<double> scalars;
  for (const auto& f : fs) {
    if (is_zero_freq(f)) {
      scalars.push_back(1.0);
    } else if (is_pi_freq(f)) {
      scalars.push_back(-1.0);
    } else {
      const auto [c, s] = cos_sin(f);
      Matrix r(2, 2);
      r << c, -s, s, c;
      blocks.push_back(r);
    }
  }
  const auto p = static_cast<Eigen::Index>(2 * blocks.size() + scalars.size());
  Matrix out = Matrix::Zero(p, p);
  Eigen::Index at = 0;
  for (const auto& b : blocks) {
    out.block(at, at, 2, 2) = b;
    at += 2;
  }
  for (double v : scalars) out(at, at) = v, ++at;
  return out;
}

}  // namespace imsynth::exo
