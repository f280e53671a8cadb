#include "imsynth/simkit.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <random>

#include <Eigen/QR>

#include "imsynth/errors.hpp"

namespace imsynth::simkit {

namespace {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void check_theta(const Objective& obj, const Vector& theta) {
  if (theta.size() != obj.exosystem.p()) {
    throw DimensionError("objective: parameter has length " + std::to_string(theta.size()) +
                         ", exosystem order is " + std::to_string(obj.exosystem.p()));
  }
}

double logistic_gradient(const Objective& obj, double z, double t) {
  return z - t + obj.a * obj.b * sigmoid(obj.b * z);
}

}  // namespace

Objective quadratic_objective(Matrix q, const Matrix& s, Vector theta0) {
  if (q.rows() != q.cols() || q.rows() == 0) throw DimensionError("quadratic_objective: Q must be square");
  if (!numkit::is_symmetric(q)) throw DomainError("quadratic_objective: Q must be symmetric");
  Objective obj;
  obj.kind = Objective::Kind::Quadratic;
  obj.exosystem = exo::validate_exosystem(s);
  if (obj.exosystem.p() != q.rows()) throw DimensionError("quadratic_objective: S and Q sizes differ");
  if (theta0.size() != q.rows()) throw DimensionError("quadratic_objective: theta0 has wrong length");
  Eigen::SelfAdjointEigenSolver<Matrix> es(q);
  const double lo = es.eigenvalues()(0);
  if (!(lo > 0.0)) throw DomainError("quadratic_objective: Q must be positive definite");
  obj.Q = std::move(q);
  obj.theta0 = std::move(theta0);
  obj.mu = 2.0 * lo;
  obj.L = 2.0 * es.eigenvalues()(es.eigenvalues().size() - 1);
  return obj;
}

Objective logistic_objective(double a, double b, const Matrix& s, Vector theta0) {
  if (!(a >= 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
    throw DomainError("logistic_objective: need finite a >= 0 and finite b");
  }
  Objective obj;
  obj.kind = Objective::Kind::Logistic;
  obj.a = a;
  obj.b = b;
  obj.exosystem = exo::validate_exosystem(s);
  if (theta0.size() != obj.exosystem.p()) throw DimensionError("logistic_objective: theta0 has wrong length");
  obj.theta0 = std::move(theta0);
  obj.mu = 1.0;
  obj.L = 1.0 + a * b * b / 4.0;
  return obj;
}

Objective paper_logistic_instance() {
  const std::vector<exo::Frequency> fs{exo::Frequency::parse("0"), exo::Frequency::parse("pi/3")};
  Vector theta0(3);
  theta0 << 1.0, 0.0, 1.0;
  return logistic_objective(1.0, 6.0, exo::exosystem_matrix(fs), theta0);
}

Vector gradient(const Objective& obj, const Vector& z, const Vector& theta) {
  check_theta(obj, theta);
  if (z.size() != obj.dim()) throw DimensionError("gradient: point has wrong length");
  if (obj.kind == Objective::Kind::Quadratic) return 2.0 * obj.Q * z + theta;
  Vector g(1);
  g(0) = logistic_gradient(obj, z(0), theta(0));
  return g;
}

Vector track_optimizer(const Objective& obj, const Vector& theta, const std::optional<Vector>& warm) {
  check_theta(obj, theta);
  if (obj.kind == Objective::Kind::Quadratic) return obj.Q.ldlt().solve(-0.5 * theta);

  // g is increasing with g' >= 1 and the root lies in [t - max(0,ab), t - min(0,ab)].
  const double t = theta(0);
  const double ab = obj.a * obj.b;
  double lo = t - std::max(0.0, ab);
  double hi = t - std::min(0.0, ab);
  double z = warm && warm->size() == 1 ? std::clamp((*warm)(0), lo, hi) : 0.5 * (lo + hi);
  for (int it = 0; it < 100; ++it) {
    const double g = logistic_gradient(obj, z, t);
    if (std::abs(g) <= 1e-12) return Vector::Constant(1, z);
    if (g > 0.0) {
      hi = z;
    } else {
      lo = z;
    }
    const double s = sigmoid(obj.b * z);
    const double dg = 1.0 + ab * obj.b * s * (1.0 - s);
    double next = z - g / dg;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == z) return Vector::Constant(1, z);
    z = next;
  }
  throw NumericalError("track_optimizer: Newton iteration did not converge in 100 steps");
}

Trace run_method(const plant::Algorithm& alg, const Objective& obj, int steps, const Vector& x0) {
  if (steps < 0) throw DomainError("run_method: steps must be non-negative");
  const int n = alg.order();
  const int d = obj.dim();
  Matrix x = Matrix::Zero(n, d);
  if (x0.size() != 0) {
    if (x0.size() != n * d) {
      throw DimensionError("run_method: x0 has length " + std::to_string(x0.size()) + ", expected " +
                           std::to_string(n * d));
    }
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < d; ++j) x(i, j) = x0(i * d + j);
    }
  }
  Trace tr;
  tr.z.reserve(steps);
  tr.w.reserve(steps);
  tr.z_star.reserve(steps);
  Vector theta = obj.theta0;
  std::optional<Vector> z_star;
  for (int k = 0; k < steps; ++k) {
    const Vector z = (alg.C() * x).transpose();
    const Vector w = gradient(obj, z, theta);
    z_star = track_optimizer(obj, theta, z_star);
    const double err = (z - *z_star).norm();
    tr.z.push_back(z);
    tr.w.push_back(w);
    tr.z_star.push_back(*z_star);
    tr.grad_norm.push_back(w.norm());
    tr.tracking_error.push_back(err);
    tr.relative_error.push_back(err / std::max(z_star->norm(), kRelativeFloor));
    x = alg.A() * x + alg.B() * w.transpose();
    if (!(x.norm() <= 1e12)) {
      throw NumericalError("run_method: state norm exceeded 1e12 at step " + std::to_string(k + 1) +
                           " (method diverged)");
    }
    theta = exo::step_exosystem(obj.exosystem, theta);
  }
  return tr;
}

Baseline parse_baseline(const std::string& name) {
  if (name == "gradient_descent" || name == "gd") return Baseline::GradientDescent;
  if (name == "triple_momentum" || name == "tm") return Baseline::TripleMomentum;
  throw DomainError("unknown baseline method '" + name + "' (expected gradient_descent or triple_momentum)");
}

std::string to_string(Baseline b) {
  return b == Baseline::GradientDescent ? "gradient_descent" : "triple_momentum";
}

plant::Algorithm baseline_method(Baseline name, double mu, double L) {
  if (!(mu > 0.0 && mu < L && std::isfinite(L))) throw DomainError("baseline_method: need 0 < mu < L");
  plant::AlgorithmInfo info;
  info.mu = mu;
  info.L = L;
  info.harmonics = {numkit::Complex(1.0, 0.0)};
  info.provenance["method"] = to_string(name);
  if (name == Baseline::GradientDescent) {
    info.rho = (L - mu) / (L + mu);
    return plant::Algorithm(Matrix::Ones(1, 1), Matrix::Constant(1, 1, -2.0 / (L + mu)),
                            Matrix::Ones(1, 1), info);
  }
  const double rho = 1.0 - std::sqrt(mu / L);
  const double alpha = (1.0 + rho) / L;
  const double beta = rho * rho / (2.0 - rho);
  const double gamma = rho * rho / ((1.0 + rho) * (2.0 - rho));
  info.rho = rho;
  Matrix a(2, 2), b(2, 1), c(1, 2);
  a << 1.0 + beta, -beta, 1.0, 0.0;
  b << -alpha, 0.0;
  c << 1.0 + gamma, -gamma;
  return plant::Algorithm(a, b, c, info);
}

double asymptotic_relative_error(const Trace& trace, int window) {
  if (window < 1 || window > trace.size()) {
    throw DomainError("asymptotic_relative_error: window must be in [1, trace length]");
  }
  double sum = 0.0;
  for (int k = trace.size() - window; k < trace.size(); ++k) sum += trace.relative_error[k];
  return sum / window;
}

double Envelope::at(int k) const { return c * std::pow(rho, k); }

Envelope fit_envelope(const Trace& trace, double rho, int fit_window, double floor) {
  if (!(rho > 0.0 && rho < 1.0)) throw DomainError("fit_envelope: rho must lie in (0, 1)");
  if (fit_window < 1 || fit_window > trace.size()) {
    throw DomainError("fit_envelope: fit window must be in [1, trace length]");
  }
  Envelope env;
  env.rho = rho;
  env.fit_window = fit_window;
  env.floor = floor;
  for (int k = 0; k < fit_window; ++k) env.c = std::max(env.c, trace.grad_norm[k] / std::pow(rho, k));
  for (int k = fit_window; k < trace.size(); ++k) {
    const double g = trace.grad_norm[k];
    if (g > floor && g > env.at(k) * (1.0 + 1e-12)) {
      env.first_violation = k;
      break;
    }
  }
  return env;
}

Matrix figure1_exosystem(int p) {
  if (p < 1) throw DomainError("figure1_exosystem: order must be at least 1");
  Matrix s = Matrix::Zero(p, p);
  int i = 0;
  for (int r = 1; i + 1 < p; ++r, i += 2) {
    const double th = r * M_PI / 7.0;
    s(i, i) = std::cos(th);
    s(i, i + 1) = -std::sin(th);
    s(i + 1, i) = std::sin(th);
    s(i + 1, i + 1) = std::cos(th);
  }
  for (double pad = 1.0; i < p; ++i, pad = -pad) s(i, i) = pad;
  return s;
}

std::vector<Figure1Row> run_figure1(const Figure1Config& cfg) {
  if (cfg.orders.empty()) throw DomainError("run_figure1: no orders given");
  for (int p : cfg.orders) {
    if (p < 1) throw DomainError("run_figure1: orders must be at least 1");
  }
  if (cfg.seeds < 1) throw DomainError("run_figure1: seeds must be at least 1");
  if (cfg.window < 1 || cfg.steps < cfg.window) throw DomainError("run_figure1: need 1 <= window <= steps");
  if (!(cfg.eig_lo > 0.0 && cfg.eig_lo <= cfg.eig_hi)) throw DomainError("run_figure1: need 0 < eig_lo <= eig_hi");

  const std::vector<Baseline> methods{Baseline::GradientDescent, Baseline::TripleMomentum};
  std::vector<plant::Algorithm> algs;
  for (auto m : methods) algs.push_back(baseline_method(m, cfg.mu, cfg.L));

  const int np = static_cast<int>(cfg.orders.size());
  // errors[(order * seeds + seed) * methods + method]
  std::vector<double> errors(static_cast<std::size_t>(np) * cfg.seeds * methods.size());
  parallel_for(np * cfg.seeds, cfg.workers, [&](int job) {
    const int oi = job / cfg.seeds;
    const int seed = job % cfg.seeds;
    const int p = cfg.orders[oi];
    std::seed_seq sq{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32),
                     static_cast<std::uint32_t>(p), static_cast<std::uint32_t>(seed)};
    std::mt19937_64 rng(sq);
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> uni(cfg.eig_lo, cfg.eig_hi);
    Matrix g(p, p);
    for (int c = 0; c < p; ++c) {
      for (int r = 0; r < p; ++r) g(r, c) = normal(rng);
    }
    const Matrix v = Eigen::HouseholderQR<Matrix>(g).householderQ();
    Vector eigs(p);
    for (int r = 0; r < p; ++r) eigs(r) = uni(rng);
    Matrix q = v * eigs.asDiagonal() * v.transpose();
    q = 0.5 * (q + q.transpose()).eval();
    Vector theta0(p);
    for (int r = 0; r < p; ++r) theta0(r) = normal(rng);
    const Objective obj = quadratic_objective(q, figure1_exosystem(p), theta0);
    for (std::size_t m = 0; m < methods.size(); ++m) {
      const Trace tr = run_method(algs[m], obj, cfg.steps);
      errors[(static_cast<std::size_t>(job)) * methods.size() + m] =
          asymptotic_relative_error(tr, cfg.window);
    }
  });

  std::vector<Figure1Row> rows;
  for (int oi = 0; oi < np; ++oi) {
    for (std::size_t m = 0; m < methods.size(); ++m) {
      double sum = 0.0, sq = 0.0;
      for (int s = 0; s < cfg.seeds; ++s) {
        const double e = errors[(static_cast<std::size_t>(oi) * cfg.seeds + s) * methods.size() + m];
        sum += e;
        sq += e * e;
      }
      const double mean = sum / cfg.seeds;
      const double var = cfg.seeds > 1 ? std::max(0.0, (sq - cfg.seeds * mean * mean) / (cfg.seeds - 1)) : 0.0;
      rows.push_back({cfg.orders[oi], to_string(methods[m]), mean, std::sqrt(var), cfg.seeds});
    }
  }
  return rows;
}

std::vector<exo::Frequency> theta_grid(int points) {
  if (points < 2) throw DomainError("theta_grid: need at least 2 points");
  std::vector<exo::Frequency> out;
  const int den = points - 1;
  for (int k = 0; k < points; ++k) {
    const std::string text =
        k == 0 ? "0" : (k == den ? "pi" : std::to_string(k) + "*pi/" + std::to_string(den));
    out.push_back(exo::Frequency::parse(text));
  }
  return out;
}

std::vector<SweepRow> run_rate_sweep(const SweepConfig& cfg) {
  transform::detail::check_sector(cfg.mu, cfg.L);
  for (const auto& th : cfg.thetas) {
    if (!(th.radians >= 0.0 && th.radians <= M_PI + 1e-12)) {
      throw DomainError("run_rate_sweep: theta '" + th.text + "' is outside [0, pi]");
    }
  }
  const double rho_tm = 1.0 - std::sqrt(cfg.mu / cfg.L);
  std::vector<SweepRow> rows(cfg.thetas.size());
  parallel_for(static_cast<int>(rows.size()), cfg.workers, [&](int i) {
    SweepRow& row = rows[i];
    row.theta = cfg.thetas[i];
    row.rho_tm = rho_tm;
    row.rho_star = std::numeric_limits<double>::quiet_NaN();
    try {
      synth::RateQuery q;
      q.mu = cfg.mu;
      q.L = cfg.L;
      q.ell = cfg.ell;
      q.rho_lo = cfg.rho_lo;
      q.rho_hi = cfg.rho_hi;
      q.tol = cfg.tol;
      q.harmonics = exo::harmonic_closure(exo::eigenvalues_for(row.theta), cfg.policy);
      row.n_harmonics = static_cast<int>(q.harmonics.size());
      auto res = synth::bisect_optimal_rate(q);
      row.rho_star = res.rho_star;
      row.status = "ok";
      row.result = std::move(res);
    } catch (const Error& e) {
      row.status = e.what();
    }
  });
  return rows;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

namespace {

void write_header(std::ostream& os, const std::vector<std::string>& header) {
  for (const auto& line : header) os << "# " << line << '\n';
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + '"';
}

}  // namespace

void write_trace_csv(std::ostream& os, const Trace& trace, const Envelope& env,
                     const std::vector<std::string>& header) {
  write_header(os, header);
  os << "k,grad_norm,tracking_error,relative_error,envelope\n";
  for (int k = 0; k < trace.size(); ++k) {
    os << k << ',' << format_number(trace.grad_norm[k]) << ',' << format_number(trace.tracking_error[k])
       << ',' << format_number(trace.relative_error[k]) << ',' << format_number(env.at(k)) << '\n';
  }
}

void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows,
                     const std::vector<std::string>& header) {
  write_header(os, header);
  os << "theta,rho_star,rho_tm,n_harmonics,status\n";
  for (const auto& r : rows) {
    os << format_number(r.theta.radians) << ',' << format_number(r.rho_star) << ','
       << format_number(r.rho_tm) << ',' << r.n_harmonics << ',' << csv_field(r.status) << '\n';
  }
}

void write_figure1_csv(std::ostream& os, const std::vector<Figure1Row>& rows,
                       const std::vector<std::string>& header) {
  write_header(os, header);
  os << "p,method,mean_rel_error,std,seeds\n";
  for (const auto& r : rows) {
    os << r.p << ',' << r.method << ',' << format_number(r.mean_rel_error) << ',' << format_number(r.std)
       << ',' << r.seeds << '\n';
  }
}

}  // namespace imsynth::simkit
