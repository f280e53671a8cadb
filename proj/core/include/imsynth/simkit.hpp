#pragma once

// Time-varying test problems, gradient oracles, method runners and the
// experiment drivers (tracking simulation, order sweep, rate sweep).

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "imsynth/detail/parallel.hpp"
#include "imsynth/exo.hpp"
#include "imsynth/plant.hpp"
#include "imsynth/synth.hpp"

namespace imsynth::simkit {

using numkit::Matrix;
using numkit::Vector;

/// f(z, theta) with theta_{k+1} = S theta_k.
///   quadratic: z^T Q z + theta^T z, z in R^p
///   logistic:  (z - e1^T theta)^2 / 2 + a log(1 + e^{b z}), z scalar
struct Objective {
  enum class Kind { Quadratic, Logistic };
  Kind kind = Kind::Quadratic;
  Matrix Q;
  double a = 0.0;
  double b = 0.0;
  exo::Exosystem exosystem;
  Vector theta0;
  double mu = 0.0;  // strong convexity
  double L = 0.0;   // smoothness

  int dim() const { return kind == Kind::Quadratic ? static_cast<int>(Q.rows()) : 1; }
};

/// Q symmetric positive definite and S of matching size.
Objective quadratic_objective(Matrix q, const Matrix& s, Vector theta0);
/// a >= 0; mu = 1, L = 1 + a b^2 / 4.
Objective logistic_objective(double a, double b, const Matrix& s, Vector theta0);
/// a = 1, b = 6, S built from frequencies {0, pi/3}, theta0 = (1, 0, 1).
Objective paper_logistic_instance();

Vector gradient(const Objective& obj, const Vector& z, const Vector& theta);

/// Unique minimizer of f(., theta). The logistic case runs safeguarded Newton
/// to |gradient| <= 1e-12 from `warm` (NumericalError after 100 iterations).
Vector track_optimizer(const Objective& obj, const Vector& theta,
                       const std::optional<Vector>& warm = std::nullopt);

struct Trace {
  std::vector<Vector> z;
  std::vector<Vector> w;
  std::vector<Vector> z_star;
  std::vector<double> grad_norm;
  std::vector<double> tracking_error;
  std::vector<double> relative_error;

  int size() const { return static_cast<int>(grad_norm.size()); }
};

inline constexpr double kRelativeFloor = 1e-12;

/// x+ = (A (x) I_d) x + (B (x) I_d) w, z = (C (x) I_d) x with d = obj.dim().
/// x0 has length n d, ordered state-major (entry i d + j is state i of
/// coordinate j); empty means zero. Throws NumericalError when |x| > 1e12.
Trace run_method(const plant::Algorithm& alg, const Objective& obj, int steps,
                 const Vector& x0 = Vector());

enum class Baseline { GradientDescent, TripleMomentum };

Baseline parse_baseline(const std::string& name);
std::string to_string(Baseline b);

/// GD with step 2/(L + mu); TM with its standard parameters at
/// rho = 1 - sqrt(mu / L).
plant::Algorithm baseline_method(Baseline name, double mu, double L);

/// Mean of |z - z*| / max(|z*|, 1e-12) over the last `window` records.
double asymptotic_relative_error(const Trace& trace, int window);

/// c rho^k bound on grad_norm with c fitted on the first `fit_window` steps.
struct Envelope {
  double c = 0.0;
  double rho = 0.0;
  int fit_window = 0;
  double floor = 0.0;
  int first_violation = -1;  // -1 when the bound holds

  bool holds() const { return first_violation < 0; }
  double at(int k) const;
};

Envelope fit_envelope(const Trace& trace, double rho, int fit_window = 20, double floor = 1e-12);

/// Block-diagonal rotations at pi/7, 2pi/7, ... padded with +1 then -1.
Matrix figure1_exosystem(int p);

struct Figure1Config {
  std::vector<int> orders{1, 2, 4, 6};
  int seeds = 10;
  int steps = 600;
  int window = 100;
  double mu = 2.0;
  double L = 100.0;
  double eig_lo = 1.0;
  double eig_hi = 50.0;
  std::uint64_t seed = 1;
  int workers = 1;
};

struct Figure1Row {
  int p = 0;
  std::string method;
  double mean_rel_error = 0.0;
  double std = 0.0;
  int seeds = 0;
};

/// Rows ordered by p, then gradient descent before triple momentum.
std::vector<Figure1Row> run_figure1(const Figure1Config& cfg);

/// n points k pi / (n - 1), k = 0..n-1, as exact fractions of pi.
std::vector<exo::Frequency> theta_grid(int points);

struct SweepConfig {
  double mu = 1.0;
  double L = 10.0;
  int ell = 1;
  std::vector<exo::Frequency> thetas;
  exo::HarmonicPolicy policy = exo::HarmonicPolicy::max_degree(2);
  double rho_lo = 0.05;
  double rho_hi = 0.9999;
  double tol = 1e-3;
  int workers = 1;
};

struct SweepRow {
  exo::Frequency theta;
  double rho_star = 0.0;  // NaN when the synthesis failed
  double rho_tm = 0.0;
  int n_harmonics = 0;
  std::string status;     // "ok" or the failure message
  std::optional<synth::SynthesisResult> result;
};

/// One synthesis per theta; failures are recorded, rows keep input order.
std::vector<SweepRow> run_rate_sweep(const SweepConfig& cfg);

/// CSV writers; every header line is emitted as "# line".
void write_trace_csv(std::ostream& os, const Trace& trace, const Envelope& env,
                     const std::vector<std::string>& header = {});
void write_sweep_csv(std::ostream& os, const std::vector<SweepRow>& rows,
                     const std::vector<std::string>& header = {});
void write_figure1_csv(std::ostream& os, const std::vector<Figure1Row>& rows,
                       const std::vector<std::string>& header = {});

/// Fixed-format number for CSV and reports ("%.12g", "nan" for NaN).
std::string format_number(double v);

}  // namespace imsynth::simkit
