#include "cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "imsynth/exo.hpp"
#include "imsynth/plant.hpp"
#include "imsynth/serialize.hpp"
#include "imsynth/simkit.hpp"
#include "imsynth/synth.hpp"

#ifndef IMSYNTH_VERSION
#define IMSYNTH_VERSION "0.0.0"
#endif

namespace imsynth::cli {

using numkit::Complex;
using numkit::Matrix;
using numkit::Vector;
using simkit::format_number;

namespace {

std::string join_lines(const std::vector<std::string>& items, const std::string& indent) {
  std::string s;
  for (const auto& p : items) s += indent + "- " + p + "\n";
  return s;
}

}  // namespace

ValidationError::ValidationError(std::vector<std::string> problems)
    : Error("invalid configuration:\n" + join_lines(problems, "  ")), problems_(std::move(problems)) {}

std::string version() { return IMSYNTH_VERSION; }

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

namespace {

template <class T>
std::string join(const std::vector<T>& v) {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "," : "") << v[i];
  return os.str();
}

std::string opt_number(const std::optional<double>& v) { return v ? format_number(*v) : "unset"; }

const std::vector<std::string> kDefaultFreqs{"0", "pi/3"};

Matrix parse_matrix(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::stringstream all(text);
  std::string row;
  while (std::getline(all, row, ';')) {
    std::replace(row.begin(), row.end(), ',', ' ');
    std::istringstream rs(row);
    std::vector<double> r;
    std::string tok;
    while (rs >> tok) {
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(tok, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != tok.size()) throw DomainError("S: '" + tok + "' is not a number");
      r.push_back(v);
    }
    if (!r.empty()) rows.push_back(std::move(r));
  }
  if (rows.empty()) throw DomainError("S: no entries");
  const std::size_t n = rows.size();
  for (const auto& r : rows) {
    if (r.size() != n) throw DomainError("S: matrix must be square with rows separated by ';'");
  }
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) m(i, j) = rows[i][j];
  }
  return m;
}

std::vector<exo::Frequency> parse_freqs(const std::vector<std::string>& texts) {
  std::vector<exo::Frequency> out;
  for (const auto& t : texts) out.push_back(exo::Frequency::parse(t));
  return out;
}

bool uses_algorithm(const std::string& c) {
  return c == "analyze" || c == "simulate" || c == "verify";
}

}  // namespace

std::vector<std::string> validate(const RunConfig& cfg) {
  std::vector<std::string> bad;
  const auto& c = cfg.command;
  auto check = [&](bool ok, const std::string& msg) {
    if (!ok) bad.push_back(msg);
  };
  auto guarded = [&](const std::function<void()>& f) {
    try {
      f();
    } catch (const std::exception& e) {
      bad.push_back(e.what());
    }
  };

  if (cfg.mu) check(*cfg.mu > 0.0, "mu must be positive");
  if (cfg.L) check(*cfg.L > 0.0, "L must be positive");
  if (cfg.mu && cfg.L) check(*cfg.mu < *cfg.L, "mu must be smaller than L");
  check(cfg.workers >= 1, "workers must be at least 1");

  if (c == "synth" || c == "analyze" || c == "sweep") {
    check(cfg.ell >= 1, "ell must be at least 1");
    check(cfg.rho_lo > 0.0 && cfg.rho_lo < cfg.rho_hi && cfg.rho_hi < 1.0,
          "rho bracket must satisfy 0 < rho-lo < rho-hi < 1");
    check(cfg.tol > 0.0 && cfg.tol < cfg.rho_hi - cfg.rho_lo,
          "tol must be positive and smaller than the rho bracket");
  }
  if (c == "synth" || c == "analyze" || c == "verify" || c == "simulate") {
    check(cfg.freqs.empty() || cfg.S.empty(), "give either --freq or --S, not both");
    for (const auto& t : cfg.freqs) {
      guarded([&] {
        const auto f = exo::Frequency::parse(t);
        if (f.radians < 0.0 || f.radians > std::numbers::pi + 1e-12) {
          throw DomainError("frequency '" + t + "' is outside [0, pi]");
        }
      });
    }
    if (!cfg.S.empty()) guarded([&] { (void)parse_matrix(cfg.S); });
  }
  if (c == "synth" || c == "analyze" || c == "verify" || c == "sweep") {
    guarded([&] { (void)exo::HarmonicPolicy::parse(cfg.harmonics); });
  }
  if (c == "synth") check(!cfg.freqs.empty() || !cfg.S.empty(), "synth needs --freq or --S");
  if (c == "verify") check(cfg.structure_tol > 0.0, "structure-tol must be positive");
  if (uses_algorithm(c)) {
    check(cfg.algorithm.empty() != cfg.baseline.empty(),
          "give exactly one of --algorithm or --baseline");
    if (!cfg.baseline.empty()) guarded([&] { (void)simkit::parse_baseline(cfg.baseline); });
  }
  if (c == "simulate") {
    check(cfg.problem == "logistic" || cfg.problem == "quadratic",
          "problem must be 'logistic' or 'quadratic'");
    check(cfg.a >= 0.0, "a must be non-negative");
    check(std::isfinite(cfg.b), "b must be finite");
    check(cfg.p >= 1, "p must be at least 1");
    check(cfg.steps > cfg.fit_window, "steps must exceed fit-window");
    check(cfg.fit_window >= 1, "fit-window must be at least 1");
    check(cfg.window >= 1 && cfg.window <= cfg.steps, "window must lie in [1, steps]");
    if (cfg.rho) check(*cfg.rho > 0.0 && *cfg.rho <= 1.0, "rho must lie in (0, 1]");
  }
  if (c == "sweep") {
    if (cfg.thetas.empty()) check(cfg.points >= 2, "points must be at least 2");
    for (const auto& t : cfg.thetas) {
      guarded([&] {
        const auto f = exo::Frequency::parse(t);
        if (f.radians < 0.0 || f.radians > std::numbers::pi + 1e-12) {
          throw DomainError("theta '" + t + "' is outside [0, pi]");
        }
      });
    }
  }
  if (c == "figure1") {
    check(!cfg.orders.empty(), "orders must not be empty");
    for (int p : cfg.orders) check(p >= 1, "orders must be at least 1");
    check(cfg.seeds >= 1, "seeds must be at least 1");
    check(cfg.window >= 1 && cfg.window <= cfg.steps, "window must lie in [1, steps]");
  }
  return bad;
}

std::string canonical(const RunConfig& cfg) {
  std::ostringstream os;
  os << "command=" << cfg.command << '\n'
     << "mu=" << opt_number(cfg.mu) << '\n'
     << "L=" << opt_number(cfg.L) << '\n'
     << "freq=" << join(cfg.freqs) << '\n'
     << "S=" << cfg.S << '\n'
     << "ell=" << cfg.ell << '\n'
     << "rho_lo=" << format_number(cfg.rho_lo) << '\n'
     << "rho_hi=" << format_number(cfg.rho_hi) << '\n'
     << "tol=" << format_number(cfg.tol) << '\n'
     << "harmonics=" << cfg.harmonics << '\n'
     << "structure_tol=" << format_number(cfg.structure_tol) << '\n'
     << "problem=" << cfg.problem << '\n'
     << "a=" << format_number(cfg.a) << '\n'
     << "b=" << format_number(cfg.b) << '\n'
     << "p=" << cfg.p << '\n'
     << "orders=" << join(cfg.orders) << '\n'
     << "theta=" << join(cfg.thetas) << '\n'
     << "points=" << cfg.points << '\n'
     << "seeds=" << cfg.seeds << '\n'
     << "steps=" << cfg.steps << '\n'
     << "window=" << cfg.window << '\n'
     << "fit_window=" << cfg.fit_window << '\n'
     << "seed=" << cfg.seed << '\n'
     << "rho=" << opt_number(cfg.rho) << '\n'
     << "algorithm=" << cfg.algorithm << '\n'
     << "baseline=" << cfg.baseline << '\n';
  return os.str();
}

std::string config_hash(const RunConfig& cfg) {
  std::ostringstream os;
  os << "fnv1a64:" << std::hex << std::setw(16) << std::setfill('0') << fnv1a64(canonical(cfg));
  return os.str();
}

namespace {

struct Context {
  std::ostream& out;
  std::ostream& err;
};

void write_file(const Context& ctx, const std::string& path, const std::string& content) {
  if (path == "-") {
    ctx.out << content;
    return;
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f << content;
  f.close();
  if (!f) throw IoError("failed writing '" + path + "'");
}

std::vector<std::string> provenance(const RunConfig& cfg, const std::string& harmonics) {
  return {"imsynth " + version(), "command: " + cfg.command, "config_hash: " + config_hash(cfg),
          "harmonics: " + harmonics};
}

std::optional<std::vector<Complex>> exo_eigenvalues(const RunConfig& cfg) {
  if (!cfg.freqs.empty()) {
    return exo::eigenvalues_for(std::span<const exo::Frequency>(parse_freqs(cfg.freqs)));
  }
  if (!cfg.S.empty()) return exo::validate_exosystem(parse_matrix(cfg.S)).spectrum;
  return std::nullopt;
}

std::optional<exo::HarmonicSet> requested_harmonics(const RunConfig& cfg) {
  const auto eig = exo_eigenvalues(cfg);
  if (!eig) return std::nullopt;
  return exo::harmonic_closure(*eig, exo::HarmonicPolicy::parse(cfg.harmonics));
}

/// The harmonic set recorded in an algorithm file, if it goes beyond {1}.
std::optional<exo::HarmonicSet> recorded_harmonics(const plant::Algorithm& alg) {
  const auto& h = alg.info().harmonics;
  const bool trivial = std::all_of(h.begin(), h.end(), [](Complex w) { return std::abs(w - 1.0) < 1e-12; });
  if (trivial) return std::nullopt;
  return exo::harmonic_closure(h, exo::HarmonicPolicy::closure());
}

double pick(const std::optional<double>& given, double recorded, double fallback) {
  if (given) return *given;
  return recorded > 0.0 ? recorded : fallback;
}

/// The algorithm named by --algorithm or --baseline; baselines are tuned to
/// (mu, L).
plant::Algorithm input_algorithm(const RunConfig& cfg, double mu, double L) {
  if (!cfg.baseline.empty()) return simkit::baseline_method(simkit::parse_baseline(cfg.baseline), mu, L);
  return serialize::load_algorithm(cfg.algorithm);
}

std::string describe_lambda(const Vector& lambda) {
  std::string s;
  for (Eigen::Index i = 0; i < lambda.size(); ++i) s += (i ? " " : "") + format_number(lambda(i));
  return s;
}

int cmd_synth(const RunConfig& cfg, const Context& ctx) {
  synth::RateQuery q;
  q.mu = cfg.mu.value_or(1.0);
  q.L = cfg.L.value_or(10.0);
  q.harmonics = *requested_harmonics(cfg);
  q.ell = cfg.ell;
  q.rho_lo = cfg.rho_lo;
  q.rho_hi = cfg.rho_hi;
  q.tol = cfg.tol;
  q.validate();

  const auto r = synth::bisect_optimal_rate(q);
  plant::Algorithm alg = r.algorithm();
  const std::string hdesc = q.harmonics.describe();
  auto& prov = alg.info().provenance;
  prov["tool"] = "imsynth " + version();
  prov["command"] = cfg.command;
  prov["config_hash"] = config_hash(cfg);
  prov["harmonics"] = hdesc;
  prov["harmonic_policy"] = q.harmonics.policy.to_string();
  const auto structure = plant::verify_internal_model_structure(alg, q.harmonics, cfg.structure_tol);

  std::ostringstream rep;
  for (const auto& line : provenance(cfg, hdesc)) rep << "# " << line << '\n';
  const auto& d = r.diagnostics;
  rep << "rho_star: " << format_number(r.rho_star) << '\n'
      << "lambda: " << describe_lambda(r.lambda_star.lambda) << '\n'
      << "recertified_rate: " << format_number(d.recertified_rate) << '\n'
      << "n_harmonics: " << q.harmonics.size() << '\n'
      << "controller_order: " << r.K.states() << '\n'
      << "algorithm_order: " << alg.order() << '\n'
      << "sylvester_residual: " << format_number(r.certificate.sylvester_residual) << '\n'
      << "sylvester_scale: " << format_number(r.certificate.sylvester_scale) << '\n'
      << "certificate_residual: " << format_number(r.certificate.worst_residual) << '\n'
      << "reconstruction_stage1_margin: " << format_number(d.reconstruction.stage1_margin) << '\n'
      << "reconstruction_stage2_margin: " << format_number(d.reconstruction.stage2_margin) << '\n'
      << "reconstruction_completion_condition: "
      << format_number(d.reconstruction.completion_condition) << '\n'
      << "reconstruction_analysis_residual: " << format_number(d.reconstruction.analysis_residual)
      << '\n'
      << "reconstruction_trace_bound: " << format_number(d.reconstruction.trace_bound) << '\n'
      << "structure_check: " << (structure.passed() ? "passed" : "failed") << '\n';
  for (const auto& w : d.warnings) rep << "warning: " << w << '\n';
  rep << "bisection: rho status slack newton_steps\n";
  for (const auto& s : d.trace) {
    rep << "  " << format_number(s.rho) << ' ' << lmi::to_string(s.status) << ' '
        << format_number(s.slack) << ' ' << s.newton_steps << '\n';
  }
  rep << "structure:\n" << structure.summary();
  if (!structure.summary().empty() && structure.summary().back() != '\n') rep << '\n';

  const std::string out_path = cfg.out.empty() ? "algorithm.json" : cfg.out;
  const std::string report_path = cfg.report.empty() ? "synth_report.txt" : cfg.report;
  write_file(ctx, out_path, serialize::algorithm_to_json(alg));
  write_file(ctx, report_path, rep.str());

  ctx.out << "rho_star = " << format_number(r.rho_star) << '\n'
          << "recertified_rate = " << format_number(d.recertified_rate) << '\n'
          << "algorithm_order = " << alg.order() << '\n'
          << "harmonics = " << hdesc << '\n';
  if (!structure.passed()) {
    ctx.err << "synthesized algorithm fails the internal-model check\n" << structure.summary();
    return kInfeasible;
  }
  return kOk;
}

int cmd_analyze(const RunConfig& cfg, const Context& ctx) {
  std::optional<plant::Algorithm> file;
  if (!cfg.algorithm.empty()) file = serialize::load_algorithm(cfg.algorithm);
  const double mu = pick(cfg.mu, file ? file->info().mu : 0.0, 1.0);
  const double L = pick(cfg.L, file ? file->info().L : 0.0, 10.0);
  if (!(mu > 0.0 && mu < L)) throw ValidationError({"mu must satisfy 0 < mu < L"});
  const plant::Algorithm alg = file ? *file : input_algorithm(cfg, mu, L);
  auto hs = requested_harmonics(cfg);
  if (!hs) hs = recorded_harmonics(alg);

  const auto c = synth::certify_rate(alg, mu, L, cfg.ell, cfg.rho_lo, cfg.rho_hi, cfg.tol, hs);
  ctx.out << "rate = " << format_number(c.rate) << '\n'
          << "margin = " << format_number(c.margin) << '\n'
          << "lambda = " << describe_lambda(c.lambda.lambda) << '\n'
          << "harmonics = " << (hs ? hs->describe() : std::string("{0}")) << '\n';
  return kOk;
}

int cmd_verify(const RunConfig& cfg, const Context& ctx) {
  std::optional<plant::Algorithm> file;
  if (!cfg.algorithm.empty()) file = serialize::load_algorithm(cfg.algorithm);
  const double mu = pick(cfg.mu, file ? file->info().mu : 0.0, 1.0);
  const double L = pick(cfg.L, file ? file->info().L : 0.0, 10.0);
  if (!(mu > 0.0 && mu < L)) throw ValidationError({"mu must satisfy 0 < mu < L"});
  const plant::Algorithm alg = file ? *file : input_algorithm(cfg, mu, L);
  auto hs = requested_harmonics(cfg);
  if (!hs) hs = recorded_harmonics(alg);
  if (!hs) throw ValidationError({"verify needs --freq or --S, or an algorithm file with harmonics"});

  const auto report = plant::verify_internal_model_structure(alg, *hs, cfg.structure_tol);
  ctx.out << "harmonics = " << hs->describe() << '\n' << report.summary();
  if (!report.summary().empty() && report.summary().back() != '\n') ctx.out << '\n';
  ctx.out << "structure = " << (report.passed() ? "passed" : "failed") << '\n';
  return report.passed() ? kOk : kInfeasible;
}

/// theta0 with a 1 on the first coordinate of every rotation block and on
/// every scalar block; all ones for an explicit S.
Vector default_theta0(const RunConfig& cfg, int p) {
  if (!cfg.S.empty() || (cfg.freqs.empty() && cfg.problem == "quadratic")) return Vector::Ones(p);
  const auto freqs = parse_freqs(cfg.freqs.empty() ? kDefaultFreqs : cfg.freqs);
  Vector t = Vector::Ones(p);
  int k = 0;
  for (const auto& f : freqs) {
    if (f.radians > 0.0 && f.radians < std::numbers::pi) {
      t(k + 1) = 0.0;
      k += 2;
    }
  }
  return t;
}

Matrix random_spd(int n, double lo, double hi, std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(n)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> uni(lo, hi);
  Matrix g(n, n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) g(i, j) = gauss(rng);
  }
  const Matrix q = Eigen::HouseholderQR<Matrix>(g).householderQ();
  Vector eig(n);
  for (int i = 0; i < n; ++i) eig(i) = uni(rng);
  eig(0) = lo;
  if (n > 1) eig(n - 1) = hi;
  return q * eig.asDiagonal() * q.transpose();
}

int cmd_simulate(const RunConfig& cfg, const Context& ctx) {
  Matrix s;
  if (!cfg.S.empty()) {
    s = parse_matrix(cfg.S);
  } else if (cfg.freqs.empty() && cfg.problem == "quadratic") {
    s = simkit::figure1_exosystem(cfg.p);
  } else {
    const auto freqs = parse_freqs(cfg.freqs.empty() ? kDefaultFreqs : cfg.freqs);
    s = exo::exosystem_matrix(freqs);
  }
  const int p = static_cast<int>(s.rows());
  simkit::Objective obj;
  if (cfg.problem == "logistic") {
    obj = simkit::logistic_objective(cfg.a, cfg.b, s, default_theta0(cfg, p));
  } else {
    const double mu = cfg.mu.value_or(1.0);
    const double L = cfg.L.value_or(10.0);
    obj = simkit::quadratic_objective(random_spd(p, mu / 2.0, L / 2.0, cfg.seed), s,
                                      default_theta0(cfg, p));
  }
  const plant::Algorithm alg = input_algorithm(cfg, obj.mu, obj.L);
  if (alg.info().mu > 0.0 && (alg.info().mu > obj.mu * (1 + 1e-12) || alg.info().L < obj.L * (1 - 1e-12))) {
    ctx.err << "warning: algorithm was designed for [" << format_number(alg.info().mu) << ", "
            << format_number(alg.info().L) << "], objective lies in [" << format_number(obj.mu)
            << ", " << format_number(obj.L) << "]\n";
  }
  const double rho = cfg.rho ? *cfg.rho : (alg.info().rho > 0.0 ? alg.info().rho : 1.0);

  const auto trace = simkit::run_method(alg, obj, cfg.steps);
  const auto env = simkit::fit_envelope(trace, rho, cfg.fit_window);
  const double rel = simkit::asymptotic_relative_error(trace, cfg.window);

  std::string hdesc = "{}";
  if (!alg.info().harmonics.empty()) {
    hdesc = exo::harmonic_closure(alg.info().harmonics, exo::HarmonicPolicy::closure()).describe();
  }
  auto header = provenance(cfg, hdesc);
  header.push_back("problem: " + cfg.problem + " mu " + format_number(obj.mu) + " L " +
                   format_number(obj.L) + " p " + std::to_string(p));
  header.push_back("envelope: rho " + format_number(rho) + " c " + format_number(env.c) +
                   " fit_window " + std::to_string(cfg.fit_window));
  std::ostringstream csv;
  simkit::write_trace_csv(csv, trace, env, header);
  write_file(ctx, cfg.out.empty() ? "trace.csv" : cfg.out, csv.str());

  ctx.out << "final_grad_norm = " << format_number(trace.grad_norm.back()) << '\n'
          << "asymptotic_relative_error = " << format_number(rel) << '\n'
          << "envelope_holds = " << (env.holds() ? "yes" : "no") << '\n';
  if (!env.holds()) ctx.out << "first_violation = " << env.first_violation << '\n';
  return kOk;
}

int cmd_sweep(const RunConfig& cfg, const Context& ctx) {
  simkit::SweepConfig sc;
  sc.mu = cfg.mu.value_or(1.0);
  sc.L = cfg.L.value_or(10.0);
  sc.ell = cfg.ell;
  sc.thetas = cfg.thetas.empty() ? simkit::theta_grid(cfg.points) : parse_freqs(cfg.thetas);
  sc.policy = exo::HarmonicPolicy::parse(cfg.harmonics);
  sc.rho_lo = cfg.rho_lo;
  sc.rho_hi = cfg.rho_hi;
  sc.tol = cfg.tol;
  sc.workers = cfg.workers;
  const auto rows = simkit::run_rate_sweep(sc);

  std::ostringstream csv;
  simkit::write_sweep_csv(csv, rows, provenance(cfg, sc.policy.to_string() + " per theta"));
  write_file(ctx, cfg.out.empty() ? "sweep.csv" : cfg.out, csv.str());
  const auto ok = std::count_if(rows.begin(), rows.end(), [](const auto& r) { return r.status == "ok"; });
  ctx.out << "points = " << rows.size() << '\n' << "synthesized = " << ok << '\n';
  for (const auto& r : rows) {
    if (r.status != "ok") ctx.err << "theta " << r.theta.text << ": " << r.status << '\n';
  }
  return kOk;
}

int cmd_figure1(const RunConfig& cfg, const Context& ctx) {
  simkit::Figure1Config fc;
  fc.orders = cfg.orders;
  fc.seeds = cfg.seeds;
  fc.steps = cfg.steps;
  fc.window = cfg.window;
  fc.mu = cfg.mu.value_or(2.0);
  fc.L = cfg.L.value_or(100.0);
  fc.seed = cfg.seed;
  fc.workers = cfg.workers;
  const auto rows = simkit::run_figure1(fc);

  auto header = provenance(cfg, "none (time-invariant baselines)");
  header.push_back("exosystem: rotations at r*pi/7, r = 1, 2, ..., padded with +1 then -1");
  header.push_back("Q: random orthogonal basis, spectrum uniform in [" + format_number(fc.eig_lo) +
                   ", " + format_number(fc.eig_hi) + "], Hessian 2Q");
  std::ostringstream csv;
  simkit::write_figure1_csv(csv, rows, header);
  write_file(ctx, cfg.out.empty() ? "figure1.csv" : cfg.out, csv.str());
  for (const auto& r : rows) {
    ctx.out << "p " << r.p << ' ' << r.method << ' ' << format_number(r.mean_rel_error) << '\n';
  }
  return kOk;
}

int default_workers() {
  const unsigned hc = std::thread::hardware_concurrency();
  return static_cast<int>(std::clamp(hc, 1u, 8u));
}

struct Command {
  CLI::App* app = nullptr;
  RunConfig cfg;
  int (*body)(const RunConfig&, const Context&) = nullptr;
};

void add_sector(CLI::App* a, RunConfig& c) {
  a->add_option("--mu", c.mu, "Strong convexity parameter");
  a->add_option("--L", c.L, "Smoothness parameter");
}

void add_exosystem(CLI::App* a, RunConfig& c) {
  a->add_option("--freq", c.freqs, "Exosystem frequency in [0, pi], e.g. 0, pi/3, 0.785 (repeatable)");
  a->add_option("--S", c.S, "Exosystem matrix, rows separated by ';'");
}

void add_rate(CLI::App* a, RunConfig& c) {
  a->add_option("--ell", c.ell, "Multiplier length")->capture_default_str();
  a->add_option("--rho-lo", c.rho_lo, "Lower end of the rate bracket")->capture_default_str();
  a->add_option("--rho-hi", c.rho_hi, "Upper end of the rate bracket")->capture_default_str();
  a->add_option("--tol", c.tol, "Bisection tolerance")->capture_default_str();
}

void add_input(CLI::App* a, RunConfig& c) {
  a->add_option("--algorithm", c.algorithm, "Algorithm file");
  a->add_option("--baseline", c.baseline, "gradient_descent or triple_momentum");
}

void add_workers(CLI::App* a, RunConfig& c) {
  a->add_option("--workers", c.workers, "Concurrent workers")
      ->envname("IMSYNTH_WORKERS")
      ->capture_default_str();
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Synthesis and analysis of first-order methods for time-varying optimization",
               "imsynth"};
  app.set_version_flag("--version", version());
  app.set_config("--config", "", "Read options from a TOML/INI file");
  app.require_subcommand(1);

  std::map<std::string, Command> cmds;
  auto add = [&](const std::string& name, const std::string& help, auto body) -> Command& {
    Command& c = cmds[name];
    c.app = app.add_subcommand(name, help);
    c.cfg.command = name;
    c.cfg.workers = default_workers();
    c.body = body;
    return c;
  };

  {
    auto& c = add("synth", "Synthesize an algorithm with an optimal certified rate", cmd_synth);
    add_sector(c.app, c.cfg);
    add_exosystem(c.app, c.cfg);
    add_rate(c.app, c.cfg);
    c.app->add_option("--harmonics", c.cfg.harmonics, "closure or degree:d")->capture_default_str();
    c.app->add_option("--out", c.cfg.out, "Algorithm file (default algorithm.json)");
    c.app->add_option("--report", c.cfg.report, "Report file (default synth_report.txt)");
  }
  {
    auto& c = add("analyze", "Certify the convergence rate of an algorithm", cmd_analyze);
    add_input(c.app, c.cfg);
    add_sector(c.app, c.cfg);
    add_exosystem(c.app, c.cfg);
    add_rate(c.app, c.cfg);
    c.app->add_option("--harmonics", c.cfg.harmonics, "closure or degree:d")->capture_default_str();
  }
  {
    auto& c = add("verify", "Check the internal-model structure of an algorithm", cmd_verify);
    add_input(c.app, c.cfg);
    add_sector(c.app, c.cfg);
    add_exosystem(c.app, c.cfg);
    c.app->add_option("--harmonics", c.cfg.harmonics, "closure or degree:d")->capture_default_str();
    c.app->add_option("--structure-tol", c.cfg.structure_tol, "Eigenvalue and rank tolerance")
        ->capture_default_str();
  }
  {
    auto& c = add("simulate", "Run an algorithm on a time-varying problem", cmd_simulate);
    add_input(c.app, c.cfg);
    add_sector(c.app, c.cfg);
    add_exosystem(c.app, c.cfg);
    c.app->add_option("--problem", c.cfg.problem, "logistic or quadratic")->capture_default_str();
    c.app->add_option("--a", c.cfg.a, "Logistic weight")->capture_default_str();
    c.app->add_option("--b", c.cfg.b, "Logistic slope")->capture_default_str();
    c.app->add_option("--p", c.cfg.p, "Exosystem order for the quadratic problem")->capture_default_str();
    c.app->add_option("--steps", c.cfg.steps, "Iterations")->capture_default_str();
    c.app->add_option("--window", c.cfg.window, "Averaging window for the relative error")
        ->capture_default_str();
    c.app->add_option("--fit-window", c.cfg.fit_window, "Envelope fit window")->capture_default_str();
    c.app->add_option("--rho", c.cfg.rho, "Envelope rate (default: the algorithm's rate)");
    c.app->add_option("--seed", c.cfg.seed, "Seed for the quadratic problem")->capture_default_str();
    c.app->add_option("--out", c.cfg.out, "Trace CSV (default trace.csv)");
  }
  {
    auto& c = add("sweep", "Optimal rate over a grid of exosystem frequencies", cmd_sweep);
    c.cfg.harmonics = "degree:2";
    add_sector(c.app, c.cfg);
    add_rate(c.app, c.cfg);
    c.app->add_option("--harmonics", c.cfg.harmonics, "closure or degree:d")->capture_default_str();
    c.app->add_option("--points", c.cfg.points, "Grid points on [0, pi]")->capture_default_str();
    c.app->add_option("--theta", c.cfg.thetas, "Explicit frequencies instead of the grid");
    add_workers(c.app, c.cfg);
    c.app->add_option("--out", c.cfg.out, "Sweep CSV (default sweep.csv)");
  }
  {
    auto& c = add("figure1", "Tracking error of the baselines against exosystem order", cmd_figure1);
    c.cfg.steps = 600;
    add_sector(c.app, c.cfg);
    c.app->add_option("--orders", c.cfg.orders, "Exosystem orders")->capture_default_str();
    c.app->add_option("--seeds", c.cfg.seeds, "Random instances per order")->capture_default_str();
    c.app->add_option("--steps", c.cfg.steps, "Iterations")->capture_default_str();
    c.app->add_option("--window", c.cfg.window, "Averaging window")->capture_default_str();
    c.app->add_option("--seed", c.cfg.seed, "Base seed")->capture_default_str();
    add_workers(c.app, c.cfg);
    c.app->add_option("--out", c.cfg.out, "Figure CSV (default figure1.csv)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? kOk : kValidation;
  }

  Command* selected = nullptr;
  for (auto& [name, c] : cmds) {
    if (c.app->parsed()) selected = &c;
  }
  if (selected == nullptr) {
    err << "no command given\n";
    return kValidation;
  }
  const Context ctx{out, err};
  try {
    const auto problems = validate(selected->cfg);
    if (!problems.empty()) throw ValidationError(problems);
    return selected->body(selected->cfg, ctx);
  } catch (const ValidationError& e) {
    err << e.what();
    return kValidation;
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kIo;
  } catch (const FormatError& e) {
    err << "error: " << e.what() << '\n';
    return kIo;
  } catch (const NoAlgorithmFound& e) {
    err << "no algorithm found: " << e.what() << '\n';
    return kInfeasible;
  } catch (const StructureError& e) {
    err << "structure: " << e.what() << '\n';
    return kInfeasible;
  } catch (const ReconstructionError& e) {
    err << "reconstruction failed: " << e.what() << '\n';
    return kInfeasible;
  } catch (const ClosureOverflow& e) {
    err << "harmonics: " << e.what() << '\n';
    return kInfeasible;
  } catch (const SolverInconclusive& e) {
    err << "inconclusive: " << e.what() << '\n';
    return kInconclusive;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kInconclusive;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kValidation;
  }
}

}  // namespace imsynth::cli
