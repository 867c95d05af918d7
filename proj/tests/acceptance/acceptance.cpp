// Runs the acceptance criteria and prints one PASS/FAIL line per criterion.
// Usage: prstab_acceptance [criterion numbers...]; no arguments runs all.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "../helpers.hpp"
#include "../oracles.hpp"
#include "prstab/error.hpp"
#include "prstab/estimation.hpp"
#include "prstab/frame_io.hpp"
#include "prstab/injectivity.hpp"
#include "prstab/random_frames.hpp"
#include "prstab/robustness.hpp"

using namespace prstab;
namespace fs = std::filesystem;

namespace {

/// Collects failed checks with a short description.
class Checker {
 public:
  void expect(bool ok, const std::string& what) {
    ++checks_;
    if (!ok) {
      ++failures_;
      if (messages_.size() < 8) messages_.push_back(what);
    }
  }
  void near(double got, double want, double tol, const std::string& what) {
    std::ostringstream os;
    os.precision(12);
    os << what << ": got " << got << ", want " << want << " +- " << tol;
    expect(std::abs(got - want) <= tol, os.str());
  }
  void note(const std::string& s) { notes_.push_back(s); }

  std::size_t checks() const { return checks_; }
  std::size_t failures() const { return failures_; }
  const std::vector<std::string>& messages() const { return messages_; }
  const std::vector<std::string>& notes() const { return notes_; }

 private:
  std::size_t checks_ = 0;
  std::size_t failures_ = 0;
  std::vector<std::string> messages_;
  std::vector<std::string> notes_;
};

std::string fmt(double v, int prec = 6) {
  std::ostringstream os;
  os.precision(prec);
  os << v;
  return os.str();
}

std::string fixture(const char* name) { return std::string(PRSTAB_FIXTURE_DIR) + "/" + name; }

double u_witness(const Frame& f, const WorstCaseWitness& w) { return u_ratio(f, w.x, w.y); }

/// V at x = (x* + u*)/2, y = (x* - u*)/2, i.e. w1 = u*, w2 = x*.
double v_witness(const Frame& f, const A0Result& a) {
  const Vector x = scaled(0.5, axpy(1.0, a.u_star, a.x_star));
  const Vector y = scaled(0.5, axpy(-1.0, a.u_star, a.x_star));
  return v_ratio(f, x, y);
}

// 1. MB3 constants against the oracles and closed forms.
void criterion1(Checker& c) {
  const Frame f = read_frame(fixture("mb3.csv"));
  const double r = std::sqrt(0.5), tol = 1e-6;
  const oracle::Bounds ob = oracle::frame_bounds(f);
  const double a0_o = oracle::a0_grid(f), lam4_o = oracle::lambda4_grid(f);
  const std::optional<double> tau_o = oracle::tau(f);

  const StabilityConstants k = lipschitz_constants(f);
  const auto both = [&](double got, double closed, double orc, const char* name) {
    c.near(got, closed, tol, std::string(name) + " vs closed form");
    c.near(got, orc, tol, std::string(name) + " vs oracle");
  };
  both(k.A, 1.5, ob.a, "A");
  both(k.B, 1.5, ob.b, "B");
  both(k.a0, 0.375, a0_o, "a0");
  both(k.Delta, r, oracle::delta(f), "Delta");
  both(k.omega, r, oracle::omega(f), "omega");
  c.expect(k.tau.has_value() && tau_o.has_value(), "tau defined");
  if (k.tau && tau_o) both(*k.tau, r, *tau_o, "tau");
  both(k.lambdaF, std::pow(9.0 / 8, 0.25), std::pow(lam4_o, 0.25), "Lambda_F");
  both(k.mu0, std::sqrt(0.375), std::sqrt(a0_o), "mu0");
  c.note("a0=" + fmt(k.a0, 10) + " Delta=" + fmt(k.Delta, 10) + " Lambda_F=" + fmt(k.lambdaF, 10));
}

// 2. Complement property, a0 > 0 and (m = 2n-1) full spark agree.
void criterion2(Checker& c) {
  const double threshold = CertifyConfig{}.verdict_threshold;
  std::size_t retrievable = 0, duplicated = 0;
  for (std::uint64_t i = 0; i < 200; ++i) {
    const std::size_t n = 2 + i % 2;
    const std::size_t m = 2 * n - 2 + (i / 2) % 5;
    Frame f = testing_util::gaussian(n, m, 2002, i);
    if (i % 7 == 3 && m >= 2) {
      f = f.with_column(m - 1, scaled(-1.7, f.column(0)));
      ++duplicated;
    }
    const bool cp = complement_property(f).holds;
    const double a = a0(f).a0 / a0_scale(f);
    const bool a0_pos = a > threshold;
    const std::string tag = "frame " + std::to_string(i) + " (n=" + std::to_string(n) + ", m=" + std::to_string(m) + ")";
    c.expect(cp == a0_pos, tag + ": complement property " + std::to_string(cp) + " vs a0/scale = " + fmt(a));
    c.expect(cp == oracle::complement_property(f), tag + ": complement property vs rank oracle");
    if (m == 2 * n - 1) c.expect(full_spark(f).holds == cp, tag + ": full spark vs complement property");
    retrievable += cp;
  }
  c.note(std::to_string(retrievable) + "/200 retrievable, " + std::to_string(duplicated) + " with a repeated column");
}

// 3. Lipschitz sandwich on random pairs plus the witness pairs.
void criterion3(Checker& c) {
  std::size_t frames = 0;
  double worst_u = 0.0, worst_v = 0.0;
  for (std::uint64_t i = 0; frames < 20; ++i) {
    const std::size_t n = 2 + i % 3;
    const std::size_t m = std::min<std::size_t>(12, 2 * n - 1 + (i / 3) % 4);
    const Frame f = testing_util::gaussian(n, m, 3003, i);
    if (!complement_property(f).holds) continue;
    ++frames;
    const StabilityConstants k = lipschitz_constants(f);
    const std::string tag = "frame " + std::to_string(i);
    Rng rng(3003, {i});
    std::size_t bad_u = 0, bad_v = 0;
    for (int p = 0; p < 10000; ++p) {
      const Vector x = rng.normal_vector(n), y = rng.normal_vector(n);
      const double u = u_ratio(f, x, y), v = v_ratio(f, x, y);
      bad_u += !(u >= k.Delta - 1e-9 && u <= k.sqrtB + 1e-9);
      bad_v += !(v >= k.mu0 - 1e-6 && v <= k.lambdaF_sq + 1e-6);
    }
    c.expect(bad_u == 0, tag + ": " + std::to_string(bad_u) + " pairs outside [Delta, sqrt(B)]");
    c.expect(bad_v == 0, tag + ": " + std::to_string(bad_v) + " pairs outside [sqrt(a0), Lambda_F^2]");

    const double uw = u_witness(f, worst_case_witness(f));
    c.expect(uw <= k.Delta + 1e-6, tag + ": U witness " + fmt(uw, 10) + " > Delta " + fmt(k.Delta, 10));
    const double vw = v_witness(f, a0(f));
    c.expect(vw <= k.mu0 + 1e-3, tag + ": V witness " + fmt(vw, 10) + " > sqrt(a0) " + fmt(k.mu0, 10));
    worst_u = std::max(worst_u, uw - k.Delta);
    worst_v = std::max(worst_v, vw - k.mu0);
  }
  c.note("max U witness - Delta = " + fmt(worst_u, 3) + ", max V witness - sqrt(a0) = " + fmt(worst_v, 3));
}

// 4. q_eps brackets, the small-eps local value and the worst-case witness.
void criterion4(Checker& c) {
  std::vector<Frame> frames{read_frame(fixture("mb3.csv"))};
  for (std::uint64_t i = 0; frames.size() < 6; ++i) {
    const std::size_t n = 2 + i % 2;
    const Frame f = testing_util::gaussian(n, 2 * n - 1 + i % 3, 4004, i);
    if (complement_property(f).holds) frames.push_back(f);
  }
  double worst_gap = 0.0, worst_local = 0.0;
  for (std::size_t k = 0; k < frames.size(); ++k) {
    const Frame& f = frames[k];
    const std::string tag = "frame " + std::to_string(k);
    const FrameContext ctx = make_context(f);
    const double delta = ctx.delta.value, omega = ctx.omega.value;
    const double tau = ctx.tau->value;

    const double eps = tau / 2;
    const QBrackets b = q_eps_brackets(ctx, eps);
    c.expect(b.exact.has_value() && std::abs(*b.exact - 1.0 / omega) <= 1e-12, tag + ": bracket exact = 1/omega");
    QepsConfig qc;
    qc.seed = k;
    const GlobalQEstimate g = q_eps_global_estimate(f, ctx, eps, qc);
    c.expect(g.q_estimate >= 1.0 / omega - 1e-3,
             tag + ": global q " + fmt(g.q_estimate, 10) + " below 1/omega " + fmt(1.0 / omega, 10));
    c.expect(g.q_estimate <= 1.0 / delta + 1e-9,
             tag + ": global q " + fmt(g.q_estimate, 10) + " above 1/Delta " + fmt(1.0 / delta, 10));
    worst_gap = std::max(worst_gap, 1.0 / omega - g.q_estimate);

    const double target = 1.0 / std::sqrt(ctx.bounds.lower);
    Rng rng(4004, {0xC, k});
    for (int p = 0; p < 20; ++p) {
      const Vector x = rng.normal_vector(f.dim());
      const double e = delta_x(f, x, tau) / 2;
      const StabilityReport r = q_eps_estimate(f, ctx, x, e, qc);
      c.expect(std::abs(r.q_estimate - target) <= 1e-3,
               tag + ": Q at eps = delta_x/2 is " + fmt(r.q_estimate, 10) + ", want 1/sqrt(A) = " + fmt(target, 10));
      worst_local = std::max(worst_local, std::abs(r.q_estimate - target));
    }

    const WorstCaseWitness w = worst_case_witness(f);
    c.expect(w.ratio >= 1.0 / delta - 1e-6, tag + ": witness ratio " + fmt(w.ratio, 10));
    // Independent recomputation with the oracle's Delta.
    const Vector ax = analysis_map(f, w.x), ay = analysis_map(f, w.y);
    double diff = 0.0;
    for (std::size_t j = 0; j < f.count(); ++j) diff += (ax[j] - ay[j]) * (ax[j] - ay[j]);
    const double ratio = dist_d(w.x, w.y) / std::sqrt(diff);
    c.expect(ratio >= 1.0 / oracle::delta(f) - 1e-6, tag + ": recomputed witness ratio " + fmt(ratio, 10));
  }
  c.note("max 1/omega - q = " + fmt(worst_gap, 3) + ", max |Q - 1/sqrt(A)| = " + fmt(worst_local, 3));
}

// 5. Fisher information, its a0 lower bound, and the MSE corridor.
void criterion5(Checker& c) {
  const Frame mb = read_frame(fixture("mb3.csv"));
  const Vector x{0.6, 0.8};
  const double sigma = 0.1;
  const Matrix exact = fisher_info(mb, x, sigma);
  const EmpiricalFisher e = fisher_empirical(mb, x, sigma, 100000, 5005);
  double worst = 0.0;
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) {
      const double z = std::abs(e.mean(i, j) - exact(i, j)) / e.standard_error(i, j);
      worst = std::max(worst, z);
      c.expect(z <= 5.0, "Fisher entry (" + std::to_string(i) + "," + std::to_string(j) + ") off by " + fmt(z) + " SE");
    }

  for (std::uint64_t i = 0; i < 10; ++i) {
    const Frame f = testing_util::gaussian(2, 3 + i % 4, 5005, i);
    const A0Result a = a0(f);
    c.expect(a.exact, "a0 grid-certified for n = 2");
    Rng rng(5005, {i});
    for (int p = 0; p < 100; ++p) {
      const Vector y = rng.normal_vector(2);
      const double s = 0.05 + rng.uniform();
      const double lmin = sym_eig(fisher_info(f, y, s)).values.back();
      c.expect(lmin >= 4 * a.a0 / (s * s) * dot(y, y) - 1e-9, "lambda_min(I(x)) below 4 a0 |x|^2 / sigma^2");
    }
  }

  const EstimationRun run = mse_monte_carlo(mb, x, 0.01, 2000, 5005);
  const double ratio = run.mse / run.crlb_trace;
  c.expect(ratio >= 0.8 && ratio <= 3.0, "mse/crlb_trace = " + fmt(ratio) + " outside [0.8, 3]");
  c.note("max Fisher z = " + fmt(worst, 3) + ", mse/crlb = " + fmt(ratio, 4));
}

// 6. The witness bound and omega <= 1/sqrt(n) at m = 2n - 1.
void criterion6(Checker& c) {
  std::size_t failures = 0;
  for (std::uint64_t t = 0; t < 10000; ++t) {
    const std::size_t n = 2 + t % 31;
    const EnsembleSpec spec{n, n + 1 + (t / 31) % 3, EnsembleScale::unit_columns, 6006, 10000};
    const WitnessBound w = witness_bound_51(gaussian_frame(spec, t));
    failures += !w.holds;
  }
  c.expect(failures == 0, std::to_string(failures) + " of 10000 frames violate the witness bound");

  StudyConfig sc;
  sc.seed = 6006;
  sc.trials = 5;
  std::vector<std::size_t> ns;
  for (std::size_t n = 2; n <= 10; ++n) ns.push_back(n);
  const StudyResult r = minimal_redundancy_study(ns, sc);
  std::size_t rows = 0;
  for (const ScalingRow& row : r.rows)
    if (row.statistic == "omega") {
      ++rows;
      c.expect(row.value <= 1.0 / std::sqrt(static_cast<double>(row.n)) + 1e-12,
               "omega " + fmt(row.value) + " > 1/sqrt(" + std::to_string(row.n) + ")");
    }
  c.note("10000 witness frames, " + std::to_string(rows) + " minimal-redundancy frames");
}

double median_of(const StudyResult& r, std::size_t n, const std::string& stat) {
  for (const MedianRow& m : r.medians)
    if (m.n == n && m.statistic == stat) return m.median;
  return std::nan("");
}

// 7. Non-decay at r0 = 3 and decay at m = 2n - 1.
void criterion7(Checker& c) {
  StudyConfig sc;
  sc.seed = 7007;
  sc.trials = 50;
  const std::vector<std::size_t> ns{8, 32};
  const StudyResult r = redundancy_stability_study(3.0, ns, sc);
  const double w8 = median_of(r, 8, "omega"), w32 = median_of(r, 32, "omega");
  c.expect(w32 >= 0.5 * w8, "median omega(32) = " + fmt(w32) + " < 0.5 * median omega(8) = " + fmt(0.5 * w8));

  const std::vector<std::size_t> small{3, 10};
  const StudyResult m = minimal_redundancy_study(small, sc);
  const double m3 = median_of(m, 3, "omega"), m10 = median_of(m, 10, "omega");
  c.expect(m10 <= 0.5 * m3, "median omega(10) = " + fmt(m10) + " > 0.5 * median omega(3) = " + fmt(0.5 * m3));
  c.note("r0=3: median omega " + fmt(w8, 4) + " (n=8), " + fmt(w32, 4) + " (n=32); m=2n-1: " + fmt(m3, 4) +
         " (n=3), " + fmt(m10, 4) + " (n=10)");
}

// 8. Exact Delta, omega and tau against all-subsets enumeration.
void criterion8(Checker& c) {
  std::vector<std::pair<std::string, Frame>> frames;
  for (const char* name : {"mb3.csv", "std_basis2.csv", "std_basis3.csv", "repeated_column.csv"})
    frames.emplace_back(name, read_frame(fixture(name)));
  for (std::uint64_t i = 0; i < 40; ++i) {
    const std::size_t n = 2 + i % 3;
    const std::size_t m = std::min<std::size_t>(10, n + 1 + i % 7);
    frames.emplace_back("random " + std::to_string(i), testing_util::gaussian(n, m, 8008, i));
  }
  for (std::uint64_t i = 0; i < 20; ++i) {
    const std::size_t n = 2 + i % 3;
    const std::size_t m = std::min<std::size_t>(10, 2 * n - 1 + i % 4);
    Frame f = testing_util::gaussian(n, m, 8008, 100 + i);
    // Repeated, parallel, or zero columns, or a rank-deficient frame.
    switch (i % 4) {
      case 0: f = f.with_column(1, f.column(0)); break;
      case 1: f = f.with_column(m - 1, scaled(-2.0, f.column(1))); break;
      case 2: f = f.with_column(2, Vector(n, 0.0)); break;
      default: {
        for (std::size_t j = 0; j < m; ++j) {
          Vector v(f.column(j).begin(), f.column(j).end());
          v[n - 1] = 0.0;
          f = f.with_column(j, v);
        }
      }
    }
    frames.emplace_back("degenerate " + std::to_string(i), f);
  }

  SubsetSearchConfig exact;
  exact.mode = SubsetMode::exact;
  double worst = 0.0;
  for (const auto& [name, f] : frames) {
    const double d = delta(f, exact).value, w = omega(f, exact).value;
    const double od = oracle::delta(f), ow = oracle::omega(f);
    c.near(d, od, 1e-10, name + ": Delta");
    c.near(w, ow, 1e-10, name + ": omega");
    worst = std::max({worst, std::abs(d - od), std::abs(w - ow)});
    const std::optional<double> ot = oracle::tau(f);
    std::optional<double> t;
    try {
      t = tau(f).value;
    } catch (const InvalidArgument&) {
    }
    c.expect(t.has_value() == ot.has_value(), name + ": tau defined iff some subset has rank n");
    if (t && ot) {
      c.near(*t, *ot, 1e-10, name + ": tau");
      worst = std::max(worst, std::abs(*t - *ot));
    }
  }
  c.note(std::to_string(frames.size()) + " frames, max deviation " + fmt(worst, 3));
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// 9. Every CLI command twice with identical flags gives identical files.
void criterion9(Checker& c) {
  const fs::path dir = fs::temp_directory_path() / "prstab_acceptance_repro";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string mb = fixture("mb3.csv"), g = fixture("gaussian_4x11.csv");
  const std::vector<std::pair<std::string, std::string>> commands{
      {"certify", "certify " + g + " --seed 9"},
      {"constants", "constants " + g + " --seed 9"},
      {"stability", "stability " + g + " --x 0.3,-0.2,0.9,0.1 --eps 0.05 --seed 9"},
      {"crlb", "crlb " + mb + " --x 0.6,0.8 --sigma 0.1"},
      {"simulate", "simulate " + mb + " --x 0.6,0.8 --sigma 0.05 --trials 50 --seed 9"},
      {"study_minimal", "random-study --study minimal --n-list 2,3,4 --trials 5 --seed 9"},
      {"study_tau", "random-study --study tau --n-list 3,4 --k 2 --trials 5 --seed 9"},
      {"study_redundancy", "random-study --study redundancy --n-list 4,6 --trials 3 --samples 300 --seed 9"},
  };
  for (const auto& [name, args] : commands) {
    std::string first_json, first_csv;
    for (int rep = 0; rep < 2; ++rep) {
      const fs::path json = dir / (name + std::to_string(rep) + ".json");
      const fs::path csv = dir / (name + std::to_string(rep) + ".csv");
      std::string cmd = std::string("\"") + PRSTAB_CLI_PATH + "\" " + args + " --output " + json.string();
      const bool has_csv = name == "simulate" || name.rfind("study", 0) == 0;
      if (has_csv) cmd += " --csv " + csv.string();
      const int rc = std::system(cmd.c_str());
      c.expect(rc == 0, name + ": exit status " + std::to_string(rc));
      const std::string j = slurp(json), s = has_csv ? slurp(csv) : std::string();
      c.expect(!j.empty(), name + ": empty JSON output");
      if (rep == 0) {
        first_json = j;
        first_csv = s;
      } else {
        c.expect(j == first_json, name + ": JSON differs between runs");
        c.expect(s == first_csv, name + ": CSV differs between runs");
      }
    }
  }
  fs::remove_all(dir);
  c.note(std::to_string(commands.size()) + " commands run twice");
}

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;  // 0 = no runtime limit
  std::function<void(Checker&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all{
      {1, "MB3 constant suite", 5, criterion1},
      {2, "injectivity cross-validation", 30, criterion2},
      {3, "Lipschitz sandwich", 60, criterion3},
      {4, "q_eps brackets and witnesses", 120, criterion4},
      {5, "Fisher information and CRLB", 60, criterion5},
      {6, "witness bound and omega <= 1/sqrt(n)", 60, criterion6},
      {7, "non-decay corridor", 600, criterion7},
      {8, "oracle equivalence for m <= 10", 120, criterion8},
      {9, "CLI reproducibility", 0, criterion9},
  };
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

  int failed = 0;
  for (const Criterion& cr : all) {
    if (!wanted.empty() && !wanted.count(cr.id)) continue;
    Checker c;
    const auto t0 = std::chrono::steady_clock::now();
    std::string crash;
    try {
      cr.run(c);
    } catch (const std::exception& e) {
      crash = e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool slow = cr.budget_seconds > 0 && secs > cr.budget_seconds;
    const bool pass = crash.empty() && c.failures() == 0 && !slow;
    failed += !pass;
    std::printf("criterion %d: %s  %s  (%zu checks, %.2f s", cr.id, pass ? "PASS" : "FAIL", cr.name, c.checks(), secs);
    if (cr.budget_seconds > 0) std::printf(" of %.0f s", cr.budget_seconds);
    std::printf(")\n");
    for (const std::string& n : c.notes()) std::printf("    %s\n", n.c_str());
    if (!crash.empty()) std::printf("    exception: %s\n", crash.c_str());
    if (slow) std::printf("    over the runtime budget\n");
    for (const std::string& m : c.messages()) std::printf("    failed: %s\n", m.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
