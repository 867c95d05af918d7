#include "prstab/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <CLI11.hpp>

#include "prstab/error.hpp"
#include "prstab/frame_io.hpp"
#include "prstab/report.hpp"

namespace prstab::cli {

namespace {

struct Options {
  std::string frame;
  std::string output;
  std::string csv;
  std::string x_text;
  double eps = 0.0;
  double sigma = 0.0;
  std::size_t trials = 100;
  std::uint64_t seed = 0;
  unsigned jobs = 1;
  std::size_t restarts = 64;
  std::size_t grid = 4096;
  std::uint64_t subset_budget = kDefaultSubsetBudget;
  std::uint64_t partition_budget = kDefaultPartitionBudget;
  std::uint64_t samples = 4000;
  std::string mode = "auto";
  // random-study
  std::string study;
  std::string n_list;
  double r0 = 3.0;
  std::size_t k = 1;
  std::size_t exact_max_m = 16;
};

SubsetMode parse_mode(const std::string& s) {
  if (s == "auto") return SubsetMode::automatic;
  if (s == "exact") return SubsetMode::exact;
  return SubsetMode::sampled;
}

SearchConfig search_config(const Options& o) {
  SearchConfig c;
  c.restarts = o.restarts;
  c.grid_density = o.grid;
  c.seed = o.seed;
  c.jobs = o.jobs;
  return c;
}

SubsetSearchConfig subset_config(const Options& o) {
  SubsetSearchConfig c;
  c.mode = parse_mode(o.mode);
  c.budget = o.subset_budget;
  c.samples = o.samples;
  c.seed = o.seed;
  c.jobs = o.jobs;
  return c;
}

Vector vector_flag(const Options& o, const Frame& f) {
  Vector x = parse_vector(o.x_text, "--x");
  if (x.size() != f.dim())
    throw InvalidArgument("--x: has " + std::to_string(x.size()) + " entries, the frame dimension is " +
                          std::to_string(f.dim()));
  return x;
}

std::vector<std::size_t> parse_n_list(const std::string& text) {
  std::vector<std::size_t> out;
  for (double v : parse_vector(text, "--n-list")) {
    if (v < 1.0 || v != std::floor(v) || v > 4096.0)
      throw InvalidArgument("--n-list: entries must be positive integers");
    out.push_back(static_cast<std::size_t>(v));
  }
  return out;
}

/// Explicit path, else $PRSTAB_OUT_DIR/<name>, else empty (meaning stdout).
std::string resolve_path(const std::string& explicit_path, const std::string& name) {
  if (!explicit_path.empty()) return explicit_path;
  if (const char* dir = std::getenv("PRSTAB_OUT_DIR"); dir && *dir) return (std::filesystem::path(dir) / name).string();
  return {};
}

void write_text(const std::string& path, const std::string& text, std::ostream& out, const char* flag) {
  if (path.empty()) {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InvalidArgument(std::string(flag) + ": cannot write '" + path + "'");
  f << text;
  if (!f) throw InvalidArgument(std::string(flag) + ": write to '" + path + "' failed");
}

int dispatch(const std::string& cmd, const Options& o, std::ostream& out) {
  Json j;
  std::string csv;
  if (cmd == "random-study") {
    StudyConfig sc;
    sc.seed = o.seed;
    sc.trials = o.trials;
    sc.subset_budget = o.subset_budget;
    sc.samples = o.samples;
    sc.jobs = o.jobs;
    sc.exact_max_m = o.exact_max_m;
    const auto ns = parse_n_list(o.n_list);
    StudyResult res;
    Json params;
    params["n_list"] = ns;
    params["trials"] = o.trials;
    params["seed"] = o.seed;
    params["subset_budget"] = o.subset_budget;
    if (o.study == "minimal") {
      res = minimal_redundancy_study(ns, sc);
    } else if (o.study == "tau") {
      params["k"] = o.k;
      res = tau_scaling_study(ns, o.k, sc);
    } else {
      params["r0"] = o.r0;
      params["samples"] = o.samples;
      params["exact_max_m"] = o.exact_max_m;
      res = redundancy_stability_study(o.r0, ns, sc);
    }
    j = study_json(o.study, res, params);
    csv = study_csv(res);
  } else {
    const Frame f = read_frame(o.frame);
    if (cmd == "certify") {
      CertifyConfig cc;
      cc.search = search_config(o);
      cc.partition_budget = o.partition_budget;
      cc.spark_budget = o.subset_budget;
      j = certificate_json(f, phase_retrievable(f, cc));
    } else if (cmd == "constants") {
      ConstantsConfig cc{search_config(o), subset_config(o)};
      j = constants_json(f, lipschitz_constants(f, cc));
    } else if (cmd == "stability") {
      const Vector x = vector_flag(o, f);
      if (!(o.eps > 0.0)) throw InvalidArgument("--eps: must be positive");
      QepsConfig qc;
      qc.restarts = o.restarts;
      qc.seed = o.seed;
      qc.jobs = o.jobs;
      qc.subsets = subset_config(o);
      const FrameContext ctx = make_context(f, qc.subsets);
      j = stability_json(q_eps_estimate(f, ctx, x, o.eps, qc), q_eps_brackets(ctx, o.eps));
    } else if (cmd == "crlb") {
      const Vector x = vector_flag(o, f);
      if (!(o.sigma > 0.0)) throw InvalidArgument("--sigma: must be positive");
      j = crlb_json(f, x, o.sigma, crlb(f, x, o.sigma, search_config(o)));
    } else if (cmd == "simulate") {
      const Vector x = vector_flag(o, f);
      if (!(o.sigma > 0.0)) throw InvalidArgument("--sigma: must be positive");
      if (o.trials == 0) throw InvalidArgument("--trials: must be at least 1");
      const EstimationRun run = mse_monte_carlo(f, x, o.sigma, o.trials, o.seed, o.jobs);
      j = estimation_json(run);
      csv = estimation_csv(run);
    }
  }
  Json doc;
  doc["command"] = cmd;
  for (auto it = j.begin(); it != j.end(); ++it) doc[it.key()] = it.value();
  const std::string csv_path = resolve_path(o.csv, cmd + ".csv");
  if (!csv.empty() && !csv_path.empty()) write_text(csv_path, csv, out, "--csv");
  write_text(resolve_path(o.output, cmd + ".json"), dump_json(doc), out, "--output");
  return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Stability constants and certificates for phase-retrievable real frames"};
  app.name("prstab");
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--output", o.output, "JSON output file");
    sub->add_option("--seed", o.seed, "Seed for every random stream")->capture_default_str();
    sub->add_option("--jobs", o.jobs, "Worker threads (0 = all cores); results do not depend on it")
        ->capture_default_str();
  };
  auto searches = [&](CLI::App* sub) {
    sub->add_option("--restarts", o.restarts, "Multi-start count for non-convex searches")->capture_default_str();
    sub->add_option("--grid", o.grid, "Polar grid size for n = 2 searches")->capture_default_str()->check(
        CLI::Range(16, 1 << 24));
    sub->add_option("--subset-budget", o.subset_budget, "Largest exact subset enumeration")->capture_default_str();
    sub->add_option("--samples", o.samples, "Evaluations spent by sampled subset searches")->capture_default_str();
    sub->add_option("--mode", o.mode, "Subset search mode")
        ->check(CLI::IsMember({"auto", "exact", "sampled"}))
        ->capture_default_str();
  };
  auto frame_arg = [&](CLI::App* sub) {
    sub->add_option("frame", o.frame, "Frame file (.csv: n rows x m columns, or .json)")->required();
  };

  CLI::App* certify = app.add_subcommand("certify", "Decide phase retrievability with a certificate");
  frame_arg(certify);
  common(certify);
  searches(certify);
  certify->add_option("--partition-budget", o.partition_budget, "Largest complement-property enumeration")
      ->capture_default_str();

  CLI::App* constants = app.add_subcommand("constants", "Frame bounds, a0, Delta, omega, tau, Lambda_F");
  frame_arg(constants);
  common(constants);
  searches(constants);

  CLI::App* stability = app.add_subcommand("stability", "Estimate Q_eps(x) with theory brackets");
  frame_arg(stability);
  common(stability);
  searches(stability);
  stability->add_option("--x", o.x_text, "Signal, comma separated")->required();
  stability->add_option("--eps", o.eps, "Noise level eps > 0")->required();

  CLI::App* crlb_cmd = app.add_subcommand("crlb", "Fisher information and Cramer-Rao bound at x");
  frame_arg(crlb_cmd);
  common(crlb_cmd);
  searches(crlb_cmd);
  crlb_cmd->add_option("--x", o.x_text, "Signal, comma separated")->required();
  crlb_cmd->add_option("--sigma", o.sigma, "Noise standard deviation")->required();

  CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo MSE of least squares against the CRLB");
  frame_arg(simulate);
  common(simulate);
  simulate->add_option("--x", o.x_text, "Signal, comma separated")->required();
  simulate->add_option("--sigma", o.sigma, "Noise standard deviation")->required();
  simulate->add_option("--trials", o.trials, "Number of trials")->capture_default_str();
  simulate->add_option("--csv", o.csv, "Per-trial CSV output file");

  CLI::App* study = app.add_subcommand("random-study", "Random Gaussian frame scaling studies");
  common(study);
  study->add_option("--study", o.study, "Which study")
      ->required()
      ->check(CLI::IsMember({"minimal", "tau", "redundancy"}));
  study->add_option("--n-list", o.n_list, "Dimensions, comma separated")->required();
  study->add_option("--r0", o.r0, "Redundancy m/n for the redundancy study (> 2)")->capture_default_str();
  study->add_option("--k", o.k, "Extra vectors m - n for the tau study")->capture_default_str();
  study->add_option("--trials", o.trials, "Frames per n")->capture_default_str();
  study->add_option("--subset-budget", o.subset_budget, "Largest exact subset enumeration")->capture_default_str();
  study->add_option("--samples", o.samples, "Evaluations per sampled search")->capture_default_str();
  study->add_option("--exact-max-m", o.exact_max_m, "Redundancy study: exact values only for m up to this (<= 24)")
      ->capture_default_str();
  study->add_option("--csv", o.csv, "Row-level CSV output file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "prstab: " << e.what() << "\n";
    return kExitUsage;
  }

  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    return dispatch(cmd, o, out);
  } catch (const BudgetExceeded& e) {
    err << "prstab " << cmd << ": budget exceeded: " << e.what() << "\n";
    return kExitBudget;
  } catch (const InvalidArgument& e) {
    err << "prstab " << cmd << ": " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "prstab " << cmd << ": " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace prstab::cli
