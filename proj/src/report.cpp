#include "prstab/report.hpp"

namespace prstab {

namespace {

Json bits_or_null(const std::optional<SubsetMask>& s) { return s ? Json(s->to_string()) : Json(nullptr); }

template <class T>
Json value_or_null(const std::optional<T>& v) {
  return v ? Json(*v) : Json(nullptr);
}

Json frame_shape(const Frame& f) {
  Json j;
  j["dim"] = f.dim();
  j["count"] = f.count();
  return j;
}

}  // namespace

Json certificate_json(const Frame& f, const Certificate& c) {
  Json j;
  j["frame"] = frame_shape(f);
  j["retrievable"] = c.retrievable;
  j["method"] = to_string(c.method);
  j["exact"] = c.exact;
  j["witness_bits"] = bits_or_null(c.witness);
  j["complement_property"] = value_or_null(c.complement_holds);
  j["full_spark"] = value_or_null(c.full_spark_holds);
  j["a0"] = c.a0;
  j["a0_normalized"] = c.a0_normalized;
  j["a0_positive"] = c.a0_positive;
  j["a0_exact"] = c.a0_exact;
  j["x_star"] = to_json(c.x_star);
  j["u_star"] = to_json(c.u_star);
  return j;
}

Json constants_json(const Frame& f, const StabilityConstants& c) {
  Json j;
  j["frame"] = frame_shape(f);
  j["A"] = c.A;
  j["B"] = c.B;
  j["a0"] = c.a0;
  j["Delta"] = c.Delta;
  j["omega"] = c.omega;
  j["tau"] = value_or_null(c.tau);
  j["lambdaF"] = c.lambdaF;
  j["mu0"] = c.mu0;
  Json lip;
  lip["rho_inf"] = c.rho_inf;
  lip["rho0"] = c.rho0;
  lip["mu_inf"] = c.mu_inf;
  lip["upper_U"] = c.upperU;
  lip["upper_V"] = c.upperV;
  j["lipschitz"] = lip;
  Json ex;
  ex["Delta"] = c.exact.delta;
  ex["omega"] = c.exact.omega;
  ex["tau"] = c.exact.tau;
  ex["a0"] = c.exact.a0;
  ex["lambdaF"] = c.exact.lambda_f;
  j["exact_flags"] = ex;
  Json w;
  w["Delta_bits"] = c.delta_subset.to_string();
  w["omega_bits"] = c.omega_subset.to_string();
  w["tau_bits"] = bits_or_null(c.tau_subset);
  w["a0_x"] = to_json(c.a0_x);
  w["a0_u"] = to_json(c.a0_u);
  w["lambdaF_argmax"] = to_json(c.lambdaF_argmax);
  j["witnesses"] = w;
  return j;
}

Json stability_json(const StabilityReport& r, const QBrackets& b) {
  Json j;
  j["x"] = to_json(r.x);
  j["eps"] = r.eps;
  j["q_estimate"] = r.q_estimate;
  j["q_theory"] = value_or_null(r.q_theory);
  j["bracket_lower"] = r.bracket_lower;
  j["bracket_upper"] = value_or_null(r.bracket_upper);
  Json g;
  g["lower"] = b.lower;
  g["upper"] = value_or_null(b.upper);
  g["exact"] = value_or_null(b.exact);
  g["q_infinity"] = value_or_null(b.q_infinity);
  g["unbounded"] = b.unbounded;
  j["q_eps_brackets"] = g;
  Json w;
  w["w1"] = to_json(r.witness.w1);
  w["w2"] = to_json(r.witness.w2);
  w["y"] = to_json(r.witness.y);
  w["subset_bits"] = r.witness.subset.to_string();
  w["constraint"] = r.witness.constraint;
  j["witness"] = w;
  return j;
}

Json crlb_json(const Frame& f, std::span<const double> x, double sigma, const CrlbResult& c) {
  Json j;
  j["frame"] = frame_shape(f);
  j["x"] = to_json(x);
  j["sigma"] = sigma;
  const Matrix fi = fisher_info(f, x, sigma);
  j["fisher"] = to_json(fi);
  j["fisher_eigenvalues"] = to_json(sym_eig(fi).values);
  j["crlb"] = to_json(c.matrix);
  j["trace"] = c.trace;
  j["mse_upper"] = c.mse_upper;
  j["a0"] = c.a0;
  j["a0_exact"] = c.a0_exact;
  return j;
}

Json estimation_json(const EstimationRun& run) {
  Json j;
  j["trials"] = run.trials;
  j["seed"] = run.seed;
  j["sigma"] = run.sigma;
  j["x_true"] = to_json(run.x_true);
  j["mse"] = run.mse;
  j["crlb_trace"] = run.crlb_trace;
  j["mse_over_crlb"] = run.mse / run.crlb_trace;
  j["mse_upper"] = run.mse_upper;
  j["bias"] = to_json(run.bias);
  return j;
}

Json study_json(const std::string& study, const StudyResult& res, const Json& params) {
  Json j;
  j["study"] = study;
  j["params"] = params;
  j["rows"] = res.rows.size();
  j["redraws"] = res.redraws;
  Json med = Json::array();
  for (const auto& m : res.medians) {
    Json e;
    e["n"] = m.n;
    e["statistic"] = m.statistic;
    e["median"] = m.median;
    med.push_back(e);
  }
  j["medians"] = med;
  Json fits = Json::object();
  for (const auto& [name, fit] : res.fits) {
    Json e;
    e["slope"] = fit.slope;
    e["intercept"] = fit.intercept;
    e["residual"] = fit.residual;
    fits[name] = e;
  }
  j["fits"] = fits;
  return j;
}

std::string estimation_csv(const EstimationRun& run) {
  std::string out = "trial,residual,distance\n";
  for (const auto& r : run.records)
    out += std::to_string(r.trial) + "," + format_double(r.residual) + "," + format_double(r.distance) + "\n";
  return out;
}

std::string study_csv(const StudyResult& res) {
  std::string out = "n,m,trial,statistic,value,exact\n";
  for (const auto& r : res.rows)
    out += std::to_string(r.n) + "," + std::to_string(r.m) + "," + std::to_string(r.trial) + "," + r.statistic + "," +
           format_double(r.value) + "," + (r.exact ? "true" : "false") + "\n";
  return out;
}

}  // namespace prstab
