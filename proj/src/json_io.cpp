#include "clusterboot/json_io.hpp"

#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "clusterboot/dataset_io.hpp"
#include "clusterboot/error.hpp"

namespace cboot {

namespace {

Json number(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

Json number(const std::optional<double>& x) { return x ? number(*x) : Json(nullptr); }

double get_number(const Json& j, const char* key) {
  if (!j.contains(key)) {
    throw Error(Errc::malformed_input, std::string("missing field '") + key + "'");
  }
  const Json& v = j.at(key);
  if (v.is_null()) {
    return std::nan("");
  }
  if (!v.is_number()) {
    throw Error(Errc::malformed_input, std::string("field '") + key + "' is not a number");
  }
  return v.get<double>();
}

template <typename T>
T get_or(const Json& j, const char* key, T fallback) {
  if (!j.contains(key)) {
    return fallback;
  }
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(Errc::malformed_input, std::string("field '") + key + "' has the wrong type");
  }
}

Json coverage_json(const CoverageSummary& c) {
  return Json{{"coverage", number(c.coverage)},
              {"mean_width", number(c.mean_width)},
              {"used", c.used},
              {"failed", c.failed}};
}

Json ks_json(const KsSummary& k) {
  return Json{{"distance", number(k.distance)}, {"used", k.used}, {"undefined", k.undefined}};
}

Json estimator_json(const EstimatorSummary& e) {
  return Json{{"truth", number(e.truth)}, {"mean", number(e.mean)}, {"bias", number(e.bias)},
              {"sd", number(e.sd)},       {"se", number(e.se)}};
}

Json correction_json(const QuantileCorrection& q) {
  return Json{{"kind", to_string(q.kind)},
              {"x", q.x},
              {"kappa", number(q.kappa)},
              {"plain_error", number(q.plain_error)},
              {"corrected_error", number(q.corrected_error)},
              {"improved", q.improved()}};
}

Json distribution_json(const Distribution& d) {
  Json j{{"family", to_string(d.family)}};
  if (d.family == Family::lognormal) {
    j["log_sd"] = d.log_sd;
  }
  return j;
}

Distribution distribution_from_json(const Json& j, const char* key) {
  Distribution d;
  if (!j.contains(key)) {
    return d;
  }
  const Json& v = j.at(key);
  if (v.is_string()) {
    d.family = parse_family(v.get<std::string>());
  } else if (v.is_object()) {
    d.family = parse_family(get_or<std::string>(v, "family", "gaussian"));
    d.log_sd = get_or<double>(v, "log_sd", d.log_sd);
  } else {
    throw Error(Errc::malformed_input, std::string("field '") + key + "' must be a family name or object");
  }
  return d;
}

void csv_row(std::ostream& out, std::size_t K, double alpha, std::string_view scheme, std::string_view metric,
             double value) {
  out << K << ',' << format_double(alpha) << ',' << scheme << ',' << metric << ','
      << (std::isfinite(value) ? format_double(value) : std::string("NA")) << '\n';
}

void csv_row(std::ostream& out, std::size_t K, double alpha, std::string_view scheme, std::string_view metric,
             const std::optional<double>& value) {
  csv_row(out, K, alpha, scheme, metric, value.value_or(std::nan("")));
}

} // namespace

Json to_json(const EstimateReport& r) {
  return Json{{"mu_hat_N", number(r.mu_hat_N)},
              {"mu_hat_prime_K", number(r.mu_hat_prime_K)},
              {"sigma2_hat", number(r.sigma2_hat)},
              {"gamma_hat", number(r.gamma_hat)},
              {"v_hat", number(r.v_hat)},
              {"n_star", number(r.n_star)},
              {"n_tilde", number(r.n_tilde)},
              {"var_hat_mu_prime_K", number(r.var_hat_mu_prime_K)},
              {"var_hat_mu_N", number(r.var_hat_mu_N)},
              {"var_inter_mu_N", number(r.var_inter_mu_N)},
              {"var_intra_mu_N", number(r.var_intra_mu_N)},
              {"var_inter_mu_prime_K", number(r.var_inter_mu_prime_K)},
              {"var_intra_mu_prime_K", number(r.var_intra_mu_prime_K)}};
}

EstimateReport estimate_report_from_json(const Json& j) {
  if (!j.is_object()) {
    throw Error(Errc::malformed_input, "estimate report must be a JSON object");
  }
  EstimateReport r{};
  r.mu_hat_N = get_number(j, "mu_hat_N");
  r.mu_hat_prime_K = get_number(j, "mu_hat_prime_K");
  r.sigma2_hat = get_number(j, "sigma2_hat");
  r.gamma_hat = get_number(j, "gamma_hat");
  r.v_hat = get_number(j, "v_hat");
  r.n_star = get_number(j, "n_star");
  r.n_tilde = get_number(j, "n_tilde");
  r.var_hat_mu_prime_K = get_number(j, "var_hat_mu_prime_K");
  r.var_hat_mu_N = get_number(j, "var_hat_mu_N");
  r.var_inter_mu_N = get_number(j, "var_inter_mu_N");
  r.var_intra_mu_N = get_number(j, "var_intra_mu_N");
  r.var_inter_mu_prime_K = get_number(j, "var_inter_mu_prime_K");
  r.var_intra_mu_prime_K = get_number(j, "var_intra_mu_prime_K");
  return r;
}

Json to_json(const AnalyticMoments& m) {
  return Json{{"mean_mu_star_N", number(m.mean_mu_star_N)},
              {"var_mu_star_N", number(m.var_mu_star_N)},
              {"mean_mu_star_prime_K", number(m.mean_mu_star_prime_K)},
              {"var_mu_star_prime_K", number(m.var_mu_star_prime_K)}};
}

Json to_json(const MomentEstimate& m) {
  return Json{{"mean", number(m.mean)},
              {"variance", number(m.variance)},
              {"se_mean", number(m.se_mean)},
              {"se_variance", number(m.se_variance)}};
}

Json to_json(const IntervalEstimate& i) {
  return Json{{"method", to_string(i.method)}, {"level", i.level}, {"lower", number(i.lower)},
              {"upper", number(i.upper)}};
}

Json to_json(const BootstrapRun& run) {
  return Json{{"scheme", to_string(run.scheme)},
              {"B", run.B},
              {"seed", run.seed},
              {"mu_hat_N", number(run.mu_hat_N)},
              {"mu_hat_prime_K", number(run.mu_hat_prime_K)},
              {"standard_error", number(run.standard_error)},
              {"analytic_moments", to_json(run.moments)}};
}

void write_replicate_csv(std::ostream& out, const BootstrapRun& run) {
  out << "replicate,mu_star_N,mu_star_prime_K,scale\n";
  for (std::size_t b = 0; b < run.stats.size(); ++b) {
    const auto& s = run.stats[b];
    const double scale = s.scale();
    out << b << ',' << format_double(s.mu_star_N) << ',' << format_double(s.mu_star_prime_K) << ','
        << (std::isfinite(scale) ? format_double(scale) : std::string("NA")) << '\n';
  }
}

Json to_json(const TruthParams& t) {
  return Json{{"mu", t.mu},
              {"gamma", t.gamma},
              {"sigma2", t.sigma2},
              {"effect", distribution_json(t.effect)},
              {"noise", distribution_json(t.noise)},
              {"within_dispersion", t.within_dispersion}};
}

Json to_json(const ExperimentConfig& c) {
  Json grid = Json::array();
  for (const auto& d : c.grid) {
    Json cs = Json::array();
    for (double v : d.c) {
      cs.push_back(v);
    }
    grid.push_back(Json{{"K", d.K}, {"alpha", d.alpha}, {"c", cs}});
  }
  Json schemes = Json::array();
  for (Scheme s : c.schemes) {
    schemes.push_back(to_string(s));
  }
  return Json{{"truth", to_json(c.truth)},
              {"grid", grid},
              {"R", c.R},
              {"B", c.B},
              {"schemes", schemes},
              {"level", c.level},
              {"seed", c.master_seed},
              {"compat_printed_formulas", c.estimator.formula == FormulaVariant::printed},
              {"truncate_gamma", c.estimator.truncate_nonneg},
              {"berry_esseen_C", c.berry_esseen_C}};
}

Json to_json(const ExperimentReport& report) {
  Json points = Json::array();
  for (const auto& p : report.points) {
    Json schemes = Json::array();
    for (const auto& s : p.schemes) {
      schemes.push_back(Json{{"scheme", to_string(s.scheme)},
                             {"statistic", to_string(s.statistic)},
                             {"mean_var_star_mu_prime_K", number(s.mean_var_star_mu_prime_K)},
                             {"mean_var_star_mu_N", number(s.mean_var_star_mu_N)},
                             {"mean_analytic_var_star_mu_prime_K", number(s.mean_analytic_var_star_mu_prime_K)},
                             {"percentile", coverage_json(s.percentile)},
                             {"bootstrap_t", coverage_json(s.bootstrap_t)},
                             {"normal", coverage_json(s.normal)},
                             {"sup_distance_pooled", number(s.sup_distance_pooled)},
                             {"sup_distance_per_dataset_mean", number(s.sup_distance_per_dataset_mean)},
                             {"sup_distance_per_dataset_max", number(s.sup_distance_per_dataset_max)},
                             {"scaled_sup_distance_pooled", number(p.rate_scale * s.sup_distance_pooled)},
                             {"inner_undefined", s.inner_undefined}});
    }
    Json corrections = Json::array();
    for (const auto& q : p.corrections) {
      corrections.push_back(correction_json(q));
    }
    points.push_back(Json{
        {"K", p.K},
        {"alpha", p.alpha},
        {"N", p.N},
        {"n_star", number(p.n_star)},
        {"n_tilde", number(p.n_tilde)},
        {"R", p.R},
        {"estimators",
         Json{{"mu_hat_N", estimator_json(p.mu_hat_N)},
              {"mu_hat_prime_K", estimator_json(p.mu_hat_prime_K)},
              {"sigma2_hat", estimator_json(p.sigma2_hat)},
              {"gamma_hat", estimator_json(p.gamma_hat)}}},
        {"variances",
         Json{{"s2_N", number(p.s2_N)},
              {"s2_prime_K", number(p.s2_prime_K)},
              {"empirical_var_mu_N", number(p.empirical_var_mu_N)},
              {"empirical_var_mu_prime_K", number(p.empirical_var_mu_prime_K)},
              {"ratio_mu_N", number(p.empirical_var_mu_N / p.s2_N)},
              {"ratio_mu_prime_K", number(p.empirical_var_mu_prime_K / p.s2_prime_K)},
              {"mean_var_hat_mu_N", number(p.mean_var_hat_mu_N)},
              {"mean_var_hat_mu_prime_K", number(p.mean_var_hat_mu_prime_K)},
              {"mean_var_intra_mu_prime_K", number(p.mean_var_intra_mu_prime_K)}}},
        {"ks_to_normal",
         Json{{"normalized_mu_N", ks_json(p.ks_normalized_N)},
              {"t_N", ks_json(p.ks_t_N)},
              {"t_prime_K", ks_json(p.ks_t_prime_K)},
              {"t_intra", ks_json(p.ks_t_intra)},
              {"t_inter", ks_json(p.ks_t_inter)}}},
        {"normal_ci_mu_N", coverage_json(p.normal_ci_mu_N)},
        {"third_moment_sum", number(p.third_moment_sum)},
        {"berry_esseen",
         Json{{"scaled", number(p.berry_esseen.scaled)},
              {"per_K", number(p.berry_esseen.per_K)},
              {"abs_third_moment", number(p.berry_esseen.abs_third_moment)}}},
        {"rate_scale", number(p.rate_scale)},
        {"rate_scale_alt", number(p.rate_scale_alt)},
        {"quantile_corrections", corrections},
        {"schemes", schemes}});
  }
  return Json{{"config", to_json(report.config)}, {"points", points}};
}

Json to_json(const RateTable& table) {
  Json rows = Json::array();
  for (const auto& r : table.rows) {
    rows.push_back(Json{{"K", r.K},
                        {"alpha", r.alpha},
                        {"sup_distance", number(r.sup_distance)},
                        {"scaled", number(r.scaled)},
                        {"scaled_alt", number(r.scaled_alt)},
                        {"per_dataset_mean_scaled", number(r.per_dataset_mean_scaled)},
                        {"per_dataset_max_scaled", number(r.per_dataset_max_scaled)},
                        {"berry_esseen_scaled", number(r.berry_esseen_scaled)},
                        {"within_bound", r.within_bound},
                        {"quantile_correction", correction_json(r.correction)}});
  }
  return Json{{"rates", rows}, {"report", to_json(table.report)}};
}

Json to_json(const ComparisonTable& table) {
  Json rows = Json::array();
  for (const auto& r : table.rows) {
    rows.push_back(Json{{"K", r.K},
                        {"alpha", r.alpha},
                        {"scheme", to_string(r.scheme)},
                        {"var_star_mu_prime_K", number(r.var_star_mu_prime_K)},
                        {"target", number(r.target)},
                        {"ratio", number(r.ratio)},
                        {"coverage", number(r.coverage)}});
  }
  Json excess = Json::array();
  for (std::size_t i = 0; i < table.b3_excess.size(); ++i) {
    excess.push_back(Json{{"K", table.report.points[i].K},
                          {"b3_minus_b1_uniform", number(table.b3_excess[i])},
                          {"var_intra_mu_prime_K", number(table.intra_term[i])}});
  }
  return Json{{"comparison", rows}, {"b3_excess", excess}, {"report", to_json(table.report)}};
}

Json to_json(const ExactComparison& table) {
  Json rows = Json::array();
  for (const auto& r : table.rows) {
    rows.push_back(Json{{"scheme", to_string(r.scheme)},
                        {"var_star_mu_prime_K", number(r.var_star_mu_prime_K)},
                        {"ratio_to_uniform_target", number(r.ratio_to_uniform_target)}});
  }
  return Json{{"rows", rows},
              {"target", number(table.target)},
              {"b3_excess", number(table.b3_excess)},
              {"var_intra_mu_prime_K", number(table.intra_term)}};
}

ExperimentConfig experiment_config_from_json(const Json& j) {
  if (!j.is_object()) {
    throw Error(Errc::malformed_input, "experiment config must be a JSON object");
  }
  ExperimentConfig c;
  if (j.contains("truth")) {
    const Json& t = j.at("truth");
    if (!t.is_object()) {
      throw Error(Errc::malformed_input, "field 'truth' must be an object");
    }
    c.truth.mu = get_or<double>(t, "mu", c.truth.mu);
    c.truth.gamma = get_or<double>(t, "gamma", c.truth.gamma);
    c.truth.sigma2 = get_or<double>(t, "sigma2", c.truth.sigma2);
    c.truth.effect = distribution_from_json(t, "effect");
    c.truth.noise = distribution_from_json(t, "noise");
    c.truth.within_dispersion = get_or<double>(t, "within_dispersion", 0.0);
  }
  if (!j.contains("grid")) {
    throw Error(Errc::malformed_input, "missing field 'grid'");
  }
  const Json& g = j.at("grid");
  auto design_from = [](const Json& d, std::size_t K) {
    const double alpha = get_or<double>(d, "alpha", 0.25);
    DesignParams p = DesignParams::balanced(K, alpha, 1.0);
    if (d.contains("c")) {
      const Json& cj = d.at("c");
      if (cj.is_number()) {
        p.c.assign(K, cj.get<double>());
      } else if (cj.is_array()) {
        p.c = cj.get<std::vector<double>>();
      } else {
        throw Error(Errc::malformed_input, "field 'c' must be a number or a list");
      }
    }
    return p;
  };
  try {
    if (g.is_array()) {
      for (const Json& d : g) {
        c.grid.push_back(design_from(d, d.at("K").get<std::size_t>()));
      }
    } else if (g.is_object()) {
      const Json& Ks = g.at("K");
      if (Ks.is_array()) {
        for (const Json& K : Ks) {
          c.grid.push_back(design_from(g, K.get<std::size_t>()));
        }
      } else {
        c.grid.push_back(design_from(g, Ks.get<std::size_t>()));
      }
    } else {
      throw Error(Errc::malformed_input, "field 'grid' must be an object or a list");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::malformed_input, std::string("bad grid: ") + e.what());
  }
  c.R = get_or<std::size_t>(j, "R", c.R);
  c.B = get_or<std::size_t>(j, "B", c.B);
  if (j.contains("schemes")) {
    for (const auto& name : get_or<std::vector<std::string>>(j, "schemes", {})) {
      c.schemes.push_back(parse_scheme(name));
    }
  }
  c.level = get_or<double>(j, "level", c.level);
  c.master_seed = get_or<std::uint64_t>(j, "seed", c.master_seed);
  c.threads = get_or<unsigned>(j, "threads", c.threads);
  if (get_or<bool>(j, "compat_printed_formulas", false)) {
    c.estimator.formula = FormulaVariant::printed;
  }
  c.estimator.truncate_nonneg = get_or<bool>(j, "truncate_gamma", false);
  c.berry_esseen_C = get_or<double>(j, "berry_esseen_C", c.berry_esseen_C);
  return c;
}

ExperimentConfig read_experiment_config(std::istream& in) {
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(Errc::malformed_input, std::string("config is not valid JSON: ") + e.what());
  }
  return experiment_config_from_json(j);
}

void write_long_csv(std::ostream& out, const ExperimentReport& report) {
  out << "K,alpha,scheme,metric,value\n";
  for (const auto& p : report.points) {
    csv_row(out, p.K, p.alpha, "none", "mean_mu_hat_N", p.mu_hat_N.mean);
    csv_row(out, p.K, p.alpha, "none", "mean_mu_hat_prime_K", p.mu_hat_prime_K.mean);
    csv_row(out, p.K, p.alpha, "none", "mean_sigma2_hat", p.sigma2_hat.mean);
    csv_row(out, p.K, p.alpha, "none", "mean_gamma_hat", p.gamma_hat.mean);
    csv_row(out, p.K, p.alpha, "none", "var_ratio_mu_N", p.empirical_var_mu_N / p.s2_N);
    csv_row(out, p.K, p.alpha, "none", "var_ratio_mu_prime_K", p.empirical_var_mu_prime_K / p.s2_prime_K);
    csv_row(out, p.K, p.alpha, "none", "ks_normalized_mu_N", p.ks_normalized_N.distance);
    csv_row(out, p.K, p.alpha, "none", "ks_t_N", p.ks_t_N.distance);
    csv_row(out, p.K, p.alpha, "none", "ks_t_prime_K", p.ks_t_prime_K.distance);
    csv_row(out, p.K, p.alpha, "none", "ks_t_intra", p.ks_t_intra.distance);
    csv_row(out, p.K, p.alpha, "none", "ks_t_inter", p.ks_t_inter.distance);
    csv_row(out, p.K, p.alpha, "none", "normal_ci_coverage", p.normal_ci_mu_N.coverage);
    csv_row(out, p.K, p.alpha, "none", "berry_esseen_scaled", p.berry_esseen.scaled);
    for (const auto& s : p.schemes) {
      const auto name = short_name(s.scheme);
      csv_row(out, p.K, p.alpha, name, "mean_var_star_mu_prime_K", s.mean_var_star_mu_prime_K);
      csv_row(out, p.K, p.alpha, name, "coverage_percentile", s.percentile.coverage);
      csv_row(out, p.K, p.alpha, name, "coverage_bootstrap_t", s.bootstrap_t.coverage);
      csv_row(out, p.K, p.alpha, name, "coverage_normal", s.normal.coverage);
      csv_row(out, p.K, p.alpha, name, "sup_distance", s.sup_distance_pooled);
      csv_row(out, p.K, p.alpha, name, "scaled_sup_distance", p.rate_scale * s.sup_distance_pooled);
    }
  }
}

void write_long_csv(std::ostream& out, const RateTable& table) {
  out << "K,alpha,scheme,metric,value\n";
  const auto name = short_name(Scheme::b1_weighted);
  for (const auto& r : table.rows) {
    csv_row(out, r.K, r.alpha, name, "sup_distance", r.sup_distance);
    csv_row(out, r.K, r.alpha, name, "scaled_sup_distance", r.scaled);
    csv_row(out, r.K, r.alpha, name, "scaled_sup_distance_alt", r.scaled_alt);
    csv_row(out, r.K, r.alpha, name, "per_dataset_mean_scaled", r.per_dataset_mean_scaled);
    csv_row(out, r.K, r.alpha, name, "per_dataset_max_scaled", r.per_dataset_max_scaled);
    csv_row(out, r.K, r.alpha, name, "berry_esseen_scaled", r.berry_esseen_scaled);
    csv_row(out, r.K, r.alpha, "none", "cdf_error_plain", r.correction.plain_error);
    csv_row(out, r.K, r.alpha, "none", "cdf_error_corrected", r.correction.corrected_error);
  }
}

void write_long_csv(std::ostream& out, const ComparisonTable& table) {
  out << "K,alpha,scheme,metric,value\n";
  for (const auto& r : table.rows) {
    const auto name = short_name(r.scheme);
    csv_row(out, r.K, r.alpha, name, "var_star_mu_prime_K", r.var_star_mu_prime_K);
    csv_row(out, r.K, r.alpha, name, "target", r.target);
    csv_row(out, r.K, r.alpha, name, "ratio", r.ratio);
    csv_row(out, r.K, r.alpha, name, "coverage_bootstrap_t", r.coverage);
  }
  for (std::size_t i = 0; i < table.b3_excess.size(); ++i) {
    const auto& p = table.report.points[i];
    csv_row(out, p.K, p.alpha, short_name(Scheme::b3_cluster), "excess_over_b1u", table.b3_excess[i]);
    csv_row(out, p.K, p.alpha, "none", "var_intra_mu_prime_K", table.intra_term[i]);
  }
}

std::string dump(const Json& j) { return j.dump(); }

std::string dump_pretty(const Json& j) { return j.dump(2) + "\n"; }

} // namespace cboot
