#include "clusterboot/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "clusterboot/enumerate.hpp"
#include "clusterboot/error.hpp"
#include "clusterboot/kernels.hpp"
#include "clusterboot/parallel.hpp"

namespace cboot {

void ExperimentConfig::validate() const {
  truth.validate();
  if (grid.empty()) {
    throw Error(Errc::invalid_argument, "experiment grid is empty");
  }
  for (const auto& d : grid) {
    d.validate();
    if (d.K < 2) {
      throw Error(Errc::degenerate_k, "experiments need K >= 2");
    }
  }
  if (R < 1) {
    throw Error(Errc::invalid_argument, "R must be at least 1");
  }
  if (B < 1) {
    throw Error(Errc::invalid_argument, "B must be at least 1");
  }
  if (!(level > 0.0 && level < 1.0)) {
    throw Error(Errc::invalid_argument, "level must be in (0, 1)");
  }
  if (!(berry_esseen_C > 0.0)) {
    throw Error(Errc::invalid_argument, "Berry-Esseen constant must be positive");
  }
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kCorrectionPoint = 1.645;

struct ReplicateRecord {
  double mu_N;
  double mu_prime;
  double sigma2;
  double gamma;
  double var_hat_N;
  double var_hat_prime;
  double var_intra_prime;
  double z_N;
  double t_N;
  double t_prime;
  double t_intra;
  double t_inter;
  double normal_lower;
  double normal_upper;
};

// Interval outcome: NaN bounds mark an undefined interval.
struct IntervalRecord {
  double lower = kNaN;
  double upper = kNaN;
};

struct SchemeRecord {
  double var_star_prime;
  double var_star_N;
  double analytic_var_prime;
  double target;
  double outer_t;
  IntervalRecord percentile;
  IntervalRecord bootstrap_t;
  IntervalRecord normal;
};

double statistic_of(const ReplicateStats& s, Statistic statistic) {
  return statistic == Statistic::mu_N ? s.mu_star_N : s.mu_star_prime_K;
}

IntervalRecord try_interval(const BootstrapRun& run, Statistic statistic, double point, double scale,
                            IntervalMethod method, double level) {
  try {
    const auto ci = confidence_interval(run, statistic, point, scale, method, level);
    return {ci.lower, ci.upper};
  } catch (const Error& e) {
    if (e.code() == Errc::non_positive_scale || e.code() == Errc::insufficient_replicates) {
      return {};
    }
    throw;
  }
}

EstimatorSummary summarize_values(const std::vector<double>& x, double truth) {
  const double n = static_cast<double>(x.size());
  const double mean = kernels::sum(x) / n;
  const double sd = x.size() > 1 ? std::sqrt(kernels::sum_sq_dev(x, mean) / (n - 1.0)) : kNaN;
  return {truth, mean, mean - truth, sd, sd / std::sqrt(n)};
}

double sample_variance(const std::vector<double>& x) {
  if (x.size() < 2) {
    return kNaN;
  }
  const double mean = kernels::sum(x) / static_cast<double>(x.size());
  return kernels::sum_sq_dev(x, mean) / static_cast<double>(x.size() - 1);
}

double mean_of(const std::vector<double>& x) { return kernels::sum(x) / static_cast<double>(x.size()); }

std::vector<double> defined_sorted(const std::vector<double>& x) {
  std::vector<double> out;
  out.reserve(x.size());
  for (double v : x) {
    if (!std::isnan(v)) {
      out.push_back(v);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

KsSummary ks_to_normal(const std::vector<double>& x) {
  const auto sorted = defined_sorted(x);
  KsSummary s{kNaN, sorted.size(), x.size() - sorted.size()};
  if (!sorted.empty()) {
    s.distance = sup_distance(sorted, [](double v) { return normal_cdf(v); });
  }
  return s;
}

CoverageSummary coverage_of(const std::vector<IntervalRecord>& intervals, const std::vector<double>& targets) {
  CoverageSummary c{std::nullopt, std::nullopt, 0, 0};
  std::vector<double> hits;
  std::vector<double> widths;
  for (std::size_t r = 0; r < intervals.size(); ++r) {
    const auto& iv = intervals[r];
    if (std::isnan(iv.lower) || std::isnan(iv.upper)) {
      ++c.failed;
      continue;
    }
    hits.push_back(iv.lower <= targets[r] && targets[r] <= iv.upper ? 1.0 : 0.0);
    widths.push_back(iv.upper - iv.lower);
  }
  c.used = hits.size();
  if (!hits.empty()) {
    c.coverage = mean_of(hits);
    c.mean_width = mean_of(widths);
  }
  return c;
}

// Fraction of sorted values <= x.
double ecdf(const std::vector<double>& sorted, double x) {
  const auto it = std::upper_bound(sorted.begin(), sorted.end(), x);
  return static_cast<double>(it - sorted.begin()) / static_cast<double>(sorted.size());
}

QuantileCorrection correction_check(const std::vector<double>& values, ExpansionKind kind, double s,
                                    double third_moment) {
  const EdgeworthInputs inputs{s, third_moment, kind};
  QuantileCorrection q{kind, kCorrectionPoint, inputs.kappa(), 0.0, 0.0};
  const auto sorted = defined_sorted(values);
  if (sorted.empty()) {
    q.plain_error = q.corrected_error = kNaN;
    return q;
  }
  for (double x : {-kCorrectionPoint, kCorrectionPoint}) {
    const double target = normal_cdf(x);
    q.plain_error += std::abs(ecdf(sorted, x) - target);
    q.corrected_error += std::abs(ecdf(sorted, corrected_quantile(x, inputs)) - target);
  }
  return q;
}

std::uint64_t scheme_seed(std::uint64_t master, std::size_t g, std::size_t r, Scheme scheme) {
  return derive_seed(master, {g, r, kSchemeSeedTag + static_cast<std::uint64_t>(scheme)});
}

GridPointReport run_grid_point(const ExperimentConfig& config, std::size_t g) {
  const DesignParams& design = config.grid[g];
  const TruthParams& truth = config.truth;
  const auto sizes = subsample_sizes(design);
  const std::size_t R = config.R;
  const std::size_t B = config.B;
  const std::size_t S = config.schemes.size();
  const auto truth_var = truth_variances(truth.gamma, truth.sigma2, sizes);
  const double S_N = std::sqrt(truth_var.s2_N);
  const double z = normal_quantile(1.0 - (1.0 - config.level) / 2.0);

  std::vector<ReplicateRecord> records(R);
  std::vector<std::vector<SchemeRecord>> scheme_records(S, std::vector<SchemeRecord>(R));
  std::vector<std::vector<double>> inner(S, std::vector<double>(R * B));

  parallel_chunks(R, config.threads, [&](std::size_t begin, std::size_t end) {
    SampleBuffer buffer;
    std::vector<ReplicateStats> stats(B);
    std::vector<double> theta(B);
    std::vector<double> theta_N(B);
    for (std::size_t r = begin; r < end; ++r) {
      const std::uint64_t seed = derive_seed(config.master_seed, {g, r});
      generate_into(truth, sizes, seed, buffer);
      const auto view = buffer.view();
      const auto summary = summarize(view);
      const auto est = estimate(summary, config.estimator);

      ReplicateRecord& rec = records[r];
      rec.mu_N = est.mu_hat_N;
      rec.mu_prime = est.mu_hat_prime_K;
      rec.sigma2 = est.sigma2_hat;
      rec.gamma = est.gamma_hat;
      rec.var_hat_N = est.var_hat_mu_N;
      rec.var_hat_prime = est.var_hat_mu_prime_K;
      rec.var_intra_prime = est.var_intra_mu_prime_K;
      rec.z_N = (est.mu_hat_N - truth.mu) / S_N;
      rec.t_N = est.var_hat_mu_N > 0.0 ? (est.mu_hat_N - truth.mu) / std::sqrt(est.var_hat_mu_N) : kNaN;
      rec.t_prime =
          est.var_hat_mu_prime_K > 0.0 ? (est.mu_hat_prime_K - truth.mu) / std::sqrt(est.var_hat_mu_prime_K) : kNaN;
      const auto dec = decomposed_stats(summary, buffer.cluster_means, truth.mu, config.estimator);
      rec.t_intra = dec.t_intra.value_or(kNaN);
      rec.t_inter = dec.t_inter.value_or(kNaN);
      if (est.var_hat_mu_N > 0.0) {
        const double half = z * std::sqrt(est.var_hat_mu_N);
        rec.normal_lower = est.mu_hat_N - half;
        rec.normal_upper = est.mu_hat_N + half;
      } else {
        rec.normal_lower = rec.normal_upper = kNaN;
      }

      for (std::size_t si = 0; si < S; ++si) {
        const Scheme scheme = config.schemes[si];
        const Statistic statistic = natural_statistic(scheme);
        ReplicateEngine engine(view, scheme, config.estimator.formula);
        const std::uint64_t bseed = scheme_seed(config.master_seed, g, r, scheme);
        engine.run(RngStream::key_for(bseed, StreamDomain::bootstrap), 0, stats);

        BootstrapRun run;
        run.scheme = scheme;
        run.B = B;
        run.seed = bseed;
        run.moments = analytic_moments(summary, scheme);
        run.mu_hat_N = est.mu_hat_N;
        run.mu_hat_prime_K = est.mu_hat_prime_K;
        run.standard_error = scheme_standard_error(summary, scheme);
        run.stats = stats;

        SchemeRecord& sr = scheme_records[si][r];
        for (std::size_t b = 0; b < B; ++b) {
          theta[b] = stats[b].mu_star_prime_K;
          theta_N[b] = stats[b].mu_star_N;
        }
        sr.var_star_prime = sample_variance(theta);
        sr.var_star_N = sample_variance(theta_N);
        sr.analytic_var_prime = run.moments.var_mu_star_prime_K.value_or(kNaN);

        double outer_scale2 = 0.0;
        if (scheme == Scheme::b2_individuals) {
          sr.target = kernels::dot(size_weights(sizes), buffer.cluster_means);
          outer_scale2 = run.standard_error * run.standard_error;
        } else {
          sr.target = truth.mu;
          outer_scale2 = statistic == Statistic::mu_N ? est.var_hat_mu_N : est.var_hat_mu_prime_K;
        }
        const double point = run.point(statistic);
        sr.outer_t = outer_scale2 > 0.0 ? (point - sr.target) / std::sqrt(outer_scale2) : kNaN;

        double* t_out = inner[si].data() + r * B;
        for (std::size_t b = 0; b < B; ++b) {
          const double s = stats[b].scale();
          t_out[b] = s > 0.0 ? (statistic_of(stats[b], statistic) - point) / s : kNaN;
        }

        sr.percentile = try_interval(run, statistic, point, run.standard_error, IntervalMethod::percentile,
                                     config.level);
        sr.bootstrap_t = try_interval(run, statistic, point, run.standard_error, IntervalMethod::bootstrap_t,
                                      config.level);
        sr.normal = try_interval(run, statistic, point, run.standard_error, IntervalMethod::normal, config.level);
      }
    }
  });

  GridPointReport p{};
  const auto dc = design_constants(sizes);
  p.K = design.K;
  p.alpha = design.alpha;
  p.N = 0;
  for (std::size_t nk : sizes) {
    p.N += nk;
  }
  p.n_star = dc.n_star;
  p.n_tilde = dc.n_tilde;
  p.R = R;

  auto column = [&](auto member) {
    std::vector<double> out(R);
    for (std::size_t r = 0; r < R; ++r) {
      out[r] = records[r].*member;
    }
    return out;
  };
  const auto mu_N = column(&ReplicateRecord::mu_N);
  const auto mu_prime = column(&ReplicateRecord::mu_prime);
  p.mu_hat_N = summarize_values(mu_N, truth.mu);
  p.mu_hat_prime_K = summarize_values(mu_prime, truth.mu);
  p.sigma2_hat = summarize_values(column(&ReplicateRecord::sigma2), truth.sigma2);
  p.gamma_hat = summarize_values(column(&ReplicateRecord::gamma), truth.gamma);
  p.s2_N = truth_var.s2_N;
  p.s2_prime_K = truth_var.s2_prime_K;
  p.empirical_var_mu_N = sample_variance(mu_N);
  p.empirical_var_mu_prime_K = sample_variance(mu_prime);
  p.mean_var_hat_mu_N = mean_of(column(&ReplicateRecord::var_hat_N));
  p.mean_var_hat_mu_prime_K = mean_of(column(&ReplicateRecord::var_hat_prime));
  p.mean_var_intra_mu_prime_K = mean_of(column(&ReplicateRecord::var_intra_prime));

  const auto z_N = column(&ReplicateRecord::z_N);
  const auto t_N = column(&ReplicateRecord::t_N);
  p.ks_normalized_N = ks_to_normal(z_N);
  p.ks_t_N = ks_to_normal(t_N);
  p.ks_t_prime_K = ks_to_normal(column(&ReplicateRecord::t_prime));
  p.ks_t_intra = ks_to_normal(column(&ReplicateRecord::t_intra));
  p.ks_t_inter = ks_to_normal(column(&ReplicateRecord::t_inter));

  std::vector<IntervalRecord> normal_ci(R);
  for (std::size_t r = 0; r < R; ++r) {
    normal_ci[r] = {records[r].normal_lower, records[r].normal_upper};
  }
  p.normal_ci_mu_N = coverage_of(normal_ci, std::vector<double>(R, truth.mu));

  const auto convention = config.estimator.formula == FormulaVariant::printed ? MomentConvention::absolute
                                                                               : MomentConvention::signed_moment;
  p.third_moment_sum = third_moment_sum(truth, sizes, convention);
  p.rate_scale = std::pow(static_cast<double>(design.K), 0.5 + 2.0 * design.alpha);
  p.rate_scale_alt = std::pow(static_cast<double>(design.K), design.alpha + 0.5);
  if (truth.gamma > 0.0) {
    p.berry_esseen = berry_esseen_bound(truth, design, config.berry_esseen_C);
  } else {
    p.berry_esseen = {kNaN, kNaN, absolute_third_moment(truth)};
  }
  p.corrections.push_back(correction_check(z_N, ExpansionKind::normalized, S_N, p.third_moment_sum));
  p.corrections.push_back(correction_check(t_N, ExpansionKind::studentized, S_N, p.third_moment_sum));

  for (std::size_t si = 0; si < S; ++si) {
    const auto& recs = scheme_records[si];
    SchemeReport sr{};
    sr.scheme = config.schemes[si];
    sr.statistic = natural_statistic(sr.scheme);
    std::vector<double> v_prime(R);
    std::vector<double> v_N(R);
    std::vector<double> v_analytic(R);
    std::vector<double> targets(R);
    std::vector<double> outer(R);
    std::vector<IntervalRecord> pct(R);
    std::vector<IntervalRecord> bt(R);
    std::vector<IntervalRecord> nm(R);
    for (std::size_t r = 0; r < R; ++r) {
      v_prime[r] = recs[r].var_star_prime;
      v_N[r] = recs[r].var_star_N;
      v_analytic[r] = recs[r].analytic_var_prime;
      targets[r] = recs[r].target;
      outer[r] = recs[r].outer_t;
      pct[r] = recs[r].percentile;
      bt[r] = recs[r].bootstrap_t;
      nm[r] = recs[r].normal;
    }
    sr.mean_var_star_mu_prime_K = mean_of(v_prime);
    sr.mean_var_star_mu_N = mean_of(v_N);
    sr.mean_analytic_var_star_mu_prime_K = mean_of(v_analytic);
    sr.percentile = coverage_of(pct, targets);
    sr.bootstrap_t = coverage_of(bt, targets);
    sr.normal = coverage_of(nm, targets);

    const auto outer_sorted = defined_sorted(outer);
    auto& pooled = inner[si];
    std::vector<double> per_dataset(R, kNaN);
    std::vector<double> block;
    for (std::size_t r = 0; r < R && !outer_sorted.empty(); ++r) {
      block.assign(pooled.begin() + static_cast<std::ptrdiff_t>(r * B),
                   pooled.begin() + static_cast<std::ptrdiff_t>((r + 1) * B));
      const auto sorted = defined_sorted(block);
      if (!sorted.empty()) {
        per_dataset[r] = sup_distance(outer_sorted, sorted);
      }
    }
    const auto pooled_sorted = defined_sorted(pooled);
    sr.inner_undefined = pooled.size() - pooled_sorted.size();
    sr.sup_distance_pooled =
        outer_sorted.empty() || pooled_sorted.empty() ? kNaN : sup_distance(outer_sorted, pooled_sorted);
    const auto defined = defined_sorted(per_dataset);
    sr.sup_distance_per_dataset_mean = defined.empty() ? kNaN : mean_of(defined);
    sr.sup_distance_per_dataset_max = defined.empty() ? kNaN : defined.back();
    p.schemes.push_back(sr);
  }
  return p;
}

} // namespace

ExperimentReport run_experiment(const ExperimentConfig& config) {
  config.validate();
  ExperimentReport report;
  report.config = config;
  for (std::size_t g = 0; g < config.grid.size(); ++g) {
    report.points.push_back(run_grid_point(config, g));
  }
  return report;
}

RateTable rate_table(const ExperimentConfig& config) {
  if (config.grid.size() < 3) {
    throw Error(Errc::grid_too_small,
                "rate table needs at least 3 grid points, got " + std::to_string(config.grid.size()));
  }
  for (const auto& d : config.grid) {
    if (d.alpha != config.grid.front().alpha) {
      throw Error(Errc::invalid_design, "rate table grid points must share alpha");
    }
    const double c0 = config.grid.front().c.empty() ? 1.0 : config.grid.front().c.front();
    for (double c : d.c) {
      if (c != c0) {
        throw Error(Errc::invalid_design, "rate table grid points must share one constant c");
      }
    }
  }
  if (config.truth.gamma == 0.0) {
    throw Error(Errc::zero_gamma, "rate table needs gamma > 0");
  }
  ExperimentConfig cfg = config;
  if (std::find(cfg.schemes.begin(), cfg.schemes.end(), Scheme::b1_weighted) == cfg.schemes.end()) {
    cfg.schemes.push_back(Scheme::b1_weighted);
  }
  RateTable table;
  table.report = run_experiment(cfg);
  for (const auto& p : table.report.points) {
    const auto it = std::find_if(p.schemes.begin(), p.schemes.end(),
                                 [](const SchemeReport& s) { return s.scheme == Scheme::b1_weighted; });
    RateRow row{};
    row.K = p.K;
    row.alpha = p.alpha;
    row.sup_distance = it->sup_distance_pooled;
    row.scaled = p.rate_scale * row.sup_distance;
    row.scaled_alt = p.rate_scale_alt * row.sup_distance;
    row.per_dataset_mean_scaled = p.rate_scale * it->sup_distance_per_dataset_mean;
    row.per_dataset_max_scaled = p.rate_scale * it->sup_distance_per_dataset_max;
    row.berry_esseen_scaled = p.berry_esseen.scaled;
    row.within_bound = row.scaled <= row.berry_esseen_scaled;
    row.correction = p.corrections.front();
    table.rows.push_back(row);
  }
  return table;
}

ComparisonTable scheme_comparison(const ExperimentConfig& config) {
  ExperimentConfig cfg = config;
  cfg.schemes.assign(std::begin(kAllSchemes), std::end(kAllSchemes));
  ComparisonTable table;
  table.report = run_experiment(cfg);
  for (const auto& p : table.report.points) {
    double var_b1u = kNaN;
    double var_b3 = kNaN;
    for (const auto& s : p.schemes) {
      ComparisonRow row{};
      row.K = p.K;
      row.alpha = p.alpha;
      row.scheme = s.scheme;
      row.var_star_mu_prime_K = s.mean_var_star_mu_prime_K;
      row.target = p.mean_var_hat_mu_prime_K;
      row.ratio = row.target > 0.0 ? row.var_star_mu_prime_K / row.target : kNaN;
      row.coverage = s.bootstrap_t.coverage;
      table.rows.push_back(row);
      if (s.scheme == Scheme::b1_uniform) {
        var_b1u = s.mean_var_star_mu_prime_K;
      }
      if (s.scheme == Scheme::b3_cluster) {
        var_b3 = s.mean_var_star_mu_prime_K;
      }
    }
    table.b3_excess.push_back(var_b3 - var_b1u);
    table.intra_term.push_back(p.mean_var_intra_mu_prime_K);
  }
  return table;
}

ExactComparison scheme_comparison_exact(const ClusterDataset& data) {
  const auto summary = summarize(data);
  const auto est = estimate(summary);
  const double K = static_cast<double>(summary.K());
  ExactComparison out{};
  out.target = (K - 1.0) / K * est.var_hat_mu_prime_K;
  double var_b1u = 0.0;
  double var_b3 = 0.0;
  for (Scheme s : kAllSchemes) {
    const auto law = enumerate_bootstrap(data, s);
    ExactComparisonRow row{s, law.var_mu_star_prime_K,
                           out.target > 0.0 ? law.var_mu_star_prime_K / out.target : kNaN};
    out.rows.push_back(row);
    if (s == Scheme::b1_uniform) {
      var_b1u = law.var_mu_star_prime_K;
    }
    if (s == Scheme::b3_cluster) {
      var_b3 = law.var_mu_star_prime_K;
    }
  }
  out.b3_excess = var_b3 - var_b1u;
  out.intra_term = est.var_intra_mu_prime_K;
  return out;
}

double conditional_normality_ks(const BootstrapRun& run) {
  const Statistic statistic = natural_statistic(run.scheme);
  const double point = run.point(statistic);
  std::vector<double> z;
  z.reserve(run.stats.size());
  if (run.scheme == Scheme::b2_individuals || run.scheme == Scheme::b3_cluster) {
    const auto var = statistic == Statistic::mu_N ? run.moments.var_mu_star_N : run.moments.var_mu_star_prime_K;
    if (!var || !(*var > 0.0)) {
      throw Error(Errc::non_positive_variance, "bootstrap variance is not positive");
    }
    const double sd = std::sqrt(*var);
    for (const auto& s : run.stats) {
      z.push_back((statistic_of(s, statistic) - point) / sd);
    }
  } else {
    for (const auto& s : run.stats) {
      const double scale = s.scale();
      if (scale > 0.0) {
        z.push_back((statistic_of(s, statistic) - point) / scale);
      }
    }
  }
  if (z.empty()) {
    throw Error(Errc::non_positive_scale, "no replicate has a positive scale");
  }
  std::sort(z.begin(), z.end());
  return sup_distance(z, [](double v) { return normal_cdf(v); });
}

} // namespace cboot
