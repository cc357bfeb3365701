#include "cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <memory>
#include <optional>
#include <ostream>

#include "CLI11.hpp"

#include "clusterboot/asymptotics.hpp"
#include "clusterboot/bootstrap.hpp"
#include "clusterboot/dataset_io.hpp"
#include "clusterboot/estimators.hpp"
#include "clusterboot/json_io.hpp"
#include "clusterboot/montecarlo.hpp"

namespace cboot::cli {

int exit_code_for(Errc code) noexcept {
  switch (code) {
  case Errc::malformed_input:
  case Errc::empty_input:
  case Errc::empty_population: return kMalformed;
  case Errc::degenerate_k:
  case Errc::singleton_population: return kDegenerate;
  case Errc::insufficient_replicates: return kInsufficientReplicates;
  case Errc::zero_gamma: return kZeroGamma;
  case Errc::unsupported_inference: return kUnsupportedInference;
  default: return kOther;
  }
}

namespace {

struct Options {
  std::string input;
  std::string config;
  std::string output;
  std::string csv;
  std::string replicate_csv;
  std::string scheme = "b1w";
  std::string target;
  std::size_t replicates = 999;
  double level = 0.95;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  bool compat = false;
  bool truncate = false;
  bool timing = false;
};

class Sink {
public:
  Sink(const std::string& path, std::ostream& fallback) : out_(&fallback) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path, std::ios::binary);
      if (!*file_) {
        throw Error(Errc::invalid_argument, "cannot write '" + path + "'");
      }
      out_ = file_.get();
    }
  }
  std::ostream& stream() { return *out_; }

private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* out_;
};

EstimatorOptions estimator_options(const Options& o) {
  EstimatorOptions e;
  e.formula = o.compat ? FormulaVariant::printed : FormulaVariant::corrected;
  e.truncate_nonneg = o.truncate;
  return e;
}

void warn(std::ostream& err, const std::string& kind, const std::string& message) {
  err << dump(Json{{"warning", kind}, {"message", message}}) << '\n';
}

ClusterDataset load_input(const Options& o) {
  if (o.input.empty()) {
    throw Error(Errc::invalid_argument, "--input is required");
  }
  return read_csv_file(o.input);
}

ExperimentConfig load_config(const Options& o, const CLI::App& sub) {
  if (o.config.empty()) {
    throw Error(Errc::invalid_argument, "--config is required");
  }
  std::ifstream in(o.config);
  if (!in) {
    throw Error(Errc::malformed_input, "cannot open '" + o.config + "'");
  }
  ExperimentConfig c = read_experiment_config(in);
  if (sub.count("--seed") > 0) {
    c.master_seed = o.seed;
  }
  if (sub.count("--threads") > 0) {
    c.threads = o.threads;
  }
  if (sub.count("--replicates") > 0) {
    c.B = o.replicates;
  }
  if (sub.count("--level") > 0) {
    c.level = o.level;
  }
  if (o.compat) {
    c.estimator.formula = FormulaVariant::printed;
  }
  if (o.truncate) {
    c.estimator.truncate_nonneg = true;
  }
  return c;
}

int cmd_estimate(const Options& o, std::ostream& out, std::ostream& err) {
  const auto data = load_input(o);
  const auto summary = summarize(data);
  const auto report = estimate(summary, estimator_options(o));
  if (report.gamma_hat < 0.0) {
    warn(err, "negative_gamma_hat",
         "gamma_hat = " + format_double(report.gamma_hat) + " is negative; use --truncate-gamma to clamp at 0");
  }
  Sink sink(o.output, out);
  sink.stream() << dump_pretty(to_json(report));
  return kOk;
}

// Standard error used to scale intervals for `statistic` under `run`'s scheme.
double interval_scale(const BootstrapRun& run, Statistic statistic) {
  if (statistic == natural_statistic(run.scheme)) {
    return run.standard_error;
  }
  const auto var = statistic == Statistic::mu_N ? run.moments.var_mu_star_N : run.moments.var_mu_star_prime_K;
  return var ? std::sqrt(*var) : std::nan("");
}

Json interval_or_null(const BootstrapRun& run, Statistic statistic, double scale, IntervalMethod method,
                      double level, double skew, std::ostream& err) {
  try {
    return to_json(confidence_interval(run, statistic, run.point(statistic), scale, method, level, skew));
  } catch (const Error& e) {
    if (e.code() == Errc::non_positive_scale || e.code() == Errc::unsupported_inference) {
      warn(err, std::string(to_string(method)) + "_unavailable", e.what());
      return Json(nullptr);
    }
    throw;
  }
}

int cmd_bootstrap(const Options& o, std::ostream& out, std::ostream& err) {
  const Scheme scheme = parse_scheme(o.scheme);
  const Statistic statistic = o.target.empty() ? natural_statistic(scheme) : parse_statistic(o.target);
  if (scheme == Scheme::b3_cluster && statistic == Statistic::mu_N) {
    throw Error(Errc::unsupported_inference,
                "B3_CLUSTER cannot be used for inference on mu_N: its bootstrap law of mu*_N does not "
                "estimate the sampling law of mu_hat_N; use b2 or b1w");
  }
  const std::size_t needed = min_replicates(o.level);
  if (o.replicates < needed) {
    throw Error(Errc::insufficient_replicates, "level " + format_double(o.level) + " needs at least " +
                                                   std::to_string(needed) + " replicates, got " +
                                                   std::to_string(o.replicates));
  }
  const auto data = load_input(o);
  BootstrapOptions bo;
  bo.threads = o.threads;
  bo.formula = o.compat ? FormulaVariant::printed : FormulaVariant::corrected;
  const auto run = run_bootstrap(data, scheme, o.replicates, o.seed, bo);

  const double scale = interval_scale(run, statistic);
  double skew = 0.0;
  if (scale > 0.0) {
    const auto summary = summarize(data);
    const auto convention = o.compat ? MomentConvention::absolute : MomentConvention::signed_moment;
    skew = third_moment_sum_plug_in(summary, statistic == Statistic::mu_prime_K, convention) /
           (scale * scale * scale);
  }
  Json intervals;
  for (IntervalMethod m : {IntervalMethod::percentile, IntervalMethod::bootstrap_t, IntervalMethod::normal,
                           IntervalMethod::edgeworth_corrected}) {
    intervals[std::string(to_string(m))] = interval_or_null(run, statistic, scale, m, o.level, skew, err);
  }
  Json mc(nullptr);
  if (run.B >= 2) {
    const auto m = mc_moments(run);
    mc = Json{{"mu_star_N", to_json(m.mu_star_N)}, {"mu_star_prime_K", to_json(m.mu_star_prime_K)}};
  }
  Json doc{{"run", to_json(run)},
           {"statistic", to_string(statistic)},
           {"level", o.level},
           {"interval_scale", std::isfinite(scale) ? Json(scale) : Json(nullptr)},
           {"mc_moments", mc},
           {"intervals", intervals}};
  Sink sink(o.output, out);
  sink.stream() << dump_pretty(doc);
  if (!o.replicate_csv.empty()) {
    Sink csv(o.replicate_csv, out);
    write_replicate_csv(csv.stream(), run);
  }
  return kOk;
}

template <typename Table, typename Compute>
int run_experiment_command(const Options& o, const CLI::App& sub, std::ostream& out, std::ostream& err,
                           Compute compute) {
  const auto config = load_config(o, sub);
  const auto start = std::chrono::steady_clock::now();
  const Table table = compute(config);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  err << dump(Json{{"timing", Json{{"command", sub.get_name()}, {"seconds", seconds}}}}) << '\n';
  Json doc = to_json(table);
  if (o.timing) {
    doc["timing"] = Json{{"seconds", seconds}};
  }
  Sink sink(o.output, out);
  sink.stream() << dump_pretty(doc);
  if (!o.csv.empty()) {
    Sink csv(o.csv, out);
    write_long_csv(csv.stream(), table);
  }
  return kOk;
}

int cmd_compare_exact(const Options& o, std::ostream& out) {
  const auto data = load_input(o);
  Sink sink(o.output, out);
  sink.stream() << dump_pretty(to_json(scheme_comparison_exact(data)));
  return kOk;
}

void report_error(std::ostream& err, const std::string& code, const std::string& message, int exit_code) {
  err << dump(Json{{"error", code}, {"message", message}, {"exit_code", exit_code}}) << '\n';
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Bootstrap inference for two-stage cluster samples", "clusterboot"};
  app.require_subcommand(1);

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--output,-o", o.output, "Report path (default: standard output)");
    sub->add_option("--threads", o.threads, "Worker threads")->check(CLI::PositiveNumber);
    sub->add_flag("--compat-printed-formulas", o.compat, "Use the biased printed estimator forms");
    sub->add_flag("--truncate-gamma", o.truncate, "Clamp gamma_hat at zero");
  };

  auto* estimate_cmd = app.add_subcommand("estimate", "Point and variance estimates from a CSV sample");
  estimate_cmd->add_option("--input,-i", o.input, "CSV with header population_id,value")->required();
  add_common(estimate_cmd);

  auto* bootstrap_cmd = app.add_subcommand("bootstrap", "Bootstrap moments and confidence intervals");
  bootstrap_cmd->add_option("--input,-i", o.input, "CSV with header population_id,value")->required();
  bootstrap_cmd->add_option("--scheme", o.scheme, "b2, b1u, b1w or b3");
  bootstrap_cmd->add_option("--replicates,-B", o.replicates, "Bootstrap replicates");
  bootstrap_cmd->add_option("--level", o.level, "Confidence level");
  bootstrap_cmd->add_option("--seed", o.seed, "Random seed");
  bootstrap_cmd->add_option("--target", o.target, "mu_N or mu_prime_K (default: the scheme's own)");
  bootstrap_cmd->add_option("--replicate-csv", o.replicate_csv, "Write per-replicate statistics here");
  add_common(bootstrap_cmd);

  std::vector<CLI::App*> experiment_cmds;
  for (const auto& [name, help] : {std::pair{"simulate", "Run a Monte Carlo experiment"},
                                   std::pair{"rates", "Sup-distance rate table for the weighted scheme"},
                                   std::pair{"compare", "Compare the four schemes"}}) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config,-c", o.config, "Experiment configuration (JSON)");
    sub->add_option("--csv", o.csv, "Long-format CSV output");
    sub->add_option("--seed", o.seed, "Override the configured master seed");
    sub->add_option("--replicates,-B", o.replicates, "Override the configured B");
    sub->add_option("--level", o.level, "Override the configured confidence level");
    sub->add_flag("--timing", o.timing, "Include wall-clock time in the report");
    add_common(sub);
    experiment_cmds.push_back(sub);
  }
  experiment_cmds[2]->add_option("--input,-i", o.input, "Tiny CSV sample for an exact enumeration comparison");

  std::vector<const char*> argv;
  for (const auto& a : args) {
    argv.push_back(a.c_str());
  }
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    report_error(err, "UsageError", e.what(), kMalformed);
    return kMalformed;
  }

  try {
    if (*estimate_cmd) {
      return cmd_estimate(o, out, err);
    }
    if (*bootstrap_cmd) {
      return cmd_bootstrap(o, out, err);
    }
    if (*experiment_cmds[0]) {
      return run_experiment_command<ExperimentReport>(o, *experiment_cmds[0], out, err, run_experiment);
    }
    if (*experiment_cmds[1]) {
      return run_experiment_command<RateTable>(o, *experiment_cmds[1], out, err, rate_table);
    }
    if (*experiment_cmds[2]) {
      if (!o.input.empty()) {
        return cmd_compare_exact(o, out);
      }
      return run_experiment_command<ComparisonTable>(o, *experiment_cmds[2], out, err, scheme_comparison);
    }
  } catch (const Error& e) {
    const int code = exit_code_for(e.code());
    report_error(err, std::string(to_string(e.code())), e.what(), code);
    return code;
  } catch (const std::exception& e) {
    report_error(err, "Internal", e.what(), kOther);
    return kOther;
  }
  return kOther;
}

} // namespace cboot::cli
