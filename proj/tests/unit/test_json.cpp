#include <catch_amalgamated.hpp>

#include <cmath>
#include <sstream>
#include <string>

#include "clusterboot/error.hpp"
#include "clusterboot/json_io.hpp"

using namespace cboot;

namespace {

ClusterDataset d0() { return ClusterDataset({Population{"1", {1, 3}}, Population{"2", {2, 6}}}); }

Errc code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return Errc::invalid_argument;
}

std::size_t count_lines(const std::string& s) {
  std::size_t n = 0;
  for (char c : s) {
    n += c == '\n' ? 1 : 0;
  }
  return n;
}

} // namespace

TEST_CASE("estimate reports serialize in a fixed order and round-trip", "[json]") {
  const auto r = estimate(summarize(d0()));
  const Json j = to_json(r);
  const std::vector<std::string> keys{"mu_hat_N",       "mu_hat_prime_K",     "sigma2_hat",
                                      "gamma_hat",      "v_hat",              "n_star",
                                      "n_tilde",        "var_hat_mu_prime_K", "var_hat_mu_N",
                                      "var_inter_mu_N", "var_intra_mu_N",     "var_inter_mu_prime_K",
                                      "var_intra_mu_prime_K"};
  std::vector<std::string> got;
  for (const auto& [k, v] : j.items()) {
    got.push_back(k);
  }
  CHECK(got == keys);
  CHECK(j.at("mu_hat_N") == 3.0);
  CHECK(j.at("gamma_hat") == -0.5);
  CHECK(estimate_report_from_json(Json::parse(dump(j))) == r);
  Json missing = j;
  missing.erase("v_hat");
  CHECK(code_of([&] { estimate_report_from_json(missing); }) == Errc::malformed_input);
}

TEST_CASE("non-finite values become null", "[json]") {
  auto r = estimate(summarize(d0()));
  r.gamma_hat = std::nan("");
  r.v_hat = INFINITY;
  const Json j = to_json(r);
  CHECK(j.at("gamma_hat").is_null());
  CHECK(j.at("v_hat").is_null());
  CHECK(dump(j).find("NaN") == std::string::npos);
}

TEST_CASE("bootstrap runs and replicate CSV", "[json]") {
  const auto run = run_bootstrap(d0(), Scheme::b3_cluster, 25, 7);
  const Json j = to_json(run);
  CHECK(j.at("scheme") == "B3_CLUSTER");
  CHECK(j.at("B") == 25);
  CHECK(j.at("seed") == 7);
  CHECK(j.at("analytic_moments").at("var_mu_star_N").is_null());
  CHECK(j.at("analytic_moments").at("var_mu_star_prime_K") == 1.75);
  std::ostringstream csv;
  write_replicate_csv(csv, run);
  CHECK(csv.str().rfind("replicate,mu_star_N,mu_star_prime_K,scale\n", 0) == 0);
  CHECK(count_lines(csv.str()) == 26);
  const auto iv = to_json(IntervalEstimate{IntervalMethod::normal, 0.9, -1.0, 2.5});
  CHECK(iv.at("method") == "normal");
  CHECK(iv.at("lower") == -1.0);
  CHECK(iv.at("upper") == 2.5);
}

TEST_CASE("experiment configurations parse both grid forms", "[json]") {
  const auto a = experiment_config_from_json(Json::parse(R"({
    "truth": {"mu": 1, "gamma": 2, "sigma2": 3, "effect": "exponential",
              "noise": {"family": "lognormal", "log_sd": 0.4}, "within_dispersion": 0.2},
    "grid": {"K": [10, 20], "alpha": 0.3, "c": 2},
    "R": 50, "B": 199, "schemes": ["b2", "B1_WEIGHTED"], "level": 0.9, "seed": 12,
    "compat_printed_formulas": true, "truncate_gamma": true, "berry_esseen_C": 0.4748})"));
  CHECK(a.truth.gamma == 2.0);
  CHECK(a.truth.effect.family == Family::shifted_exponential);
  CHECK(a.truth.noise.family == Family::lognormal);
  CHECK(a.truth.noise.log_sd == 0.4);
  CHECK(a.truth.within_dispersion == 0.2);
  REQUIRE(a.grid.size() == 2);
  CHECK(a.grid[1].K == 20);
  CHECK(a.grid[1].c == std::vector<double>(20, 2.0));
  CHECK(a.R == 50);
  CHECK(a.B == 199);
  CHECK(a.schemes == std::vector<Scheme>{Scheme::b2_individuals, Scheme::b1_weighted});
  CHECK(a.master_seed == 12);
  CHECK(a.estimator.formula == FormulaVariant::printed);
  CHECK(a.estimator.truncate_nonneg);
  CHECK(a.berry_esseen_C == 0.4748);

  const auto b = experiment_config_from_json(to_json(a));
  CHECK(to_json(b) == to_json(a));

  const auto c = experiment_config_from_json(Json::parse(R"({"grid": [{"K": 4, "alpha": 0.2, "c": [1, 2, 1, 3]}]})"));
  REQUIRE(c.grid.size() == 1);
  CHECK(c.grid[0].c == std::vector<double>{1, 2, 1, 3});
}

TEST_CASE("configuration errors are reported as malformed input", "[json]") {
  CHECK(code_of([] { experiment_config_from_json(Json::parse("[]")); }) == Errc::malformed_input);
  CHECK(code_of([] { experiment_config_from_json(Json::parse(R"({"R": 5})")); }) == Errc::malformed_input);
  CHECK(code_of([] { experiment_config_from_json(Json::parse(R"({"grid": 3})")); }) == Errc::malformed_input);
  CHECK(code_of([] { experiment_config_from_json(Json::parse(R"({"grid": {"K": 5}, "R": "many"})")); }) ==
        Errc::malformed_input);
  std::istringstream bad("{not json");
  CHECK(code_of([&] { read_experiment_config(bad); }) == Errc::malformed_input);
}

TEST_CASE("experiment reports serialize deterministically", "[json]") {
  ExperimentConfig c;
  c.grid = {DesignParams::balanced(8, 0.3), DesignParams::balanced(12, 0.3), DesignParams::balanced(16, 0.3)};
  c.R = 15;
  c.B = 49;
  c.level = 0.5;
  c.schemes = {Scheme::b1_weighted};
  const auto t1 = rate_table(c);
  c.threads = 2;
  const auto t2 = rate_table(c);
  CHECK(dump(to_json(t1)) == dump(to_json(t2)));
  std::ostringstream a;
  std::ostringstream b;
  write_long_csv(a, t1);
  write_long_csv(b, t2);
  CHECK(a.str() == b.str());
  CHECK(a.str().rfind("K,alpha,scheme,metric,value\n", 0) == 0);
  const Json j = to_json(t1);
  REQUIRE(j.contains("report"));
  CHECK(j.at("report").contains("config"));
  CHECK(j.at("rates").size() == 3);
  CHECK_FALSE(dump(j).find("threads") != std::string::npos);
}
