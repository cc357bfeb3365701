#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <vector>

#include "clusterboot/asymptotics.hpp"
#include "clusterboot/bootstrap.hpp"
#include "clusterboot/error.hpp"
#include "clusterboot/kernels.hpp"

using namespace cboot;
using Catch::Approx;

namespace {

ClusterDataset d0() { return ClusterDataset({Population{"1", {1, 3}}, Population{"2", {2, 6}}}); }

ClusterDataset unbalanced() {
  return ClusterDataset({Population{"a", {0.5, 1.5, 4.0}}, Population{"b", {2.0, 2.5}},
                         Population{"c", {-1.0, 0.0, 3.0, 7.5}}, Population{"d", {5.0, 6.0}}});
}

Errc code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return Errc::invalid_argument;
}

BootstrapRun synthetic_run(Scheme scheme, std::vector<double> theta, std::vector<double> scale) {
  BootstrapRun run;
  run.scheme = scheme;
  run.B = theta.size();
  run.mu_hat_N = 1.0;
  run.mu_hat_prime_K = 1.0;
  for (std::size_t b = 0; b < theta.size(); ++b) {
    run.stats.push_back({theta[b], theta[b], scale[b] * scale[b]});
  }
  return run;
}

} // namespace

TEST_CASE("scheme and statistic names", "[bootstrap]") {
  for (Scheme s : kAllSchemes) {
    CHECK(parse_scheme(to_string(s)) == s);
    CHECK(parse_scheme(short_name(s)) == s);
  }
  CHECK(parse_scheme("b1_Uniform") == Scheme::b1_uniform);
  CHECK(to_string(Scheme::b3_cluster) == "B3_CLUSTER");
  CHECK(code_of([] { parse_scheme("b4"); }) == Errc::invalid_argument);
  CHECK(parse_statistic("mu_N") == Statistic::mu_N);
  CHECK(parse_statistic("mu_prime_K") == Statistic::mu_prime_K);
  CHECK(natural_statistic(Scheme::b2_individuals) == Statistic::mu_N);
  CHECK(natural_statistic(Scheme::b1_weighted) == Statistic::mu_N);
  CHECK(natural_statistic(Scheme::b1_uniform) == Statistic::mu_prime_K);
  CHECK(natural_statistic(Scheme::b3_cluster) == Statistic::mu_prime_K);
  for (auto m : {IntervalMethod::percentile, IntervalMethod::bootstrap_t, IntervalMethod::normal,
                 IntervalMethod::edgeworth_corrected}) {
    CHECK(parse_interval_method(to_string(m)) == m);
  }
}

TEST_CASE("resample structure", "[bootstrap]") {
  const auto data = unbalanced();
  RngStream rng(1, StreamDomain::bootstrap, 0);
  for (int rep = 0; rep < 200; ++rep) {
    const auto b2 = resample_b2(data, rng);
    REQUIRE(b2.sizes() == data.sizes());
    for (std::size_t k = 0; k < data.K(); ++k) {
      const auto src = data.population(k);
      for (double v : b2.population(k)) {
        REQUIRE(std::find(src.begin(), src.end(), v) != src.end());
      }
    }
    for (Scheme s : {Scheme::b1_uniform, Scheme::b1_weighted}) {
      const auto b1 = resample(s, data, rng);
      REQUIRE(b1.K() == data.K());
      for (std::size_t k = 0; k < b1.K(); ++k) {
        const auto pop = b1.population(k);
        bool found = false;
        for (std::size_t l = 0; l < data.K(); ++l) {
          const auto orig = data.population(l);
          found = found || std::equal(pop.begin(), pop.end(), orig.begin(), orig.end());
        }
        REQUIRE(found);
      }
    }
    const auto b3 = resample_b3(data, rng);
    REQUIRE(b3.K() == data.K());
    for (std::size_t k = 0; k < b3.K(); ++k) {
      bool found = false;
      for (std::size_t l = 0; l < data.K(); ++l) {
        if (b3.size(k) + 1 != data.size(l)) {
          continue;
        }
        const auto orig = data.population(l);
        const auto pop = b3.population(k);
        found = found || std::all_of(pop.begin(), pop.end(), [&](double v) {
                  return std::find(orig.begin(), orig.end(), v) != orig.end();
                });
      }
      REQUIRE(found);
    }
  }
  const ClusterDataset singleton({Population{"a", {1, 2}}, Population{"b", {4}}});
  CHECK(code_of([&] { resample_b3(singleton, rng); }) == Errc::singleton_population);
}

TEST_CASE("weighted population draw follows n_l / N", "[bootstrap]") {
  // sizes 3,2,4,2: N = 11. Count slot sources over many replicates.
  const auto data = unbalanced();
  RngStream rng(8, StreamDomain::bootstrap, 0);
  std::map<double, int> first_value_count;
  const int reps = 30000;
  for (int r = 0; r < reps; ++r) {
    const auto b = resample_b1_weighted(data, rng);
    for (std::size_t k = 0; k < b.K(); ++k) {
      ++first_value_count[b.population(k)[0]];
    }
  }
  const double total = reps * 4.0;
  const double expected[] = {3.0 / 11, 2.0 / 11, 4.0 / 11, 2.0 / 11};
  const double first[] = {0.5, 2.0, -1.0, 5.0};
  double chi2 = 0;
  for (int l = 0; l < 4; ++l) {
    const double e = expected[l] * total;
    const double o = first_value_count[first[l]];
    chi2 += (o - e) * (o - e) / e;
  }
  CHECK(chi2 < 16.27); // chi2_3 at 0.999
}

TEST_CASE("bootstrap variance estimators on a fixed layout", "[bootstrap]") {
  const auto data = d0();
  const std::vector<std::size_t> slots{2, 2};
  const auto e = bootstrap_variance_estimators(slots, data.view());
  CHECK(e.v_star == std::vector<double>{4.0, 16.0});
  CHECK(e.s2_K_star == 2.0);
  CHECK(e.s2_N_star == 1.0);
  CHECK(replicate_statistics(Scheme::b2_individuals, slots, data.view()).scale2 == 1.25);
  CHECK(replicate_statistics(Scheme::b1_uniform, slots, data.view()).scale2 == 1.0);
  CHECK(replicate_statistics(Scheme::b1_weighted, slots, data.view()).scale2 == 1.0);
  CHECK(replicate_statistics(Scheme::b3_cluster, slots, data.view()).scale2 == 1.0);
  const auto r = replicate_statistics(Scheme::b2_individuals, slots, data.view());
  CHECK(r.mu_star_N == 3.0);
  CHECK(r.mu_star_prime_K == 3.0);
  CHECK(r.scale() == Approx(std::sqrt(1.25)));
  const std::vector<std::size_t> wrong{2};
  CHECK(code_of([&] { replicate_statistics(Scheme::b2_individuals, wrong, data.view()); }) ==
        Errc::invalid_argument);
}

TEST_CASE("analytic moments and standard errors on the reference dataset", "[bootstrap]") {
  const auto s = summarize(d0());
  const auto b2 = analytic_moments(s, Scheme::b2_individuals);
  CHECK(*b2.mean_mu_star_N == 3.0);
  CHECK(*b2.var_mu_star_N == 0.625);
  const auto b1u = analytic_moments(s, Scheme::b1_uniform);
  CHECK(*b1u.mean_mu_star_prime_K == 3.0);
  CHECK(*b1u.var_mu_star_prime_K == 0.5);
  const auto b1w = analytic_moments(s, Scheme::b1_weighted);
  CHECK(*b1w.var_mu_star_N == 0.5);
  const auto b3 = analytic_moments(s, Scheme::b3_cluster);
  CHECK(*b3.mean_mu_star_prime_K == 3.0);
  CHECK(*b3.var_mu_star_prime_K == 1.75);
  CHECK_FALSE(b3.var_mu_star_N.has_value());

  CHECK(scheme_standard_error(s, Scheme::b2_individuals) == Approx(std::sqrt(1.25)));
  CHECK(scheme_standard_error(s, Scheme::b1_uniform) == Approx(1.0));
  CHECK(scheme_standard_error(s, Scheme::b1_weighted) == Approx(1.0));
  CHECK(scheme_standard_error(s, Scheme::b3_cluster) == Approx(std::sqrt(1.75)));
}

TEST_CASE("Monte Carlo bootstrap moments match the closed forms", "[bootstrap]") {
  const auto data = d0();
  const auto b2 = run_bootstrap(data, Scheme::b2_individuals, 100000, 11);
  const auto m2 = mc_moments(b2);
  CHECK(std::abs(m2.mu_star_N.variance - 0.625) < 3.0 * m2.mu_star_N.se_variance);
  CHECK(std::abs(m2.mu_star_N.mean - 3.0) < 3.0 * m2.mu_star_N.se_mean);

  const auto b1 = run_bootstrap(data, Scheme::b1_uniform, 100000, 12);
  const auto m1 = mc_moments(b1);
  CHECK(std::abs(m1.mu_star_prime_K.variance - 0.5) < 4.0 * m1.mu_star_prime_K.se_variance);

  const auto b3 = run_bootstrap(data, Scheme::b3_cluster, 100000, 13);
  const auto m3 = mc_moments(b3);
  CHECK(std::abs(m3.mu_star_prime_K.variance - 1.75) < 4.0 * m3.mu_star_prime_K.se_variance);

  // V*_1 averages to V_hat_1 = 2 under B2
  RngStream rng(21, StreamDomain::bootstrap, 0);
  const std::vector<std::size_t> slots{2, 2};
  std::vector<double> v1;
  for (int b = 0; b < 100000; ++b) {
    const auto r = resample_b2(data, rng);
    v1.push_back(bootstrap_variance_estimators(slots, r.view()).v_star[0]);
  }
  const auto mv = sample_moments(v1);
  CHECK(std::abs(mv.mean - 2.0) < 3.0 * mv.se_mean);
}

TEST_CASE("the replicate engine matches resample-then-summarize", "[bootstrap]") {
  const auto data = unbalanced();
  for (Scheme s : kAllSchemes) {
    ReplicateEngine engine(data.view(), s);
    for (std::uint64_t b = 0; b < 200; ++b) {
      RngStream a(5, StreamDomain::bootstrap, b);
      RngStream c(5, StreamDomain::bootstrap, b);
      const auto fast = engine.draw(a);
      const auto slow = replicate_statistics(s, data.sizes(), resample(s, data, c).view());
      REQUIRE(fast == slow);
    }
  }
}

TEST_CASE("bootstrap runs are independent of threads and kernel selection", "[bootstrap]") {
  const auto data = unbalanced();
  for (Scheme s : kAllSchemes) {
    const auto one = run_bootstrap(data, s, 501, 99, {1, FormulaVariant::corrected});
    const auto many = run_bootstrap(data, s, 501, 99, {3, FormulaVariant::corrected});
    REQUIRE(one.stats == many.stats);
    if (kernels::avx2_table() != nullptr) {
      const auto saved = kernels::active().isa;
      kernels::select(kernels::Isa::scalar);
      const auto scalar = run_bootstrap(data, s, 501, 99);
      kernels::select(kernels::Isa::avx2);
      const auto simd = run_bootstrap(data, s, 501, 99);
      kernels::select(saved);
      REQUIRE(scalar.stats == simd.stats);
    }
  }
  CHECK(code_of([&] { run_bootstrap(data, Scheme::b2_individuals, 0, 1); }) == Errc::invalid_argument);
  const ClusterDataset one_pop({Population{"a", {1, 2, 3}}});
  CHECK(code_of([&] { run_bootstrap(one_pop, Scheme::b1_uniform, 10, 1); }) == Errc::degenerate_k);
}

TEST_CASE("type-7 quantiles and replicate minimums", "[bootstrap]") {
  const std::vector<double> x{1, 2, 3, 4};
  CHECK(quantile_type7(x, 0.0) == 1.0);
  CHECK(quantile_type7(x, 1.0) == 4.0);
  CHECK(quantile_type7(x, 0.5) == 2.5);
  CHECK(quantile_type7(x, 0.25) == 1.75);
  CHECK(quantile_type7(std::vector<double>{7.0}, 0.3) == 7.0);
  CHECK(code_of([] { quantile_type7(std::vector<double>{}, 0.5); }) == Errc::empty_input);
  CHECK(code_of([&] { quantile_type7(x, 1.5); }) == Errc::invalid_argument);
  CHECK(min_replicates(0.95) == 400);
  CHECK(min_replicates(0.90) == 200);
  CHECK(min_replicates(0.99) == 2000);
  CHECK(min_replicates(0.05) == 400);
}

TEST_CASE("interval construction", "[bootstrap]") {
  std::mt19937_64 gen(4);
  std::normal_distribution<double> z;
  std::vector<double> theta(999);
  std::vector<double> scale(999);
  for (std::size_t b = 0; b < theta.size(); ++b) {
    theta[b] = 1.0 + z(gen);
    scale[b] = 0.5 + std::abs(z(gen));
  }
  const auto run = synthetic_run(Scheme::b1_uniform, theta, scale);

  std::vector<double> sorted = theta;
  std::sort(sorted.begin(), sorted.end());
  const auto pct = confidence_interval(run, Statistic::mu_prime_K, 1.0, 0.0, IntervalMethod::percentile, 0.9);
  const double a = 1.0 - 0.9;
  CHECK(pct.lower == quantile_type7(sorted, a / 2.0));
  CHECK(pct.upper == quantile_type7(sorted, 1.0 - a / 2.0));

  std::vector<double> t(theta.size());
  for (std::size_t b = 0; b < t.size(); ++b) {
    t[b] = (theta[b] - 1.0) / scale[b];
  }
  std::sort(t.begin(), t.end());
  const auto bt = confidence_interval(run, Statistic::mu_prime_K, 1.2, 2.0, IntervalMethod::bootstrap_t, 0.95);
  CHECK(bt.lower == Approx(1.2 - 2.0 * quantile_type7(t, 0.975)));
  CHECK(bt.upper == Approx(1.2 - 2.0 * quantile_type7(t, 0.025)));

  const auto nrm = confidence_interval(run, Statistic::mu_prime_K, 1.0, 2.0, IntervalMethod::normal, 0.95);
  CHECK(nrm.lower == Approx(1.0 - 2.0 * 1.959963984540054));
  CHECK(nrm.upper == Approx(1.0 + 2.0 * 1.959963984540054));

  const auto e0 = confidence_interval(run, Statistic::mu_prime_K, 1.0, 2.0, IntervalMethod::edgeworth_corrected, 0.95);
  CHECK(e0.lower == Approx(nrm.lower));
  CHECK(e0.upper == Approx(nrm.upper));
  // positive skew moves both endpoints of the studentized interval down by
  // scale * skew/6 * (1 + 2 z^2)
  const double skew = 0.6;
  const auto e1 = confidence_interval(run, Statistic::mu_prime_K, 1.0, 2.0, IntervalMethod::edgeworth_corrected,
                                      0.95, skew);
  const double zq = 1.959963984540054;
  const double shift = 2.0 * skew / 6.0 * (1.0 + 2.0 * zq * zq);
  CHECK(e1.lower == Approx(nrm.lower + shift));
  CHECK(e1.upper == Approx(nrm.upper + shift));

  CHECK(code_of([&] {
          confidence_interval(run, Statistic::mu_N, 1.0, 1.0, IntervalMethod::bootstrap_t, 0.95);
        }) == Errc::unsupported_inference);
  const auto b3 = synthetic_run(Scheme::b3_cluster, theta, scale);
  CHECK(code_of([&] { confidence_interval(b3, Statistic::mu_N, 1.0, 1.0, IntervalMethod::percentile, 0.95); }) ==
        Errc::unsupported_inference);
  const auto small = synthetic_run(Scheme::b1_uniform, std::vector<double>(100, 1.0), std::vector<double>(100, 1.0));
  CHECK(code_of([&] {
          confidence_interval(small, Statistic::mu_prime_K, 1.0, 1.0, IntervalMethod::percentile, 0.95);
        }) == Errc::insufficient_replicates);
  CHECK_NOTHROW(confidence_interval(small, Statistic::mu_prime_K, 1.0, 1.0, IntervalMethod::normal, 0.95));
  auto zero_scale = scale;
  zero_scale[3] = 0.0;
  const auto bad = synthetic_run(Scheme::b1_uniform, theta, zero_scale);
  CHECK(code_of([&] {
          confidence_interval(bad, Statistic::mu_prime_K, 1.0, 1.0, IntervalMethod::bootstrap_t, 0.95);
        }) == Errc::non_positive_scale);
  CHECK(code_of([&] { confidence_interval(run, Statistic::mu_prime_K, 1.0, 1.0, IntervalMethod::normal, 1.0); }) ==
        Errc::invalid_argument);
}

TEST_CASE("sample moments", "[bootstrap]") {
  const std::vector<double> x{1, 2, 3, 4};
  const auto m = sample_moments(x);
  CHECK(m.mean == 2.5);
  CHECK(m.variance == Approx(5.0 / 3.0));
  CHECK(m.se_mean == Approx(std::sqrt(5.0 / 12.0)));
  CHECK(code_of([] { sample_moments(std::vector<double>{1.0}); }) == Errc::invalid_argument);
}
