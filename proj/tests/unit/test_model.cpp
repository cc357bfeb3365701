#include <catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "clusterboot/error.hpp"
#include "clusterboot/model.hpp"

using namespace cboot;

namespace {

Errc code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return Errc::invalid_argument;
}

} // namespace

TEST_CASE("subsample sizes", "[model]") {
  CHECK(subsample_sizes(DesignParams::balanced(16, 0.25)) == std::vector<std::size_t>(16, 2));
  CHECK(subsample_sizes(DesignParams::balanced(81, 0.25, 3.0)) == std::vector<std::size_t>(81, 9));
  // floor at 2
  CHECK(subsample_sizes(DesignParams::balanced(3, 0.1, 0.2)) == std::vector<std::size_t>(3, 2));
  DesignParams mixed{4, 0.4, {1.0, 2.0, 0.5, 3.0}};
  const double s = std::pow(4.0, 0.4);
  const auto n = subsample_sizes(mixed);
  for (std::size_t k = 0; k < 4; ++k) {
    CHECK(n[k] == static_cast<std::size_t>(std::max(2LL, std::llround(mixed.c[k] * s))));
  }
}

TEST_CASE("design and truth validation", "[model]") {
  CHECK(code_of([] { subsample_sizes(DesignParams::balanced(100, 0.5)); }) == Errc::invalid_design);
  CHECK(code_of([] { subsample_sizes(DesignParams::balanced(100, 0.0)); }) == Errc::invalid_design);
  CHECK(code_of([] { subsample_sizes(DesignParams{3, 0.25, {1.0, 0.0, 1.0}}); }) == Errc::invalid_design);
  CHECK(code_of([] { subsample_sizes(DesignParams{3, 0.25, {1.0}}); }) == Errc::invalid_design);
  TruthParams t;
  t.gamma = -1.0;
  CHECK(code_of([&] { t.validate(); }) == Errc::invalid_truth);
  t.gamma = 1.0;
  t.sigma2 = -0.1;
  CHECK(code_of([&] { t.validate(); }) == Errc::invalid_truth);
  CHECK(code_of([] { parse_family("cauchy"); }) == Errc::invalid_truth);
  CHECK(parse_family("normal") == Family::gaussian);
  CHECK(parse_family("exponential") == Family::shifted_exponential);
  CHECK(parse_family("lognormal") == Family::lognormal);
}

TEST_CASE("degenerate truth gives constant data", "[model]") {
  TruthParams t;
  t.mu = 5.0;
  t.gamma = 0.0;
  t.sigma2 = 0.0;
  const auto data = generate_dataset(t, DesignParams::balanced(10, 0.3), 99);
  for (std::size_t k = 0; k < data.K(); ++k) {
    for (double v : data.population(k)) {
      REQUIRE(v == 5.0);
    }
  }
}

TEST_CASE("noise-free populations share their effect", "[model]") {
  TruthParams t;
  t.gamma = 2.0;
  t.sigma2 = 0.0;
  t.effect.family = Family::shifted_exponential;
  const auto s = generate_sample(t, DesignParams::balanced(8, 0.4), 3);
  for (std::size_t k = 0; k < s.data.K(); ++k) {
    for (double v : s.data.population(k)) {
      REQUIRE(v == s.cluster_means[k]);
    }
  }
}

TEST_CASE("generation is deterministic and population streams are independent of K", "[model]") {
  TruthParams t;
  t.noise.family = Family::lognormal;
  const auto a = generate_dataset(t, DesignParams::balanced(30, 0.4), 1234);
  const auto b = generate_dataset(t, DesignParams::balanced(30, 0.4), 1234);
  CHECK(a == b);
  const auto c = generate_dataset(t, DesignParams::balanced(30, 0.4), 1235);
  CHECK_FALSE(a == c);

  // same sizes for the first populations -> same values
  SampleBuffer small;
  SampleBuffer large;
  const std::vector<std::size_t> n_small{3, 4};
  const std::vector<std::size_t> n_large{3, 4, 5};
  generate_into(t, n_small, 77, small);
  generate_into(t, n_large, 77, large);
  for (std::size_t i = 0; i < small.values.size(); ++i) {
    CHECK(small.values[i] == large.values[i]);
  }
}

TEST_CASE("standardized laws have mean 0, variance 1 and the stated skewness", "[model]") {
  for (Family f : {Family::gaussian, Family::shifted_exponential, Family::lognormal}) {
    Distribution d{f, 0.5};
    RngStream rng(5, StreamDomain::experiment, static_cast<std::uint64_t>(f));
    const int n = 400000;
    double s1 = 0;
    double s2 = 0;
    double s3 = 0;
    for (int i = 0; i < n; ++i) {
      const double x = d.draw(rng);
      s1 += x;
      s2 += x * x;
      s3 += x * x * x;
    }
    const double m = s1 / n;
    INFO(to_string(f));
    CHECK(std::abs(m) < 5.0 / std::sqrt(n));
    CHECK(std::abs(s2 / n - 1.0) < 0.02);
    CHECK(std::abs(s3 / n - d.skewness()) < 0.1 + 0.05 * d.skewness());
  }
}

TEST_CASE("marginal variance and within-population covariance", "[model]") {
  // Each replicate contributes one pair from the same population and one from
  // different populations; covariances should be gamma and 0.
  TruthParams t;
  t.mu = 1.0;
  t.gamma = 1.0;
  t.sigma2 = 1.0;
  const std::vector<std::size_t> sizes{2, 2};
  SampleBuffer buf;
  const int R = 40000;
  std::vector<double> x1(R);
  std::vector<double> x2(R);
  std::vector<double> y(R);
  for (int r = 0; r < R; ++r) {
    generate_into(t, sizes, derive_seed(10, {static_cast<std::uint64_t>(r)}), buf);
    x1[r] = buf.values[0] - t.mu;
    x2[r] = buf.values[1] - t.mu;
    y[r] = buf.values[2] - t.mu;
  }
  auto mean_prod = [&](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    double s2 = 0;
    for (int r = 0; r < R; ++r) {
      s += a[r] * b[r];
      s2 += a[r] * b[r] * a[r] * b[r];
    }
    const double m = s / R;
    return std::pair{m, std::sqrt((s2 / R - m * m) / R)};
  };
  const auto [var, var_se] = mean_prod(x1, x1);
  const auto [cov_within, within_se] = mean_prod(x1, x2);
  const auto [cov_between, between_se] = mean_prod(x1, y);
  CHECK(std::abs(var - 2.0) < 3.0 * var_se);
  CHECK(std::abs(cov_within - 1.0) < 3.0 * within_se);
  CHECK(std::abs(cov_between) < 3.0 * between_se);
}

TEST_CASE("random within-population variances keep the mean sigma2", "[model]") {
  TruthParams t;
  t.gamma = 0.0;
  t.sigma2 = 2.0;
  t.within_dispersion = 0.5;
  const std::vector<std::size_t> sizes(2000, 2);
  SampleBuffer buf;
  generate_into(t, sizes, 5, buf);
  // (x1 - x2)^2 / 2 is unbiased for V_k
  double s = 0;
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    const double d = buf.values[2 * k] - buf.values[2 * k + 1];
    s += d * d / 2.0;
  }
  const double mean = s / static_cast<double>(sizes.size());
  // Var of (d^2/2) = E V^2 * 2 = 2 (1 + 0.5) sigma2^2
  const double se = std::sqrt(2.0 * 1.5 * 4.0 / static_cast<double>(sizes.size()));
  CHECK(std::abs(mean - 2.0) < 4.0 * se);
}

TEST_CASE("dataset invariants", "[model]") {
  CHECK(code_of([] { ClusterDataset(std::vector<Population>{}); }) == Errc::empty_input);
  CHECK(code_of([] { ClusterDataset({Population{"a", {}}}); }) == Errc::empty_population);
  CHECK(code_of([] { ClusterDataset({Population{"a", {1.0, NAN}}}); }) == Errc::malformed_input);
  const ClusterDataset d({Population{"x", {1, 3}}, Population{"y", {2, 6, 7}}});
  CHECK(d.K() == 2);
  CHECK(d.N() == 5);
  CHECK(d.sizes() == std::vector<std::size_t>{2, 3});
  CHECK(d.id(1) == "y");
  CHECK(d.population(1)[2] == 7.0);
  const auto v = d.view();
  CHECK(v.K() == 2);
  CHECK(v.size(0) == 2);
  CHECK(v.population(0)[1] == 3.0);
}
