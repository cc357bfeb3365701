#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "clusterboot/asymptotics.hpp"
#include "clusterboot/error.hpp"

using namespace cboot;
using Catch::Approx;

namespace {

// Phi(x) = 1/2 + phi(x) sum_k x^(2k+1) / (1 * 3 * ... * (2k+1))
long double phi_series(long double x) {
  long double term = x;
  long double sum = x;
  for (int k = 1; k < 400; ++k) {
    term *= x * x / (2 * k + 1);
    sum += term;
  }
  return 0.5L + sum * std::exp(-x * x / 2) / std::sqrt(2 * std::numbers::pi_v<long double>);
}

// Composite Simpson on [a, b] with m (even) panels.
double simpson(auto&& f, double a, double b, int m) {
  const double h = (b - a) / m;
  double s = f(a) + f(b);
  for (int i = 1; i < m; ++i) {
    s += (i % 2 == 1 ? 4.0 : 2.0) * f(a + i * h);
  }
  return s * h / 3.0;
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

} // namespace

TEST_CASE("normal cdf, pdf and quantile", "[asymptotics]") {
  for (double x = -6.0; x <= 6.0; x += 0.125) {
    const double ref = static_cast<double>(phi_series(x));
    REQUIRE(normal_cdf(x) == Approx(ref).epsilon(1e-13).margin(1e-16));
  }
  CHECK(normal_pdf(0.0) == Approx(1.0 / std::sqrt(2.0 * std::numbers::pi)));
  CHECK(normal_quantile(0.975) == Approx(1.959963984540054).epsilon(1e-14));
  CHECK(normal_quantile(0.5) == 0.0);
  for (double p : {1e-12, 1e-6, 0.01, 0.3, 0.77, 0.999}) {
    CHECK(normal_cdf(normal_quantile(p)) == Approx(p).epsilon(1e-12));
  }
  CHECK(code_of([] { normal_quantile(0.0); }) == Errc::invalid_argument);
  CHECK(code_of([] { normal_quantile(1.0); }) == Errc::invalid_argument);
}

TEST_CASE("one-term expansions and their inverses", "[asymptotics]") {
  const EdgeworthInputs zero{2.0, 0.0, ExpansionKind::normalized};
  CHECK(edgeworth_cdf(0.7, zero) == normal_cdf(0.7));
  CHECK(corrected_quantile(0.7, zero) == 0.7);

  const EdgeworthInputs nz{2.0, 4.8, ExpansionKind::normalized};
  const double kappa = 4.8 / (6.0 * 8.0);
  CHECK(nz.kappa() == Approx(kappa));
  const double x = 1.3;
  CHECK(edgeworth_cdf(x, nz) == Approx(normal_cdf(x) + kappa * (1 - x * x) * normal_pdf(x)));
  CHECK(corrected_quantile(x, nz) == Approx(x - kappa * (1 - x * x)));

  const EdgeworthInputs st{2.0, 4.8, ExpansionKind::studentized};
  CHECK(edgeworth_cdf(x, st) == Approx(normal_cdf(x) + kappa * (1 + 2 * x * x) * normal_pdf(x)));
  CHECK(corrected_quantile(x, st) == Approx(x - kappa * (1 + 2 * x * x)));

  // the first-order inverse is accurate to O(kappa^2)
  for (const auto kind : {ExpansionKind::normalized, ExpansionKind::studentized}) {
    for (double k : {0.01, 0.02}) {
      const EdgeworthInputs in{1.0, 6.0 * k, kind};
      for (double z : {-1.645, 1.645}) {
        CHECK(std::abs(edgeworth_cdf(corrected_quantile(z, in), in) - normal_cdf(z)) < 20.0 * k * k);
      }
    }
  }

  const EdgeworthInputs huge{1.0, 600.0, ExpansionKind::studentized};
  for (double y = -5.0; y <= 5.0; y += 0.25) {
    const double F = edgeworth_cdf(y, huge);
    REQUIRE(F >= 0.0);
    REQUIRE(F <= 1.0);
  }
  const EdgeworthInputs bad{0.0, 1.0, ExpansionKind::normalized};
  CHECK(code_of([&] { bad.kappa(); }) == Errc::non_positive_scale);
}

TEST_CASE("third moment sums", "[asymptotics]") {
  TruthParams gauss;
  const std::vector<std::size_t> n{2, 2};
  CHECK(third_moment_sum(gauss, n) == 0.0);

  TruthParams ex;
  ex.gamma = 1.0;
  ex.sigma2 = 1.0;
  ex.effect.family = Family::shifted_exponential;
  ex.noise.family = Family::shifted_exponential;
  // 2 * (1/2)^3 * (2 + 2/4)
  CHECK(third_moment_sum(ex, n) == Approx(0.625));
  ex.gamma = 4.0;
  ex.sigma2 = 9.0;
  const std::vector<std::size_t> m{1, 3};
  const double expected = std::pow(0.25, 3) * (8 * 2 + 27 * 2 / 1.0) + std::pow(0.75, 3) * (8 * 2 + 27 * 2 / 9.0);
  CHECK(third_moment_sum(ex, m) == Approx(expected));

  // random V_k: E V^3/2 for V = sigma2 G, G ~ Gamma(1/d, d)
  TruthParams disp = ex;
  disp.gamma = 0.0;
  disp.within_dispersion = 0.5;
  const double shape = 2.0;
  const double ev15 = std::pow(9.0, 1.5) * std::pow(0.5, 1.5) * std::tgamma(shape + 1.5) / std::tgamma(shape);
  CHECK(third_moment_sum(disp, n) == Approx(2 * 0.125 * ev15 * 2.0 / 4.0));

  // plug-in against a naive loop
  ClusterSummary s{{2, 3, 5}, {1.0, -2.0, 4.0}, {1.0, 1.0, 1.0}};
  const double N = 10.0;
  const double muN = (2 * 1.0 + 3 * -2.0 + 5 * 4.0) / N;
  double naive = 0;
  for (std::size_t k = 0; k < 3; ++k) {
    naive += std::pow(s.n[k] / N, 3) * std::pow(s.mu_hat[k] - muN, 3);
  }
  CHECK(third_moment_sum_plug_in(s) == Approx(naive));
  const double mup = 1.0;
  double naive_eq = 0;
  for (std::size_t k = 0; k < 3; ++k) {
    naive_eq += std::pow(1.0 / 3.0, 3) * std::pow(s.mu_hat[k] - mup, 3);
  }
  CHECK(third_moment_sum_plug_in(s, true) == Approx(naive_eq));
  double naive_abs = 0;
  for (std::size_t k = 0; k < 3; ++k) {
    naive_abs += std::pow(s.n[k] / N, 3) * std::pow(std::abs(s.mu_hat[k] - muN), 3);
  }
  CHECK(third_moment_sum_plug_in(s, false, MomentConvention::absolute) == Approx(naive_abs));

  // the absolute convention treats the mean of the noise as Gaussian
  TruthParams g;
  g.gamma = 1.0;
  g.sigma2 = 0.0;
  const std::vector<std::size_t> two{2, 2};
  CHECK(third_moment_sum(g, two, MomentConvention::absolute) ==
        Approx(2 * 0.125 * 2.0 * std::sqrt(2.0 / std::numbers::pi)));
}

TEST_CASE("absolute third moments", "[asymptotics]") {
  const double c = 2.0 * std::sqrt(2.0 / std::numbers::pi);
  CHECK(folded_normal_third_moment(0.0, 1.0) == Approx(c));
  CHECK(folded_normal_third_moment(-1.5, 0.0) == Approx(3.375));
  CHECK(folded_normal_third_moment(0.0, 4.0) == Approx(8.0 * c));
  // E|c + Z|^3 by quadrature
  const double q = simpson([](double z) { return std::pow(std::abs(0.7 + z), 3) * normal_pdf(z); }, -12, 12, 24000);
  CHECK(folded_normal_third_moment(0.7, 1.0) == Approx(q).epsilon(1e-9));

  TruthParams g;
  g.gamma = 1.0;
  g.sigma2 = 1.0;
  CHECK(absolute_third_moment(g) == Approx(std::pow(2.0, 1.5) * c).epsilon(1e-12));

  TruthParams e;
  e.gamma = 1.0;
  e.sigma2 = 0.0;
  e.effect.family = Family::shifted_exponential;
  CHECK(absolute_third_moment(e) == Approx(12.0 / std::numbers::e - 2.0).epsilon(1e-9));

  // (E1 - 1) + (E2 - 1) = G - 2 with G ~ Gamma(2, 1)
  TruthParams ee = e;
  ee.sigma2 = 1.0;
  ee.noise.family = Family::shifted_exponential;
  const double gamma2 = simpson([](double x) { return std::pow(std::abs(x - 2.0), 3) * x * std::exp(-x); }, 0, 80,
                                160000);
  CHECK(absolute_third_moment(ee) == Approx(gamma2).epsilon(1e-8));

  // lognormal effect: E|a|^3 by quadrature over the underlying normal
  TruthParams ln;
  ln.gamma = 1.0;
  ln.sigma2 = 0.0;
  ln.effect.family = Family::lognormal;
  ln.effect.log_sd = 0.5;
  const double s = 0.5;
  const double mean = std::exp(s * s / 2);
  const double sd = std::sqrt((std::exp(s * s) - 1) * std::exp(s * s));
  const double ref = simpson(
      [&](double z) { return std::pow(std::abs((std::exp(s * z) - mean) / sd), 3) * normal_pdf(z); }, -14, 14, 56000);
  CHECK(absolute_third_moment(ln) == Approx(ref).epsilon(1e-7));
}

TEST_CASE("Berry-Esseen bound", "[asymptotics]") {
  TruthParams t;
  t.gamma = 1.0;
  t.sigma2 = 0.0;
  const auto b = berry_esseen_bound(t, DesignParams::balanced(100, 0.25));
  CHECK(b.scaled == Approx(4.0 * 0.56 * 2.0 * std::sqrt(2.0 / std::numbers::pi)));
  CHECK(b.scaled == Approx(3.574).epsilon(1e-3));
  CHECK(b.per_K == Approx(b.scaled / std::pow(100.0, 1.0)));
  t.gamma = 0.0;
  t.sigma2 = 1.0;
  CHECK(code_of([&] { berry_esseen_bound(t, DesignParams::balanced(100, 0.25)); }) == Errc::zero_gamma);
}

TEST_CASE("sup distances", "[asymptotics]") {
  const std::vector<double> one{0.0};
  CHECK(sup_distance(one, normal_cdf) == Approx(0.5));
  const std::vector<double> a{1, 2};
  const std::vector<double> b{3, 4};
  CHECK(sup_distance(a, b) == 1.0);
  CHECK(sup_distance(a, a) == 0.0);
  const std::vector<double> t1{1, 1};
  const std::vector<double> t2{1, 2};
  CHECK(sup_distance(t1, t2) == 0.5);
  const std::vector<double> u{0.1, 0.2, 0.9};
  auto uniform = [](double x) { return std::clamp(x, 0.0, 1.0); };
  // largest gap is just after the second jump: 2/3 - 0.2
  CHECK(sup_distance(u, uniform) == Approx(2.0 / 3.0 - 0.2));
}
