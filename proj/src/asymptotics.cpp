#include "clusterboot/asymptotics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/erf.hpp>

#include "clusterboot/error.hpp"
#include "clusterboot/kernels.hpp"

namespace cboot {

double normal_cdf(double x) noexcept { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_pdf(double x) noexcept { return std::exp(-0.5 * x * x) * (0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2); }

double normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw Error(Errc::invalid_argument, "normal quantile needs p in (0, 1)");
  }
  return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p);
}

std::string_view to_string(ExpansionKind kind) noexcept {
  return kind == ExpansionKind::normalized ? "normalized" : "studentized";
}

double EdgeworthInputs::kappa() const {
  if (!(s > 0.0) || !std::isfinite(s)) {
    throw Error(Errc::non_positive_scale, "expansion scale must be positive");
  }
  return third_moment_sum / (6.0 * s * s * s);
}

namespace {

double expansion_polynomial(double x, ExpansionKind kind) noexcept {
  return kind == ExpansionKind::normalized ? 1.0 - x * x : 1.0 + 2.0 * x * x;
}

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kQuadTol = 1e-11;
constexpr unsigned kQuadDepth = 18;

template <typename F>
double integrate(F f, double a, double b) {
  if (!(a < b)) {
    return 0.0;
  }
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, kQuadDepth, kQuadTol);
}

template <typename F>
double integrate_split(F f, double a, double b, std::optional<double> kink) {
  if (kink && *kink > a && *kink < b) {
    return integrate(f, a, *kink) + integrate(f, *kink, b);
  }
  return integrate(f, a, b);
}

// E g(Z) for Z drawn from the standardized law `dist`, integrating over the
// underlying base variable. `kink` is a point in Z where g is not smooth.
template <typename G>
double expect(const Distribution& dist, G g, std::optional<double> kink = std::nullopt) {
  switch (dist.family) {
  case Family::gaussian:
    return integrate_split([&](double y) { return g(y) * normal_pdf(y); }, -kInf, kInf, kink);
  case Family::shifted_exponential: {
    std::optional<double> base_kink;
    if (kink) {
      base_kink = *kink + 1.0;
    }
    return integrate_split([&](double e) { return g(e - 1.0) * std::exp(-e); }, 0.0, kInf, base_kink);
  }
  case Family::lognormal: {
    const double s = dist.log_sd;
    const double s2 = s * s;
    const double m = std::exp(0.5 * s2);
    const double sd = std::sqrt(std::expm1(s2) * std::exp(s2));
    std::optional<double> base_kink;
    if (kink && *kink * sd + m > 0.0) {
      base_kink = std::log(*kink * sd + m) / s;
    }
    // the weight underflows long before exp(s y) overflows for moderate s
    auto f = [&](double y) {
      const double w = normal_pdf(y);
      return w == 0.0 ? 0.0 : g((std::exp(s * y) - m) / sd) * w;
    };
    return integrate_split(f, -kInf, kInf, base_kink);
  }
  }
  return 0.0;
}

double abs_cube(double x) noexcept { return std::abs(x * x * x); }

constexpr double kGaussianAbsCube = 2.0 * std::numbers::sqrt2 * std::numbers::inv_sqrtpi; // E|Z|^3

// E|sqrt(gamma) A + sqrt(v) U|^3 with A ~ effect, U ~ noise standardized.
double abs_third_fixed_variance(const Distribution& effect, const Distribution& noise, double gamma, double v) {
  const double sg = std::sqrt(gamma);
  const double sv = std::sqrt(v);
  if (v == 0.0 && gamma == 0.0) {
    return 0.0;
  }
  if (v == 0.0) {
    return gamma * sg *
           (effect.family == Family::gaussian ? kGaussianAbsCube : expect(effect, abs_cube, 0.0));
  }
  if (gamma == 0.0) {
    return v * sv * (noise.family == Family::gaussian ? kGaussianAbsCube : expect(noise, abs_cube, 0.0));
  }
  const bool effect_gaussian = effect.family == Family::gaussian;
  const bool noise_gaussian = noise.family == Family::gaussian;
  if (effect_gaussian && noise_gaussian) {
    const double total = gamma + v;
    return kGaussianAbsCube * total * std::sqrt(total);
  }
  if (noise_gaussian) {
    return expect(effect, [&](double a) { return folded_normal_third_moment(sg * a, v); });
  }
  if (effect_gaussian) {
    return expect(noise, [&](double u) { return folded_normal_third_moment(sv * u, gamma); });
  }
  return expect(effect, [&](double a) {
    return expect(noise, [&](double u) { return abs_cube(sg * a + sv * u); }, -sg * a / sv);
  });
}

// E h(G) for G ~ Gamma(shape 1/d, scale d).
template <typename H>
double expect_gamma_mixing(double d, H h) {
  const double shape = 1.0 / d;
  const double log_norm = std::lgamma(shape) + shape * std::log(d);
  auto f = [&](double g) {
    if (g <= 0.0) {
      return 0.0;
    }
    return h(g) * std::exp((shape - 1.0) * std::log(g) - g / d - log_norm);
  };
  boost::math::quadrature::exp_sinh<double> integrator;
  return integrator.integrate(f, 0.0, kInf, 1e-10);
}

// E V^3/2 for V = sigma2 G.
double mean_v_three_halves(const TruthParams& truth) {
  const double s3 = truth.sigma2 * std::sqrt(truth.sigma2);
  const double d = truth.within_dispersion;
  if (d == 0.0) {
    return s3;
  }
  const double k = 1.0 / d;
  return s3 * std::exp(std::lgamma(k + 1.5) - std::lgamma(k)) * d * std::sqrt(d);
}

} // namespace

double edgeworth_cdf(double x, const EdgeworthInputs& inputs) {
  const double kappa = inputs.kappa();
  if (std::isinf(x)) {
    return x > 0 ? 1.0 : 0.0;
  }
  const double value = normal_cdf(x) + kappa * expansion_polynomial(x, inputs.kind) * normal_pdf(x);
  return std::clamp(value, 0.0, 1.0);
}

double corrected_quantile(double x, const EdgeworthInputs& inputs) {
  return x - expansion_polynomial(x, inputs.kind) * inputs.kappa();
}

double folded_normal_third_moment(double c, double v) noexcept {
  if (v <= 0.0) {
    return abs_cube(c);
  }
  const double s = std::sqrt(v);
  const double z = c / s;
  return (c * c * c + 3.0 * c * v) * std::erf(z / std::numbers::sqrt2) +
         s * std::numbers::sqrt2 * std::numbers::inv_sqrtpi * (c * c + 2.0 * v) * std::exp(-0.5 * z * z);
}

double third_moment_sum(const TruthParams& truth, std::span<const std::size_t> sizes, MomentConvention convention) {
  truth.validate();
  if (sizes.empty()) {
    throw Error(Errc::empty_input, "no population sizes");
  }
  double N = 0.0;
  for (std::size_t nk : sizes) {
    N += static_cast<double>(nk);
  }
  const double g32 = truth.gamma * std::sqrt(truth.gamma);
  std::vector<double> terms(sizes.size());
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    const double nk = static_cast<double>(sizes[k]);
    const double w = nk / N;
    double m3 = 0.0;
    if (convention == MomentConvention::signed_moment) {
      m3 = g32 * truth.effect.skewness() + mean_v_three_halves(truth) * truth.noise.skewness() / (nk * nk);
    } else {
      Distribution gaussian;
      m3 = abs_third_fixed_variance(truth.effect, gaussian, truth.gamma, truth.sigma2 / nk);
    }
    terms[k] = w * w * w * m3;
  }
  return kernels::sum(terms);
}

double third_moment_sum_plug_in(const ClusterSummary& summary, bool equal_weights, MomentConvention convention) {
  const auto means = grand_means(summary);
  const double center = equal_weights ? means.mu_hat_prime_K : means.mu_hat_N;
  auto w = size_weights(summary.n);
  if (equal_weights) {
    std::fill(w.begin(), w.end(), 1.0 / static_cast<double>(summary.K()));
  }
  std::vector<double> terms(summary.K());
  for (std::size_t k = 0; k < summary.K(); ++k) {
    const double d = summary.mu_hat[k] - center;
    const double cube = convention == MomentConvention::absolute ? std::abs(d * d * d) : d * d * d;
    terms[k] = w[k] * w[k] * w[k] * cube;
  }
  return kernels::sum(terms);
}

double absolute_third_moment(const TruthParams& truth) {
  truth.validate();
  if (truth.within_dispersion == 0.0) {
    return abs_third_fixed_variance(truth.effect, truth.noise, truth.gamma, truth.sigma2);
  }
  return expect_gamma_mixing(truth.within_dispersion, [&](double g) {
    return abs_third_fixed_variance(truth.effect, truth.noise, truth.gamma, truth.sigma2 * g);
  });
}

BerryEsseenBound berry_esseen_bound(const TruthParams& truth, const DesignParams& design, double C) {
  truth.validate();
  design.validate();
  if (truth.gamma == 0.0) {
    throw Error(Errc::zero_gamma, "the Berry-Esseen bound needs gamma > 0");
  }
  if (!(C > 0.0)) {
    throw Error(Errc::invalid_argument, "Berry-Esseen constant must be positive");
  }
  const double m3 = absolute_third_moment(truth);
  const double scaled = 4.0 * C * m3 / (truth.gamma * std::sqrt(truth.gamma));
  const double K = static_cast<double>(design.K);
  return {scaled, scaled / std::pow(K, 0.5 + 2.0 * design.alpha), m3};
}

double sup_distance(std::span<const double> sorted, const std::function<double(double)>& cdf) {
  if (sorted.empty()) {
    throw Error(Errc::empty_input, "sup distance needs at least one sample");
  }
  const double n = static_cast<double>(sorted.size());
  double d = 0.0;
  std::size_t i = 0;
  while (i < sorted.size()) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) {
      ++j;
    }
    const double F = cdf(sorted[i]);
    d = std::max({d, F - static_cast<double>(i) / n, static_cast<double>(j) / n - F});
    i = j;
  }
  return d;
}

double sup_distance(std::span<const double> sorted_a, std::span<const double> sorted_b) {
  if (sorted_a.empty() || sorted_b.empty()) {
    throw Error(Errc::empty_input, "sup distance needs at least one sample on each side");
  }
  const double na = static_cast<double>(sorted_a.size());
  const double nb = static_cast<double>(sorted_b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < sorted_a.size() || j < sorted_b.size()) {
    double v = 0.0;
    if (i == sorted_a.size()) {
      v = sorted_b[j];
    } else if (j == sorted_b.size()) {
      v = sorted_a[i];
    } else {
      v = std::min(sorted_a[i], sorted_b[j]);
    }
    while (i < sorted_a.size() && sorted_a[i] == v) {
      ++i;
    }
    while (j < sorted_b.size() && sorted_b[j] == v) {
      ++j;
    }
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

} // namespace cboot
