#pragma once

// Normal and one-term Edgeworth approximations for the grand-mean
// statistics, the inverted-expansion quantile correction, the
// Berry-Esseen bound and Kolmogorov-Smirnov sup distances.

#include <cstddef>
#include <functional>
#include <span>
#include <string_view>

#include "clusterboot/estimators.hpp"
#include "clusterboot/model.hpp"

namespace cboot {

double normal_cdf(double x) noexcept;
double normal_pdf(double x) noexcept;
/// Inverse of normal_cdf on (0, 1).
double normal_quantile(double p);

enum class ExpansionKind { normalized, studentized };

std::string_view to_string(ExpansionKind kind) noexcept;

/// third_moment_sum = sum_k (n_k/N)^3 m3_k, with m3_k the third central
/// moment of mu_hat_k; s is the standard deviation (or its estimate) of
/// mu_hat_N. The one-term expansions used are
///   normalized  (mu_hat_N - mu) / s      Phi(x) + kappa (1 - x^2) phi(x)
///   studentized (mu_hat_N - mu) / s_hat  Phi(x) + kappa (1 + 2x^2) phi(x)
/// with kappa = third_moment_sum / (6 s^3), and the matching first-order
/// inverses x - kappa (1 - x^2) and x - kappa (1 + 2x^2).
struct EdgeworthInputs {
  double s = 1.0;
  double third_moment_sum = 0.0;
  ExpansionKind kind = ExpansionKind::normalized;

  double kappa() const; ///< throws NonPositiveScale when s <= 0
};

/// Clamped to [0, 1].
double edgeworth_cdf(double x, const EdgeworthInputs& inputs);
double corrected_quantile(double x, const EdgeworthInputs& inputs);

enum class MomentConvention {
  signed_moment, ///< E (mu_hat_k - mu)^3
  absolute,      ///< E |mu_hat_k - mu|^3; the population mean of the noise is treated as Gaussian
};

/// sum_k (n_k/N)^3 E (mu_hat_k - mu)^3 under `truth`, where
/// E (mu_hat_k - mu)^3 = gamma^3/2 skew(a) + E V^3/2 skew(u) / n_k^2.
double third_moment_sum(const TruthParams& truth, std::span<const std::size_t> sizes,
                        MomentConvention convention = MomentConvention::signed_moment);

/// sum_k w_k^3 (mu_hat_k - m)^3 from one observed sample, with w_k = n_k/N
/// and m = mu_hat_N, or w_k = 1/K and m = mu_hat'_K when `equal_weights`.
/// The absolute convention uses |mu_hat_k - m|^3.
double third_moment_sum_plug_in(const ClusterSummary& summary, bool equal_weights = false,
                                MomentConvention convention = MomentConvention::signed_moment);

/// E|c + sqrt(v) Z|^3 for standard normal Z.
double folded_normal_third_moment(double c, double v) noexcept;

/// E|X - mu|^3 for one observation of the model. Closed form when effect
/// and noise are Gaussian with fixed V_k, numeric quadrature otherwise.
double absolute_third_moment(const TruthParams& truth);

struct BerryEsseenBound {
  double scaled; ///< 4 C E|X - mu|^3 / gamma^3/2
  double per_K;  ///< scaled / K^(1/2 + 2 alpha)
  double abs_third_moment;
};

inline constexpr double kBerryEsseenC = 0.56;

/// Throws ZeroGamma when gamma == 0.
BerryEsseenBound berry_esseen_bound(const TruthParams& truth, const DesignParams& design,
                                    double C = kBerryEsseenC);

/// sup_x |F_n(x) - F(x)| for the empirical CDF of `sorted` against a
/// continuous CDF, evaluated exactly at the jumps.
double sup_distance(std::span<const double> sorted, const std::function<double(double)>& cdf);

/// Two-sample sup distance between empirical CDFs, ties handled exactly.
double sup_distance(std::span<const double> sorted_a, std::span<const double> sorted_b);

} // namespace cboot
