#pragma once

// Resampling schemes for two-stage cluster samples.
//
//   B2_INDIVIDUALS  keep the K populations, resample individuals within each
//   B1_UNIFORM      draw K populations uniformly with replacement, keep their values
//   B1_WEIGHTED     as B1_UNIFORM but population l has probability n_l / N
//   B3_CLUSTER      draw K populations uniformly, then n_l - 1 individuals from
//                   the drawn population l
//
// Replicate statistics are built slot by slot: slot k of a replicate holds one
// bootstrap population with mean mu*_k, mu*_N = sum_k (n_k/N) mu*_k with the
// original slot sizes n_k, and mu'*_K = K^-1 sum_k mu*_k.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "clusterboot/estimators.hpp"
#include "clusterboot/model.hpp"
#include "clusterboot/rng.hpp"

namespace cboot {

enum class Scheme { b2_individuals, b1_uniform, b1_weighted, b3_cluster };

inline constexpr Scheme kAllSchemes[] = {Scheme::b2_individuals, Scheme::b1_uniform, Scheme::b1_weighted,
                                         Scheme::b3_cluster};

/// "B2_INDIVIDUALS", "B1_UNIFORM", "B1_WEIGHTED", "B3_CLUSTER".
std::string_view to_string(Scheme scheme) noexcept;
/// Short names used on the command line: "b2", "b1u", "b1w", "b3".
std::string_view short_name(Scheme scheme) noexcept;
/// Accepts either form, case-insensitively.
Scheme parse_scheme(std::string_view name);

enum class Statistic { mu_N, mu_prime_K };

std::string_view to_string(Statistic statistic) noexcept;
Statistic parse_statistic(std::string_view name);

/// The grand mean each scheme is built to make inference on. B2 targets
/// mu_N conditionally on the drawn populations; B1_WEIGHTED targets mu
/// through mu_hat_N; B1_UNIFORM and B3 work with mu_hat'_K.
Statistic natural_statistic(Scheme scheme) noexcept;

ClusterDataset resample_b2(const ClusterDataset& data, RngStream& rng);
ClusterDataset resample_b1_uniform(const ClusterDataset& data, RngStream& rng);
ClusterDataset resample_b1_weighted(const ClusterDataset& data, RngStream& rng);
/// Requires n_k >= 2 for every population (SingletonPopulation otherwise).
ClusterDataset resample_b3(const ClusterDataset& data, RngStream& rng);
ClusterDataset resample(Scheme scheme, const ClusterDataset& data, RngStream& rng);

/// Bootstrap analogues of the variance estimators, computed from one
/// resample laid out in slots.
struct BootstrapVarianceEstimators {
  /// n_k / (n_k - 1)^2 * sum_i (X*_ki - mu*_k)^2, unbiased for V_hat_k under
  /// B2. Zero for singleton slots.
  std::vector<double> v_star;
  /// (K-1)^-1 sum_k (mu*_k - mu'*_K)^2. NaN when K < 2.
  double s2_K_star;
  /// n*/(1 - n*) sum_k (n_k/N)(mu*_k - mu*_N)^2, unbiased for Var* mu*_N
  /// under B1_WEIGHTED. NaN when K < 2.
  double s2_N_star;
};

BootstrapVarianceEstimators bootstrap_variance_estimators(std::span<const std::size_t> slot_sizes,
                                                          const ClusterView& resample,
                                                          FormulaVariant formula = FormulaVariant::corrected);

struct ReplicateStats {
  double mu_star_N;
  double mu_star_prime_K;
  /// Squared studentizing scale for the scheme's natural statistic:
  ///   B2  N^-2 sum (n_k - 1) V*_k
  ///   B1U s2_K_star / K
  ///   B1W s2_N_star
  ///   B3  s2_K_star / K
  double scale2;

  /// sqrt(scale2), NaN when scale2 < 0.
  double scale() const noexcept;

  friend bool operator==(const ReplicateStats&, const ReplicateStats&) = default;
};

ReplicateStats replicate_statistics(Scheme scheme, std::span<const std::size_t> slot_sizes,
                                    const ClusterView& resample, FormulaVariant formula = FormulaVariant::corrected);

/// Closed-form bootstrap moments given the observed sample. Unset where no
/// closed form is provided (B3 variance of mu*_N).
struct AnalyticMoments {
  std::optional<double> mean_mu_star_N;
  std::optional<double> var_mu_star_N;
  std::optional<double> mean_mu_star_prime_K;
  std::optional<double> var_mu_star_prime_K;
};

AnalyticMoments analytic_moments(const ClusterSummary& summary, Scheme scheme);

/// Standard error of the scheme's natural statistic used to scale intervals.
///   B2  sqrt(N^-2 sum n_k V_hat_k)
///   B1U sqrt(between_variance / K)
///   B1W sqrt(n*/(1-n*) sum (n_k/N)(mu_hat_k - mu_hat_N)^2)
///   B3  sqrt(Var* mu'*_K) under B3, which adds the within-population term
double scheme_standard_error(const ClusterSummary& summary, Scheme scheme);

struct BootstrapOptions {
  unsigned threads = 1;
  FormulaVariant formula = FormulaVariant::corrected;
};

struct BootstrapRun {
  Scheme scheme = Scheme::b2_individuals;
  std::size_t B = 0;
  std::uint64_t seed = 0;
  std::vector<ReplicateStats> stats;
  AnalyticMoments moments;
  double mu_hat_N = 0.0;
  double mu_hat_prime_K = 0.0;
  double standard_error = 0.0; ///< scheme_standard_error of the observed sample

  double point(Statistic statistic) const noexcept {
    return statistic == Statistic::mu_N ? mu_hat_N : mu_hat_prime_K;
  }
};

/// Replicate b draws from RngStream(seed, bootstrap, b). The result does not
/// depend on the thread count. Needs n_k >= 2 everywhere and, for the
/// population-level schemes, K >= 2.
BootstrapRun run_bootstrap(const ClusterDataset& data, Scheme scheme, std::size_t B, std::uint64_t seed,
                           const BootstrapOptions& options = {});
BootstrapRun run_bootstrap(const ClusterView& data, Scheme scheme, std::size_t B, std::uint64_t seed,
                           const BootstrapOptions& options = {});

/// Low-level replicate loop writing into caller storage, for Monte Carlo use.
/// `out.size()` replicates are drawn with stream ids first_stream + b under `key`.
class ReplicateEngine {
public:
  ReplicateEngine(const ClusterView& data, Scheme scheme, FormulaVariant formula = FormulaVariant::corrected);

  ReplicateStats draw(RngStream& rng);
  void run(kernels::PhiloxKey key, std::uint64_t first_stream, std::span<ReplicateStats> out);

  const ClusterSummary& summary() const noexcept { return summary_; }
  std::span<const std::size_t> slot_sizes() const noexcept { return summary_.n; }

private:
  ReplicateStats finish(std::span<const double> slot_means, std::span<const double> slot_ssd) const;

  ClusterView data_;
  Scheme scheme_;
  FormulaVariant formula_;
  ClusterSummary summary_;
  std::vector<double> ssd_;
  std::vector<double> weights_;
  std::vector<std::uint32_t> owner_;
  double n_star_;
  bool balanced_;
  std::vector<double> slot_means_;
  std::vector<double> slot_ssd_;
  std::vector<std::uint32_t> idx_;
  std::vector<double> scratch_;
};

struct MomentEstimate {
  double mean;
  double variance;    ///< divisor B - 1
  double se_mean;     ///< sqrt(variance / B)
  double se_variance; ///< sqrt((m4 - variance^2) / B)
};

struct RunMoments {
  MomentEstimate mu_star_N;
  MomentEstimate mu_star_prime_K;
};

/// Monte Carlo moments of the replicate statistics. Needs B >= 2.
RunMoments mc_moments(const BootstrapRun& run);
MomentEstimate sample_moments(std::span<const double> x);

enum class IntervalMethod { percentile, bootstrap_t, normal, edgeworth_corrected };

std::string_view to_string(IntervalMethod method) noexcept;
IntervalMethod parse_interval_method(std::string_view name);

struct IntervalEstimate {
  IntervalMethod method;
  double level;
  double lower;
  double upper;
};

/// Type-7 quantile (linear interpolation between order statistics) of
/// sorted data, p in [0, 1].
double quantile_type7(std::span<const double> sorted, double p);

/// Smallest B for which the tail quantiles at `level` are usable:
/// B >= 20 / min(a, 1 - a) with a = 1 - level.
std::size_t min_replicates(double level);

/// Interval for the run's `statistic` at confidence `level`.
///   percentile           type-7 quantiles of the replicate statistic
///   bootstrap_t          [point - scale q(1-a/2), point - scale q(a/2)], q quantiles
///                        of (theta* - point) / scale*; needs positive replicate scales
///                        and statistic == natural_statistic(scheme)
///   normal               point -+ z scale
///   edgeworth_corrected  point - scale * corrected_quantile(z_p), for p = 1-a/2, a/2;
///                        `skew` is third_moment_sum / s^3 for the studentized statistic
/// Throws InsufficientReplicates when B < min_replicates(level) for the
/// resampling methods, NonPositiveScale when a replicate scale is not positive.
IntervalEstimate confidence_interval(const BootstrapRun& run, Statistic statistic, double point, double scale,
                                     IntervalMethod method, double level, double skew = 0.0);

} // namespace cboot
