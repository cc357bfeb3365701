#pragma once

// Point and variance estimators for two-stage cluster samples.
//
// Notation: K populations, sizes n_k, N = sum n_k, per-population mean
// mu_hat_k and unbiased variance V_hat_k. Weighted grand mean
// mu_hat_N = sum (n_k/N) mu_hat_k; unweighted mu_hat'_K = K^-1 sum mu_hat_k.
// Design constants n* = N^-2 sum n_k^2 and the harmonic mean n~ of the n_k.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "clusterboot/model.hpp"

namespace cboot {

struct ClusterSummary {
  std::vector<std::size_t> n;
  std::vector<double> mu_hat;
  std::vector<double> v_hat; ///< NaN for a population with a single value

  std::size_t K() const noexcept { return n.size(); }
  std::size_t N() const noexcept;
  bool balanced() const noexcept;
};

/// Mean and sum of squared deviations of one population, with the same
/// summation kernels used everywhere else. Constant data yields ssd == 0
/// and mean equal to the common value.
struct PopulationMoments {
  double mean;
  double ssd;
};
PopulationMoments population_moments(std::span<const double> values);

enum class SingletonPolicy { reject, allow };

/// Throws SingletonPopulation for n_k = 1 unless `allow` is given, in which
/// case v_hat_k is NaN.
ClusterSummary summarize(const ClusterView& data, SingletonPolicy policy = SingletonPolicy::reject);
ClusterSummary summarize(const ClusterDataset& data, SingletonPolicy policy = SingletonPolicy::reject);

struct GrandMeans {
  double mu_hat_N;
  double mu_hat_prime_K;
};
GrandMeans grand_means(const ClusterSummary& summary);

struct DesignConstants {
  double n_star;
  double n_tilde;
};
DesignConstants design_constants(std::span<const std::size_t> sizes);

/// Slot weights n_k / N.
std::vector<double> size_weights(std::span<const std::size_t> sizes);

/// Which algebraic form to use for the between-variance estimator and for
/// the variance of mu_hat_N.
///
/// corrected: gamma_hat = (K-1)^-1 sum (mu_hat_k - mu_hat')^2 - K^-1 sum V_hat_k / n_k
///            Var mu_hat_N = n* gamma_hat + sigma2_hat / N
/// printed:   gamma_hat = K/(K-1) sum (mu_hat_k - mu_hat')^2 - K^-1 sum V_hat_k
///            Var mu_hat_N = n* gamma_hat + sigma2_hat / N^2
/// The printed forms are biased and kept only for comparison.
enum class FormulaVariant { corrected, printed };

struct EstimatorOptions {
  FormulaVariant formula = FormulaVariant::corrected;
  bool truncate_nonneg = false; ///< clamp gamma_hat at 0
};

struct VarianceComponents {
  double sigma2_hat;
  double gamma_hat; ///< may be negative unless truncated
  double v_hat;     ///< gamma_hat + sigma2_hat
};
VarianceComponents variance_components(const ClusterSummary& summary, const EstimatorOptions& options = {});

/// (K-1)^-1 sum (mu_hat_k - mu_hat'_K)^2, the sample variance of the population means.
double between_variance(const ClusterSummary& summary);

struct EstimateReport {
  double mu_hat_N;
  double mu_hat_prime_K;
  double sigma2_hat;
  double gamma_hat;
  double v_hat;
  double n_star;
  double n_tilde;
  double var_hat_mu_prime_K; ///< between_variance / K
  double var_hat_mu_N;
  double var_inter_mu_N;       ///< n* gamma_hat
  double var_intra_mu_N;       ///< N^-2 sum n_k V_hat_k
  double var_inter_mu_prime_K; ///< gamma_hat / K
  double var_intra_mu_prime_K; ///< K^-2 sum V_hat_k / n_k

  friend bool operator==(const EstimateReport&, const EstimateReport&) = default;
};

EstimateReport variance_estimates(const ClusterSummary& summary, const VarianceComponents& components,
                                  const EstimatorOptions& options = {});

/// summarize-free convenience: components and report in one go.
EstimateReport estimate(const ClusterSummary& summary, const EstimatorOptions& options = {});

struct TruthVariances {
  double s2_N;       ///< Var mu_hat_N = sigma2/N + gamma n*
  double s2_prime_K; ///< Var mu_hat'_K = K^-1 (gamma + sigma2/n~)
};
TruthVariances truth_variances(double gamma, double sigma2, std::span<const std::size_t> sizes);

struct StudentizedStats {
  double t_N;
  double t_prime_K;
};

/// t_N = (mu_hat_N - mu) / sqrt(var_hat_mu_N), t'_K likewise with var_hat_mu_prime_K.
/// Throws NonPositiveVariance if either variance estimate is not positive.
StudentizedStats studentized_stats(const EstimateReport& report, double mu);

struct DecomposedStats {
  std::optional<double> t_intra; ///< empty when sum V_hat_k / n_k == 0
  std::optional<double> t_inter; ///< empty when gamma_hat <= 0
};

/// Within- and between-population pieces of mu_hat'_K - mu, each studentized
/// by its own variance estimate:
///   t_intra = K^1/2 (K^-1 sum V_hat_k/n_k)^-1/2 (mu_hat'_K - mean_k mu_k)
///   t_inter = K^1/2 gamma_hat^-1/2 (mean_k mu_k - mu)
/// Needs the true population means, so it is only usable in simulation.
DecomposedStats decomposed_stats(const ClusterSummary& summary, std::span<const double> cluster_means, double mu,
                                 const EstimatorOptions& options = {});

} // namespace cboot
