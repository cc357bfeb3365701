#pragma once

// Replicated simulation experiments over a design grid.
//
// Grid point g, replicate r draws its dataset with seed
// derive_seed(master_seed, {g, r}); the bootstrap for scheme s on that
// dataset uses seed derive_seed(master_seed, {g, r, kSchemeSeedTag + s}).
// Per-replicate results are stored by index and reduced sequentially, so a
// report is bit-identical for any thread count or kernel variant.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "clusterboot/asymptotics.hpp"
#include "clusterboot/bootstrap.hpp"
#include "clusterboot/estimators.hpp"
#include "clusterboot/model.hpp"

namespace cboot {

inline constexpr std::uint64_t kSchemeSeedTag = 0x5c000;

struct ExperimentConfig {
  TruthParams truth;
  std::vector<DesignParams> grid;
  std::size_t R = 1000;
  std::size_t B = 999;
  std::vector<Scheme> schemes;
  double level = 0.95;
  std::uint64_t master_seed = 1;
  unsigned threads = 1;
  EstimatorOptions estimator;
  double berry_esseen_C = kBerryEsseenC;

  void validate() const;
};

struct EstimatorSummary {
  double truth;
  double mean;
  double bias;
  double sd;
  double se; ///< sd / sqrt(R)
};

struct KsSummary {
  double distance;        ///< sup distance of the empirical law to Phi
  std::size_t used;       ///< replicates where the statistic was defined
  std::size_t undefined;  ///< replicates skipped (non-positive variance)
};

struct CoverageSummary {
  std::optional<double> coverage;   ///< empty when no interval could be formed
  std::optional<double> mean_width;
  std::size_t used;
  std::size_t failed; ///< replicates where the interval was undefined
};

/// Empirical CDF of the normalized statistic (mu_hat_N - mu) / S_N against
/// Phi at +-x, with and without the corrected quantile.
struct QuantileCorrection {
  ExpansionKind kind;
  double x;
  double kappa;
  double plain_error;     ///< sum over +-x of |F(x) - Phi(x)|
  double corrected_error; ///< sum over +-x of |F(cq(x)) - Phi(x)|
  bool improved() const noexcept { return corrected_error < plain_error; }
};

struct SchemeReport {
  Scheme scheme;
  Statistic statistic; ///< natural statistic of the scheme
  /// mean over datasets of the MC bootstrap variance of mu'*_K and mu*_N
  double mean_var_star_mu_prime_K;
  double mean_var_star_mu_N;
  /// mean over datasets of the closed-form bootstrap variance of mu'*_K
  double mean_analytic_var_star_mu_prime_K;
  CoverageSummary percentile;
  CoverageSummary bootstrap_t;
  CoverageSummary normal;
  /// Two-sample sup distance between the outer law of the studentized
  /// statistic and the pooled inner law of its bootstrap analogue.
  double sup_distance_pooled;
  double sup_distance_per_dataset_mean;
  double sup_distance_per_dataset_max;
  std::size_t inner_undefined; ///< bootstrap replicates with non-positive scale
};

struct GridPointReport {
  std::size_t K;
  double alpha;
  std::size_t N;
  double n_star;
  double n_tilde;
  std::size_t R;

  EstimatorSummary mu_hat_N;
  EstimatorSummary mu_hat_prime_K;
  EstimatorSummary sigma2_hat;
  EstimatorSummary gamma_hat;

  double s2_N;                 ///< sigma2/N + gamma n*
  double s2_prime_K;           ///< (gamma + sigma2/n~) / K
  double empirical_var_mu_N;
  double empirical_var_mu_prime_K;
  double mean_var_hat_mu_N;
  double mean_var_hat_mu_prime_K;
  double mean_var_intra_mu_prime_K; ///< mean of K^-2 sum V_hat_k / n_k

  KsSummary ks_normalized_N; ///< (mu_hat_N - mu) / S_N
  KsSummary ks_t_N;
  KsSummary ks_t_prime_K;
  KsSummary ks_t_intra;
  KsSummary ks_t_inter;

  CoverageSummary normal_ci_mu_N; ///< mu_hat_N -+ z sqrt(var_hat_mu_N), target mu

  double third_moment_sum;
  BerryEsseenBound berry_esseen;
  double rate_scale;     ///< K^(1/2 + 2 alpha)
  double rate_scale_alt; ///< K^(alpha + 1/2)
  std::vector<QuantileCorrection> corrections;

  std::vector<SchemeReport> schemes;
};

struct ExperimentReport {
  ExperimentConfig config;
  std::vector<GridPointReport> points;
};

ExperimentReport run_experiment(const ExperimentConfig& config);

struct RateRow {
  std::size_t K;
  double alpha;
  double sup_distance;           ///< pooled D_K under B1_WEIGHTED
  double scaled;                 ///< K^(1/2 + 2 alpha) D_K
  double scaled_alt;             ///< K^(alpha + 1/2) D_K
  double per_dataset_mean_scaled;
  double per_dataset_max_scaled;
  double berry_esseen_scaled;
  bool within_bound;
  QuantileCorrection correction; ///< normalized statistic at x = 1.645
};

struct RateTable {
  ExperimentReport report;
  std::vector<RateRow> rows;
};

/// Needs at least 3 grid points sharing alpha and c, and gamma > 0.
/// B1_WEIGHTED is added to the schemes if missing.
RateTable rate_table(const ExperimentConfig& config);

struct ComparisonRow {
  std::size_t K;
  double alpha;
  Scheme scheme;
  double var_star_mu_prime_K;  ///< mean over datasets
  double target;               ///< mean over datasets of between_variance / K
  double ratio;
  std::optional<double> coverage;
};

struct ComparisonTable {
  ExperimentReport report;
  std::vector<ComparisonRow> rows;
  /// mean over datasets of (B3 - B1_UNIFORM) bootstrap variance of mu'*_K,
  /// and of the intra term K^-2 sum V_hat_k / n_k it should equal.
  std::vector<double> b3_excess;
  std::vector<double> intra_term;
};

/// Runs all four schemes over the grid.
ComparisonTable scheme_comparison(const ExperimentConfig& config);

struct ExactComparisonRow {
  Scheme scheme;
  double var_star_mu_prime_K;
  double ratio_to_uniform_target; ///< over (K-1)/K^2 between_variance
};

struct ExactComparison {
  std::vector<ExactComparisonRow> rows;
  double target;      ///< (K-1)/K^2 between_variance
  double b3_excess;   ///< Var*_B3 - Var*_B1U
  double intra_term;  ///< K^-2 sum V_hat_k / n_k
};

/// The same comparison from exhaustive bootstrap laws of one tiny dataset.
ExactComparison scheme_comparison_exact(const ClusterDataset& data);

/// KS distance to Phi of the bootstrap replicates of the natural statistic:
/// studentized by the replicate scale for B1 schemes, normalized by the
/// closed-form bootstrap variance for B2 and B3.
double conditional_normality_ks(const BootstrapRun& run);

} // namespace cboot
