#pragma once

// Exhaustive bootstrap laws for tiny datasets.
//
// Every resample is listed with its probability and replicate statistics,
// computed with straightforward loops so the result can serve as an
// independent check on the sampling code and the closed-form moments.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "clusterboot/bootstrap.hpp"
#include "clusterboot/estimators.hpp"
#include "clusterboot/model.hpp"

namespace cboot {

struct ExactOutcome {
  double probability;
  double mu_star_N;
  double mu_star_prime_K;
  double scale2;
  double s2_K_star; ///< NaN when K < 2
  double s2_N_star; ///< NaN when K < 2
  /// Identifies the resample: per slot, the source population (population
  /// schemes) followed by the drawn value indices (individual draws).
  std::vector<std::uint32_t> key;
};

struct ExactLaw {
  Scheme scheme;
  std::vector<ExactOutcome> outcomes;
  double total_probability;
  double mean_mu_star_N;
  double var_mu_star_N;
  double mean_mu_star_prime_K;
  double var_mu_star_prime_K;
  double mean_scale2;
  double mean_s2_K_star;
  double mean_s2_N_star;
  std::vector<double> mean_v_star; ///< E* V*_k per slot
};

inline constexpr std::size_t kMaxEnumeratedOutcomes = 1'000'000;

/// Number of distinct resamples:
///   B2  prod n_k^n_k,  B1  K^K,  B3  (sum_l n_l^(n_l - 1))^K.
double outcome_count(const ClusterDataset& data, Scheme scheme);

/// Throws TooLarge when outcome_count exceeds max_outcomes.
ExactLaw enumerate_bootstrap(const ClusterDataset& data, Scheme scheme,
                             FormulaVariant formula = FormulaVariant::corrected,
                             std::size_t max_outcomes = kMaxEnumeratedOutcomes);

/// Total-variation distance between two laws over resample keys.
double total_variation(const ExactLaw& a, const ExactLaw& b);

} // namespace cboot
