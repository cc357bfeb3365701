#include "clusterboot/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "clusterboot/error.hpp"
#include "clusterboot/kernels.hpp"

namespace cboot {

std::size_t ClusterSummary::N() const noexcept {
  std::size_t total = 0;
  for (std::size_t nk : n) {
    total += nk;
  }
  return total;
}

bool ClusterSummary::balanced() const noexcept {
  return std::adjacent_find(n.begin(), n.end(), std::not_equal_to<>()) == n.end();
}

PopulationMoments population_moments(std::span<const double> values) {
  const double first = values.front();
  if (std::all_of(values.begin(), values.end(), [first](double v) { return v == first; })) {
    return {first, 0.0};
  }
  const double mean = kernels::sum(values) / static_cast<double>(values.size());
  return {mean, kernels::sum_sq_dev(values, mean)};
}

ClusterSummary summarize(const ClusterView& data, SingletonPolicy policy) {
  const std::size_t K = data.K();
  if (K == 0) {
    throw Error(Errc::empty_input, "no populations");
  }
  ClusterSummary s;
  s.n.resize(K);
  s.mu_hat.resize(K);
  s.v_hat.resize(K);
  for (std::size_t k = 0; k < K; ++k) {
    const auto pop = data.population(k);
    if (pop.empty()) {
      throw Error(Errc::empty_population, "population " + std::to_string(k + 1) + " is empty");
    }
    if (pop.size() == 1 && policy == SingletonPolicy::reject) {
      throw Error(Errc::singleton_population,
                  "population " + std::to_string(k + 1) + " has one value; its variance is undefined");
    }
    const auto m = population_moments(pop);
    s.n[k] = pop.size();
    s.mu_hat[k] = m.mean;
    s.v_hat[k] = pop.size() > 1 ? m.ssd / static_cast<double>(pop.size() - 1) : std::nan("");
  }
  return s;
}

ClusterSummary summarize(const ClusterDataset& data, SingletonPolicy policy) {
  return summarize(data.view(), policy);
}

std::vector<double> size_weights(std::span<const std::size_t> sizes) {
  std::size_t N = 0;
  for (std::size_t nk : sizes) {
    N += nk;
  }
  std::vector<double> w(sizes.size());
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    w[k] = static_cast<double>(sizes[k]) / static_cast<double>(N);
  }
  return w;
}

GrandMeans grand_means(const ClusterSummary& summary) {
  if (summary.K() == 0) {
    throw Error(Errc::empty_input, "no populations");
  }
  const double mean_of_means = kernels::sum(summary.mu_hat) / static_cast<double>(summary.K());
  if (summary.balanced()) {
    return {mean_of_means, mean_of_means};
  }
  const auto w = size_weights(summary.n);
  return {kernels::dot(w, summary.mu_hat), mean_of_means};
}

DesignConstants design_constants(std::span<const std::size_t> sizes) {
  if (sizes.empty()) {
    throw Error(Errc::empty_input, "no population sizes");
  }
  const double K = static_cast<double>(sizes.size());
  const bool balanced = std::adjacent_find(sizes.begin(), sizes.end(), std::not_equal_to<>()) == sizes.end();
  std::vector<double> sq(sizes.size());
  std::vector<double> inv(sizes.size());
  double N = 0.0;
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    if (sizes[k] == 0) {
      throw Error(Errc::empty_population, "population sizes must be at least 1");
    }
    const double nk = static_cast<double>(sizes[k]);
    sq[k] = nk * nk;
    inv[k] = 1.0 / nk;
    N += nk;
  }
  const double n_star = kernels::sum(sq) / (N * N);
  const double n_tilde = balanced ? static_cast<double>(sizes.front()) : K / kernels::sum(inv);
  return {n_star, n_tilde};
}

double between_variance(const ClusterSummary& summary) {
  const std::size_t K = summary.K();
  if (K < 2) {
    throw Error(Errc::degenerate_k, "need at least 2 populations, got " + std::to_string(K));
  }
  const double mean = kernels::sum(summary.mu_hat) / static_cast<double>(K);
  return kernels::sum_sq_dev(summary.mu_hat, mean) / static_cast<double>(K - 1);
}

namespace {

void require_variances(const ClusterSummary& summary) {
  for (std::size_t k = 0; k < summary.K(); ++k) {
    if (summary.n[k] < 2 || std::isnan(summary.v_hat[k])) {
      throw Error(Errc::singleton_population,
                  "population " + std::to_string(k + 1) + " has fewer than 2 values");
    }
  }
}

// sum_k V_hat_k / n_k
double mean_variance_ratio_sum(const ClusterSummary& summary) {
  std::vector<double> inv(summary.K());
  for (std::size_t k = 0; k < summary.K(); ++k) {
    inv[k] = 1.0 / static_cast<double>(summary.n[k]);
  }
  return kernels::dot(inv, summary.v_hat);
}

double weighted_variance_sum(const ClusterSummary& summary) {
  std::vector<double> nk(summary.K());
  for (std::size_t k = 0; k < summary.K(); ++k) {
    nk[k] = static_cast<double>(summary.n[k]);
  }
  return kernels::dot(nk, summary.v_hat);
}

} // namespace

VarianceComponents variance_components(const ClusterSummary& summary, const EstimatorOptions& options) {
  const std::size_t K = summary.K();
  if (K < 2) {
    throw Error(Errc::degenerate_k, "need at least 2 populations, got " + std::to_string(K));
  }
  require_variances(summary);
  const double Kd = static_cast<double>(K);
  const double N = static_cast<double>(summary.N());

  const double sigma2_hat = weighted_variance_sum(summary) / N;
  const double between = between_variance(summary);
  double gamma_hat = 0.0;
  if (options.formula == FormulaVariant::corrected) {
    gamma_hat = between - mean_variance_ratio_sum(summary) / Kd;
  } else {
    gamma_hat = Kd * between - kernels::sum(summary.v_hat) / Kd;
  }
  if (options.truncate_nonneg) {
    gamma_hat = std::max(0.0, gamma_hat);
  }
  return {sigma2_hat, gamma_hat, gamma_hat + sigma2_hat};
}

EstimateReport variance_estimates(const ClusterSummary& summary, const VarianceComponents& components,
                                  const EstimatorOptions& options) {
  const std::size_t K = summary.K();
  if (K < 2) {
    throw Error(Errc::degenerate_k, "need at least 2 populations, got " + std::to_string(K));
  }
  require_variances(summary);
  const double Kd = static_cast<double>(K);
  const double N = static_cast<double>(summary.N());
  const auto means = grand_means(summary);
  const auto dc = design_constants(summary.n);

  EstimateReport r{};
  r.mu_hat_N = means.mu_hat_N;
  r.mu_hat_prime_K = means.mu_hat_prime_K;
  r.sigma2_hat = components.sigma2_hat;
  r.gamma_hat = components.gamma_hat;
  r.v_hat = components.v_hat;
  r.n_star = dc.n_star;
  r.n_tilde = dc.n_tilde;
  r.var_hat_mu_prime_K = between_variance(summary) / Kd;
  r.var_inter_mu_N = dc.n_star * components.gamma_hat;
  r.var_intra_mu_N = weighted_variance_sum(summary) / (N * N);
  r.var_inter_mu_prime_K = components.gamma_hat / Kd;
  r.var_intra_mu_prime_K = mean_variance_ratio_sum(summary) / (Kd * Kd);
  const double sigma_term =
      options.formula == FormulaVariant::corrected ? components.sigma2_hat / N : components.sigma2_hat / (N * N);
  r.var_hat_mu_N = r.var_inter_mu_N + sigma_term;
  return r;
}

EstimateReport estimate(const ClusterSummary& summary, const EstimatorOptions& options) {
  return variance_estimates(summary, variance_components(summary, options), options);
}

TruthVariances truth_variances(double gamma, double sigma2, std::span<const std::size_t> sizes) {
  const auto dc = design_constants(sizes);
  double N = 0.0;
  for (std::size_t nk : sizes) {
    N += static_cast<double>(nk);
  }
  const double K = static_cast<double>(sizes.size());
  return {sigma2 / N + gamma * dc.n_star, (gamma + sigma2 / dc.n_tilde) / K};
}

StudentizedStats studentized_stats(const EstimateReport& report, double mu) {
  if (!(report.var_hat_mu_N > 0.0) || !(report.var_hat_mu_prime_K > 0.0)) {
    throw Error(Errc::non_positive_variance, "variance estimate is not positive");
  }
  return {(report.mu_hat_N - mu) / std::sqrt(report.var_hat_mu_N),
          (report.mu_hat_prime_K - mu) / std::sqrt(report.var_hat_mu_prime_K)};
}

DecomposedStats decomposed_stats(const ClusterSummary& summary, std::span<const double> cluster_means, double mu,
                                 const EstimatorOptions& options) {
  if (cluster_means.size() != summary.K()) {
    throw Error(Errc::invalid_argument, "need one true mean per population");
  }
  const auto components = variance_components(summary, options);
  const double Kd = static_cast<double>(summary.K());
  const double root_K = std::sqrt(Kd);
  const double mu_bar = kernels::sum(cluster_means) / Kd;
  const double mu_prime = grand_means(summary).mu_hat_prime_K;
  const double intra = mean_variance_ratio_sum(summary) / Kd;

  DecomposedStats out;
  if (intra > 0.0) {
    out.t_intra = root_K * (mu_prime - mu_bar) / std::sqrt(intra);
  }
  if (components.gamma_hat > 0.0) {
    out.t_inter = root_K * (mu_bar - mu) / std::sqrt(components.gamma_hat);
  }
  return out;
}

} // namespace cboot
