#pragma once

// Two-stage cluster data and the random-effects generator
//
//   X_ki = mu + a_k + u_ki,   Var a_k = gamma,   Var(u_ki | k) = V_k,  E V_k = sigma2,
//
// so that Var X = sigma2 + gamma and Cov(X_ki, X_kj) = gamma for i != j.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "clusterboot/rng.hpp"

namespace cboot {

enum class Family { gaussian, shifted_exponential, lognormal };

std::string_view to_string(Family family) noexcept;
Family parse_family(std::string_view name);

/// A zero-mean, unit-variance law. Draws are scaled by the standard deviation
/// of the component they model.
struct Distribution {
  Family family = Family::gaussian;
  double log_sd = 0.5; ///< lognormal only: sd of the underlying normal

  double draw(RngStream& rng) const;
  double skewness() const noexcept;
};

struct TruthParams {
  double mu = 0.0;
  double gamma = 1.0;  ///< between-population variance
  double sigma2 = 1.0; ///< mean within-population variance
  Distribution effect; ///< law of a_k / sqrt(gamma)
  Distribution noise;  ///< law of u_ki / sqrt(V_k)
  /// V_k = sigma2 * G with G ~ Gamma(1/d, scale d), so E V_k = sigma2 and
  /// Var V_k = d * sigma2^2. d = 0 means V_k = sigma2 for every population.
  double within_dispersion = 0.0;

  double marginal_variance() const noexcept { return sigma2 + gamma; }
  void validate() const;
};

struct DesignParams {
  std::size_t K = 0;
  double alpha = 0.25;  ///< n_k = c_k K^alpha, 0 < alpha < 1/2
  std::vector<double> c; ///< one positive constant per population

  static DesignParams balanced(std::size_t K, double alpha, double c = 1.0);
  void validate() const;
};

/// n_k = max(2, round(c_k K^alpha)).
std::vector<std::size_t> subsample_sizes(const DesignParams& design);

/// Non-owning view of populations stored contiguously.
class ClusterView {
public:
  ClusterView(std::span<const double> values, std::span<const std::size_t> offsets) noexcept
      : values_(values), offsets_(offsets) {}

  std::size_t K() const noexcept { return offsets_.size() - 1; }
  std::size_t N() const noexcept { return values_.size(); }
  std::size_t size(std::size_t k) const noexcept { return offsets_[k + 1] - offsets_[k]; }
  std::span<const double> population(std::size_t k) const noexcept {
    return values_.subspan(offsets_[k], size(k));
  }
  std::span<const double> values() const noexcept { return values_; }

private:
  std::span<const double> values_;
  std::span<const std::size_t> offsets_;
};

struct Population {
  std::string id;
  std::vector<double> values;
};

/// The observed two-stage sample. Populations keep their input order.
class ClusterDataset {
public:
  ClusterDataset() = default;
  explicit ClusterDataset(std::vector<Population> populations);
  ClusterDataset(std::vector<std::string> ids, std::vector<double> values, std::vector<std::size_t> offsets);

  std::size_t K() const noexcept { return ids_.size(); }
  std::size_t N() const noexcept { return values_.size(); }
  std::size_t size(std::size_t k) const noexcept { return offsets_[k + 1] - offsets_[k]; }
  const std::string& id(std::size_t k) const { return ids_[k]; }
  std::span<const double> population(std::size_t k) const noexcept {
    return std::span<const double>(values_).subspan(offsets_[k], size(k));
  }
  std::vector<std::size_t> sizes() const;
  ClusterView view() const noexcept { return ClusterView(values_, offsets_); }

  friend bool operator==(const ClusterDataset&, const ClusterDataset&) = default;

private:
  void validate() const;

  std::vector<std::string> ids_;
  std::vector<double> values_;
  std::vector<std::size_t> offsets_{0};
};

/// Reusable flat storage for generated samples (no population ids).
struct SampleBuffer {
  std::vector<double> values;
  std::vector<std::size_t> offsets;
  std::vector<double> cluster_means; ///< mu + a_k, the true population means

  ClusterView view() const noexcept { return ClusterView(values, offsets); }
};

struct GeneratedSample {
  ClusterDataset data;
  std::vector<double> cluster_means;
};

/// Population k draws from the stream (seed, population, k): first a_k, then
/// V_k when within_dispersion > 0, then u_k1..u_kn.
void generate_into(const TruthParams& truth, std::span<const std::size_t> sizes, std::uint64_t seed,
                   SampleBuffer& out);

GeneratedSample generate_sample(const TruthParams& truth, const DesignParams& design, std::uint64_t seed);

ClusterDataset generate_dataset(const TruthParams& truth, const DesignParams& design, std::uint64_t seed);

} // namespace cboot
