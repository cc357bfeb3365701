#include "clusterboot/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "clusterboot/error.hpp"

namespace cboot {

std::string_view to_string(Family family) noexcept {
  switch (family) {
  case Family::gaussian: return "gaussian";
  case Family::shifted_exponential: return "shifted_exponential";
  case Family::lognormal: return "lognormal";
  }
  return "unknown";
}

Family parse_family(std::string_view name) {
  if (name == "gaussian" || name == "normal") {
    return Family::gaussian;
  }
  if (name == "shifted_exponential" || name == "exponential") {
    return Family::shifted_exponential;
  }
  if (name == "lognormal") {
    return Family::lognormal;
  }
  throw Error(Errc::invalid_truth, "unknown distribution family '" + std::string(name) + "'");
}

double Distribution::draw(RngStream& rng) const {
  switch (family) {
  case Family::gaussian: return rng.normal();
  case Family::shifted_exponential: return rng.exponential() - 1.0;
  case Family::lognormal: {
    const double s2 = log_sd * log_sd;
    const double mean = std::exp(0.5 * s2);
    const double sd = std::sqrt(std::expm1(s2) * std::exp(s2));
    return (std::exp(log_sd * rng.normal()) - mean) / sd;
  }
  }
  return 0.0;
}

double Distribution::skewness() const noexcept {
  switch (family) {
  case Family::gaussian: return 0.0;
  case Family::shifted_exponential: return 2.0;
  case Family::lognormal: {
    const double s2 = log_sd * log_sd;
    return (std::exp(s2) + 2.0) * std::sqrt(std::expm1(s2));
  }
  }
  return 0.0;
}

void TruthParams::validate() const {
  if (!std::isfinite(mu)) {
    throw Error(Errc::invalid_truth, "mu must be finite");
  }
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
    throw Error(Errc::invalid_truth, "gamma must be a finite value >= 0");
  }
  if (!(sigma2 >= 0.0) || !std::isfinite(sigma2)) {
    throw Error(Errc::invalid_truth, "sigma2 must be a finite value >= 0");
  }
  if (!(within_dispersion >= 0.0) || !std::isfinite(within_dispersion)) {
    throw Error(Errc::invalid_truth, "within_dispersion must be >= 0");
  }
  for (const Distribution* d : {&effect, &noise}) {
    if (d->family == Family::lognormal && !(d->log_sd > 0.0 && std::isfinite(d->log_sd))) {
      throw Error(Errc::invalid_truth, "lognormal log_sd must be positive");
    }
  }
}

DesignParams DesignParams::balanced(std::size_t K, double alpha, double c) {
  return DesignParams{K, alpha, std::vector<double>(K, c)};
}

void DesignParams::validate() const {
  if (K < 1) {
    throw Error(Errc::invalid_design, "K must be at least 1");
  }
  if (!(alpha > 0.0 && alpha < 0.5)) {
    throw Error(Errc::invalid_design, "alpha must lie in (0, 1/2), got " + std::to_string(alpha));
  }
  if (c.size() != K) {
    throw Error(Errc::invalid_design,
                "expected " + std::to_string(K) + " constants c_k, got " + std::to_string(c.size()));
  }
  for (double ck : c) {
    if (!(ck > 0.0) || !std::isfinite(ck)) {
      throw Error(Errc::invalid_design, "every c_k must be positive and finite");
    }
  }
}

std::vector<std::size_t> subsample_sizes(const DesignParams& design) {
  design.validate();
  const double scale = std::pow(static_cast<double>(design.K), design.alpha);
  std::vector<std::size_t> sizes(design.K);
  for (std::size_t k = 0; k < design.K; ++k) {
    const long long n = std::llround(design.c[k] * scale);
    sizes[k] = static_cast<std::size_t>(std::max(2LL, n));
  }
  return sizes;
}

ClusterDataset::ClusterDataset(std::vector<Population> populations) {
  ids_.reserve(populations.size());
  offsets_.reserve(populations.size() + 1);
  for (auto& p : populations) {
    ids_.push_back(std::move(p.id));
    values_.insert(values_.end(), p.values.begin(), p.values.end());
    offsets_.push_back(values_.size());
  }
  validate();
}

ClusterDataset::ClusterDataset(std::vector<std::string> ids, std::vector<double> values,
                               std::vector<std::size_t> offsets)
    : ids_(std::move(ids)), values_(std::move(values)), offsets_(std::move(offsets)) {
  if (offsets_.size() != ids_.size() + 1 || offsets_.front() != 0 || offsets_.back() != values_.size()) {
    throw Error(Errc::invalid_argument, "population offsets do not match the value buffer");
  }
  validate();
}

void ClusterDataset::validate() const {
  if (ids_.empty()) {
    throw Error(Errc::empty_input, "a dataset needs at least one population");
  }
  for (std::size_t k = 0; k < K(); ++k) {
    if (offsets_[k + 1] <= offsets_[k]) {
      throw Error(Errc::empty_population, "population '" + ids_[k] + "' has no values");
    }
  }
  for (double v : values_) {
    if (!std::isfinite(v)) {
      throw Error(Errc::malformed_input, "non-finite value in dataset");
    }
  }
}

std::vector<std::size_t> ClusterDataset::sizes() const {
  std::vector<std::size_t> n(K());
  for (std::size_t k = 0; k < K(); ++k) {
    n[k] = size(k);
  }
  return n;
}

void generate_into(const TruthParams& truth, std::span<const std::size_t> sizes, std::uint64_t seed,
                   SampleBuffer& out) {
  truth.validate();
  const std::size_t K = sizes.size();
  out.offsets.resize(K + 1);
  out.offsets[0] = 0;
  for (std::size_t k = 0; k < K; ++k) {
    out.offsets[k + 1] = out.offsets[k] + sizes[k];
  }
  out.values.resize(out.offsets[K]);
  out.cluster_means.resize(K);

  const double sd_effect = std::sqrt(truth.gamma);
  const kernels::PhiloxKey key = RngStream::key_for(seed, StreamDomain::population);
  for (std::size_t k = 0; k < K; ++k) {
    RngStream rng(key, k);
    const double mean_k = truth.mu + sd_effect * truth.effect.draw(rng);
    double v_k = truth.sigma2;
    if (truth.within_dispersion > 0.0) {
      const double shape = 1.0 / truth.within_dispersion;
      v_k = truth.sigma2 * rng.gamma(shape) * truth.within_dispersion;
    }
    const double sd_noise = std::sqrt(v_k);
    out.cluster_means[k] = mean_k;
    for (std::size_t i = out.offsets[k]; i < out.offsets[k + 1]; ++i) {
      out.values[i] = mean_k + sd_noise * truth.noise.draw(rng);
    }
  }
}

GeneratedSample generate_sample(const TruthParams& truth, const DesignParams& design, std::uint64_t seed) {
  const auto sizes = subsample_sizes(design);
  SampleBuffer buf;
  generate_into(truth, sizes, seed, buf);
  std::vector<std::string> ids(design.K);
  for (std::size_t k = 0; k < design.K; ++k) {
    ids[k] = std::to_string(k + 1);
  }
  return GeneratedSample{ClusterDataset(std::move(ids), std::move(buf.values), std::move(buf.offsets)),
                         std::move(buf.cluster_means)};
}

ClusterDataset generate_dataset(const TruthParams& truth, const DesignParams& design, std::uint64_t seed) {
  return generate_sample(truth, design, seed).data;
}

} // namespace cboot
