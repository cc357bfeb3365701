#include "clusterboot/bootstrap.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "clusterboot/asymptotics.hpp"
#include "clusterboot/error.hpp"
#include "clusterboot/kernels.hpp"
#include "clusterboot/parallel.hpp"

namespace cboot {

std::string_view to_string(Scheme scheme) noexcept {
  switch (scheme) {
  case Scheme::b2_individuals: return "B2_INDIVIDUALS";
  case Scheme::b1_uniform: return "B1_UNIFORM";
  case Scheme::b1_weighted: return "B1_WEIGHTED";
  case Scheme::b3_cluster: return "B3_CLUSTER";
  }
  return "unknown";
}

std::string_view short_name(Scheme scheme) noexcept {
  switch (scheme) {
  case Scheme::b2_individuals: return "b2";
  case Scheme::b1_uniform: return "b1u";
  case Scheme::b1_weighted: return "b1w";
  case Scheme::b3_cluster: return "b3";
  }
  return "unknown";
}

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::tolower(c); });
  return out;
}

} // namespace

Scheme parse_scheme(std::string_view name) {
  const std::string key = lower(name);
  for (Scheme s : kAllSchemes) {
    if (key == short_name(s) || key == lower(to_string(s))) {
      return s;
    }
  }
  throw Error(Errc::invalid_argument, "unknown scheme '" + std::string(name) + "'");
}

std::string_view to_string(Statistic statistic) noexcept {
  return statistic == Statistic::mu_N ? "mu_N" : "mu_prime_K";
}

Statistic parse_statistic(std::string_view name) {
  const std::string key = lower(name);
  if (key == "mu_n" || key == "mu") {
    return Statistic::mu_N;
  }
  if (key == "mu_prime_k" || key == "mu_prime") {
    return Statistic::mu_prime_K;
  }
  throw Error(Errc::invalid_argument, "unknown target '" + std::string(name) + "'");
}

Statistic natural_statistic(Scheme scheme) noexcept {
  switch (scheme) {
  case Scheme::b2_individuals:
  case Scheme::b1_weighted: return Statistic::mu_N;
  case Scheme::b1_uniform:
  case Scheme::b3_cluster: return Statistic::mu_prime_K;
  }
  return Statistic::mu_N;
}

namespace {

std::string slot_id(const ClusterDataset& data, std::size_t source, std::size_t slot) {
  return data.id(source) + "*" + std::to_string(slot + 1);
}

std::uint32_t checked_u32(std::size_t n) {
  if (n > 0xFFFFFFFFu) {
    throw Error(Errc::invalid_argument, "population too large for 32-bit index draws");
  }
  return static_cast<std::uint32_t>(n);
}

// Cumulative population ends for the n_l / N draw.
std::vector<std::uint32_t> owner_table(std::span<const std::size_t> sizes) {
  std::vector<std::uint32_t> owner;
  for (std::size_t l = 0; l < sizes.size(); ++l) {
    owner.insert(owner.end(), sizes[l], static_cast<std::uint32_t>(l));
  }
  return owner;
}

template <typename PickSource>
ClusterDataset resample_populations(const ClusterDataset& data, PickSource pick) {
  std::vector<std::string> ids;
  std::vector<double> values;
  std::vector<std::size_t> offsets{0};
  for (std::size_t k = 0; k < data.K(); ++k) {
    const std::size_t l = pick();
    const auto pop = data.population(l);
    ids.push_back(slot_id(data, l, k));
    values.insert(values.end(), pop.begin(), pop.end());
    offsets.push_back(values.size());
  }
  return ClusterDataset(std::move(ids), std::move(values), std::move(offsets));
}

} // namespace

ClusterDataset resample_b2(const ClusterDataset& data, RngStream& rng) {
  std::vector<std::string> ids;
  std::vector<double> values;
  std::vector<std::size_t> offsets{0};
  values.reserve(data.N());
  for (std::size_t k = 0; k < data.K(); ++k) {
    const auto pop = data.population(k);
    const std::uint32_t n = checked_u32(pop.size());
    for (std::uint32_t i = 0; i < n; ++i) {
      values.push_back(pop[rng.uniform_below(n)]);
    }
    ids.push_back(data.id(k));
    offsets.push_back(values.size());
  }
  return ClusterDataset(std::move(ids), std::move(values), std::move(offsets));
}

ClusterDataset resample_b1_uniform(const ClusterDataset& data, RngStream& rng) {
  const std::uint32_t K = checked_u32(data.K());
  return resample_populations(data, [&] { return static_cast<std::size_t>(rng.uniform_below(K)); });
}

ClusterDataset resample_b1_weighted(const ClusterDataset& data, RngStream& rng) {
  const auto owner = owner_table(data.sizes());
  const std::uint32_t N = checked_u32(owner.size());
  return resample_populations(data, [&] { return static_cast<std::size_t>(owner[rng.uniform_below(N)]); });
}

ClusterDataset resample_b3(const ClusterDataset& data, RngStream& rng) {
  for (std::size_t k = 0; k < data.K(); ++k) {
    if (data.size(k) < 2) {
      throw Error(Errc::singleton_population,
                  "B3 needs at least 2 values in every population; population " + std::to_string(k + 1) + " has 1");
    }
  }
  const std::uint32_t K = checked_u32(data.K());
  std::vector<std::string> ids;
  std::vector<double> values;
  std::vector<std::size_t> offsets{0};
  for (std::size_t k = 0; k < data.K(); ++k) {
    const std::size_t l = rng.uniform_below(K);
    const auto pop = data.population(l);
    const std::uint32_t n = checked_u32(pop.size());
    for (std::uint32_t i = 0; i + 1 < n; ++i) {
      values.push_back(pop[rng.uniform_below(n)]);
    }
    ids.push_back(slot_id(data, l, k));
    offsets.push_back(values.size());
  }
  return ClusterDataset(std::move(ids), std::move(values), std::move(offsets));
}

ClusterDataset resample(Scheme scheme, const ClusterDataset& data, RngStream& rng) {
  switch (scheme) {
  case Scheme::b2_individuals: return resample_b2(data, rng);
  case Scheme::b1_uniform: return resample_b1_uniform(data, rng);
  case Scheme::b1_weighted: return resample_b1_weighted(data, rng);
  case Scheme::b3_cluster: return resample_b3(data, rng);
  }
  throw Error(Errc::invalid_argument, "unknown scheme");
}

namespace {

struct SlotLayout {
  std::vector<std::size_t> n;
  std::vector<double> w;
  double N = 0.0;
  double n_star = 0.0;
  bool balanced = false;

  explicit SlotLayout(std::span<const std::size_t> sizes) : n(sizes.begin(), sizes.end()), w(size_weights(sizes)) {
    if (sizes.empty()) {
      throw Error(Errc::empty_input, "no populations");
    }
    for (std::size_t nk : sizes) {
      N += static_cast<double>(nk);
    }
    n_star = design_constants(sizes).n_star;
    balanced = std::adjacent_find(n.begin(), n.end(), std::not_equal_to<>()) == n.end();
  }
};

struct SlotWeights {
  std::span<const std::size_t> n;
  std::span<const double> w;
  double N;
  double n_star;
  bool balanced;
};

double slot_grand_mean(const SlotLayout& layout, std::span<const double> means, double mean_of_means) {
  return layout.balanced ? mean_of_means : kernels::dot(layout.w, means);
}

double s2_K_star(std::span<const double> means, double mean_of_means) {
  if (means.size() < 2) {
    return std::nan("");
  }
  return kernels::sum_sq_dev(means, mean_of_means) / static_cast<double>(means.size() - 1);
}

double s2_N_star(const SlotWeights& slots, std::span<const double> means, double mu_N, FormulaVariant formula) {
  if (means.size() < 2) {
    return std::nan("");
  }
  const double spread = kernels::weighted_sq_dev(slots.w, means, mu_N);
  if (formula == FormulaVariant::printed) {
    return slots.n_star / (slots.n_star - 1.0) * slots.N * spread;
  }
  return slots.n_star / (1.0 - slots.n_star) * spread;
}

ReplicateStats finish_replicate(Scheme scheme, const SlotWeights& slots, std::span<const double> means,
                                std::span<const double> ssd, FormulaVariant formula) {
  const double K = static_cast<double>(means.size());
  const double mu_prime = kernels::sum(means) / K;
  const double mu_N = slots.balanced ? mu_prime : kernels::dot(slots.w, means);
  double scale2 = 0.0;
  switch (scheme) {
  case Scheme::b2_individuals: {
    std::vector<double> terms(ssd.size());
    for (std::size_t k = 0; k < ssd.size(); ++k) {
      const double nk = static_cast<double>(slots.n[k]);
      terms[k] = slots.n[k] > 1 ? nk / (nk - 1.0) * ssd[k] : 0.0;
    }
    scale2 = kernels::sum(terms) / (slots.N * slots.N);
    break;
  }
  case Scheme::b1_uniform:
  case Scheme::b3_cluster: scale2 = s2_K_star(means, mu_prime) / K; break;
  case Scheme::b1_weighted: scale2 = s2_N_star(slots, means, mu_N, formula); break;
  }
  return {mu_N, mu_prime, scale2};
}

SlotWeights slot_weights(const SlotLayout& layout) {
  return {layout.n, layout.w, layout.N, layout.n_star, layout.balanced};
}

void slot_moments(const ClusterView& resample, std::vector<double>& means, std::vector<double>& ssd) {
  means.resize(resample.K());
  ssd.resize(resample.K());
  for (std::size_t k = 0; k < resample.K(); ++k) {
    const auto pop = resample.population(k);
    if (pop.empty()) {
      throw Error(Errc::empty_population, "bootstrap slot " + std::to_string(k + 1) + " is empty");
    }
    const auto m = population_moments(pop);
    means[k] = m.mean;
    ssd[k] = m.ssd;
  }
}

void check_slots(std::span<const std::size_t> slot_sizes, const ClusterView& resample) {
  if (slot_sizes.size() != resample.K()) {
    throw Error(Errc::invalid_argument, "resample has " + std::to_string(resample.K()) + " slots, expected " +
                                            std::to_string(slot_sizes.size()));
  }
}

} // namespace

double ReplicateStats::scale() const noexcept { return scale2 >= 0.0 ? std::sqrt(scale2) : std::nan(""); }

BootstrapVarianceEstimators bootstrap_variance_estimators(std::span<const std::size_t> slot_sizes,
                                                          const ClusterView& resample, FormulaVariant formula) {
  check_slots(slot_sizes, resample);
  const SlotLayout layout(slot_sizes);
  std::vector<double> means;
  std::vector<double> ssd;
  slot_moments(resample, means, ssd);
  BootstrapVarianceEstimators out;
  out.v_star.resize(means.size());
  for (std::size_t k = 0; k < means.size(); ++k) {
    const double nk = static_cast<double>(layout.n[k]);
    out.v_star[k] = layout.n[k] > 1 ? nk / ((nk - 1.0) * (nk - 1.0)) * ssd[k] : 0.0;
  }
  const double mu_prime = kernels::sum(means) / static_cast<double>(means.size());
  out.s2_K_star = s2_K_star(means, mu_prime);
  out.s2_N_star = s2_N_star(slot_weights(layout), means, slot_grand_mean(layout, means, mu_prime), formula);
  return out;
}

ReplicateStats replicate_statistics(Scheme scheme, std::span<const std::size_t> slot_sizes,
                                    const ClusterView& resample, FormulaVariant formula) {
  check_slots(slot_sizes, resample);
  const SlotLayout layout(slot_sizes);
  std::vector<double> means;
  std::vector<double> ssd;
  slot_moments(resample, means, ssd);
  return finish_replicate(scheme, slot_weights(layout), means, ssd, formula);
}

AnalyticMoments analytic_moments(const ClusterSummary& summary, Scheme scheme) {
  const std::size_t K = summary.K();
  if (K == 0) {
    throw Error(Errc::empty_input, "no populations");
  }
  const double Kd = static_cast<double>(K);
  const double N = static_cast<double>(summary.N());
  const auto means = grand_means(summary);
  const double n_star = design_constants(summary.n).n_star;
  // sum (mu_hat_k - mu_hat')^2
  const double spread = kernels::sum_sq_dev(summary.mu_hat, means.mu_hat_prime_K);
  std::vector<double> inv_n(K);
  std::vector<double> within_N(K);
  std::vector<double> within_prime(K);
  for (std::size_t k = 0; k < K; ++k) {
    const double nk = static_cast<double>(summary.n[k]);
    inv_n[k] = 1.0 / nk;
    within_N[k] = (nk - 1.0) * summary.v_hat[k];
    within_prime[k] = (nk - 1.0) / (nk * nk) * summary.v_hat[k];
  }

  AnalyticMoments m;
  switch (scheme) {
  case Scheme::b2_individuals:
    m.mean_mu_star_N = means.mu_hat_N;
    m.var_mu_star_N = kernels::sum(within_N) / (N * N);
    m.mean_mu_star_prime_K = means.mu_hat_prime_K;
    m.var_mu_star_prime_K = kernels::sum(within_prime) / (Kd * Kd);
    break;
  case Scheme::b1_uniform: {
    const double s2 = spread / Kd;
    m.mean_mu_star_N = means.mu_hat_prime_K;
    m.var_mu_star_N = n_star * s2;
    m.mean_mu_star_prime_K = means.mu_hat_prime_K;
    m.var_mu_star_prime_K = s2 / Kd;
    break;
  }
  case Scheme::b1_weighted: {
    const auto w = size_weights(summary.n);
    const double tau2 = kernels::weighted_sq_dev(w, summary.mu_hat, means.mu_hat_N);
    m.mean_mu_star_N = means.mu_hat_N;
    m.var_mu_star_N = n_star * tau2;
    m.mean_mu_star_prime_K = means.mu_hat_N;
    m.var_mu_star_prime_K = tau2 / Kd;
    break;
  }
  case Scheme::b3_cluster: {
    const double slot_var = spread / Kd + kernels::dot(inv_n, summary.v_hat) / Kd;
    m.mean_mu_star_N = means.mu_hat_prime_K;
    m.mean_mu_star_prime_K = means.mu_hat_prime_K;
    m.var_mu_star_prime_K = slot_var / Kd;
    break;
  }
  }
  return m;
}

double scheme_standard_error(const ClusterSummary& summary, Scheme scheme) {
  const std::size_t K = summary.K();
  if (scheme != Scheme::b2_individuals && K < 2) {
    throw Error(Errc::degenerate_k, "need at least 2 populations, got " + std::to_string(K));
  }
  switch (scheme) {
  case Scheme::b2_individuals: {
    std::vector<double> nk(K);
    for (std::size_t k = 0; k < K; ++k) {
      nk[k] = static_cast<double>(summary.n[k]);
    }
    const double N = static_cast<double>(summary.N());
    return std::sqrt(kernels::dot(nk, summary.v_hat) / (N * N));
  }
  case Scheme::b1_uniform: return std::sqrt(between_variance(summary) / static_cast<double>(K));
  case Scheme::b1_weighted: {
    const auto w = size_weights(summary.n);
    const double n_star = design_constants(summary.n).n_star;
    const double tau2 = kernels::weighted_sq_dev(w, summary.mu_hat, grand_means(summary).mu_hat_N);
    return std::sqrt(n_star / (1.0 - n_star) * tau2);
  }
  case Scheme::b3_cluster: return std::sqrt(*analytic_moments(summary, scheme).var_mu_star_prime_K);
  }
  return std::nan("");
}

ReplicateEngine::ReplicateEngine(const ClusterView& data, Scheme scheme, FormulaVariant formula)
    : data_(data), scheme_(scheme), formula_(formula), summary_(summarize(data)) {
  const std::size_t K = summary_.K();
  if (scheme != Scheme::b2_individuals && K < 2) {
    throw Error(Errc::degenerate_k,
                std::string(to_string(scheme)) + " needs at least 2 populations, got " + std::to_string(K));
  }
  checked_u32(K);
  checked_u32(data.N());
  ssd_.resize(K);
  for (std::size_t k = 0; k < K; ++k) {
    ssd_[k] = population_moments(data.population(k)).ssd;
  }
  weights_ = size_weights(summary_.n);
  n_star_ = design_constants(summary_.n).n_star;
  balanced_ = summary_.balanced();
  if (scheme == Scheme::b1_weighted) {
    owner_ = owner_table(summary_.n);
  }
  const std::size_t max_n = *std::max_element(summary_.n.begin(), summary_.n.end());
  slot_means_.resize(K);
  slot_ssd_.resize(K);
  idx_.resize(max_n);
  scratch_.resize(max_n);
}

ReplicateStats ReplicateEngine::finish(std::span<const double> slot_means, std::span<const double> slot_ssd) const {
  const SlotWeights slots{summary_.n, weights_, static_cast<double>(data_.N()), n_star_, balanced_};
  return finish_replicate(scheme_, slots, slot_means, slot_ssd, formula_);
}

ReplicateStats ReplicateEngine::draw(RngStream& rng) {
  const std::size_t K = summary_.K();
  const std::uint32_t K32 = static_cast<std::uint32_t>(K);
  auto draw_within = [&](std::size_t source, std::size_t count, std::size_t slot) {
    const auto pop = data_.population(source);
    const std::uint32_t n = static_cast<std::uint32_t>(pop.size());
    for (std::size_t i = 0; i < count; ++i) {
      idx_[i] = rng.uniform_below(n);
    }
    const std::span<double> out(scratch_.data(), count);
    kernels::gather(pop, std::span<const std::uint32_t>(idx_.data(), count), out);
    const auto m = population_moments(out);
    slot_means_[slot] = m.mean;
    slot_ssd_[slot] = m.ssd;
  };
  switch (scheme_) {
  case Scheme::b2_individuals:
    for (std::size_t k = 0; k < K; ++k) {
      draw_within(k, summary_.n[k], k);
    }
    break;
  case Scheme::b1_uniform:
    for (std::size_t k = 0; k < K; ++k) {
      const std::size_t l = rng.uniform_below(K32);
      slot_means_[k] = summary_.mu_hat[l];
      slot_ssd_[k] = ssd_[l];
    }
    break;
  case Scheme::b1_weighted: {
    const std::uint32_t N = static_cast<std::uint32_t>(owner_.size());
    for (std::size_t k = 0; k < K; ++k) {
      const std::size_t l = owner_[rng.uniform_below(N)];
      slot_means_[k] = summary_.mu_hat[l];
      slot_ssd_[k] = ssd_[l];
    }
    break;
  }
  case Scheme::b3_cluster:
    for (std::size_t k = 0; k < K; ++k) {
      const std::size_t l = rng.uniform_below(K32);
      draw_within(l, summary_.n[l] - 1, k);
    }
    break;
  }
  return finish(slot_means_, slot_ssd_);
}

void ReplicateEngine::run(kernels::PhiloxKey key, std::uint64_t first_stream, std::span<ReplicateStats> out) {
  for (std::size_t b = 0; b < out.size(); ++b) {
    RngStream rng(key, first_stream + b);
    out[b] = draw(rng);
  }
}

BootstrapRun run_bootstrap(const ClusterView& data, Scheme scheme, std::size_t B, std::uint64_t seed,
                           const BootstrapOptions& options) {
  if (B < 1) {
    throw Error(Errc::invalid_argument, "need at least one bootstrap replicate");
  }
  const ReplicateEngine prototype(data, scheme, options.formula);
  BootstrapRun run;
  run.scheme = scheme;
  run.B = B;
  run.seed = seed;
  run.stats.resize(B);
  const auto key = RngStream::key_for(seed, StreamDomain::bootstrap);
  parallel_chunks(B, options.threads, [&](std::size_t begin, std::size_t end) {
    ReplicateEngine engine = prototype;
    engine.run(key, begin, std::span<ReplicateStats>(run.stats).subspan(begin, end - begin));
  });
  const auto& summary = prototype.summary();
  const auto means = grand_means(summary);
  run.moments = analytic_moments(summary, scheme);
  run.mu_hat_N = means.mu_hat_N;
  run.mu_hat_prime_K = means.mu_hat_prime_K;
  run.standard_error = scheme_standard_error(summary, scheme);
  return run;
}

BootstrapRun run_bootstrap(const ClusterDataset& data, Scheme scheme, std::size_t B, std::uint64_t seed,
                           const BootstrapOptions& options) {
  return run_bootstrap(data.view(), scheme, B, seed, options);
}

MomentEstimate sample_moments(std::span<const double> x) {
  if (x.size() < 2) {
    throw Error(Errc::invalid_argument, "need at least 2 values for sample moments");
  }
  const double n = static_cast<double>(x.size());
  const double mean = kernels::sum(x) / n;
  const double var = kernels::sum_sq_dev(x, mean) / (n - 1.0);
  std::vector<double> fourth(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - mean;
    fourth[i] = d * d * d * d;
  }
  const double m4 = kernels::sum(fourth) / n;
  return {mean, var, std::sqrt(var / n), std::sqrt(std::max(0.0, m4 - var * var) / n)};
}

RunMoments mc_moments(const BootstrapRun& run) {
  std::vector<double> a(run.stats.size());
  std::vector<double> b(run.stats.size());
  for (std::size_t i = 0; i < run.stats.size(); ++i) {
    a[i] = run.stats[i].mu_star_N;
    b[i] = run.stats[i].mu_star_prime_K;
  }
  return {sample_moments(a), sample_moments(b)};
}

std::string_view to_string(IntervalMethod method) noexcept {
  switch (method) {
  case IntervalMethod::percentile: return "percentile";
  case IntervalMethod::bootstrap_t: return "bootstrap_t";
  case IntervalMethod::normal: return "normal";
  case IntervalMethod::edgeworth_corrected: return "edgeworth_corrected";
  }
  return "unknown";
}

IntervalMethod parse_interval_method(std::string_view name) {
  const std::string key = lower(name);
  for (IntervalMethod m : {IntervalMethod::percentile, IntervalMethod::bootstrap_t, IntervalMethod::normal,
                           IntervalMethod::edgeworth_corrected}) {
    if (key == to_string(m)) {
      return m;
    }
  }
  throw Error(Errc::invalid_argument, "unknown interval method '" + std::string(name) + "'");
}

double quantile_type7(std::span<const double> sorted, double p) {
  if (sorted.empty()) {
    throw Error(Errc::empty_input, "quantile of an empty sample");
  }
  if (!(p >= 0.0 && p <= 1.0)) {
    throw Error(Errc::invalid_argument, "quantile level must be in [0, 1]");
  }
  const double h = static_cast<double>(sorted.size() - 1) * p;
  const std::size_t lo = static_cast<std::size_t>(std::floor(h));
  if (lo + 1 >= sorted.size()) {
    return sorted.back();
  }
  const double frac = h - static_cast<double>(lo);
  if (frac == 0.0 || sorted[lo] == sorted[lo + 1]) {
    return sorted[lo];
  }
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

std::size_t min_replicates(double level) {
  if (!(level > 0.0 && level < 1.0)) {
    throw Error(Errc::invalid_argument, "confidence level must be in (0, 1)");
  }
  const double a = 1.0 - level;
  const double r = 20.0 / std::min(a, 1.0 - a);
  const double nearest = std::round(r);
  if (std::abs(r - nearest) <= 1e-9 * r) {
    return static_cast<std::size_t>(nearest);
  }
  return static_cast<std::size_t>(std::ceil(r));
}

IntervalEstimate confidence_interval(const BootstrapRun& run, Statistic statistic, double point, double scale,
                                     IntervalMethod method, double level, double skew) {
  const std::size_t needed = min_replicates(level);
  if (run.scheme == Scheme::b3_cluster && statistic == Statistic::mu_N) {
    throw Error(Errc::unsupported_inference, "B3_CLUSTER does not support inference on mu_N");
  }
  const double a = 1.0 - level;
  IntervalEstimate out{method, level, 0.0, 0.0};
  const bool resampling = method == IntervalMethod::percentile || method == IntervalMethod::bootstrap_t;
  if (resampling && run.stats.size() < needed) {
    throw Error(Errc::insufficient_replicates, "level " + std::to_string(level) + " needs at least " +
                                                   std::to_string(needed) + " replicates, got " +
                                                   std::to_string(run.stats.size()));
  }
  if (!resampling && (!(scale >= 0.0) || !std::isfinite(scale))) {
    throw Error(Errc::non_positive_scale, "interval scale must be non-negative and finite");
  }
  switch (method) {
  case IntervalMethod::percentile: {
    std::vector<double> theta(run.stats.size());
    for (std::size_t b = 0; b < theta.size(); ++b) {
      theta[b] = statistic == Statistic::mu_N ? run.stats[b].mu_star_N : run.stats[b].mu_star_prime_K;
    }
    std::sort(theta.begin(), theta.end());
    out.lower = quantile_type7(theta, a / 2.0);
    out.upper = quantile_type7(theta, 1.0 - a / 2.0);
    break;
  }
  case IntervalMethod::bootstrap_t: {
    if (statistic != natural_statistic(run.scheme)) {
      throw Error(Errc::unsupported_inference, std::string(to_string(run.scheme)) +
                                                   " replicate scales studentize " +
                                                   std::string(to_string(natural_statistic(run.scheme))));
    }
    if (!(scale > 0.0) || !std::isfinite(scale)) {
      throw Error(Errc::non_positive_scale, "bootstrap-t needs a positive standard error");
    }
    const double center = run.point(statistic);
    std::vector<double> t(run.stats.size());
    for (std::size_t b = 0; b < t.size(); ++b) {
      const auto& r = run.stats[b];
      const double s = r.scale();
      if (!(s > 0.0)) {
        throw Error(Errc::non_positive_scale, "replicate " + std::to_string(b) + " has a non-positive scale");
      }
      const double theta = statistic == Statistic::mu_N ? r.mu_star_N : r.mu_star_prime_K;
      t[b] = (theta - center) / s;
    }
    std::sort(t.begin(), t.end());
    out.lower = point - scale * quantile_type7(t, 1.0 - a / 2.0);
    out.upper = point - scale * quantile_type7(t, a / 2.0);
    break;
  }
  case IntervalMethod::normal: {
    const double z = normal_quantile(1.0 - a / 2.0);
    out.lower = point - z * scale;
    out.upper = point + z * scale;
    break;
  }
  case IntervalMethod::edgeworth_corrected: {
    const EdgeworthInputs inputs{1.0, skew, ExpansionKind::studentized};
    out.lower = point - scale * corrected_quantile(normal_quantile(1.0 - a / 2.0), inputs);
    out.upper = point - scale * corrected_quantile(normal_quantile(a / 2.0), inputs);
    break;
  }
  }
  return out;
}

} // namespace cboot
