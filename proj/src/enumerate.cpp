#include "clusterboot/enumerate.hpp"

#include <cmath>
#include <map>
#include <string>

#include "clusterboot/error.hpp"

namespace cboot {

double outcome_count(const ClusterDataset& data, Scheme scheme) {
  const double K = static_cast<double>(data.K());
  switch (scheme) {
  case Scheme::b2_individuals: {
    double count = 1.0;
    for (std::size_t k = 0; k < data.K(); ++k) {
      const double n = static_cast<double>(data.size(k));
      count *= std::pow(n, n);
    }
    return count;
  }
  case Scheme::b1_uniform:
  case Scheme::b1_weighted: return std::pow(K, K);
  case Scheme::b3_cluster: {
    double per_slot = 0.0;
    for (std::size_t l = 0; l < data.K(); ++l) {
      const double n = static_cast<double>(data.size(l));
      per_slot += std::pow(n, n - 1.0);
    }
    return std::pow(per_slot, K);
  }
  }
  return 0.0;
}

namespace {

struct SlotOption {
  double probability;
  double mean;
  double ssd;
  std::vector<std::uint32_t> key;
};

// Every ordered draw of `count` indices from {0..n-1}, probability n^-count each.
std::vector<std::vector<std::uint32_t>> index_tuples(std::uint32_t n, std::size_t count) {
  std::vector<std::vector<std::uint32_t>> out;
  std::vector<std::uint32_t> t(count, 0);
  while (true) {
    out.push_back(t);
    std::size_t pos = 0;
    while (pos < count && ++t[pos] == n) {
      t[pos] = 0;
      ++pos;
    }
    if (pos == count) {
      break;
    }
  }
  return out;
}

SlotOption draw_option(const ClusterDataset& data, std::size_t source, const std::vector<std::uint32_t>& idx,
                       double probability, bool with_source) {
  const auto pop = data.population(source);
  double total = 0.0;
  for (std::uint32_t i : idx) {
    total += pop[i];
  }
  const double mean = total / static_cast<double>(idx.size());
  double ssd = 0.0;
  for (std::uint32_t i : idx) {
    ssd += (pop[i] - mean) * (pop[i] - mean);
  }
  SlotOption o{probability, mean, ssd, {}};
  if (with_source) {
    o.key.push_back(static_cast<std::uint32_t>(source));
  }
  o.key.insert(o.key.end(), idx.begin(), idx.end());
  return o;
}

SlotOption whole_population(const ClusterDataset& data, std::size_t source, double probability) {
  std::vector<std::uint32_t> all(data.size(source));
  for (std::uint32_t i = 0; i < all.size(); ++i) {
    all[i] = i;
  }
  SlotOption o = draw_option(data, source, all, probability, true);
  o.key.resize(1);
  return o;
}

std::vector<std::vector<SlotOption>> slot_options(const ClusterDataset& data, Scheme scheme) {
  const std::size_t K = data.K();
  std::vector<std::vector<SlotOption>> slots(K);
  double N = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    N += static_cast<double>(data.size(k));
  }
  for (std::size_t k = 0; k < K; ++k) {
    switch (scheme) {
    case Scheme::b2_individuals: {
      const std::uint32_t n = static_cast<std::uint32_t>(data.size(k));
      const double p = std::pow(static_cast<double>(n), -static_cast<double>(n));
      for (const auto& idx : index_tuples(n, n)) {
        slots[k].push_back(draw_option(data, k, idx, p, false));
      }
      break;
    }
    case Scheme::b1_uniform:
      for (std::size_t l = 0; l < K; ++l) {
        slots[k].push_back(whole_population(data, l, 1.0 / static_cast<double>(K)));
      }
      break;
    case Scheme::b1_weighted:
      for (std::size_t l = 0; l < K; ++l) {
        slots[k].push_back(whole_population(data, l, static_cast<double>(data.size(l)) / N));
      }
      break;
    case Scheme::b3_cluster:
      for (std::size_t l = 0; l < K; ++l) {
        const std::uint32_t n = static_cast<std::uint32_t>(data.size(l));
        const double p = 1.0 / static_cast<double>(K) * std::pow(static_cast<double>(n), -static_cast<double>(n - 1));
        for (const auto& idx : index_tuples(n, n - 1)) {
          slots[k].push_back(draw_option(data, l, idx, p, true));
        }
      }
      break;
    }
  }
  return slots;
}

} // namespace

ExactLaw enumerate_bootstrap(const ClusterDataset& data, Scheme scheme, FormulaVariant formula,
                             std::size_t max_outcomes) {
  const std::size_t K = data.K();
  if (K == 0) {
    throw Error(Errc::empty_input, "no populations");
  }
  for (std::size_t k = 0; k < K; ++k) {
    if (data.size(k) < 2) {
      throw Error(Errc::singleton_population, "population " + std::to_string(k + 1) + " has fewer than 2 values");
    }
  }
  const double count = outcome_count(data, scheme);
  if (count > static_cast<double>(max_outcomes)) {
    throw Error(Errc::too_large, "enumeration needs " + std::to_string(count) + " outcomes, limit is " +
                                     std::to_string(max_outcomes));
  }

  const auto slots = slot_options(data, scheme);
  double N = 0.0;
  double sum_sq_n = 0.0;
  std::vector<double> n(K);
  for (std::size_t k = 0; k < K; ++k) {
    n[k] = static_cast<double>(data.size(k));
    N += n[k];
    sum_sq_n += n[k] * n[k];
  }
  const double n_star = sum_sq_n / (N * N);
  const double Kd = static_cast<double>(K);

  ExactLaw law{};
  law.scheme = scheme;
  law.mean_v_star.assign(K, 0.0);
  law.outcomes.reserve(static_cast<std::size_t>(count));
  std::vector<std::size_t> choice(K, 0);
  std::vector<double> m(K);
  while (true) {
    ExactOutcome o{1.0, 0.0, 0.0, 0.0, std::nan(""), std::nan(""), {}};
    for (std::size_t k = 0; k < K; ++k) {
      const SlotOption& opt = slots[k][choice[k]];
      o.probability *= opt.probability;
      m[k] = opt.mean;
      o.key.insert(o.key.end(), opt.key.begin(), opt.key.end());
    }
    for (std::size_t k = 0; k < K; ++k) {
      o.mu_star_N += n[k] / N * m[k];
      o.mu_star_prime_K += m[k];
    }
    o.mu_star_prime_K /= Kd;
    if (K >= 2) {
      double dev_K = 0.0;
      double dev_N = 0.0;
      for (std::size_t k = 0; k < K; ++k) {
        dev_K += (m[k] - o.mu_star_prime_K) * (m[k] - o.mu_star_prime_K);
        dev_N += n[k] * (m[k] - o.mu_star_N) * (m[k] - o.mu_star_N);
      }
      o.s2_K_star = dev_K / (Kd - 1.0);
      o.s2_N_star = formula == FormulaVariant::printed ? n_star / (n_star - 1.0) * dev_N
                                                       : n_star / (1.0 - n_star) * dev_N / N;
    }
    double b2_scale = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
      const double v_star = n[k] / ((n[k] - 1.0) * (n[k] - 1.0)) * slots[k][choice[k]].ssd;
      law.mean_v_star[k] += o.probability * v_star;
      b2_scale += (n[k] - 1.0) * v_star;
    }
    switch (scheme) {
    case Scheme::b2_individuals: o.scale2 = b2_scale / (N * N); break;
    case Scheme::b1_uniform:
    case Scheme::b3_cluster: o.scale2 = o.s2_K_star / Kd; break;
    case Scheme::b1_weighted: o.scale2 = o.s2_N_star; break;
    }
    law.outcomes.push_back(std::move(o));

    std::size_t pos = 0;
    while (pos < K && ++choice[pos] == slots[pos].size()) {
      choice[pos] = 0;
      ++pos;
    }
    if (pos == K) {
      break;
    }
  }

  for (const auto& o : law.outcomes) {
    law.total_probability += o.probability;
    law.mean_mu_star_N += o.probability * o.mu_star_N;
    law.mean_mu_star_prime_K += o.probability * o.mu_star_prime_K;
    law.mean_scale2 += o.probability * o.scale2;
    law.mean_s2_K_star += o.probability * o.s2_K_star;
    law.mean_s2_N_star += o.probability * o.s2_N_star;
  }
  for (const auto& o : law.outcomes) {
    law.var_mu_star_N += o.probability * (o.mu_star_N - law.mean_mu_star_N) * (o.mu_star_N - law.mean_mu_star_N);
    law.var_mu_star_prime_K +=
        o.probability * (o.mu_star_prime_K - law.mean_mu_star_prime_K) * (o.mu_star_prime_K - law.mean_mu_star_prime_K);
  }
  return law;
}

double total_variation(const ExactLaw& a, const ExactLaw& b) {
  std::map<std::vector<std::uint32_t>, double> diff;
  for (const auto& o : a.outcomes) {
    diff[o.key] += o.probability;
  }
  for (const auto& o : b.outcomes) {
    diff[o.key] -= o.probability;
  }
  double tv = 0.0;
  for (const auto& [key, d] : diff) {
    tv += std::abs(d);
  }
  return 0.5 * tv;
}

} // namespace cboot
