#pragma once

// JSON and CSV serialization of reports and experiment configurations.
// Non-finite numbers and absent values are written as null.

#include <iosfwd>
#include <string>

#include "json.hpp"

#include "clusterboot/bootstrap.hpp"
#include "clusterboot/estimators.hpp"
#include "clusterboot/montecarlo.hpp"

namespace cboot {

using Json = nlohmann::ordered_json;

Json to_json(const EstimateReport& report);
/// Inverse of to_json; throws MalformedInput on missing or non-numeric fields.
EstimateReport estimate_report_from_json(const Json& j);

Json to_json(const AnalyticMoments& moments);
Json to_json(const MomentEstimate& m);
Json to_json(const IntervalEstimate& interval);
/// Scheme, B, seed, point estimates, standard error and analytic moments.
Json to_json(const BootstrapRun& run);

/// Header `replicate,mu_star_N,mu_star_prime_K,scale`.
void write_replicate_csv(std::ostream& out, const BootstrapRun& run);

Json to_json(const TruthParams& truth);
Json to_json(const ExperimentConfig& config);
Json to_json(const ExperimentReport& report);
Json to_json(const RateTable& table);
Json to_json(const ComparisonTable& table);
Json to_json(const ExactComparison& table);

/// Parses an experiment configuration. The grid is either a list of
/// {"K", "alpha", "c"} objects or one object with a "K" list and shared
/// "alpha" and "c". Throws MalformedInput with the offending key.
ExperimentConfig experiment_config_from_json(const Json& j);
ExperimentConfig read_experiment_config(std::istream& in);

/// Long-format CSV with header `K,alpha,scheme,metric,value`.
void write_long_csv(std::ostream& out, const ExperimentReport& report);
void write_long_csv(std::ostream& out, const RateTable& table);
void write_long_csv(std::ostream& out, const ComparisonTable& table);

/// Compact single-line JSON text.
std::string dump(const Json& j);
/// Indented JSON text with a trailing newline.
std::string dump_pretty(const Json& j);

} // namespace cboot
