#include "clusterboot/error.hpp"

namespace cboot {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
  case Errc::invalid_argument: return "InvalidArgument";
  case Errc::invalid_design: return "InvalidDesign";
  case Errc::invalid_truth: return "InvalidTruth";
  case Errc::empty_input: return "EmptyInput";
  case Errc::empty_population: return "EmptyPopulation";
  case Errc::singleton_population: return "SingletonPopulation";
  case Errc::degenerate_k: return "DegenerateK";
  case Errc::non_positive_variance: return "NonPositiveVariance";
  case Errc::non_positive_scale: return "NonPositiveScale";
  case Errc::zero_gamma: return "ZeroGamma";
  case Errc::too_large: return "TooLarge";
  case Errc::insufficient_replicates: return "InsufficientReplicates";
  case Errc::grid_too_small: return "GridTooSmall";
  case Errc::malformed_input: return "MalformedInput";
  case Errc::unsupported_inference: return "UnsupportedInference";
  }
  return "Unknown";
}

Error::Error(Errc code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

} // namespace cboot
