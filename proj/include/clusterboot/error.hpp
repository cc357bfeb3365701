#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cboot {

enum class Errc {
  invalid_argument,
  invalid_design,
  invalid_truth,
  empty_input,
  empty_population,
  singleton_population,
  degenerate_k,
  non_positive_variance,
  non_positive_scale,
  zero_gamma,
  too_large,
  insufficient_replicates,
  grid_too_small,
  malformed_input,
  unsupported_inference,
};

/// Stable name of an error code, e.g. "DegenerateK". Used in machine-readable diagnostics.
std::string_view to_string(Errc code) noexcept;

class Error : public std::runtime_error {
public:
  Error(Errc code, const std::string& message);

  Errc code() const noexcept { return code_; }

private:
  Errc code_;
};

} // namespace cboot
