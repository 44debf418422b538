#ifndef ABSA_TOOLS_GRADCHECK_SUITE_HPP_
#define ABSA_TOOLS_GRADCHECK_SUITE_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "absa/gradcheck.hpp"

namespace absa::tools {

struct GradcheckOutcome {
  std::string component;
  GradCheckReport report;
  double threshold = 0.0;
  // Only for crf: max |marginal - enumerated marginal|.
  std::optional<double> enumeration_error;
  bool passed = false;
};

inline constexpr double kComponentTolerance = 1e-4;
inline constexpr double kModelTolerance = 1e-3;
inline constexpr double kEnumerationTolerance = 1e-8;

std::span<const std::string_view> gradcheck_components();

/// Throws ConfigError for an unknown component.
GradcheckOutcome run_gradcheck(std::string_view component, std::uint64_t seed);

}  // namespace absa::tools

#endif  // ABSA_TOOLS_GRADCHECK_SUITE_HPP_
