#pragma once

namespace cefb {

inline constexpr const char* kVersion = "1.0.0";
// Bumped whenever the meaning of a constraint flag changes (curvature units,
// discretization, bin-mean matching rule), so stored results can be matched
// to the semantics that produced them.
inline constexpr const char* kConstraintSemantics = "constraints-v1";

}  // namespace cefb
