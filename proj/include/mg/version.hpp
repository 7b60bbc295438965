#pragma once

namespace mg {

/// Version string embedded in every output file for provenance.
inline constexpr const char* kVersion = "mg-cavity 1.0.0";

}  // namespace mg
