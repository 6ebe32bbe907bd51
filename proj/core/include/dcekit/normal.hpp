#pragma once

namespace dce {

/// Standard normal CDF.
double normal_cdf(double x) noexcept;

/// Inverse standard normal CDF (Wichura AS241, ~1e-16 relative accuracy).
/// Arguments outside (0, 1) map to -inf / +inf.
double inverse_normal_cdf(double p) noexcept;

}  // namespace dce
