#pragma once

namespace ksgraph {

// Standard normal distribution function.
double normal_cdf(double x);

// Upper tail 1 - Phi(x), accurate far into the tail.
double normal_survival(double x);

// Inverse of normal_cdf on (0, 1). Returns -inf / +inf at 0 / 1.
double normal_quantile(double p);

// P(|Z| >= |z|) for standard normal Z.
double two_sided_p_value(double z);

}  // namespace ksgraph
