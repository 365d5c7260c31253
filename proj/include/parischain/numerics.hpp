#pragma once

#include <functional>
#include <vector>

namespace parischain {

/// Row k of Pascal's triangle scaled by 2^-k (exact in double for k <= ~45).
std::vector<double> binomial_half_weights(int k);

/// Exponential integral E1(x) = int_x^inf e^-u / u du, x > 0.
double expint_e1(double x);

/// Adaptive Gauss-Kronrod (G7,K15) quadrature on a finite interval.
/// Throws NumericalError when the tolerance cannot be met.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double abs_tol = 1e-12, double rel_tol = 1e-10);

/// Integral over [a, inf) of a decaying integrand, by doubling windows.
double integrate_tail(const std::function<double(double)>& f, double a,
                      double abs_tol = 1e-12);

/// Runs fn(i) for i in [0, n); work is split across `threads` when > 1.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                  int threads = 1);

/// Hardware thread count with a sane fallback.
int default_threads();

/// SplitMix64 step; used to derive independent per-path RNG seeds.
std::uint64_t splitmix64(std::uint64_t& state);

} // namespace parischain
