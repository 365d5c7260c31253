#pragma once

#include "parischain/types.hpp"

#include <functional>
#include <vector>

namespace parischain {

struct InversionParams {
    double A = 15.0;
    int k1 = 20;
    int k2 = 20;
};

/// Inversion nodes q_j and real weights w_j for one evaluation time t. The
/// recovered value is sum_j w_j * Re(ghat(q_j)); the weights carry the Euler
/// binomial averaging of the alternating series.
struct LaplaceGrid {
    double t = 0.0;
    double A = 0.0;
    int k1 = 0, k2 = 0;
    std::vector<Complex> nodes;
    std::vector<double> weights;
    std::size_t size() const { return nodes.size(); }
};

LaplaceGrid build_nodes(double t, const InversionParams& params = {});

/// Euler-summation estimate of g(t). Node evaluations may run concurrently;
/// the final summation order is fixed for reproducibility.
double invert(const std::function<Complex(Complex)>& transform,
              const LaplaceGrid& grid, int threads = 1);

} // namespace parischain
