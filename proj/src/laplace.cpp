#include "parischain/laplace.hpp"
#include "parischain/errors.hpp"
#include "parischain/numerics.hpp"

#include <cmath>
#include <exception>
#include <mutex>
#include <numbers>
#include <string>

namespace parischain {

LaplaceGrid build_nodes(double t, const InversionParams& params) {
    if (!(t > 0.0)) throw DomainError("Laplace inversion requires t > 0");
    if (!(params.A > 0.0) || params.k1 < 0 || params.k2 < 0)
        throw DomainError("Laplace inversion requires A > 0 and k1, k2 >= 0");

    LaplaceGrid g;
    g.t = t;
    g.A = params.A;
    g.k1 = params.k1;
    g.k2 = params.k2;
    const int terms = params.k1 + params.k2;
    g.nodes.reserve(static_cast<std::size_t>(terms) + 1);
    g.weights.reserve(static_cast<std::size_t>(terms) + 1);

    const double lead = std::exp(0.5 * params.A);
    g.nodes.push_back(Complex(params.A / (2.0 * t), 0.0));
    g.weights.push_back(lead / (2.0 * t));

    // partial sums s_{k2}..s_{k2+k1} averaged with binomial weights; the
    // flattened weight of term j is the upper binomial tail from j - k2
    const std::vector<double> binom = binomial_half_weights(params.k1);
    std::vector<double> tail(static_cast<std::size_t>(params.k1) + 1);
    double acc = 0.0;
    for (int i = params.k1; i >= 0; --i) {
        acc += binom[static_cast<std::size_t>(i)];
        tail[static_cast<std::size_t>(i)] = acc;
    }

    for (int j = 1; j <= terms; ++j) {
        g.nodes.push_back(Complex(params.A / (2.0 * t), j * std::numbers::pi / t));
        const double avg = j <= params.k2 ? 1.0 : tail[static_cast<std::size_t>(j - params.k2)];
        const double sign = j % 2 == 0 ? 1.0 : -1.0;
        g.weights.push_back(sign * avg * lead / t);
    }
    return g;
}

double invert(const std::function<Complex(Complex)>& transform,
              const LaplaceGrid& grid, int threads) {
    std::vector<double> re(grid.size());
    std::exception_ptr failure;
    std::mutex fail_mutex;
    parallel_for(
        grid.size(),
        [&](std::size_t j) {
            try {
                re[j] = transform(grid.nodes[j]).real();
            } catch (...) {
                std::lock_guard<std::mutex> lock(fail_mutex);
                if (!failure) {
                    try {
                        std::throw_with_nested(NumericalError(
                            "transform evaluation failed at node " + std::to_string(j)));
                    } catch (...) {
                        failure = std::current_exception();
                    }
                }
            }
        },
        threads);
    if (failure) std::rethrow_exception(failure);

    double sum = 0.0;
    for (std::size_t j = 0; j < grid.size(); ++j) sum += grid.weights[j] * re[j];
    return sum;
}

} // namespace parischain
