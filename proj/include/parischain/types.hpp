#pragma once

#include <Eigen/Dense>
#include <complex>

namespace parischain {

using Complex = std::complex<double>;
using Vec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXd;
using CMat = Eigen::MatrixXcd;
using Index = Eigen::Index;

/// Diagonal 0/1 region indicator, stored as its diagonal.
using Mask = Eigen::ArrayXd;

inline Mask mask_complement(const Mask& m) { return 1.0 - m; }

inline Index mask_count(const Mask& m) {
    return static_cast<Index>((m > 0.5).count());
}

} // namespace parischain
