#pragma once

#include "parischain/generator.hpp"
#include "parischain/linalg.hpp"
#include "parischain/types.hpp"

#include <memory>
#include <optional>
#include <vector>

namespace parischain {

enum class Side { below, above };

/// Single-sided Parisian stopping-time specification: the excursion clock
/// ticks strictly below the barrier (side = below, uses x < L / x >= L) or
/// strictly above it (side = above, uses x > L / x <= L).
struct ParisianProblem {
    Side side = Side::below;
    double barrier = 0.0;
    double window = 0.0; // D

    /// 1 where the clock ticks.
    Mask in_mask(const Generator& gen) const;
};

/// First-passage building blocks at one transform argument q:
/// V = exp(M G D) M, U1 = (q M - M G + (I-M))^-1 (I-M),
/// U2 = e^{-qD} exp(M G D) M U1, Ureturn = (q (I-M) - (I-M) G + M)^-1 M,
/// with M the in-region mask.
struct FirstPassageBlocks {
    Mat V;
    CMat U1;
    CMat U2;
    CMat Ureturn;
};

FirstPassageBlocks first_passage_blocks(const Generator& gen, const ParisianProblem& prob,
                                        Complex q, const ExpmvOptions& opts = {});

struct ParisianTransform {
    Complex q;
    CMat H; // H[x][y] = E_x[e^{-q tau} 1{Y_tau = y}]
    CVec h; // row sums
};

/// Diagnostics from the reduced (birth-and-death style) path.
struct ReducedDiagnostics {
    Complex system_det; // det(I_k - coupling); bounded away from 0 for Re q > 0
};

/// Shared per-(generator, mask, window) state for transform evaluation across
/// many q nodes: the masked exponential is factored once, landing sets are
/// detected once. Evaluations at distinct q are independent and const.
class ParisianEngine {
public:
    ParisianEngine(const Generator& gen, Mask in_mask, double window,
                   ExpmvOptions opts = {});
    ~ParisianEngine();
    ParisianEngine(ParisianEngine&&) noexcept;

    /// H(q) * rhs. Uses the reduced O(m n) path when the landing sets are
    /// small (birth-and-death chains, regime-switching blocks with shared
    /// price map), the dense O(n^3) assembly otherwise.
    CVec apply_H(Complex q, const CVec& rhs, ReducedDiagnostics* diag = nullptr) const;
    Vec apply_H(double q, const Vec& rhs) const;

    /// Forces one specific path; used by the equivalence oracle.
    CVec apply_H_general(Complex q, const CVec& rhs) const;
    CVec apply_H_reduced(Complex q, const CVec& rhs, ReducedDiagnostics* diag = nullptr) const;

    /// h(q) = H(q) e.
    CVec h(Complex q) const;
    /// Full H(q) via the dense assembly (state-resolved output).
    CMat H(Complex q) const;
    /// One row of H(q) via transposed solves on the reduced path.
    CVec h_row(Complex q, Index row) const;

    bool reduced_available() const;
    const Mask& mask() const;
    double window() const;
    const Generator& generator() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// O(n^3) general-path transform (Theorem-level matrix assembly).
ParisianTransform parisian_transform_general(const Generator& gen,
                                             const ParisianProblem& prob, Complex q,
                                             const ExpmvOptions& opts = {});

/// Birth-and-death fast path; requires a tridiagonal generator. Produces the
/// same values as the general path within 1e-10.
ParisianTransform parisian_transform_bd(const Generator& gen, const ParisianProblem& prob,
                                        Complex q, const ExpmvOptions& opts = {});

} // namespace parischain
