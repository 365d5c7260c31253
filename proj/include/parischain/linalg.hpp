#pragma once

#include "parischain/generator.hpp"
#include "parischain/types.hpp"

#include <memory>
#include <optional>

namespace parischain {

/// Composition pattern of the masked operator: `resolvent` is
/// (S M - M G + (I - M)) with S the (possibly diagonal) shift, `plain` drops
/// the identity filler on the complement (only sensible with a full mask).
enum class MaskPattern { resolvent, plain };

/// Shifted masked linear operator with a reusable factorization. Real shifts
/// take a real-arithmetic fast path; complex right-hand sides against a real
/// factorization split into two real solves.
class MaskedOperator {
public:
    MaskedOperator(const Generator& gen, Mask in_mask, Complex shift,
                   MaskPattern pattern = MaskPattern::resolvent);
    MaskedOperator(const Generator& gen, Mask in_mask, CVec diag_shift,
                   MaskPattern pattern = MaskPattern::resolvent);
    ~MaskedOperator();
    MaskedOperator(MaskedOperator&&) noexcept;
    MaskedOperator& operator=(MaskedOperator&&) noexcept;

    bool real_arithmetic() const;
    Index size() const;

    Vec apply(const Vec& x) const;
    CVec apply(const CVec& x) const;

    /// Solves op z = rhs and verifies the residual against 1e-10 * |rhs|.
    Vec solve(const Vec& rhs) const;
    CVec solve(const CVec& rhs) const;
    Mat solve(const Mat& rhs) const;
    CMat solve(const CMat& rhs) const;

    CVec solve_transpose(const CVec& rhs) const;
    Vec solve_transpose(const Vec& rhs) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

CVec masked_solve(const MaskedOperator& op, const CVec& rhs);
CMat masked_solve(const MaskedOperator& op, const CMat& rhs);

struct ExpmvOptions {
    int steps = 16;
    enum class Extrap { none, two_level, three_level };
    Extrap extrap = Extrap::two_level;
};

/// Action of exp(M (G - diag(shift)) D) computed from resolvent powers
/// (I - M (G - diag(shift)) D/m)^-m, optionally combining runs at m, 2m (and
/// 4m) to cancel the low-order error in 1/m.
class MaskedExp {
public:
    MaskedExp(const Generator& gen, Mask in_mask, double D, ExpmvOptions opts = {},
              std::optional<CVec> diag_shift = std::nullopt);
    ~MaskedExp();
    MaskedExp(MaskedExp&&) noexcept;
    MaskedExp& operator=(MaskedExp&&) noexcept;

    bool real() const;
    Index size() const;

    Vec apply(const Vec& b) const;
    CVec apply(const CVec& b) const;
    Mat apply(const Mat& b) const;
    CMat apply(const CMat& b) const;
    Vec apply_transpose(const Vec& b) const;
    CVec apply_transpose(const CVec& b) const;

    /// Materialized matrix (real shift only); cached.
    const Mat& full() const;
    /// Materialized matrix for complex shifts; cached.
    const CMat& full_complex() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

CVec expmv(const Generator& gen, const Mask& in_mask, double D, const CVec& b,
           const ExpmvOptions& opts = {});
Vec expmv(const Generator& gen, const Mask& in_mask, double D, const Vec& b,
          const ExpmvOptions& opts = {});

} // namespace parischain
