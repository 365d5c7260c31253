#pragma once

#include "parischain/grid.hpp"
#include "parischain/model.hpp"
#include "parischain/types.hpp"

#include <Eigen/SparseCore>
#include <iosfwd>
#include <variant>
#include <vector>

namespace parischain {

enum class GenStructure { tridiagonal, dense, sparse };

enum class DriftScheme { central, central_with_upwind_fallback };

/// Transition-rate matrix of the approximating chain. Interior rows sum to
/// zero; the first and last states are absorbing (identically zero rows).
/// Tridiagonal storage is used for birth-and-death chains, dense for jump
/// models; the sparse variant backs regime-switching block generators.
class Generator {
public:
    using SpMat = Eigen::SparseMatrix<double>;

    static Generator tridiagonal(std::vector<double> states, Vec sub, Vec diag, Vec super);
    static Generator dense(std::vector<double> states, Mat g);
    static Generator sparse(std::vector<double> states, SpMat g);

    GenStructure structure() const { return structure_; }
    Index size() const { return static_cast<Index>(states_.size()); }
    const std::vector<double>& states() const { return states_; }

    double entry(Index i, Index j) const;
    double exit_rate(Index i) const { return -entry(i, i); }
    bool row_absorbing(Index i) const;

    Vec apply(const Vec& v) const;
    CVec apply(const CVec& v) const;
    Mat to_dense() const;

    // tridiagonal accessors: sub(i) = G(i+1, i), super(i) = G(i, i+1)
    const Vec& sub() const { return std::get<Tri>(data_).sub; }
    const Vec& diag() const { return std::get<Tri>(data_).diag; }
    const Vec& super() const { return std::get<Tri>(data_).super; }
    const Mat& matrix() const { return std::get<Mat>(data_); }
    const SpMat& sparse_matrix() const { return std::get<SpMat>(data_); }

    double max_row_sum_residual() const;
    double min_off_diagonal() const;

    /// Visits the nonzero off-diagonal entries of row i.
    void for_each_offdiag(Index i, const std::function<void(Index, double)>& fn) const;

private:
    struct Tri {
        Vec sub, diag, super;
    };
    Generator() = default;
    GenStructure structure_ = GenStructure::tridiagonal;
    std::vector<double> states_;
    std::variant<Tri, Mat, SpMat> data_;
};

struct RowDiagnostics {
    double min_off_diagonal;
    double max_row_sum_residual;
    GenStructure structure;
};

/// Builds the chain generator from the model on the given grid. With the
/// default scheme, nodes where central differencing would produce a negative
/// neighbor rate fall back to one-sided drift differencing; with
/// DriftScheme::central such nodes raise NumericalError naming the node.
Generator build_generator(const ModelSpec& model, const Grid& grid,
                          DriftScheme scheme = DriftScheme::central_with_upwind_fallback);

RowDiagnostics row_diagnostics(const Generator& gen);

/// Triplet CSV (row, col, rate) of all nonzero entries.
void export_triplets(const Generator& gen, std::ostream& os);

/// Index of the node matching x0, or UsageError if none is close enough.
Index state_index(const Generator& gen, double x0);

} // namespace parischain
