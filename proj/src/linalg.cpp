#include "parischain/linalg.hpp"
#include "parischain/errors.hpp"

#include <Eigen/LU>
#include <Eigen/SparseLU>

#include <cmath>
#include <mutex>
#include <string>
#include <vector>

namespace parischain {

namespace {

template <typename S>
using VectorX = Eigen::Matrix<S, Eigen::Dynamic, 1>;
template <typename S>
using MatrixX = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using SparseX = Eigen::SparseMatrix<S>;

// Tridiagonal LU with partial pivoting (gttrf/gtts2 layout).
template <typename S>
struct TriLU {
    VectorX<S> dl, d, du, du2;
    std::vector<int> swap_next;
    bool singular = false;

    static TriLU factor(VectorX<S> sub, VectorX<S> diag, VectorX<S> super) {
        TriLU f;
        const Index n = diag.size();
        f.dl = std::move(sub);
        f.d = std::move(diag);
        f.du = std::move(super);
        f.du2 = VectorX<S>::Zero(std::max<Index>(n - 2, 0));
        f.swap_next.assign(static_cast<std::size_t>(std::max<Index>(n - 1, 0)), 0);
        for (Index i = 0; i + 1 < n; ++i) {
            if (std::abs(f.d[i]) >= std::abs(f.dl[i])) {
                if (f.d[i] == S(0)) { f.singular = true; return f; }
                const S fact = f.dl[i] / f.d[i];
                f.dl[i] = fact;
                f.d[i + 1] -= fact * f.du[i];
                if (i + 2 < n) f.du2[i] = S(0);
            } else {
                const S fact = f.d[i] / f.dl[i];
                f.d[i] = f.dl[i];
                f.dl[i] = fact;
                const S temp = f.du[i];
                f.du[i] = f.d[i + 1];
                f.d[i + 1] = temp - fact * f.d[i + 1];
                if (i + 2 < n) {
                    f.du2[i] = f.du[i + 1];
                    f.du[i + 1] = -fact * f.du[i + 1];
                }
                f.swap_next[static_cast<std::size_t>(i)] = 1;
            }
        }
        if (f.d[n - 1] == S(0)) f.singular = true;
        return f;
    }

    template <typename T>
    void solve_in_place(Eigen::Ref<VectorX<T>> b) const {
        const Index n = d.size();
        for (Index i = 0; i + 1 < n; ++i) {
            if (!swap_next[static_cast<std::size_t>(i)]) {
                b[i + 1] -= dl[i] * b[i];
            } else {
                const T temp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = temp - dl[i] * b[i];
            }
        }
        b[n - 1] /= d[n - 1];
        if (n > 1) b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / d[n - 2];
        for (Index i = n - 3; i >= 0; --i)
            b[i] = (b[i] - du[i] * b[i + 1] - du2[i] * b[i + 2]) / d[i];
    }
};

// Assembled masked matrix A with row model
//   row i = alpha_i e_i - beta G.row(i)   (in-mask)
//   row i = gamma e_i                     (off-mask)
// in the storage format of the underlying generator.
template <typename S>
class MaskedMatrix {
public:
    MaskedMatrix(const Generator& gen, const Mask& mask, const VectorX<S>& alpha,
                 S beta, S gamma)
        : structure_(gen.structure()), n_(gen.size()) {
        switch (structure_) {
            case GenStructure::tridiagonal: {
                sub_ = VectorX<S>::Zero(n_ - 1);
                diag_ = VectorX<S>::Zero(n_);
                super_ = VectorX<S>::Zero(n_ - 1);
                for (Index i = 0; i < n_; ++i) {
                    if (mask[i] > 0.5) {
                        diag_[i] = alpha[i] - beta * gen.diag()[i];
                        if (i > 0) sub_[i - 1] = -beta * gen.sub()[i - 1];
                        if (i + 1 < n_) super_[i] = -beta * gen.super()[i];
                    } else {
                        diag_[i] = gamma;
                    }
                }
                tri_ = TriLU<S>::factor(sub_, diag_, super_);
                break;
            }
            case GenStructure::dense: {
                dense_ = (-beta) * gen.matrix().template cast<S>();
                for (Index i = 0; i < n_; ++i) {
                    if (mask[i] > 0.5) {
                        dense_(i, i) += alpha[i];
                    } else {
                        dense_.row(i).setZero();
                        dense_(i, i) = gamma;
                    }
                }
                dense_lu_ = std::make_unique<Eigen::PartialPivLU<MatrixX<S>>>(dense_);
                break;
            }
            case GenStructure::sparse: {
                std::vector<Eigen::Triplet<S>> trips;
                const auto& g = gen.sparse_matrix();
                trips.reserve(static_cast<std::size_t>(g.nonZeros()) + static_cast<std::size_t>(n_));
                for (int k = 0; k < g.outerSize(); ++k) {
                    for (typename SparseX<double>::InnerIterator it(g, k); it; ++it) {
                        const Index i = it.row(), j = it.col();
                        if (mask[i] > 0.5)
                            trips.emplace_back(static_cast<int>(i), static_cast<int>(j),
                                               -beta * S(it.value()));
                    }
                }
                for (Index i = 0; i < n_; ++i)
                    trips.emplace_back(static_cast<int>(i), static_cast<int>(i),
                                       mask[i] > 0.5 ? alpha[i] : gamma);
                sparse_.resize(n_, n_);
                sparse_.setFromTriplets(trips.begin(), trips.end());
                sparse_.makeCompressed();
                sparse_lu_ = std::make_unique<Eigen::SparseLU<SparseX<S>>>();
                sparse_lu_->compute(sparse_);
                if (sparse_lu_->info() != Eigen::Success)
                    throw NumericalError("sparse masked factorization failed");
                break;
            }
        }
        if (structure_ == GenStructure::tridiagonal && tri_.singular)
            throw NumericalError("singular masked tridiagonal operator");
    }

    Index size() const { return n_; }

    template <typename T>
    VectorX<T> apply(const VectorX<T>& x) const {
        VectorX<T> out(n_);
        switch (structure_) {
            case GenStructure::tridiagonal:
                for (Index i = 0; i < n_; ++i) {
                    T s = T(diag_[i]) * x[i];
                    if (i > 0) s += T(sub_[i - 1]) * x[i - 1];
                    if (i + 1 < n_) s += T(super_[i]) * x[i + 1];
                    out[i] = s;
                }
                return out;
            case GenStructure::dense:
                return dense_.template cast<T>() * x;
            case GenStructure::sparse:
                return sparse_.template cast<T>() * x;
        }
        return out;
    }

    template <typename T>
    void solve_in_place(Eigen::Ref<MatrixX<T>> b) const {
        switch (structure_) {
            case GenStructure::tridiagonal:
                for (Index c = 0; c < b.cols(); ++c) {
                    VectorX<T> col = b.col(c);
                    tri_.template solve_in_place<T>(col);
                    b.col(c) = col;
                }
                return;
            case GenStructure::dense:
                if constexpr (std::is_same_v<T, S>) {
                    b = dense_lu_->solve(b);
                } else {
                    // real factorization, complex right-hand side
                    MatrixX<double> re = b.real(), im = b.imag();
                    re = dense_lu_->solve(re);
                    im = dense_lu_->solve(im);
                    b.real() = re;
                    b.imag() = im;
                }
                return;
            case GenStructure::sparse:
                if constexpr (std::is_same_v<T, S>) {
                    b = sparse_lu_->solve(b).eval();
                } else {
                    MatrixX<double> re = b.real(), im = b.imag();
                    re = sparse_lu_->solve(re).eval();
                    im = sparse_lu_->solve(im).eval();
                    b.real() = re;
                    b.imag() = im;
                }
                return;
        }
    }

    template <typename T>
    void solve_transpose_in_place(Eigen::Ref<MatrixX<T>> b) const {
        ensure_transpose();
        switch (structure_) {
            case GenStructure::tridiagonal:
                for (Index c = 0; c < b.cols(); ++c) {
                    VectorX<T> col = b.col(c);
                    tri_t_->template solve_in_place<T>(col);
                    b.col(c) = col;
                }
                return;
            case GenStructure::dense:
                if constexpr (std::is_same_v<T, S>) {
                    b = dense_lu_t_->solve(b);
                } else {
                    MatrixX<double> re = b.real(), im = b.imag();
                    re = dense_lu_t_->solve(re);
                    im = dense_lu_t_->solve(im);
                    b.real() = re;
                    b.imag() = im;
                }
                return;
            case GenStructure::sparse:
                if constexpr (std::is_same_v<T, S>) {
                    b = sparse_lu_t_->solve(b).eval();
                } else {
                    MatrixX<double> re = b.real(), im = b.imag();
                    re = sparse_lu_t_->solve(re).eval();
                    im = sparse_lu_t_->solve(im).eval();
                    b.real() = re;
                    b.imag() = im;
                }
                return;
        }
    }

private:
    void ensure_transpose() const {
        std::call_once(transpose_once_, [&] {
            switch (structure_) {
                case GenStructure::tridiagonal:
                    tri_t_ = std::make_unique<TriLU<S>>(
                        TriLU<S>::factor(super_, diag_, sub_));
                    if (tri_t_->singular)
                        throw NumericalError("singular transposed tridiagonal operator");
                    break;
                case GenStructure::dense:
                    dense_lu_t_ = std::make_unique<Eigen::PartialPivLU<MatrixX<S>>>(
                        dense_.transpose());
                    break;
                case GenStructure::sparse: {
                    SparseX<S> st = sparse_.transpose();
                    st.makeCompressed();
                    sparse_lu_t_ = std::make_unique<Eigen::SparseLU<SparseX<S>>>();
                    sparse_lu_t_->compute(st);
                    if (sparse_lu_t_->info() != Eigen::Success)
                        throw NumericalError("sparse transposed factorization failed");
                    break;
                }
            }
        });
    }

    GenStructure structure_;
    Index n_;
    VectorX<S> sub_, diag_, super_;
    TriLU<S> tri_;
    MatrixX<S> dense_;
    SparseX<S> sparse_;
    std::unique_ptr<Eigen::PartialPivLU<MatrixX<S>>> dense_lu_;
    std::unique_ptr<Eigen::SparseLU<SparseX<S>>> sparse_lu_;
    mutable std::once_flag transpose_once_;
    mutable std::unique_ptr<TriLU<S>> tri_t_;
    mutable std::unique_ptr<Eigen::PartialPivLU<MatrixX<S>>> dense_lu_t_;
    mutable std::unique_ptr<Eigen::SparseLU<SparseX<S>>> sparse_lu_t_;
};

bool effectively_real(const CVec& v) {
    for (Index i = 0; i < v.size(); ++i)
        if (v[i].imag() != 0.0) return false;
    return true;
}

} // namespace

// ---------------------------------------------------------------------------
// MaskedOperator

struct MaskedOperator::Impl {
    std::unique_ptr<MaskedMatrix<double>> real;
    std::unique_ptr<MaskedMatrix<Complex>> cplx;
    Index n = 0;

    template <typename T>
    MatrixX<T> run_solve(MatrixX<T> rhs, bool transpose) const {
        if (real) {
            if constexpr (std::is_same_v<T, double>) {
                Eigen::Ref<MatrixX<double>> ref(rhs);
                transpose ? real->solve_transpose_in_place<double>(ref)
                          : real->solve_in_place<double>(ref);
            } else {
                Eigen::Ref<MatrixX<Complex>> ref(rhs);
                transpose ? real->solve_transpose_in_place<Complex>(ref)
                          : real->solve_in_place<Complex>(ref);
            }
        } else {
            if constexpr (std::is_same_v<T, double>) {
                MatrixX<Complex> tmp = rhs.template cast<Complex>();
                Eigen::Ref<MatrixX<Complex>> ref(tmp);
                transpose ? cplx->solve_transpose_in_place<Complex>(ref)
                          : cplx->solve_in_place<Complex>(ref);
                return tmp.real();
            } else {
                Eigen::Ref<MatrixX<Complex>> ref(rhs);
                transpose ? cplx->solve_transpose_in_place<Complex>(ref)
                          : cplx->solve_in_place<Complex>(ref);
            }
        }
        return rhs;
    }

    CVec apply_c(const CVec& x) const {
        if (real) {
            CVec out(n);
            out.real() = real->apply<double>(x.real());
            out.imag() = real->apply<double>(x.imag());
            return out;
        }
        return cplx->apply<Complex>(x);
    }
};

namespace {

template <typename T>
void check_residual(const MaskedOperator& op, const Eigen::MatrixBase<T>& z,
                    const Eigen::MatrixBase<T>& rhs) {
    const double rhs_norm = rhs.norm();
    if (rhs_norm == 0.0) return;
    const double res = (op.apply(CVec(z.template cast<Complex>())) -
                        rhs.template cast<Complex>())
                           .norm();
    if (res > 1e-10 * rhs_norm)
        throw NumericalError(
            "masked solve residual " + std::to_string(res / rhs_norm) +
            " exceeds 1e-10 relative (solution growth " +
            std::to_string(z.norm() / rhs_norm) + ")");
}

} // namespace

MaskedOperator::MaskedOperator(const Generator& gen, Mask in_mask, Complex shift,
                               MaskPattern pattern)
    : MaskedOperator(gen, std::move(in_mask),
                     CVec(CVec::Constant(gen.size(), shift)), pattern) {}

MaskedOperator::MaskedOperator(const Generator& gen, Mask in_mask, CVec diag_shift,
                               MaskPattern pattern)
    : impl_(std::make_unique<Impl>()) {
    if (in_mask.size() != gen.size() || diag_shift.size() != gen.size())
        throw UsageError("masked operator: mask/shift size mismatch");
    impl_->n = gen.size();
    const double gamma = pattern == MaskPattern::resolvent ? 1.0 : 0.0;
    if (effectively_real(diag_shift)) {
        VectorX<double> alpha = diag_shift.real();
        impl_->real = std::make_unique<MaskedMatrix<double>>(gen, in_mask, alpha, 1.0, gamma);
    } else {
        impl_->cplx = std::make_unique<MaskedMatrix<Complex>>(
            gen, in_mask, diag_shift, Complex(1.0), Complex(gamma));
    }
}

MaskedOperator::~MaskedOperator() = default;
MaskedOperator::MaskedOperator(MaskedOperator&&) noexcept = default;
MaskedOperator& MaskedOperator::operator=(MaskedOperator&&) noexcept = default;

bool MaskedOperator::real_arithmetic() const { return impl_->real != nullptr; }
Index MaskedOperator::size() const { return impl_->n; }

Vec MaskedOperator::apply(const Vec& x) const {
    if (impl_->real) return impl_->real->apply<double>(x);
    return impl_->cplx->apply<Complex>(x.cast<Complex>()).real();
}

CVec MaskedOperator::apply(const CVec& x) const { return impl_->apply_c(x); }

Vec MaskedOperator::solve(const Vec& rhs) const {
    Vec z = impl_->run_solve<double>(rhs, false);
    check_residual(*this, z, rhs);
    return z;
}

CVec MaskedOperator::solve(const CVec& rhs) const {
    CVec z = impl_->run_solve<Complex>(rhs, false);
    check_residual(*this, z, rhs);
    return z;
}

Mat MaskedOperator::solve(const Mat& rhs) const {
    Mat z = impl_->run_solve<double>(rhs, false);
    for (Index c = 0; c < rhs.cols(); c += std::max<Index>(rhs.cols() / 4, 1))
        check_residual(*this, Vec(z.col(c)), Vec(rhs.col(c)));
    return z;
}

CMat MaskedOperator::solve(const CMat& rhs) const {
    CMat z = impl_->run_solve<Complex>(rhs, false);
    for (Index c = 0; c < rhs.cols(); c += std::max<Index>(rhs.cols() / 4, 1))
        check_residual(*this, CVec(z.col(c)), CVec(rhs.col(c)));
    return z;
}

CVec MaskedOperator::solve_transpose(const CVec& rhs) const {
    return impl_->run_solve<Complex>(rhs, true);
}

Vec MaskedOperator::solve_transpose(const Vec& rhs) const {
    return impl_->run_solve<double>(rhs, true);
}

CVec masked_solve(const MaskedOperator& op, const CVec& rhs) { return op.solve(rhs); }
CMat masked_solve(const MaskedOperator& op, const CMat& rhs) { return op.solve(rhs); }

// ---------------------------------------------------------------------------
// MaskedExp

struct MaskedExp::Impl {
    struct Level {
        int m;
        double weight;
        std::unique_ptr<MaskedMatrix<double>> real;
        std::unique_ptr<MaskedMatrix<Complex>> cplx;
    };
    std::vector<Level> levels;
    Index n = 0;
    bool identity = false; // D == 0
    bool is_real = true;
    mutable std::once_flag full_once_, full_c_once_;
    mutable std::unique_ptr<Mat> full_;
    mutable std::unique_ptr<CMat> full_c_;

    template <typename T>
    MatrixX<T> run(MatrixX<T> b, bool transpose) const {
        if (identity) return b;
        MatrixX<T> acc = MatrixX<T>::Zero(b.rows(), b.cols());
        for (const Level& lv : levels) {
            MatrixX<T> x = b;
            for (int s = 0; s < lv.m; ++s) {
                Eigen::Ref<MatrixX<T>> ref(x);
                if (lv.real) {
                    transpose ? lv.real->template solve_transpose_in_place<T>(ref)
                              : lv.real->template solve_in_place<T>(ref);
                } else {
                    if constexpr (std::is_same_v<T, Complex>) {
                        transpose ? lv.cplx->template solve_transpose_in_place<T>(ref)
                                  : lv.cplx->template solve_in_place<T>(ref);
                    } else {
                        throw UsageError("complex-shifted exponential needs complex input");
                    }
                }
            }
            acc += lv.weight * x;
        }
        return acc;
    }
};

MaskedExp::MaskedExp(const Generator& gen, Mask in_mask, double D, ExpmvOptions opts,
                     std::optional<CVec> diag_shift)
    : impl_(std::make_unique<Impl>()) {
    if (D < 0.0) throw DomainError("exponential action requires D >= 0");
    if (opts.steps < 1) throw DomainError("expmv requires at least one step");
    impl_->n = gen.size();
    if (D == 0.0) {
        impl_->identity = true;
        return;
    }
    CVec shift = diag_shift.value_or(CVec(CVec::Zero(gen.size())));
    if (shift.size() != gen.size())
        throw UsageError("masked exponential: shift size mismatch");
    impl_->is_real = effectively_real(shift);

    std::vector<std::pair<int, double>> plan;
    switch (opts.extrap) {
        case ExpmvOptions::Extrap::none:
            plan = {{opts.steps, 1.0}};
            break;
        case ExpmvOptions::Extrap::two_level:
            plan = {{opts.steps, -1.0}, {2 * opts.steps, 2.0}};
            break;
        case ExpmvOptions::Extrap::three_level:
            plan = {{opts.steps, 1.0 / 3.0}, {2 * opts.steps, -2.0}, {4 * opts.steps, 8.0 / 3.0}};
            break;
    }
    for (auto [m, w] : plan) {
        Impl::Level lv;
        lv.m = m;
        lv.weight = w;
        const double beta = D / m;
        if (impl_->is_real) {
            Vec alpha = Vec::Ones(gen.size()) + beta * Vec(shift.real());
            lv.real = std::make_unique<MaskedMatrix<double>>(gen, in_mask, alpha, beta, 1.0);
        } else {
            CVec alpha = CVec::Ones(gen.size()) + beta * shift;
            lv.cplx = std::make_unique<MaskedMatrix<Complex>>(gen, in_mask, alpha,
                                                              Complex(beta), Complex(1.0));
        }
        impl_->levels.push_back(std::move(lv));
    }
}

MaskedExp::~MaskedExp() = default;
MaskedExp::MaskedExp(MaskedExp&&) noexcept = default;
MaskedExp& MaskedExp::operator=(MaskedExp&&) noexcept = default;

bool MaskedExp::real() const { return impl_->identity || impl_->is_real; }
Index MaskedExp::size() const { return impl_->n; }

Vec MaskedExp::apply(const Vec& b) const {
    if (!real()) throw UsageError("complex-shifted exponential applied to real input");
    return impl_->run<double>(b, false);
}

CVec MaskedExp::apply(const CVec& b) const { return impl_->run<Complex>(b, false); }
Mat MaskedExp::apply(const Mat& b) const {
    if (!real()) throw UsageError("complex-shifted exponential applied to real input");
    return impl_->run<double>(b, false);
}
CMat MaskedExp::apply(const CMat& b) const { return impl_->run<Complex>(b, false); }

Vec MaskedExp::apply_transpose(const Vec& b) const {
    if (!real()) throw UsageError("complex-shifted exponential applied to real input");
    return impl_->run<double>(b, true);
}

CVec MaskedExp::apply_transpose(const CVec& b) const { return impl_->run<Complex>(b, true); }

const Mat& MaskedExp::full() const {
    if (!real()) throw UsageError("full(): exponential has a complex shift");
    std::call_once(impl_->full_once_, [&] {
        impl_->full_ = std::make_unique<Mat>(
            impl_->identity ? Mat(Mat::Identity(impl_->n, impl_->n))
                            : impl_->run<double>(Mat::Identity(impl_->n, impl_->n), false));
    });
    return *impl_->full_;
}

const CMat& MaskedExp::full_complex() const {
    std::call_once(impl_->full_c_once_, [&] {
        impl_->full_c_ = std::make_unique<CMat>(
            impl_->identity ? CMat(CMat::Identity(impl_->n, impl_->n))
                            : impl_->run<Complex>(CMat::Identity(impl_->n, impl_->n), false));
    });
    return *impl_->full_c_;
}

CVec expmv(const Generator& gen, const Mask& in_mask, double D, const CVec& b,
           const ExpmvOptions& opts) {
    return MaskedExp(gen, in_mask, D, opts).apply(b);
}

Vec expmv(const Generator& gen, const Mask& in_mask, double D, const Vec& b,
          const ExpmvOptions& opts) {
    return MaskedExp(gen, in_mask, D, opts).apply(b);
}

} // namespace parischain
