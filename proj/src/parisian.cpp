#include "parischain/parisian.hpp"
#include "parischain/errors.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <string>

namespace parischain {

Mask ParisianProblem::in_mask(const Generator& gen) const {
    const auto& s = gen.states();
    const double snap = 1e-9 * std::max(1.0, std::abs(s.back() - s.front()));
    Mask m(gen.size());
    for (Index i = 0; i < gen.size(); ++i) {
        const bool in = side == Side::below ? s[i] < barrier - snap
                                            : s[i] > barrier + snap;
        m[i] = in ? 1.0 : 0.0;
    }
    return m;
}

namespace {

std::vector<Index> mask_indices(const Mask& m, bool in) {
    std::vector<Index> idx;
    for (Index i = 0; i < m.size(); ++i)
        if ((m[i] > 0.5) == in) idx.push_back(i);
    return idx;
}

template <typename S>
Eigen::Matrix<S, Eigen::Dynamic, 1> unit_vector(Index n, Index i) {
    Eigen::Matrix<S, Eigen::Dynamic, 1> e = Eigen::Matrix<S, Eigen::Dynamic, 1>::Zero(n);
    e[i] = S(1);
    return e;
}

} // namespace

struct ParisianEngine::Impl {
    const Generator& gen;
    Mask mask;
    double D;
    ExpmvOptions opts;
    MaskedExp E; // exp(M G D)
    std::vector<Index> in_idx, out_idx;
    std::vector<Index> land_out, land_in; // states reachable in one jump across the mask
    bool reduced_ok = false;

    Impl(const Generator& g, Mask m, double window, ExpmvOptions o)
        : gen(g), mask(std::move(m)), D(window), opts(o), E(g, mask, window, o) {
        if (mask.size() != gen.size()) throw UsageError("parisian mask size mismatch");
        in_idx = mask_indices(mask, true);
        out_idx = mask_indices(mask, false);
        if (gen.structure() != GenStructure::dense) {
            std::vector<char> is_land_out(static_cast<std::size_t>(gen.size()), 0);
            std::vector<char> is_land_in(static_cast<std::size_t>(gen.size()), 0);
            for (Index i = 0; i < gen.size(); ++i) {
                gen.for_each_offdiag(i, [&](Index j, double) {
                    if (mask[i] > 0.5 && mask[j] < 0.5) is_land_out[static_cast<std::size_t>(j)] = 1;
                    if (mask[i] < 0.5 && mask[j] > 0.5) is_land_in[static_cast<std::size_t>(j)] = 1;
                });
            }
            for (Index j = 0; j < gen.size(); ++j) {
                if (is_land_out[static_cast<std::size_t>(j)]) land_out.push_back(j);
                if (is_land_in[static_cast<std::size_t>(j)]) land_in.push_back(j);
            }
            reduced_ok = land_out.size() + land_in.size() <= 64;
        }
    }

    // --- reduced (small landing set) path -------------------------------

    template <typename S>
    Eigen::Matrix<S, Eigen::Dynamic, 1> reduced_apply(S q,
                                                      const Eigen::Matrix<S, Eigen::Dynamic, 1>& rhs,
                                                      ReducedDiagnostics* diag) const {
        using VecS = Eigen::Matrix<S, Eigen::Dynamic, 1>;
        using MatS = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
        const Index n = gen.size();
        const S eqd = std::exp(-q * D);

        MaskedOperator Rin(gen, mask, Complex(q));
        MaskedOperator Rout(gen, mask_complement(mask), Complex(q));

        const Index k1 = static_cast<Index>(land_out.size());
        const Index k2 = static_cast<Index>(land_in.size());
        const Index k = k1 + k2;

        // escape columns u1 - u2 (per landing state beyond the mask)
        MatS up(n, k1);
        for (Index c = 0; c < k1; ++c) {
            VecS u1 = solve_one<S>(Rin, land_out[static_cast<std::size_t>(c)]);
            VecS u2 = eqd * expo_apply<S>(VecS(mask.template cast<S>().matrix().asDiagonal() * u1));
            up.col(c) = u1 - u2;
        }
        // return columns (per landing state inside the mask)
        MatS uret(n, k2);
        for (Index c = 0; c < k2; ++c)
            uret.col(c) = solve_one<S>(Rout, land_in[static_cast<std::size_t>(c)]);

        VecS vrhs = expo_apply<S>(VecS(mask.template cast<S>().matrix().asDiagonal() * rhs));

        MatS coupling = MatS::Zero(k, k);
        VecS d = VecS::Zero(k);
        for (Index a = 0; a < k1; ++a) {
            const Index z = land_out[static_cast<std::size_t>(a)];
            for (Index b = 0; b < k2; ++b) coupling(a, k1 + b) = uret(z, b);
        }
        for (Index a = 0; a < k2; ++a) {
            const Index z = land_in[static_cast<std::size_t>(a)];
            for (Index b = 0; b < k1; ++b) coupling(k1 + a, b) = up(z, b);
            d[k1 + a] = eqd * vrhs[z];
        }

        VecS theta;
        S det = S(1);
        if (k > 0) {
            MatS sys = MatS::Identity(k, k) - coupling;
            Eigen::PartialPivLU<MatS> lu(sys);
            det = lu.determinant();
            if (std::abs(det) < 1e-13)
                throw NumericalError("parisian reduced system is singular (|det| = " +
                                     std::to_string(std::abs(det)) + ")");
            theta = lu.solve(d);
        }
        if (diag) diag->system_det = Complex(det);

        VecS out = VecS::Zero(n);
        for (Index i : in_idx) out[i] = eqd * vrhs[i];
        for (Index b = 0; b < k1; ++b) {
            const S t = theta[b];
            for (Index i : in_idx) out[i] += up(i, b) * t;
        }
        for (Index b = 0; b < k2; ++b) {
            const S t = theta[k1 + b];
            for (Index i : out_idx) out[i] += uret(i, b) * t;
        }
        return out;
    }

    template <typename S>
    Eigen::Matrix<S, Eigen::Dynamic, 1> solve_one(const MaskedOperator& op, Index j) const {
        if constexpr (std::is_same_v<S, double>)
            return op.solve(unit_vector<double>(gen.size(), j));
        else
            return op.solve(CVec(unit_vector<Complex>(gen.size(), j)));
    }

    template <typename S>
    Eigen::Matrix<S, Eigen::Dynamic, 1> expo_apply(const Eigen::Matrix<S, Eigen::Dynamic, 1>& v) const {
        if constexpr (std::is_same_v<S, double>)
            return E.apply(v);
        else
            return E.apply(CVec(v));
    }

    // --- general dense path ----------------------------------------------

    CMat assemble_system(Complex q) const {
        const Index n = gen.size();
        const Complex eqd = std::exp(-q * D);
        MaskedOperator Rin(gen, mask, q);
        MaskedOperator Rout(gen, mask_complement(mask), q);

        const Index no = static_cast<Index>(out_idx.size());
        const Index ni = static_cast<Index>(in_idx.size());

        CMat rhs_out = CMat::Zero(n, no);
        for (Index c = 0; c < no; ++c) rhs_out(out_idx[static_cast<std::size_t>(c)], c) = 1.0;
        CMat u1 = Rin.solve(rhs_out);
        CMat u2;
        if (gen.structure() == GenStructure::dense) {
            const Mat& Ef = E.full();
            u2 = eqd * (Ef * CMat(mask.cast<Complex>().matrix().asDiagonal() * u1));
        } else {
            u2 = eqd * E.apply(CMat(mask.cast<Complex>().matrix().asDiagonal() * u1));
        }
        CMat rhs_in = CMat::Zero(n, ni);
        for (Index c = 0; c < ni; ++c) rhs_in(in_idx[static_cast<std::size_t>(c)], c) = 1.0;
        CMat uret = Rout.solve(rhs_in);

        CMat A = CMat::Identity(n, n);
        for (Index c = 0; c < no; ++c) {
            const Index j = out_idx[static_cast<std::size_t>(c)];
            for (Index i : in_idx) A(i, j) -= u1(i, c) - u2(i, c);
        }
        for (Index c = 0; c < ni; ++c) {
            const Index j = in_idx[static_cast<std::size_t>(c)];
            for (Index i : out_idx) A(i, j) -= uret(i, c);
        }
        return A;
    }

    CVec general_apply(Complex q, const CVec& rhs) const {
        const Complex eqd = std::exp(-q * D);
        CMat A = assemble_system(q);
        CVec vrhs = E.apply(CVec(mask.cast<Complex>().matrix().asDiagonal() * rhs));
        for (Index i : out_idx) vrhs[i] = 0.0;
        return eqd * A.partialPivLu().solve(vrhs);
    }

    CMat general_H(Complex q) const {
        const Index n = gen.size();
        const Complex eqd = std::exp(-q * D);
        CMat A = assemble_system(q);
        Mat V = E.full();
        // V = exp(M G D) M: zero the off-mask columns, then mask the rows
        Mat masked = V;
        for (Index j = 0; j < n; ++j)
            if (mask[j] < 0.5) masked.col(j).setZero();
        for (Index i = 0; i < n; ++i)
            if (mask[i] < 0.5) masked.row(i).setZero();
        return eqd * A.partialPivLu().solve(masked.cast<Complex>());
    }
};

ParisianEngine::ParisianEngine(const Generator& gen, Mask in_mask, double window,
                               ExpmvOptions opts)
    : impl_(std::make_unique<Impl>(gen, std::move(in_mask), window, opts)) {
    if (!(window > 0.0)) throw DomainError("parisian window D must be positive");
}

ParisianEngine::~ParisianEngine() = default;
ParisianEngine::ParisianEngine(ParisianEngine&&) noexcept = default;

bool ParisianEngine::reduced_available() const { return impl_->reduced_ok; }
const Mask& ParisianEngine::mask() const { return impl_->mask; }
double ParisianEngine::window() const { return impl_->D; }
const Generator& ParisianEngine::generator() const { return impl_->gen; }

CVec ParisianEngine::apply_H(Complex q, const CVec& rhs, ReducedDiagnostics* diag) const {
    if (impl_->reduced_ok) return impl_->reduced_apply<Complex>(q, rhs, diag);
    return impl_->general_apply(q, rhs);
}

Vec ParisianEngine::apply_H(double q, const Vec& rhs) const {
    if (impl_->reduced_ok) return impl_->reduced_apply<double>(q, rhs, nullptr);
    return impl_->general_apply(Complex(q, 0.0), rhs.cast<Complex>()).real();
}

CVec ParisianEngine::apply_H_general(Complex q, const CVec& rhs) const {
    return impl_->general_apply(q, rhs);
}

CVec ParisianEngine::apply_H_reduced(Complex q, const CVec& rhs,
                                     ReducedDiagnostics* diag) const {
    if (!impl_->reduced_ok)
        throw UsageError("reduced parisian path unavailable for this generator/mask");
    return impl_->reduced_apply<Complex>(q, rhs, diag);
}

CVec ParisianEngine::h(Complex q) const {
    return apply_H(q, CVec(CVec::Ones(impl_->gen.size())));
}

CMat ParisianEngine::H(Complex q) const { return impl_->general_H(q); }

CVec ParisianEngine::h_row(Complex q, Index row) const {
    const Index n = impl_->gen.size();
    if (!impl_->reduced_ok) {
        CMat full = H(q);
        return full.row(row).transpose();
    }
    // Row of H via transposed exponential actions: row x of V is
    // (mask . E^T e_x), and landing rows close the small linear system.
    const Complex eqd = std::exp(-q * impl_->D);
    auto v_row = [&](Index x) -> CVec {
        CVec e = unit_vector<Complex>(n, x);
        CVec r = impl_->E.apply_transpose(e);
        for (Index j = 0; j < n; ++j)
            if (impl_->mask[j] < 0.5) r[j] = 0.0; // column mask of V
        if (impl_->mask[x] < 0.5) return CVec::Zero(n);
        return r;
    };

    MaskedOperator Rin(impl_->gen, impl_->mask, q);
    MaskedOperator Rout(impl_->gen, mask_complement(impl_->mask), q);
    const auto& lo = impl_->land_out;
    const auto& li = impl_->land_in;
    const Index k1 = static_cast<Index>(lo.size());
    const Index k2 = static_cast<Index>(li.size());
    const Index k = k1 + k2;

    CMat up(n, k1);
    for (Index c = 0; c < k1; ++c) {
        CVec u1 = impl_->solve_one<Complex>(Rin, lo[static_cast<std::size_t>(c)]);
        CVec u2 = eqd * impl_->E.apply(CVec(impl_->mask.cast<Complex>().matrix().asDiagonal() * u1));
        up.col(c) = u1 - u2;
    }
    CMat uret(n, k2);
    for (Index c = 0; c < k2; ++c)
        uret.col(c) = impl_->solve_one<Complex>(Rout, li[static_cast<std::size_t>(c)]);

    // landing rows of H as length-n row vectors
    CMat coupling = CMat::Zero(k, k);
    CMat d = CMat::Zero(k, n);
    for (Index a = 0; a < k1; ++a)
        for (Index b = 0; b < k2; ++b)
            coupling(a, k1 + b) = uret(lo[static_cast<std::size_t>(a)], b);
    for (Index a = 0; a < k2; ++a) {
        const Index z = li[static_cast<std::size_t>(a)];
        for (Index b = 0; b < k1; ++b) coupling(k1 + a, b) = up(z, b);
        d.row(k1 + a) = eqd * v_row(z).transpose();
    }
    CMat theta = (CMat::Identity(k, k) - coupling).partialPivLu().solve(d);

    CVec out;
    if (impl_->mask[row] > 0.5) {
        out = eqd * v_row(row);
        for (Index b = 0; b < k1; ++b) out += up(row, b) * theta.row(b).transpose();
    } else {
        out = CVec::Zero(n);
        for (Index b = 0; b < k2; ++b) out += uret(row, b) * theta.row(k1 + b).transpose();
    }
    return out;
}

FirstPassageBlocks first_passage_blocks(const Generator& gen, const ParisianProblem& prob,
                                        Complex q, const ExpmvOptions& opts) {
    if (!(q.real() > 0.0)) throw DomainError("first passage blocks require Re(q) > 0");
    const Mask m = prob.in_mask(gen);
    const Index n = gen.size();
    MaskedExp E(gen, m, prob.window, opts);
    MaskedOperator Rin(gen, m, q);
    MaskedOperator Rout(gen, mask_complement(m), q);

    FirstPassageBlocks b;
    b.V = E.full() * Mat(m.matrix().asDiagonal());
    CMat Iout = CMat::Zero(n, n);
    for (Index i = 0; i < n; ++i)
        if (m[i] < 0.5) Iout(i, i) = 1.0;
    CMat Iin = CMat::Identity(n, n) - Iout;
    b.U1 = Rin.solve(Iout);
    b.U2 = std::exp(-q * prob.window) *
           (E.full().cast<Complex>() * CMat(m.cast<Complex>().matrix().asDiagonal() * b.U1));
    b.Ureturn = Rout.solve(Iin);
    return b;
}

ParisianTransform parisian_transform_general(const Generator& gen,
                                             const ParisianProblem& prob, Complex q,
                                             const ExpmvOptions& opts) {
    if (!(q.real() > 0.0)) throw DomainError("parisian transform requires Re(q) > 0");
    ParisianEngine eng(gen, prob.in_mask(gen), prob.window, opts);
    ParisianTransform t;
    t.q = q;
    t.H = eng.H(q);
    t.h = t.H.rowwise().sum();
    return t;
}

ParisianTransform parisian_transform_bd(const Generator& gen, const ParisianProblem& prob,
                                        Complex q, const ExpmvOptions& opts) {
    if (gen.structure() != GenStructure::tridiagonal)
        throw UsageError("birth-and-death fast path requires a tridiagonal generator");
    if (!(q.real() > 0.0)) throw DomainError("parisian transform requires Re(q) > 0");
    ParisianEngine eng(gen, prob.in_mask(gen), prob.window, opts);
    ParisianTransform t;
    t.q = q;
    t.h = eng.apply_H_reduced(q, CVec(CVec::Ones(gen.size())), nullptr);
    return t;
}

} // namespace parischain
