#include "parischain/generator.hpp"
#include "parischain/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>

namespace parischain {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

Generator Generator::tridiagonal(std::vector<double> states, Vec sub, Vec diag, Vec super) {
    const Index n = static_cast<Index>(states.size());
    if (diag.size() != n || sub.size() != n - 1 || super.size() != n - 1)
        throw UsageError("tridiagonal generator: inconsistent band sizes");
    Generator g;
    g.structure_ = GenStructure::tridiagonal;
    g.states_ = std::move(states);
    g.data_ = Tri{std::move(sub), std::move(diag), std::move(super)};
    return g;
}

Generator Generator::dense(std::vector<double> states, Mat m) {
    if (m.rows() != m.cols() || m.rows() != static_cast<Index>(states.size()))
        throw UsageError("dense generator: matrix shape mismatch");
    Generator g;
    g.structure_ = GenStructure::dense;
    g.states_ = std::move(states);
    g.data_ = std::move(m);
    return g;
}

Generator Generator::sparse(std::vector<double> states, SpMat m) {
    if (m.rows() != m.cols() || m.rows() != static_cast<Index>(states.size()))
        throw UsageError("sparse generator: matrix shape mismatch");
    m.makeCompressed();
    Generator g;
    g.structure_ = GenStructure::sparse;
    g.states_ = std::move(states);
    g.data_ = std::move(m);
    return g;
}

double Generator::entry(Index i, Index j) const {
    switch (structure_) {
        case GenStructure::tridiagonal: {
            const Tri& t = std::get<Tri>(data_);
            if (i == j) return t.diag[i];
            if (j == i + 1) return t.super[i];
            if (j == i - 1) return t.sub[j];
            return 0.0;
        }
        case GenStructure::dense:
            return std::get<Mat>(data_)(i, j);
        case GenStructure::sparse:
            return std::get<SpMat>(data_).coeff(i, j);
    }
    return 0.0;
}

bool Generator::row_absorbing(Index i) const {
    if (structure_ == GenStructure::tridiagonal) {
        const Tri& t = std::get<Tri>(data_);
        const double lo = i > 0 ? t.sub[i - 1] : 0.0;
        const double hi = i + 1 < size() ? t.super[i] : 0.0;
        return t.diag[i] == 0.0 && lo == 0.0 && hi == 0.0;
    }
    if (structure_ == GenStructure::dense)
        return std::get<Mat>(data_).row(i).cwiseAbs().maxCoeff() == 0.0;
    const SpMat& s = std::get<SpMat>(data_);
    for (Index j = 0; j < size(); ++j)
        if (s.coeff(i, j) != 0.0) return false;
    return true;
}

Vec Generator::apply(const Vec& v) const {
    switch (structure_) {
        case GenStructure::tridiagonal: {
            const Tri& t = std::get<Tri>(data_);
            const Index n = size();
            Vec out(n);
            for (Index i = 0; i < n; ++i) {
                double s = t.diag[i] * v[i];
                if (i > 0) s += t.sub[i - 1] * v[i - 1];
                if (i + 1 < n) s += t.super[i] * v[i + 1];
                out[i] = s;
            }
            return out;
        }
        case GenStructure::dense:
            return std::get<Mat>(data_) * v;
        case GenStructure::sparse:
            return std::get<SpMat>(data_) * v;
    }
    return {};
}

CVec Generator::apply(const CVec& v) const {
    CVec out(size());
    const Vec re = apply(Vec(v.real()));
    const Vec im = apply(Vec(v.imag()));
    out.real() = re;
    out.imag() = im;
    return out;
}

Mat Generator::to_dense() const {
    switch (structure_) {
        case GenStructure::tridiagonal: {
            const Tri& t = std::get<Tri>(data_);
            Mat m = Mat::Zero(size(), size());
            for (Index i = 0; i < size(); ++i) {
                m(i, i) = t.diag[i];
                if (i + 1 < size()) {
                    m(i, i + 1) = t.super[i];
                    m(i + 1, i) = t.sub[i];
                }
            }
            return m;
        }
        case GenStructure::dense:
            return std::get<Mat>(data_);
        case GenStructure::sparse:
            return Mat(std::get<SpMat>(data_));
    }
    return {};
}

void Generator::for_each_offdiag(Index i, const std::function<void(Index, double)>& fn) const {
    switch (structure_) {
        case GenStructure::tridiagonal: {
            const Tri& t = std::get<Tri>(data_);
            if (i > 0 && t.sub[i - 1] != 0.0) fn(i - 1, t.sub[i - 1]);
            if (i + 1 < size() && t.super[i] != 0.0) fn(i + 1, t.super[i]);
            return;
        }
        case GenStructure::dense: {
            const Mat& m = std::get<Mat>(data_);
            for (Index j = 0; j < size(); ++j)
                if (j != i && m(i, j) != 0.0) fn(j, m(i, j));
            return;
        }
        case GenStructure::sparse: {
            // column-major scan of row i
            const SpMat& s = std::get<SpMat>(data_);
            for (Index j = 0; j < size(); ++j) {
                const double v = s.coeff(i, j);
                if (j != i && v != 0.0) fn(j, v);
            }
            return;
        }
    }
}

double Generator::max_row_sum_residual() const {
    double worst = 0.0;
    for (Index i = 0; i < size(); ++i) {
        double sum = entry(i, i), scale = std::abs(entry(i, i));
        for_each_offdiag(i, [&](Index, double v) {
            sum += v;
            scale += std::abs(v);
        });
        if (scale > 0.0) worst = std::max(worst, std::abs(sum) / scale);
    }
    return worst;
}

double Generator::min_off_diagonal() const {
    double lo = 0.0;
    for (Index i = 0; i < size(); ++i)
        for_each_offdiag(i, [&](Index, double v) { lo = std::min(lo, v); });
    return lo;
}

RowDiagnostics row_diagnostics(const Generator& gen) {
    return {gen.min_off_diagonal(), gen.max_row_sum_residual(), gen.structure()};
}

void export_triplets(const Generator& gen, std::ostream& os) {
    os << "row,col,rate\n";
    for (Index i = 0; i < gen.size(); ++i) {
        if (gen.entry(i, i) != 0.0) os << i << ',' << i << ',' << gen.entry(i, i) << '\n';
        gen.for_each_offdiag(i, [&](Index j, double v) { os << i << ',' << j << ',' << v << '\n'; });
    }
}

Index state_index(const Generator& gen, double x0) {
    const auto& s = gen.states();
    auto it = std::lower_bound(s.begin(), s.end(), x0);
    Index best = static_cast<Index>(it - s.begin());
    if (best == gen.size() || (best > 0 && x0 - s[best - 1] < s[best] - x0)) --best;
    const double tol = 1e-8 * std::max(1.0, std::abs(s.back() - s.front()));
    if (std::abs(s[best] - x0) > tol)
        throw UsageError("x0 = " + std::to_string(x0) +
                         " is not a grid node; adjust grid bounds or counts");
    return best;
}

namespace {

struct LocalRates {
    double up, down; // diffusion + drift part of G(x, x+-)
};

/// Central rates, falling back to one-sided drift differencing when the
/// candidate total rate (local + jump mass into the neighbor cell) would be
/// negative. lam_up/lam_down are the neighbor-cell jump masses.
LocalRates local_rates(double mu, double sig2, double dp, double dm, double da,
                       double lam_up, double lam_down, DriftScheme scheme,
                       std::size_t node) {
    double up = (mu * dm + sig2) / (2.0 * dp * da);
    double down = (-mu * dp + sig2) / (2.0 * dm * da);
    if (up + lam_up < 0.0 || down + lam_down < 0.0) {
        if (scheme == DriftScheme::central)
            throw NumericalError(
                "central differencing yields a negative rate at node " +
                std::to_string(node) + "; enable the upwind fallback or refine the grid");
        up = sig2 / (2.0 * dp * da) + std::max(mu, 0.0) / dp;
        down = sig2 / (2.0 * dm * da) + std::max(-mu, 0.0) / dm;
    }
    return {up, down};
}

} // namespace

Generator build_generator(const ModelSpec& model, const Grid& grid, DriftScheme scheme) {
    const std::size_t n = grid.size();
    const auto& y = grid.nodes();

    if (!model.has_jumps()) {
        Vec sub = Vec::Zero(n - 1), diag = Vec::Zero(n), super = Vec::Zero(n - 1);
        for (std::size_t i = 1; i + 1 < n; ++i) {
            const double sig2 = std::pow(model.vol(y[i]), 2);
            if (!(sig2 > 0.0))
                throw DomainError("vanishing volatility at node " + std::to_string(i) +
                                  "; localize away from degenerate states");
            const LocalRates lr = local_rates(model.drift(y[i]), sig2, grid.delta_plus(i),
                                              grid.delta_minus(i), grid.delta_avg(i),
                                              0.0, 0.0, scheme, i);
            super[i] = lr.up;
            sub[i - 1] = lr.down;
            diag[i] = -(lr.up + lr.down);
        }
        return Generator::tridiagonal(grid.nodes(), std::move(sub), std::move(diag),
                                      std::move(super));
    }

    Mat g = Mat::Zero(static_cast<Index>(n), static_cast<Index>(n));
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double x = y[i];
        // cell boundaries of I_y - x for every y
        auto cell_lo = [&](std::size_t j) {
            return j == 0 ? -kInf : 0.5 * (y[j - 1] + y[j]) - x;
        };
        auto cell_hi = [&](std::size_t j) {
            return j + 1 == n ? kInf : 0.5 * (y[j] + y[j + 1]) - x;
        };

        // moments restricted to |z| <= 1, splitting cells at the threshold
        auto restricted = [&](double a, double b, int k) {
            const double lo = std::max(a, -1.0), hi = std::min(b, 1.0);
            if (!(lo < hi)) return 0.0;
            return jump_partial_moment(model, x, lo, hi, k);
        };

        const double sig_bar2 = restricted(cell_lo(i), cell_hi(i), 2);
        // mu_bar = sum_{j != i} (y_j - x) * nu(I_j - x, |z| <= 1)
        double mu_bar = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            mu_bar += (y[j] - x) * restricted(cell_lo(j), cell_hi(j), 0);
        }

        const double sig2 = std::pow(model.vol(x), 2) + sig_bar2;
        const double mu = model.drift(x) - mu_bar;
        const double lam_up = jump_partial_moment(model, x, cell_lo(i + 1), cell_hi(i + 1), 0);
        const double lam_down = jump_partial_moment(model, x, cell_lo(i - 1), cell_hi(i - 1), 0);
        const LocalRates lr = local_rates(mu, sig2, grid.delta_plus(i), grid.delta_minus(i),
                                          grid.delta_avg(i), lam_up, lam_down, scheme, i);
        for (std::size_t j = 0; j < n; ++j) {
            if (j == i) continue;
            double rate;
            if (j == i + 1)
                rate = lam_up + lr.up;
            else if (j == i - 1)
                rate = lam_down + lr.down;
            else
                rate = jump_partial_moment(model, x, cell_lo(j), cell_hi(j), 0);
            g(static_cast<Index>(i), static_cast<Index>(j)) = rate;
        }
        g(static_cast<Index>(i), static_cast<Index>(i)) = -g.row(static_cast<Index>(i)).sum();
    }
    return Generator::dense(grid.nodes(), std::move(g));
}

} // namespace parischain
