#include "parischain/grid.hpp"
#include "parischain/errors.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

namespace parischain {

Grid::Grid(std::vector<double> nodes, std::vector<Anchor> anchors)
    : nodes_(std::move(nodes)), anchors_(std::move(anchors)) {
    if (nodes_.size() < 2) throw DomainError("grid needs at least 2 nodes");
    for (std::size_t i = 1; i < nodes_.size(); ++i) {
        if (!(nodes_[i] > nodes_[i - 1]))
            throw DomainError("grid nodes must be strictly increasing (index " +
                              std::to_string(i) + ")");
    }
    check_anchors();
}

double Grid::max_step() const {
    double m = 0.0;
    for (std::size_t i = 0; i + 1 < nodes_.size(); ++i)
        m = std::max(m, delta_plus(i));
    return m;
}

double Grid::min_step() const {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < nodes_.size(); ++i)
        m = std::min(m, delta_plus(i));
    return m;
}

std::size_t Grid::upper_index(double level) const {
    const double snap = 1e-12 * std::max(1.0, std::abs(span()));
    auto it = std::lower_bound(nodes_.begin(), nodes_.end(), level - snap);
    return static_cast<std::size_t>(it - nodes_.begin());
}

std::optional<std::size_t> Grid::index_of(double x, double tol_rel) const {
    const double tol = tol_rel * std::max(1.0, std::abs(span()));
    auto it = std::lower_bound(nodes_.begin(), nodes_.end(), x);
    std::size_t best = static_cast<std::size_t>(it - nodes_.begin());
    if (best == nodes_.size() || (best > 0 && x - nodes_[best - 1] < nodes_[best] - x))
        --best;
    if (std::abs(nodes_[best] - x) <= tol) return best;
    return std::nullopt;
}

void Grid::check_anchors(double tol_rel) const {
    const double tol = tol_rel * std::max(1.0, std::abs(span()));
    for (const Anchor& a : anchors_) {
        if (a.kind == AnchorKind::on_grid) {
            bool hit = false;
            for (double y : nodes_)
                if (std::abs(y - a.value) <= tol) { hit = true; break; }
            if (!hit)
                throw DomainError("anchor " + std::to_string(a.value) +
                                  " not on the grid");
        } else {
            bool hit = false;
            for (std::size_t i = 0; i + 1 < nodes_.size(); ++i) {
                const double mid = 0.5 * (nodes_[i] + nodes_[i + 1]);
                if (std::abs(mid - a.value) <= tol) { hit = true; break; }
            }
            if (!hit)
                throw DomainError("anchor " + std::to_string(a.value) +
                                  " not midway between adjacent nodes");
        }
    }
}

Grid uniform_grid(double l, double r, int n) {
    if (!(l < r)) throw DomainError("uniform_grid requires l < r");
    if (n < 2) throw DomainError("uniform_grid requires n >= 2");
    std::vector<double> nodes(static_cast<std::size_t>(n) + 1);
    const double h = (r - l) / n;
    for (int i = 0; i <= n; ++i) nodes[static_cast<std::size_t>(i)] = l + i * h;
    nodes.back() = r;
    return Grid(std::move(nodes));
}

Grid uniform_grid_through(double l, double r, int n, double x0) {
    if (!(l < x0 && x0 < r)) throw DomainError("x0 must lie inside (l, r)");
    const double h = (r - l) / n;
    const double offset = std::fmod(x0 - l, h);
    // shift the whole grid so a node lands exactly on x0
    const double shift = offset < 0.5 * h ? -offset : h - offset;
    std::vector<double> nodes(static_cast<std::size_t>(n) + 1);
    const long j = std::lround((x0 - (l + shift)) / h);
    for (int i = 0; i <= n; ++i)
        nodes[static_cast<std::size_t>(i)] = x0 + (i - j) * h;
    return Grid(std::move(nodes), {{x0, AnchorKind::on_grid}});
}

namespace {

void append_block(std::vector<double>& nodes, double start, double h, int count,
                  bool include_start) {
    for (int i = include_start ? 0 : 1; i <= count; ++i)
        nodes.push_back(start + i * h);
}

} // namespace

Grid piecewise_uniform_grid(double l, double r, double K, double L, int n1,
                            int n2, int n3) {
    if (K == L)
        throw UsageError("K == L: use the two-grid interpolation path instead");
    if (!(l < std::min(K, L)) || !(std::max(K, L) < r))
        throw DomainError("piecewise_uniform_grid requires l < min(K,L) and max(K,L) < r");
    if (n1 < 1 || n2 < 1 || n3 < 1)
        throw DomainError("piecewise_uniform_grid requires positive block counts");

    std::vector<double> nodes;
    nodes.reserve(static_cast<std::size_t>(n1 + n2 + n3) + 1);
    if (K < L) {
        const double h1 = (K - l) / n1;
        const double h2 = (L - K - 0.5 * h1) / n2;
        const double h3 = (r - L) / n3;
        if (!(h2 > 0.0)) throw DomainError("piecewise_uniform_grid: middle block collapsed");
        for (int i = 0; i < n1; ++i) nodes.push_back(l + (i + 0.5) * h1);
        for (int i = 0; i < n2; ++i) nodes.push_back(K + 0.5 * h1 + i * h2);
        nodes.push_back(L);
        append_block(nodes, L, h3, n3, false);
    } else {
        // mirrored layout: strike above the barrier
        const double h1 = (r - K) / n1;
        const double h2 = (K - L - 0.5 * h1) / n2;
        const double h3 = (L - l) / n3;
        if (!(h2 > 0.0)) throw DomainError("piecewise_uniform_grid: middle block collapsed");
        for (int i = 0; i < n1; ++i) nodes.push_back(r - (i + 0.5) * h1);
        for (int i = 0; i < n2; ++i) nodes.push_back(K - 0.5 * h1 - i * h2);
        nodes.push_back(L);
        for (int i = 1; i <= n3; ++i) nodes.push_back(L - i * h3);
        std::reverse(nodes.begin(), nodes.end());
    }
    return Grid(std::move(nodes),
                {{K, AnchorKind::midway}, {L, AnchorKind::on_grid}});
}

Grid piecewise_uniform_grid(double l, double r, double K, double L,
                            int total_nodes) {
    if (total_nodes < 7)
        throw DomainError("piecewise_uniform_grid needs a total budget of at least 7 nodes");
    const int cells = total_nodes - 1;
    double w1, w2, w3;
    if (K < L) {
        w1 = K - l; w2 = L - K; w3 = r - L;
    } else {
        w1 = r - K; w2 = K - L; w3 = L - l;
    }
    const double W = w1 + w2 + w3;
    int n2 = std::max(2, static_cast<int>(std::lround(cells * w2 / W)));
    int n1 = std::max(2, static_cast<int>(std::lround(cells * w1 / W)));
    int n3 = std::max(2, cells - n1 - n2);
    return piecewise_uniform_grid(l, r, K, L, n1, n2, n3);
}

Grid blocks_grid(const std::vector<double>& knots, const std::vector<int>& counts) {
    if (knots.size() < 2 || counts.size() != knots.size() - 1)
        throw DomainError("blocks_grid: need k knots and k-1 counts");
    std::vector<double> nodes{knots.front()};
    std::vector<Anchor> anchors;
    for (std::size_t b = 0; b + 1 < knots.size(); ++b) {
        if (!(knots[b] < knots[b + 1]))
            throw DomainError("blocks_grid: knots must be increasing");
        const int c = counts[b];
        if (c < 1) throw DomainError("blocks_grid: counts must be positive");
        const double h = (knots[b + 1] - knots[b]) / c;
        for (int i = 1; i < c; ++i) nodes.push_back(knots[b] + i * h);
        nodes.push_back(knots[b + 1]);
        anchors.push_back({knots[b], AnchorKind::on_grid});
    }
    anchors.push_back({knots.back(), AnchorKind::on_grid});
    return Grid(std::move(nodes), std::move(anchors));
}

Grid blocks_grid(const std::vector<double>& knots, int total_nodes) {
    const double W = knots.back() - knots.front();
    const int cells = total_nodes - 1;
    std::vector<int> counts;
    int used = 0;
    for (std::size_t b = 0; b + 1 < knots.size(); ++b) {
        int c = std::max(2, static_cast<int>(std::lround(
                                cells * (knots[b + 1] - knots[b]) / W)));
        if (b + 2 == knots.size()) c = std::max(2, cells - used);
        counts.push_back(c);
        used += c;
    }
    return blocks_grid(knots, counts);
}

Grid midway_grid(double l, double r, double K, int total_nodes) {
    if (!(l < K && K < r)) throw DomainError("midway_grid requires l < K < r");
    const int cells = total_nodes - 1;
    const double W = r - l;
    const int n1 = std::max(2, static_cast<int>(std::lround(cells * (K - l) / W)));
    const int n2 = std::max(2, cells - n1);
    const double h1 = (K - l) / n1;
    std::vector<double> nodes;
    nodes.reserve(static_cast<std::size_t>(n1 + n2) + 1);
    for (int i = 0; i < n1; ++i) nodes.push_back(l + (i + 0.5) * h1);
    const double start = K + 0.5 * h1;
    const double h2 = (r - start) / n2;
    if (!(h2 > 0.0)) throw DomainError("midway_grid: right block collapsed");
    for (int i = 0; i <= n2; ++i) nodes.push_back(start + i * h2);
    return Grid(std::move(nodes), {{K, AnchorKind::midway}});
}

void dump_csv(const Grid& g, std::ostream& os) {
    os << "index,node,step\n";
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double step = i + 1 < g.size() ? g.delta_plus(i) : 0.0;
        os << i << ',' << g[i] << ',' << step << '\n';
    }
}

} // namespace parischain
