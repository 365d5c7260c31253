#pragma once

#include "parischain/types.hpp"

#include <iosfwd>
#include <optional>
#include <vector>

namespace parischain {

enum class AnchorKind { on_grid, midway };

struct Anchor {
    double value;
    AnchorKind kind;
};

/// Strictly increasing state vector y_0..y_n with step metadata and anchor
/// bookkeeping (barrier on the grid, strikes midway between nodes).
class Grid {
public:
    explicit Grid(std::vector<double> nodes, std::vector<Anchor> anchors = {});

    std::size_t size() const { return nodes_.size(); } // n + 1 nodes
    double operator[](std::size_t i) const { return nodes_[i]; }
    const std::vector<double>& nodes() const { return nodes_; }
    double left() const { return nodes_.front(); }
    double right() const { return nodes_.back(); }
    double span() const { return right() - left(); }

    double delta_plus(std::size_t i) const { return nodes_[i + 1] - nodes_[i]; }
    double delta_minus(std::size_t i) const { return nodes_[i] - nodes_[i - 1]; }
    /// (delta^+ + delta^-) / 2 at an interior node.
    double delta_avg(std::size_t i) const {
        return 0.5 * (nodes_[i + 1] - nodes_[i - 1]);
    }
    double max_step() const;
    double min_step() const;
    double step_ratio() const { return max_step() / min_step(); }

    /// Smallest index i with node[i] >= level (snap-tolerant); size() if none.
    std::size_t upper_index(double level) const;
    /// Index of the node equal to x within tol_rel * span, if any.
    std::optional<std::size_t> index_of(double x, double tol_rel = 1e-8) const;

    const std::vector<Anchor>& anchors() const { return anchors_; }
    /// Verifies every anchor: on_grid within tol, midway within tol of a cell
    /// midpoint. Throws DomainError on violation.
    void check_anchors(double tol_rel = 1e-12) const;

private:
    std::vector<double> nodes_;
    std::vector<Anchor> anchors_;
};

Grid uniform_grid(double l, double r, int n);

/// Uniform grid shifted minimally so that x0 falls on a node.
Grid uniform_grid_through(double l, double r, int n, double x0);

/// Three-block piecewise-uniform grid with strike K midway and barrier L on
/// the grid. Handles both K < L and L < K layouts. Counts are per block.
Grid piecewise_uniform_grid(double l, double r, double K, double L, int n1,
                            int n2, int n3);

/// Same, with a total node budget split across blocks proportionally to their
/// widths (minimum 2 per block).
Grid piecewise_uniform_grid(double l, double r, double K, double L,
                            int total_nodes);

/// Uniform blocks between consecutive knots; every knot lands on the grid.
Grid blocks_grid(const std::vector<double>& knots, const std::vector<int>& counts);
Grid blocks_grid(const std::vector<double>& knots, int total_nodes);

/// Two-block grid with K placed midway between two adjacent nodes.
Grid midway_grid(double l, double r, double K, int total_nodes);

/// CSV dump: index,node,step.
void dump_csv(const Grid&, std::ostream&);

} // namespace parischain
