#pragma once

#include <array>
#include <span>
#include <vector>

namespace mgms {

enum class EdgeAxis : unsigned char { Vertical, Horizontal };

enum class CellSide : unsigned char { Left = 0, Right = 1, Bottom = 2, Top = 3 };

/// A fine edge. Vertical edges are oriented along +x, horizontal edges
/// along +y; `minus`/`plus` are the adjacent cells on either side of that
/// orientation, -1 where the edge lies on the domain boundary.
struct Edge {
    EdgeAxis axis;
    int minus;
    int plus;

    bool on_boundary() const noexcept { return minus < 0 || plus < 0; }
};

/// Uniform n x n fine mesh over the unit square partitioned into m x m
/// coarse blocks. Everything is numbered row-major; edges list all vertical
/// edges first, then all horizontal ones. Immutable after construction.
class GridHierarchy {
public:
    /// Throws ConfigError unless n >= m >= 1 and m divides n.
    GridHierarchy(int n, int m);

    int n() const noexcept { return n_; }
    int m() const noexcept { return m_; }
    int blocks_per_side() const noexcept { return n_ / m_; }
    int n_blocks() const noexcept { return blocks_per_side() * blocks_per_side(); }
    int n_cells() const noexcept { return n_ * n_; }
    int cells_per_block() const noexcept { return m_ * m_; }
    int n_edges() const noexcept { return static_cast<int>(edges_.size()); }
    double h() const noexcept { return 1.0 / n_; }
    double cell_area() const noexcept { return h() * h(); }

    int cell(int i, int j) const noexcept { return j * n_ + i; }
    int cell_col(int c) const noexcept { return c % n_; }
    int cell_row(int c) const noexcept { return c / n_; }
    std::array<double, 2> cell_center(int c) const noexcept {
        return {(cell_col(c) + 0.5) * h(), (cell_row(c) + 0.5) * h()};
    }

    /// Edge on the line x = i*h spanning row j (0 <= i <= n, 0 <= j < n).
    int vertical_edge(int i, int j) const noexcept { return j * (n_ + 1) + i; }
    /// Edge on the line y = j*h spanning column i (0 <= i < n, 0 <= j <= n).
    int horizontal_edge(int i, int j) const noexcept {
        return n_ * (n_ + 1) + j * n_ + i;
    }
    int cell_edge(int c, CellSide side) const noexcept;

    const Edge& edge(int e) const { return edges_[static_cast<std::size_t>(e)]; }
    std::span<const Edge> edges() const noexcept { return edges_; }

    int block_of_cell(int c) const { return cell_block_[static_cast<std::size_t>(c)]; }
    /// Position of cell c inside its block's cell list.
    int local_index(int c) const { return cell_local_[static_cast<std::size_t>(c)]; }

    /// Cells of block b, row-major within the block. Throws IndexError.
    std::span<const int> block_cells(int b) const;
    /// 4m edges: bottom, right, top, left; each left-to-right or bottom-to-top.
    std::span<const int> block_boundary_edges(int b) const;
    /// Edges with both neighbours inside block b, in global edge order.
    std::span<const int> block_interior_edges(int b) const;

private:
    void check_block(int b) const;

    int n_;
    int m_;
    std::vector<Edge> edges_;
    std::vector<int> cell_block_;
    std::vector<int> cell_local_;
    std::vector<std::vector<int>> block_cells_;
    std::vector<std::vector<int>> block_boundary_;
    std::vector<std::vector<int>> block_interior_;
};

GridHierarchy build_hierarchy(int n, int m);

/// Range-checked accessor returning a copy of the ordered boundary list.
std::vector<int> block_boundary_edges(const GridHierarchy& g, int b);

} // namespace mgms
