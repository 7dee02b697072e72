#include "mgms/grid.hpp"

#include <string>

#include "mgms/error.hpp"

namespace mgms {

GridHierarchy::GridHierarchy(int n, int m) : n_(n), m_(m) {
    if (m < 1 || n < m || n % m != 0) {
        throw ConfigError("grid: fine size n=" + std::to_string(n) +
                          " must be a positive multiple of block size m=" +
                          std::to_string(m));
    }

    edges_.reserve(static_cast<std::size_t>(2 * n * (n + 1)));
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i <= n; ++i) {
            edges_.push_back({EdgeAxis::Vertical, i > 0 ? cell(i - 1, j) : -1,
                              i < n ? cell(i, j) : -1});
        }
    }
    for (int j = 0; j <= n; ++j) {
        for (int i = 0; i < n; ++i) {
            edges_.push_back({EdgeAxis::Horizontal, j > 0 ? cell(i, j - 1) : -1,
                              j < n ? cell(i, j) : -1});
        }
    }

    const int nb = n / m;
    cell_block_.resize(static_cast<std::size_t>(n * n));
    cell_local_.resize(static_cast<std::size_t>(n * n));
    block_cells_.resize(static_cast<std::size_t>(nb * nb));
    block_boundary_.resize(block_cells_.size());
    block_interior_.resize(block_cells_.size());

    for (int bj = 0; bj < nb; ++bj) {
        for (int bi = 0; bi < nb; ++bi) {
            const int b = bj * nb + bi;
            const int x0 = bi * m;
            const int y0 = bj * m;
            auto& cells = block_cells_[static_cast<std::size_t>(b)];
            for (int lj = 0; lj < m; ++lj) {
                for (int li = 0; li < m; ++li) {
                    const int c = cell(x0 + li, y0 + lj);
                    cell_block_[static_cast<std::size_t>(c)] = b;
                    cell_local_[static_cast<std::size_t>(c)] = static_cast<int>(cells.size());
                    cells.push_back(c);
                }
            }

            auto& bnd = block_boundary_[static_cast<std::size_t>(b)];
            for (int k = 0; k < m; ++k) bnd.push_back(horizontal_edge(x0 + k, y0));
            for (int k = 0; k < m; ++k) bnd.push_back(vertical_edge(x0 + m, y0 + k));
            for (int k = 0; k < m; ++k) bnd.push_back(horizontal_edge(x0 + k, y0 + m));
            for (int k = 0; k < m; ++k) bnd.push_back(vertical_edge(x0, y0 + k));
        }
    }

    for (int e = 0; e < n_edges(); ++e) {
        const Edge& ed = edges_[static_cast<std::size_t>(e)];
        if (ed.on_boundary()) continue;
        const int b = block_of_cell(ed.minus);
        if (b == block_of_cell(ed.plus)) block_interior_[static_cast<std::size_t>(b)].push_back(e);
    }
}

int GridHierarchy::cell_edge(int c, CellSide side) const noexcept {
    const int i = cell_col(c);
    const int j = cell_row(c);
    switch (side) {
    case CellSide::Left: return vertical_edge(i, j);
    case CellSide::Right: return vertical_edge(i + 1, j);
    case CellSide::Bottom: return horizontal_edge(i, j);
    case CellSide::Top: return horizontal_edge(i, j + 1);
    }
    return -1;
}

void GridHierarchy::check_block(int b) const {
    if (b < 0 || b >= n_blocks()) {
        throw IndexError("grid: block " + std::to_string(b) + " out of range [0, " +
                         std::to_string(n_blocks()) + ")");
    }
}

std::span<const int> GridHierarchy::block_cells(int b) const {
    check_block(b);
    return block_cells_[static_cast<std::size_t>(b)];
}

std::span<const int> GridHierarchy::block_boundary_edges(int b) const {
    check_block(b);
    return block_boundary_[static_cast<std::size_t>(b)];
}

std::span<const int> GridHierarchy::block_interior_edges(int b) const {
    check_block(b);
    return block_interior_[static_cast<std::size_t>(b)];
}

GridHierarchy build_hierarchy(int n, int m) { return GridHierarchy(n, m); }

std::vector<int> block_boundary_edges(const GridHierarchy& g, int b) {
    auto s = g.block_boundary_edges(b);
    return {s.begin(), s.end()};
}

} // namespace mgms
