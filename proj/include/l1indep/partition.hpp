#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include <boost/container/small_vector.hpp>

namespace l1indep {

// n paired observations, X in R^d and Y in R^d', stored row-major.
struct PairedSample {
    std::size_t dim_x = 1;
    std::size_t dim_y = 1;
    std::vector<double> x;  // n * dim_x
    std::vector<double> y;  // n * dim_y

    std::size_t size() const { return dim_x == 0 ? 0 : x.size() / dim_x; }
    std::span<const double> x_row(std::size_t i) const { return {x.data() + i * dim_x, dim_x}; }
    std::span<const double> y_row(std::size_t i) const { return {y.data() + i * dim_y, dim_y}; }

    // Throws InvalidInput unless both blocks describe the same number of
    // rows and every coordinate is finite.
    void validate() const;

    static PairedSample univariate(std::vector<double> xs, std::vector<double> ys);
};

// Multi-index of one cubic cell. Inline storage covers the usual dimensions
// without heap traffic; higher dimensions still work.
using CellIndex = boost::container::small_vector<std::int64_t, 4>;

struct CellIndexHash {
    std::size_t operator()(const CellIndex& idx) const noexcept;
};

struct CellPairHash {
    std::size_t operator()(const std::pair<CellIndex, CellIndex>& key) const noexcept;
};

// Product partition P_n x Q_n of R^d x R^d': axis-aligned half-open cubes
// [origin + m*w, origin + (m+1)*w) with one edge length per block.
struct CubicPartition {
    std::size_t dim_x = 1;
    std::size_t dim_y = 1;
    double width_x = 1.0;
    double width_y = 1.0;
    std::vector<double> origin_x;  // length dim_x, all zeros when empty
    std::vector<double> origin_y;  // length dim_y, all zeros when empty
    // Set when the data-driven width rule fell back to 1 because a
    // coordinate was constant.
    bool degenerate_x = false;
    bool degenerate_y = false;

    void validate() const;

    // k cells per axis over the unit cube: width 1/k, origins 0. The usual
    // fixed partition for samples with uniform marginals.
    static CubicPartition unit_grid(std::size_t dim_x, std::size_t dim_y, int cells_per_axis);

    // Data-driven widths via default_width() on each block, origins 0.
    static CubicPartition for_sample(const PairedSample& sample);
};

// Sparse occupancy counts of a sample under a partition. counts / n are the
// empirical probabilities of the occupied cells; cells absent from the maps
// have count zero.
struct CellCounts {
    std::int64_t n = 0;
    std::unordered_map<std::pair<CellIndex, CellIndex>, std::int64_t, CellPairHash> joint;
    std::unordered_map<CellIndex, std::int64_t, CellIndexHash> marginal_x;
    std::unordered_map<CellIndex, std::int64_t, CellIndexHash> marginal_y;
};

// Cell containing a point: componentwise floor((p - origin) / width).
// Total on finite inputs; width must be positive.
CellIndex bin_point(std::span<const double> point, std::span<const double> origin, double width);

// Bins every pair of the sample. Invariants: joint counts sum to n, each
// marginal is the projection of the joint map, and every count is positive.
CellCounts build_counts(const PairedSample& sample, const CubicPartition& partition);

struct WidthEstimate {
    double width = 1.0;
    bool degenerate = false;
};

// Data-driven edge length for one block: 3.5 * sigma_hat * n^(-1/(2+total_dim)),
// where sigma_hat averages the per-coordinate sample standard deviations
// (n-1 denominator) of the block and total_dim = d + d' counts both blocks.
// A block whose coordinates are all constant gets width 1 and the degenerate
// flag; n must be at least 2.
WidthEstimate default_width(std::span<const double> block, std::size_t n,
                            std::size_t block_dim, std::size_t total_dim);

} // namespace l1indep
