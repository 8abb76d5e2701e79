#include "l1indep/partition.hpp"

#include <cmath>
#include <limits>

#include "l1indep/common.hpp"

namespace l1indep {

void PairedSample::validate() const {
    if (dim_x == 0 || dim_y == 0) {
        throw InvalidInput("sample: block dimensions must be positive");
    }
    if (x.size() % dim_x != 0 || y.size() % dim_y != 0) {
        throw InvalidInput("sample: coordinate block length is not a multiple of its dimension");
    }
    if (x.size() / dim_x != y.size() / dim_y) {
        throw InvalidInput("sample: X and Y blocks describe different numbers of rows");
    }
    for (double v : x) {
        if (!std::isfinite(v)) {
            throw InvalidInput("sample: non-finite X coordinate");
        }
    }
    for (double v : y) {
        if (!std::isfinite(v)) {
            throw InvalidInput("sample: non-finite Y coordinate");
        }
    }
}

PairedSample PairedSample::univariate(std::vector<double> xs, std::vector<double> ys) {
    PairedSample s;
    s.dim_x = 1;
    s.dim_y = 1;
    s.x = std::move(xs);
    s.y = std::move(ys);
    s.validate();
    return s;
}

std::size_t CellIndexHash::operator()(const CellIndex& idx) const noexcept {
    // FNV-1a over the index words; cheap and good enough for cell maps.
    std::uint64_t h = 1469598103934665603ull;
    for (std::int64_t v : idx) {
        h ^= static_cast<std::uint64_t>(v);
        h *= 1099511628211ull;
    }
    return static_cast<std::size_t>(h);
}

std::size_t CellPairHash::operator()(const std::pair<CellIndex, CellIndex>& key) const noexcept {
    const std::size_t a = CellIndexHash{}(key.first);
    const std::size_t b = CellIndexHash{}(key.second);
    return a ^ (b + 0x9e3779b97f4a7c15ull + (a << 6) + (a >> 2));
}

void CubicPartition::validate() const {
    if (dim_x == 0 || dim_y == 0) {
        throw InvalidInput("partition: dimensions must be positive");
    }
    if (!(width_x > 0.0) || !(width_y > 0.0) ||
        !std::isfinite(width_x) || !std::isfinite(width_y)) {
        throw InvalidInput("partition: cell widths must be positive and finite");
    }
    if (!origin_x.empty() && origin_x.size() != dim_x) {
        throw InvalidInput("partition: origin_x length does not match dim_x");
    }
    if (!origin_y.empty() && origin_y.size() != dim_y) {
        throw InvalidInput("partition: origin_y length does not match dim_y");
    }
    for (double v : origin_x) {
        if (!std::isfinite(v)) {
            throw InvalidInput("partition: non-finite origin coordinate");
        }
    }
    for (double v : origin_y) {
        if (!std::isfinite(v)) {
            throw InvalidInput("partition: non-finite origin coordinate");
        }
    }
}

CubicPartition CubicPartition::unit_grid(std::size_t dim_x, std::size_t dim_y, int cells_per_axis) {
    if (cells_per_axis < 1) {
        throw InvalidInput("partition: cells_per_axis must be at least 1");
    }
    CubicPartition p;
    p.dim_x = dim_x;
    p.dim_y = dim_y;
    p.width_x = 1.0 / cells_per_axis;
    p.width_y = 1.0 / cells_per_axis;
    p.origin_x.assign(dim_x, 0.0);
    p.origin_y.assign(dim_y, 0.0);
    p.validate();
    return p;
}

CubicPartition CubicPartition::for_sample(const PairedSample& sample) {
    sample.validate();
    const std::size_t n = sample.size();
    const std::size_t total_dim = sample.dim_x + sample.dim_y;
    const WidthEstimate wx = default_width(sample.x, n, sample.dim_x, total_dim);
    const WidthEstimate wy = default_width(sample.y, n, sample.dim_y, total_dim);
    CubicPartition p;
    p.dim_x = sample.dim_x;
    p.dim_y = sample.dim_y;
    p.width_x = wx.width;
    p.width_y = wy.width;
    p.origin_x.assign(sample.dim_x, 0.0);
    p.origin_y.assign(sample.dim_y, 0.0);
    p.degenerate_x = wx.degenerate;
    p.degenerate_y = wy.degenerate;
    p.validate();
    return p;
}

CellIndex bin_point(std::span<const double> point, std::span<const double> origin, double width) {
    if (!(width > 0.0)) {
        throw InvalidInput("bin_point: width must be positive");
    }
    CellIndex idx;
    idx.reserve(point.size());
    for (std::size_t k = 0; k < point.size(); ++k) {
        const double o = origin.empty() ? 0.0 : origin[k];
        const double f = std::floor((point[k] - o) / width);
        if (!(f >= static_cast<double>(std::numeric_limits<std::int64_t>::min()) &&
              f <= static_cast<double>(std::numeric_limits<std::int64_t>::max()))) {
            throw InvalidInput("bin_point: cell index overflows 64 bits");
        }
        idx.push_back(static_cast<std::int64_t>(f));
    }
    return idx;
}

CellCounts build_counts(const PairedSample& sample, const CubicPartition& partition) {
    sample.validate();
    partition.validate();
    if (partition.dim_x != sample.dim_x || partition.dim_y != sample.dim_y) {
        throw InvalidInput("build_counts: partition dimensions do not match the sample");
    }
    const std::size_t n = sample.size();
    CellCounts counts;
    counts.n = static_cast<std::int64_t>(n);
    counts.joint.reserve(n);
    counts.marginal_x.reserve(n);
    counts.marginal_y.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        CellIndex jx = bin_point(sample.x_row(i), partition.origin_x, partition.width_x);
        CellIndex jy = bin_point(sample.y_row(i), partition.origin_y, partition.width_y);
        ++counts.marginal_x[jx];
        ++counts.marginal_y[jy];
        ++counts.joint[{std::move(jx), std::move(jy)}];
    }
    return counts;
}

WidthEstimate default_width(std::span<const double> block, std::size_t n,
                            std::size_t block_dim, std::size_t total_dim) {
    if (block_dim == 0 || total_dim < block_dim) {
        throw InvalidInput("default_width: inconsistent dimensions");
    }
    if (n < 2 || block.size() != n * block_dim) {
        throw InvalidInput("default_width: need at least two rows of coordinates");
    }
    double sd_sum = 0.0;
    for (std::size_t k = 0; k < block_dim; ++k) {
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            mean += block[i * block_dim + k];
        }
        mean /= static_cast<double>(n);
        double ss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = block[i * block_dim + k] - mean;
            ss += d * d;
        }
        sd_sum += std::sqrt(ss / static_cast<double>(n - 1));
    }
    const double sigma_hat = sd_sum / static_cast<double>(block_dim);
    if (!(sigma_hat > 0.0)) {
        return {1.0, true};
    }
    const double exponent = -1.0 / (2.0 + static_cast<double>(total_dim));
    return {3.5 * sigma_hat * std::pow(static_cast<double>(n), exponent), false};
}

} // namespace l1indep
