#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "l1indep/partition.hpp"

namespace l1indep {

// L1 distance between the binned joint law and the product of its binned
// marginals: sum over all cell pairs of |P_joint - P_x * P_y|. Computed in
// exact integer arithmetic over the occupied cells (the unoccupied remainder
// collapses to a closed form), so the result is the true rational value
// rounded once. Always in [0, 2].
double v_n(const CellCounts& counts);

// Same discrepancy restricted to a finite set of cell pairs
// cells_x x cells_y. Duplicate cells are ignored. Equals v_n whenever the
// given sets cover every occupied marginal cell.
double l_n(const CellCounts& counts, std::span<const CellIndex> cells_x,
           std::span<const CellIndex> cells_y);

// Kolmogorov-Smirnov style discrepancy sup |F_n(x,y) - F_{n,1}(x) F_{n,2}(y)|,
// evaluated over the lattice of observed coordinate pairs where the sup is
// attained. Univariate margins only.
double gamma_n(const PairedSample& sample);

// Weight for the CDF functionals below, evaluated on (0, 1].
struct WeightFunction {
    std::string name;
    std::function<double(double)> fn;
};
WeightFunction unit_weight();  // q(u) = 1
WeightFunction sine_weight();  // q(u) = sin(pi u)

// Weighted CDF functional
//   (1/n^2) sum_{i,l} [F_n(X_i, Y_l) - F_{n,1}(X_i) F_{n,2}(Y_l)]^k
//                     q1(F_{n,1}(X_i)) q2(F_{n,2}(Y_l)),
// with the weight arguments clipped to n/(n+1) so q may blow up at 1.
// k = 2 with unit weights is the Blum-Kiefer-Rosenblatt statistic; k = 1
// with sine weights is the Koziol-Nemec one. Univariate margins only.
double b_k_n(const PairedSample& sample, int k, const WeightFunction& q1,
             const WeightFunction& q2);

// sup_x |(1/n) sum_i (F_n(x, Y_i) - F_{n,1}(x) F_{n,2}(Y_i))|, the
// sup-of-averages discrepancy. Univariate margins only.
double m_n(const PairedSample& sample);

// Midranks, 1-based: ties get the average of the ranks they span.
std::vector<double> ranks(std::span<const double> values);

// Rank score evaluated on (0, 1).
struct ScoreFunction {
    std::string name;
    std::function<double(double)> fn;
};
ScoreFunction wilcoxon_score();  // a(u) = u
ScoreFunction sign_score();      // a(u) = sign(u - 1/2)
ScoreFunction normal_score();    // a(u) = Phi^{-1}(u)

// Simple linear rank statistic (1/n) sum_i a1(R_i/(n+1)) a2(S_i/(n+1)) with
// midranks R, S of the two coordinates. Univariate margins only.
double t_n(const PairedSample& sample, const ScoreFunction& a1, const ScoreFunction& a2);

// Kendall's tau-a with tie handling:
//   (1/(n(n-1))) sum_{i != j} sign(X_i - X_j) sign(Y_i - Y_j),
// computed by merge counting in O(n log n). Needs n >= 2.
double kendall_tau(const PairedSample& sample);

// Definition-faithful O(n^2) evaluation, kept as an oracle for the fast path.
double kendall_tau_reference(const PairedSample& sample);

// Joint empirical CDF support for the statistics above: unique sorted
// coordinate values plus an inclusive prefix-count grid
//   le(a, b) = #{ i : X_i <= ux[a-1], Y_i <= uy[b-1] },
// indexed 0..num_x by 0..num_y so index 0 is the left-of-everything limit.
// Storage is (num_x+1)*(num_y+1) counts; construction throws InvalidInput
// once that grid would exceed an internal memory cap.
class JointEcdf {
public:
    explicit JointEcdf(const PairedSample& sample);

    std::size_t n() const { return n_; }
    std::size_t num_x() const { return num_x_; }
    std::size_t num_y() const { return num_y_; }

    std::int64_t le(std::size_t a, std::size_t b) const {
        return grid_[a * (num_y_ + 1) + b];
    }
    std::int64_t le_x(std::size_t a) const { return le(a, num_y_); }
    std::int64_t le_y(std::size_t b) const { return le(num_x_, b); }
    // Multiplicity of the a-th smallest unique value, a in 1..num_x.
    std::int64_t count_x(std::size_t a) const { return le_x(a) - le_x(a - 1); }
    std::int64_t count_y(std::size_t b) const { return le_y(b) - le_y(b - 1); }

private:
    std::size_t n_ = 0;
    std::size_t num_x_ = 0;
    std::size_t num_y_ = 0;
    std::vector<std::uint32_t> grid_;
};

// Roster of implemented independence statistics.
enum class StatisticId { vn, ln, gamma, bkr, kn, mn, tn, tau };

std::string_view to_string(StatisticId id);
std::optional<StatisticId> statistic_from_string(std::string_view name);
std::span<const StatisticId> all_statistics();

// True for the statistics defined only for univariate X and Y.
bool statistic_requires_univariate(StatisticId id);
// True for the partition-based statistics (vn, ln).
bool statistic_uses_partition(StatisticId id);

// Everything a statistic needs besides the sample itself. A context is
// frozen once per analysis so that resampling procedures hold the partition,
// the ln cell sets, and the scores fixed while the sample varies.
struct StatisticContext {
    CubicPartition partition;
    // Cell sets for ln. Empty means "the occupied marginal cells of the
    // sample being evaluated"; make_context freezes them from the observed
    // sample so permuted replicas reuse the observed sets.
    std::vector<CellIndex> ln_cells_x;
    std::vector<CellIndex> ln_cells_y;
    ScoreFunction score_x = wilcoxon_score();
    ScoreFunction score_y = wilcoxon_score();
};

// Context for an observed sample: the given partition (or the data-driven
// default when absent) plus ln cell sets frozen from the observed counts.
StatisticContext make_context(const PairedSample& observed,
                              const std::optional<CubicPartition>& partition = std::nullopt);

// Evaluates one statistic. Throws InvalidInput when the statistic does not
// support the sample's dimensions.
double compute_statistic(StatisticId id, const PairedSample& sample,
                         const StatisticContext& ctx);

// Evaluates several statistics on one sample, sharing the binned counts and
// the CDF grid across statistics that need them. Order follows `ids`.
std::vector<double> compute_statistics(std::span<const StatisticId> ids,
                                       const PairedSample& sample,
                                       const StatisticContext& ctx);

// Statistics supported for the given sample dimensions, in roster order.
std::vector<StatisticId> supported_statistics(std::size_t dim_x, std::size_t dim_y);

} // namespace l1indep
