#include "l1indep/statistics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <unordered_set>

#include "l1indep/common.hpp"
#include "l1indep/rng.hpp"

namespace l1indep {
namespace {

// Cap on the (num_x+1)*(num_y+1) prefix grid: 2^26 counts = 256 MiB.
constexpr std::size_t kMaxEcdfGridCells = std::size_t(1) << 26;

void require_univariate(const PairedSample& sample, const char* statistic) {
    if (sample.dim_x != 1 || sample.dim_y != 1) {
        throw InvalidInput(std::string(statistic) + ": defined for univariate X and Y only");
    }
}

double clip_for_weight(double f, double n) {
    return std::min(f, n / (n + 1.0));
}

int sign_of(double d) {
    return d > 0.0 ? 1 : (d < 0.0 ? -1 : 0);
}

double gamma_from_ecdf(const JointEcdf& e) {
    const double n = static_cast<double>(e.n());
    double best = 0.0;
    for (std::size_t a = 1; a <= e.num_x(); ++a) {
        const double fx = static_cast<double>(e.le_x(a)) / n;
        for (std::size_t b = 1; b <= e.num_y(); ++b) {
            const double fy = static_cast<double>(e.le_y(b)) / n;
            const double joint = static_cast<double>(e.le(a, b)) / n;
            best = std::max(best, std::fabs(joint - fx * fy));
        }
    }
    return best;
}

double bk_from_ecdf(const JointEcdf& e, int k, const WeightFunction& q1,
                    const WeightFunction& q2) {
    const double n = static_cast<double>(e.n());
    double total = 0.0;
    for (std::size_t a = 1; a <= e.num_x(); ++a) {
        const double fx = static_cast<double>(e.le_x(a)) / n;
        const double w1 = q1.fn(clip_for_weight(fx, n));
        const double cx = static_cast<double>(e.count_x(a));
        double row = 0.0;
        for (std::size_t b = 1; b <= e.num_y(); ++b) {
            const double fy = static_cast<double>(e.le_y(b)) / n;
            const double d = static_cast<double>(e.le(a, b)) / n - fx * fy;
            double dk = d;
            for (int j = 1; j < k; ++j) {
                dk *= d;
            }
            row += static_cast<double>(e.count_y(b)) * dk *
                   q2.fn(clip_for_weight(fy, n));
        }
        total += cx * w1 * row;
    }
    return total / (n * n);
}

double mn_from_ecdf(const JointEcdf& e) {
    const double n = static_cast<double>(e.n());
    // c = sum_i F_{n,2}(Y_i) scaled by n^2; a-th numerator is
    // n * sum_i F_n(x_a, Y_i) - le_x(a) * c, all over n^3.
    double c = 0.0;
    for (std::size_t b = 1; b <= e.num_y(); ++b) {
        c += static_cast<double>(e.count_y(b)) * static_cast<double>(e.le_y(b));
    }
    double best = 0.0;
    for (std::size_t a = 1; a <= e.num_x(); ++a) {
        double inner = 0.0;
        for (std::size_t b = 1; b <= e.num_y(); ++b) {
            inner += static_cast<double>(e.count_y(b)) * static_cast<double>(e.le(a, b));
        }
        const double num = inner * n - static_cast<double>(e.le_x(a)) * c;
        best = std::max(best, std::fabs(num));
    }
    return best / (n * n * n);
}

// Pairs (i < j) with y_i > y_j, counted during a bottom-up merge sort.
// Elements equal in y are never counted; the left run wins ties so the sort
// stays stable.
std::uint64_t count_inversions(std::vector<double>& y) {
    const std::size_t n = y.size();
    std::vector<double> buf(n);
    std::uint64_t inversions = 0;
    for (std::size_t width = 1; width < n; width *= 2) {
        for (std::size_t lo = 0; lo + width < n; lo += 2 * width) {
            const std::size_t mid = lo + width;
            const std::size_t hi = std::min(lo + 2 * width, n);
            std::size_t i = lo, j = mid, out = lo;
            while (i < mid && j < hi) {
                if (y[i] <= y[j]) {
                    buf[out++] = y[i++];
                } else {
                    inversions += mid - i;
                    buf[out++] = y[j++];
                }
            }
            while (i < mid) {
                buf[out++] = y[i++];
            }
            while (j < hi) {
                buf[out++] = y[j++];
            }
            std::copy(buf.begin() + lo, buf.begin() + hi, y.begin() + lo);
        }
    }
    return inversions;
}

std::uint64_t tie_pair_count(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    std::uint64_t pairs = 0;
    std::size_t run = 1;
    for (std::size_t i = 1; i <= values.size(); ++i) {
        if (i < values.size() && values[i] == values[i - 1]) {
            ++run;
        } else {
            pairs += static_cast<std::uint64_t>(run) * (run - 1) / 2;
            run = 1;
        }
    }
    return pairs;
}

} // namespace

double v_n(const CellCounts& counts) {
    if (counts.n <= 0 || counts.joint.empty()) {
        throw InvalidInput("v_n: empty counts");
    }
    const std::int64_t n = counts.n;
    // V_n * n^2 = sum_occupied |n c - mx my| + (n^2 - sum_occupied mx my):
    // every unoccupied joint pair of occupied marginal cells contributes its
    // product mass, and those products total n^2 minus the occupied part.
    std::int64_t discrepancy = 0;
    std::int64_t occupied_product = 0;
    for (const auto& [cell, c] : counts.joint) {
        const std::int64_t mx = counts.marginal_x.at(cell.first);
        const std::int64_t my = counts.marginal_y.at(cell.second);
        discrepancy += std::abs(n * c - mx * my);
        occupied_product += mx * my;
    }
    const std::int64_t numerator = discrepancy + (n * n - occupied_product);
    return static_cast<double>(numerator) / (static_cast<double>(n) * static_cast<double>(n));
}

double l_n(const CellCounts& counts, std::span<const CellIndex> cells_x,
           std::span<const CellIndex> cells_y) {
    if (counts.n <= 0) {
        throw InvalidInput("l_n: empty counts");
    }
    if (cells_x.empty() || cells_y.empty()) {
        throw InvalidInput("l_n: cell sets must be nonempty");
    }
    std::unordered_set<CellIndex, CellIndexHash> ux(cells_x.begin(), cells_x.end());
    std::unordered_set<CellIndex, CellIndexHash> uy(cells_y.begin(), cells_y.end());
    const std::int64_t n = counts.n;
    std::int64_t total = 0;
    for (const auto& jx : ux) {
        const auto itx = counts.marginal_x.find(jx);
        const std::int64_t mx = itx == counts.marginal_x.end() ? 0 : itx->second;
        for (const auto& jy : uy) {
            const auto ity = counts.marginal_y.find(jy);
            const std::int64_t my = ity == counts.marginal_y.end() ? 0 : ity->second;
            const auto itj = counts.joint.find({jx, jy});
            const std::int64_t c = itj == counts.joint.end() ? 0 : itj->second;
            total += std::abs(n * c - mx * my);
        }
    }
    return static_cast<double>(total) / (static_cast<double>(n) * static_cast<double>(n));
}

JointEcdf::JointEcdf(const PairedSample& sample) {
    require_univariate(sample, "empirical CDF grid");
    sample.validate();
    n_ = sample.size();
    if (n_ == 0) {
        throw InvalidInput("empirical CDF grid: empty sample");
    }
    std::vector<double> ux = sample.x;
    std::vector<double> uy = sample.y;
    std::sort(ux.begin(), ux.end());
    ux.erase(std::unique(ux.begin(), ux.end()), ux.end());
    std::sort(uy.begin(), uy.end());
    uy.erase(std::unique(uy.begin(), uy.end()), uy.end());
    num_x_ = ux.size();
    num_y_ = uy.size();
    const std::size_t rows = num_x_ + 1;
    const std::size_t cols = num_y_ + 1;
    if (rows > kMaxEcdfGridCells / cols) {
        throw InvalidInput("empirical CDF grid: sample has too many distinct values; "
                           "the quadratic-memory CDF statistics are not available at this size");
    }
    grid_.assign(rows * cols, 0);
    for (std::size_t i = 0; i < n_; ++i) {
        const std::size_t a =
            static_cast<std::size_t>(std::lower_bound(ux.begin(), ux.end(), sample.x[i]) - ux.begin()) + 1;
        const std::size_t b =
            static_cast<std::size_t>(std::lower_bound(uy.begin(), uy.end(), sample.y[i]) - uy.begin()) + 1;
        ++grid_[a * cols + b];
    }
    for (std::size_t a = 1; a < rows; ++a) {
        for (std::size_t b = 1; b < cols; ++b) {
            grid_[a * cols + b] += grid_[(a - 1) * cols + b] + grid_[a * cols + b - 1] -
                                   grid_[(a - 1) * cols + b - 1];
        }
    }
}

double gamma_n(const PairedSample& sample) {
    return gamma_from_ecdf(JointEcdf(sample));
}

WeightFunction unit_weight() {
    return {"unit", [](double) { return 1.0; }};
}

WeightFunction sine_weight() {
    return {"sine", [](double u) { return std::sin(M_PI * u); }};
}

double b_k_n(const PairedSample& sample, int k, const WeightFunction& q1,
             const WeightFunction& q2) {
    if (k < 1) {
        throw InvalidInput("b_k_n: exponent k must be a positive integer");
    }
    return bk_from_ecdf(JointEcdf(sample), k, q1, q2);
}

double m_n(const PairedSample& sample) {
    return mn_from_ecdf(JointEcdf(sample));
}

std::vector<double> ranks(std::span<const double> values) {
    const std::size_t n = values.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> out(n, 0.0);
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && values[order[j + 1]] == values[order[i]]) {
            ++j;
        }
        // Ranks i+1 .. j+1 averaged over the tie run.
        const double mid = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t t = i; t <= j; ++t) {
            out[order[t]] = mid;
        }
        i = j + 1;
    }
    return out;
}

ScoreFunction wilcoxon_score() {
    return {"wilcoxon", [](double u) { return u; }};
}

ScoreFunction sign_score() {
    return {"sign", [](double u) { return u > 0.5 ? 1.0 : (u < 0.5 ? -1.0 : 0.0); }};
}

ScoreFunction normal_score() {
    return {"normal", [](double u) { return normal_quantile(u); }};
}

double t_n(const PairedSample& sample, const ScoreFunction& a1, const ScoreFunction& a2) {
    require_univariate(sample, "t_n");
    sample.validate();
    const std::size_t n = sample.size();
    if (n == 0) {
        throw InvalidInput("t_n: empty sample");
    }
    const std::vector<double> rx = ranks(sample.x);
    const std::vector<double> ry = ranks(sample.y);
    const double denom = static_cast<double>(n) + 1.0;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        total += a1.fn(rx[i] / denom) * a2.fn(ry[i] / denom);
    }
    return total / static_cast<double>(n);
}

double kendall_tau(const PairedSample& sample) {
    require_univariate(sample, "kendall_tau");
    sample.validate();
    const std::size_t n = sample.size();
    if (n < 2) {
        throw InvalidInput("kendall_tau: need at least two pairs");
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (sample.x[a] != sample.x[b]) {
            return sample.x[a] < sample.x[b];
        }
        return sample.y[a] < sample.y[b];
    });

    // Pair budget: concordant + discordant = n0 - ties_x - ties_y + ties_xy.
    std::uint64_t ties_x = 0;
    std::uint64_t ties_xy = 0;
    {
        std::size_t run_x = 1;
        std::size_t run_xy = 1;
        for (std::size_t i = 1; i <= n; ++i) {
            const bool same_x = i < n && sample.x[order[i]] == sample.x[order[i - 1]];
            const bool same_xy = same_x && sample.y[order[i]] == sample.y[order[i - 1]];
            if (same_x) {
                ++run_x;
            } else {
                ties_x += static_cast<std::uint64_t>(run_x) * (run_x - 1) / 2;
                run_x = 1;
            }
            if (same_xy) {
                ++run_xy;
            } else {
                ties_xy += static_cast<std::uint64_t>(run_xy) * (run_xy - 1) / 2;
                run_xy = 1;
            }
        }
    }
    const std::uint64_t ties_y = tie_pair_count(sample.y);

    // In x-order (ties broken by ascending y), the strict y-descents are
    // exactly the discordant pairs: x-tied pairs never descend.
    std::vector<double> y_in_x_order(n);
    for (std::size_t i = 0; i < n; ++i) {
        y_in_x_order[i] = sample.y[order[i]];
    }
    const std::uint64_t discordant = count_inversions(y_in_x_order);

    const std::uint64_t n0 = static_cast<std::uint64_t>(n) * (n - 1) / 2;
    const std::int64_t comparable =
        static_cast<std::int64_t>(n0 - ties_x - ties_y + ties_xy);
    const std::int64_t net = comparable - 2 * static_cast<std::int64_t>(discordant);
    return static_cast<double>(net) / static_cast<double>(n0);
}

double kendall_tau_reference(const PairedSample& sample) {
    require_univariate(sample, "kendall_tau");
    sample.validate();
    const std::size_t n = sample.size();
    if (n < 2) {
        throw InvalidInput("kendall_tau: need at least two pairs");
    }
    std::int64_t net = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            net += sign_of(sample.x[i] - sample.x[j]) * sign_of(sample.y[i] - sample.y[j]);
        }
    }
    return static_cast<double>(net) /
           (0.5 * static_cast<double>(n) * (static_cast<double>(n) - 1.0));
}

std::string_view to_string(StatisticId id) {
    switch (id) {
        case StatisticId::vn: return "vn";
        case StatisticId::ln: return "ln";
        case StatisticId::gamma: return "gamma";
        case StatisticId::bkr: return "bkr";
        case StatisticId::kn: return "kn";
        case StatisticId::mn: return "mn";
        case StatisticId::tn: return "tn";
        case StatisticId::tau: return "tau";
    }
    return "?";
}

std::optional<StatisticId> statistic_from_string(std::string_view name) {
    for (StatisticId id : all_statistics()) {
        if (name == to_string(id)) {
            return id;
        }
    }
    return std::nullopt;
}

std::span<const StatisticId> all_statistics() {
    static constexpr std::array<StatisticId, 8> roster = {
        StatisticId::vn, StatisticId::ln, StatisticId::gamma, StatisticId::bkr,
        StatisticId::kn, StatisticId::mn, StatisticId::tn, StatisticId::tau,
    };
    return roster;
}

bool statistic_requires_univariate(StatisticId id) {
    return !statistic_uses_partition(id);
}

bool statistic_uses_partition(StatisticId id) {
    return id == StatisticId::vn || id == StatisticId::ln;
}

StatisticContext make_context(const PairedSample& observed,
                              const std::optional<CubicPartition>& partition) {
    StatisticContext ctx;
    ctx.partition = partition ? *partition : CubicPartition::for_sample(observed);
    const CellCounts counts = build_counts(observed, ctx.partition);
    ctx.ln_cells_x.reserve(counts.marginal_x.size());
    for (const auto& [cell, c] : counts.marginal_x) {
        ctx.ln_cells_x.push_back(cell);
    }
    ctx.ln_cells_y.reserve(counts.marginal_y.size());
    for (const auto& [cell, c] : counts.marginal_y) {
        ctx.ln_cells_y.push_back(cell);
    }
    // Deterministic order for reports and reruns.
    std::sort(ctx.ln_cells_x.begin(), ctx.ln_cells_x.end());
    std::sort(ctx.ln_cells_y.begin(), ctx.ln_cells_y.end());
    return ctx;
}

std::vector<double> compute_statistics(std::span<const StatisticId> ids,
                                       const PairedSample& sample,
                                       const StatisticContext& ctx) {
    sample.validate();
    bool need_counts = false;
    bool need_ecdf = false;
    for (StatisticId id : ids) {
        if (statistic_uses_partition(id)) {
            need_counts = true;
        } else if (id != StatisticId::tn && id != StatisticId::tau) {
            need_ecdf = true;
        }
        if (statistic_requires_univariate(id)) {
            require_univariate(sample, std::string(to_string(id)).c_str());
        }
    }

    std::optional<CellCounts> counts;
    if (need_counts) {
        counts.emplace(build_counts(sample, ctx.partition));
    }
    std::optional<JointEcdf> ecdf;
    if (need_ecdf) {
        ecdf.emplace(sample);
    }

    std::vector<double> out;
    out.reserve(ids.size());
    for (StatisticId id : ids) {
        switch (id) {
            case StatisticId::vn:
                out.push_back(v_n(*counts));
                break;
            case StatisticId::ln: {
                if (!ctx.ln_cells_x.empty() && !ctx.ln_cells_y.empty()) {
                    out.push_back(l_n(*counts, ctx.ln_cells_x, ctx.ln_cells_y));
                } else {
                    // No frozen cells: use the occupied cells of this sample.
                    std::vector<CellIndex> cx;
                    cx.reserve(counts->marginal_x.size());
                    for (const auto& [cell, c] : counts->marginal_x) {
                        cx.push_back(cell);
                    }
                    std::vector<CellIndex> cy;
                    cy.reserve(counts->marginal_y.size());
                    for (const auto& [cell, c] : counts->marginal_y) {
                        cy.push_back(cell);
                    }
                    out.push_back(l_n(*counts, cx, cy));
                }
                break;
            }
            case StatisticId::gamma:
                out.push_back(gamma_from_ecdf(*ecdf));
                break;
            case StatisticId::bkr:
                out.push_back(bk_from_ecdf(*ecdf, 2, unit_weight(), unit_weight()));
                break;
            case StatisticId::kn:
                out.push_back(bk_from_ecdf(*ecdf, 1, sine_weight(), sine_weight()));
                break;
            case StatisticId::mn:
                out.push_back(mn_from_ecdf(*ecdf));
                break;
            case StatisticId::tn:
                out.push_back(t_n(sample, ctx.score_x, ctx.score_y));
                break;
            case StatisticId::tau:
                out.push_back(kendall_tau(sample));
                break;
        }
    }
    return out;
}

double compute_statistic(StatisticId id, const PairedSample& sample,
                         const StatisticContext& ctx) {
    const std::array<StatisticId, 1> one = {id};
    return compute_statistics(one, sample, ctx)[0];
}

std::vector<StatisticId> supported_statistics(std::size_t dim_x, std::size_t dim_y) {
    std::vector<StatisticId> out;
    for (StatisticId id : all_statistics()) {
        if (dim_x == 1 && dim_y == 1) {
            out.push_back(id);
        } else if (!statistic_requires_univariate(id)) {
            out.push_back(id);
        }
    }
    return out;
}

} // namespace l1indep
