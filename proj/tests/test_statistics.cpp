#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "l1indep/common.hpp"
#include "l1indep/partition.hpp"
#include "l1indep/statistics.hpp"
#include "oracles.hpp"
#include "testutil.hpp"

using namespace l1indep;

namespace {

CellCounts bin(const std::vector<double>& xs, const std::vector<double>& ys, double width,
               double origin = 0.0) {
    CubicPartition part;
    part.width_x = width;
    part.width_y = width;
    part.origin_x = {origin};
    part.origin_y = {origin};
    return build_counts(PairedSample::univariate(xs, ys), part);
}

} // namespace

TEST_CASE("v_n hand values") {
    // Two points in opposite diagonal cells of a half-width grid: the joint
    // puts 1/2 on two cells whose product masses are 1/4, and the two empty
    // diagonal cells carry product mass 1/4 each, so the distance is
    // 2*(1/4) + 2*(1/4) = 1.
    CHECK(v_n(bin({0.1, 0.9}, {0.1, 0.9}, 0.5)) == 1.0);

    // A sample whose binned law factorizes exactly.
    CHECK(v_n(bin({0.1, 0.1, 0.6, 0.6}, {0.1, 0.6, 0.1, 0.6}, 0.5)) == 0.0);

    // Three points, one repeated: per cell |c/n - product| = 2/9 on each of
    // the four occupied-margin combinations.
    CHECK(v_n(bin({0.1, 0.1, 0.6}, {0.1, 0.1, 0.6}, 0.5)) == doctest::Approx(8.0 / 9.0));
    CHECK(v_n(bin({0.1, 0.1, 0.6}, {0.1, 0.1, 0.6}, 0.5)) ==
          oracle::vn({0.1, 0.1, 0.6}, {0.1, 0.1, 0.6}, 0.5, 0.5, 0.0, 0.0));

    CHECK_THROWS_AS(v_n(CellCounts{}), InvalidInput);
}

TEST_CASE("v_n matches the brute-force loop exactly on random small samples") {
    std::mt19937_64 eng(2026);
    std::uniform_int_distribution<std::size_t> size_dist(1, 8);
    std::uniform_real_distribution<double> width_dist(0.2, 1.3);
    std::uniform_real_distribution<double> origin_dist(-0.6, 0.6);
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t n = size_dist(eng);
        auto [xs, ys] = testutil::random_pairs(eng, n, trial % 2 ? 0.6 : 0.0);
        const double wx = width_dist(eng);
        const double wy = width_dist(eng);
        const double ox = origin_dist(eng);
        const double oy = origin_dist(eng);
        CubicPartition part;
        part.width_x = wx;
        part.width_y = wy;
        part.origin_x = {ox};
        part.origin_y = {oy};
        const CellCounts counts = build_counts(PairedSample::univariate(xs, ys), part);
        // Both sides reduce to the same integer divided by n^2 once.
        REQUIRE(v_n(counts) == oracle::vn(xs, ys, wx, wy, ox, oy));
    }
}

TEST_CASE("v_n range") {
    std::mt19937_64 eng(4);
    for (int trial = 0; trial < 50; ++trial) {
        auto [xs, ys] = testutil::random_pairs(eng, 30, 0.3);
        const double v = v_n(bin(xs, ys, 0.25));
        REQUIRE(v >= 0.0);
        REQUIRE(v <= 2.0);
    }
}

TEST_CASE("l_n restricted sums") {
    const std::vector<double> xs = {0.1, 0.9, 0.4, 0.7, 0.2};
    const std::vector<double> ys = {0.8, 0.1, 0.3, 0.9, 0.2};
    const CellCounts counts = bin(xs, ys, 0.5);

    // The occupied marginal cells of this sample are {0, 1} on both axes.
    std::vector<CellIndex> cx = {CellIndex{0}, CellIndex{1}};
    std::vector<CellIndex> cy = {CellIndex{0}, CellIndex{1}};
    CHECK(l_n(counts, cx, cy) == v_n(counts));

    // Duplicates must not double-count.
    std::vector<CellIndex> cx_dup = {CellIndex{0}, CellIndex{1}, CellIndex{0}};
    CHECK(l_n(counts, cx_dup, cy) == v_n(counts));

    // A proper subset can only shed mass.
    std::vector<CellIndex> cx_sub = {CellIndex{0}};
    CHECK(l_n(counts, cx_sub, cy) <= v_n(counts));
    CHECK(l_n(counts, cx_sub, cy) ==
          oracle::ln(xs, ys, 0.5, 0.5, 0.0, 0.0, {0}, {0, 1}));

    // Cells nobody occupies contribute nothing.
    std::vector<CellIndex> cx_far = {CellIndex{40}};
    CHECK(l_n(counts, cx_far, cy) == 0.0);

    CHECK_THROWS_AS(l_n(counts, {}, cy), InvalidInput);
    CHECK_THROWS_AS(l_n(counts, cx, {}), InvalidInput);
}

TEST_CASE("l_n on one all-mass cell is zero") {
    // Everything in a single joint cell: |1 - 1*1| = 0.
    const CellCounts counts = bin({0.1, 0.2, 0.3}, {0.1, 0.2, 0.3}, 5.0);
    std::vector<CellIndex> c0 = {CellIndex{0}};
    CHECK(l_n(counts, c0, c0) == 0.0);
}

TEST_CASE("l_n matches the brute-force loop on random subsets") {
    std::mt19937_64 eng(77);
    std::uniform_int_distribution<std::size_t> size_dist(2, 8);
    std::uniform_int_distribution<long long> cell_dist(-2, 3);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = size_dist(eng);
        auto [xs, ys] = testutil::random_pairs(eng, n, 0.4);
        std::vector<long long> raw_cx, raw_cy;
        const std::size_t kx = 1 + eng() % 4;
        const std::size_t ky = 1 + eng() % 4;
        for (std::size_t i = 0; i < kx; ++i) {
            raw_cx.push_back(cell_dist(eng));
        }
        for (std::size_t i = 0; i < ky; ++i) {
            raw_cy.push_back(cell_dist(eng));
        }
        std::vector<CellIndex> cx, cy;
        for (long long c : raw_cx) {
            cx.push_back(CellIndex{c});
        }
        for (long long c : raw_cy) {
            cy.push_back(CellIndex{c});
        }
        const CellCounts counts = bin(xs, ys, 0.4, -0.1);
        REQUIRE(l_n(counts, cx, cy) ==
                oracle::ln(xs, ys, 0.4, 0.4, -0.1, -0.1, raw_cx, raw_cy));
    }
}

TEST_CASE("gamma_n hand values") {
    // Two antitone points: F_n(0.1, 0.1) = 0 while the marginals give 1/4.
    CHECK(gamma_n(PairedSample::univariate({0.1, 0.9}, {0.9, 0.1})) == 0.25);
    // Comonotone n = 4: the worst corner is at the median split,
    // |2/4 - (2/4)^2| = 1/4.
    CHECK(gamma_n(PairedSample::univariate({0.25, 0.5, 0.75, 1.0},
                                           {0.25, 0.5, 0.75, 1.0})) == 0.25);
    // A single point is always comonotone with itself but F = F1 F2 = 1.
    CHECK(gamma_n(PairedSample::univariate({0.3}, {0.7})) == 0.0);
}

TEST_CASE("gamma_n matches the cut-point search on random samples") {
    std::mt19937_64 eng(31);
    std::uniform_int_distribution<std::size_t> size_dist(1, 8);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = size_dist(eng);
        auto [xs, ys] = testutil::random_pairs(eng, n, trial % 2 ? 0.5 : 0.0);
        const double fast = gamma_n(PairedSample::univariate(xs, ys));
        const double slow = oracle::gamma(xs, ys);
        REQUIRE(fast == doctest::Approx(slow).epsilon(1e-12));
        REQUIRE(fast >= 0.0);
    }
}

TEST_CASE("b_k_n hand values and properties") {
    const WeightFunction unit = unit_weight();
    const WeightFunction sine = sine_weight();

    // One point: F = F1 = F2, so F - F1 F2 = 1 - 1 = 0.
    CHECK(b_k_n(PairedSample::univariate({0.4}, {0.2}), 2, unit, unit) == 0.0);

    // The factorized 2x2 design: discrepancies are zero only at full-mass
    // corners, elsewhere F - F1 F2 = 0 too (product structure).
    const PairedSample factorized =
        PairedSample::univariate({0.1, 0.1, 0.6, 0.6}, {0.1, 0.6, 0.1, 0.6});
    CHECK(b_k_n(factorized, 2, unit, unit) ==
          doctest::Approx(oracle::bk({0.1, 0.1, 0.6, 0.6}, {0.1, 0.6, 0.1, 0.6}, 2,
                                     oracle::unit_q, oracle::unit_q))
              .epsilon(1e-15));

    CHECK_THROWS_AS(b_k_n(factorized, 0, unit, unit), InvalidInput);
    CHECK_THROWS_AS(b_k_n(factorized, -2, unit, unit), InvalidInput);

    // Even exponent makes every term nonnegative.
    std::mt19937_64 eng(8);
    for (int trial = 0; trial < 20; ++trial) {
        auto [xs, ys] = testutil::random_pairs(eng, 6, 0.3);
        REQUIRE(b_k_n(PairedSample::univariate(xs, ys), 2, unit, unit) >= 0.0);
    }
}

TEST_CASE("b_k_n matches the brute-force double sum on random samples") {
    const WeightFunction unit = unit_weight();
    const WeightFunction sine = sine_weight();
    std::mt19937_64 eng(55);
    std::uniform_int_distribution<std::size_t> size_dist(1, 8);
    for (int trial = 0; trial < 120; ++trial) {
        const std::size_t n = size_dist(eng);
        auto [xs, ys] = testutil::random_pairs(eng, n, trial % 2 ? 0.5 : 0.0);
        const PairedSample sample = PairedSample::univariate(xs, ys);
        REQUIRE(b_k_n(sample, 2, unit, unit) ==
                doctest::Approx(oracle::bk(xs, ys, 2, oracle::unit_q, oracle::unit_q))
                    .epsilon(1e-13));
        REQUIRE(b_k_n(sample, 1, sine, sine) ==
                doctest::Approx(oracle::bk(xs, ys, 1, oracle::sine_q, oracle::sine_q))
                    .epsilon(1e-13));
        REQUIRE(b_k_n(sample, 1, unit, sine) ==
                doctest::Approx(oracle::bk(xs, ys, 1, oracle::unit_q, oracle::sine_q))
                    .epsilon(1e-13));
    }
}

TEST_CASE("m_n matches the cut-point search on random samples") {
    CHECK(m_n(PairedSample::univariate({0.3}, {0.7})) == 0.0);
    std::mt19937_64 eng(99);
    std::uniform_int_distribution<std::size_t> size_dist(1, 8);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = size_dist(eng);
        auto [xs, ys] = testutil::random_pairs(eng, n, trial % 2 ? 0.5 : 0.0);
        const double fast = m_n(PairedSample::univariate(xs, ys));
        REQUIRE(fast == doctest::Approx(oracle::mn(xs, ys)).epsilon(1e-12));
        REQUIRE(fast >= 0.0);
    }
}

TEST_CASE("midranks") {
    CHECK(ranks(std::vector<double>{0.9, 0.1, 0.5}) == std::vector<double>{3.0, 1.0, 2.0});
    CHECK(ranks(std::vector<double>{0.2, 0.2, 0.7}) == std::vector<double>{1.5, 1.5, 3.0});
    CHECK(ranks(std::vector<double>{5.0, 5.0, 5.0}) == std::vector<double>{2.0, 2.0, 2.0});
    const std::vector<double> sorted = {1.0, 2.0, 3.0, 4.0};
    CHECK(ranks(sorted) == std::vector<double>{1.0, 2.0, 3.0, 4.0});

    // Midranks always sum to n(n+1)/2, ties or not.
    std::mt19937_64 eng(12);
    for (int trial = 0; trial < 50; ++trial) {
        auto [xs, ys] = testutil::random_pairs(eng, 9, 0.6);
        const std::vector<double> r = ranks(xs);
        const double total = std::accumulate(r.begin(), r.end(), 0.0);
        REQUIRE(total == doctest::Approx(9.0 * 10.0 / 2.0));
    }
}

TEST_CASE("t_n hand values") {
    const ScoreFunction wil = wilcoxon_score();
    // Identity scores on a concordant triple: ranks (1,2,3) against (1,2,3),
    // (1/3) * (1*1 + 2*2 + 3*3) / 16 = 14/48.
    const PairedSample concordant = PairedSample::univariate({0.1, 0.5, 0.9}, {0.2, 0.6, 0.8});
    CHECK(t_n(concordant, wil, wil) == doctest::Approx(14.0 / 48.0).epsilon(1e-15));

    // Sign scores on the same triple: the middle rank sits exactly at 1/2.
    const ScoreFunction sgn = sign_score();
    CHECK(t_n(concordant, sgn, sgn) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));

    CHECK_THROWS_AS(t_n(PairedSample{}, wil, wil), InvalidInput);
}

TEST_CASE("t_n matches the counting oracle on random samples") {
    const ScoreFunction wil = wilcoxon_score();
    const ScoreFunction sgn = sign_score();
    std::mt19937_64 eng(21);
    std::uniform_int_distribution<std::size_t> size_dist(1, 8);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = size_dist(eng);
        auto [xs, ys] = testutil::random_pairs(eng, n, trial % 2 ? 0.5 : 0.0);
        const PairedSample sample = PairedSample::univariate(xs, ys);
        REQUIRE(t_n(sample, wil, wil) ==
                doctest::Approx(oracle::tn(xs, ys, oracle::wilcoxon_a, oracle::wilcoxon_a))
                    .epsilon(1e-13));
        REQUIRE(t_n(sample, sgn, sgn) ==
                doctest::Approx(oracle::tn(xs, ys, oracle::sign_a, oracle::sign_a))
                    .epsilon(1e-13));
    }
}

TEST_CASE("t_n is invariant under strictly increasing marginal maps") {
    const ScoreFunction wil = wilcoxon_score();
    const ScoreFunction nrm = normal_score();
    std::mt19937_64 eng(34);
    auto [xs, ys] = testutil::random_pairs(eng, 12, 0.4);
    std::vector<double> ex(xs.size()), ly(ys.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        ex[i] = std::exp(xs[i]);
        ly[i] = 3.0 * ys[i] - 7.0;
    }
    const PairedSample a = PairedSample::univariate(xs, ys);
    const PairedSample b = PairedSample::univariate(ex, ly);
    CHECK(t_n(a, wil, wil) == t_n(b, wil, wil));
    CHECK(t_n(a, nrm, nrm) == t_n(b, nrm, nrm));
}

TEST_CASE("kendall tau on triples and degenerate inputs") {
    CHECK(kendall_tau(PairedSample::univariate({1, 2, 3}, {4, 5, 6})) == 1.0);
    CHECK(kendall_tau(PairedSample::univariate({1, 2, 3}, {6, 5, 4})) == -1.0);
    // All Y tied: every sign product is zero.
    CHECK(kendall_tau(PairedSample::univariate({1, 2, 3}, {5, 5, 5})) == 0.0);
    CHECK_THROWS_AS(kendall_tau(PairedSample::univariate({1}, {2})), InvalidInput);
}

TEST_CASE("merge-counting tau equals the quadratic definition") {
    std::mt19937_64 eng(61);
    std::uniform_int_distribution<std::size_t> size_dist(2, 8);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = size_dist(eng);
        auto [xs, ys] = testutil::random_pairs(eng, n, trial % 2 ? 0.6 : 0.0);
        const PairedSample sample = PairedSample::univariate(xs, ys);
        REQUIRE(kendall_tau(sample) == kendall_tau_reference(sample));
        REQUIRE(kendall_tau(sample) == oracle::tau(xs, ys));
    }
    // Larger tie-free and tie-heavy samples exercise the merge path deeper.
    for (int trial = 0; trial < 10; ++trial) {
        auto [xs, ys] = testutil::random_pairs(eng, 100, trial % 2 ? 0.7 : 0.0);
        const PairedSample sample = PairedSample::univariate(xs, ys);
        REQUIRE(kendall_tau(sample) == kendall_tau_reference(sample));
    }
}

TEST_CASE("tau flips sign when one margin is negated") {
    std::mt19937_64 eng(71);
    auto [xs, ys] = testutil::random_pairs(eng, 40, 0.0);
    std::vector<double> neg = ys;
    for (double& v : neg) {
        v = -v;
    }
    const double plus = kendall_tau(PairedSample::univariate(xs, ys));
    const double minus = kendall_tau(PairedSample::univariate(xs, neg));
    CHECK(plus == -minus);
    CHECK(plus >= -1.0);
    CHECK(plus <= 1.0);
}

TEST_CASE("statistics are invariant under a joint relabeling of the pairs") {
    std::mt19937_64 eng(81);
    auto [xs, ys] = testutil::random_pairs(eng, 25, 0.4);
    std::vector<std::size_t> order(xs.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), eng);
    std::vector<double> px(xs.size()), py(ys.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        px[i] = xs[order[i]];
        py[i] = ys[order[i]];
    }
    const PairedSample a = PairedSample::univariate(xs, ys);
    const PairedSample b = PairedSample::univariate(px, py);

    CHECK(v_n(bin(xs, ys, 0.5)) == v_n(bin(px, py, 0.5)));
    CHECK(gamma_n(a) == gamma_n(b));
    CHECK(m_n(a) == m_n(b));
    const WeightFunction unit = unit_weight();
    CHECK(b_k_n(a, 2, unit, unit) == b_k_n(b, 2, unit, unit));
    CHECK(kendall_tau(a) == kendall_tau(b));
    const ScoreFunction wil = wilcoxon_score();
    // The rank statistic sums in sample order; permuting reorders the sum.
    CHECK(t_n(a, wil, wil) == doctest::Approx(t_n(b, wil, wil)).epsilon(1e-14));
}

TEST_CASE("CDF statistics reject multivariate blocks") {
    PairedSample sample;
    sample.dim_x = 2;
    sample.dim_y = 1;
    sample.x = {0.1, 0.2, 0.3, 0.4};
    sample.y = {0.5, 0.6};
    const WeightFunction unit = unit_weight();
    const ScoreFunction wil = wilcoxon_score();
    CHECK_THROWS_WITH_AS(gamma_n(sample), doctest::Contains("univariate"), InvalidInput);
    CHECK_THROWS_AS(b_k_n(sample, 2, unit, unit), InvalidInput);
    CHECK_THROWS_AS(m_n(sample), InvalidInput);
    CHECK_THROWS_AS(t_n(sample, wil, wil), InvalidInput);
    CHECK_THROWS_AS(kendall_tau(sample), InvalidInput);
}

TEST_CASE("joint ECDF grid layout") {
    const PairedSample sample =
        PairedSample::univariate({0.3, 0.1, 0.3, 0.7}, {0.2, 0.4, 0.4, 0.1});
    const JointEcdf ecdf(sample);
    CHECK(ecdf.n() == 4);
    CHECK(ecdf.num_x() == 3);  // 0.1 0.3 0.7
    CHECK(ecdf.num_y() == 3);  // 0.1 0.2 0.4
    CHECK(ecdf.le(0, 3) == 0);
    CHECK(ecdf.le(3, 3) == 4);
    CHECK(ecdf.le_x(1) == 1);
    CHECK(ecdf.le_x(2) == 3);
    CHECK(ecdf.le_y(2) == 2);
    CHECK(ecdf.count_x(2) == 2);
    // (x <= 0.3, y <= 0.2): only the pair (0.3, 0.2).
    CHECK(ecdf.le(2, 2) == 1);
}

TEST_CASE("joint ECDF refuses quadratic blowup") {
    // 8192 distinct values per axis pushes the inclusive grid past the cap.
    const std::size_t big = 8192;
    std::vector<double> xs(big), ys(big);
    for (std::size_t i = 0; i < big; ++i) {
        xs[i] = static_cast<double>(i);
        ys[i] = static_cast<double>(i);
    }
    const PairedSample sample = PairedSample::univariate(xs, ys);
    CHECK_THROWS_WITH_AS(JointEcdf{sample}, doctest::Contains("too many distinct"),
                         InvalidInput);
}

TEST_CASE("statistic roster and name round trip") {
    CHECK(all_statistics().size() == 8);
    for (StatisticId id : all_statistics()) {
        const auto back = statistic_from_string(to_string(id));
        REQUIRE(back.has_value());
        CHECK(*back == id);
    }
    CHECK_FALSE(statistic_from_string("nonsense").has_value());
    CHECK(statistic_from_string("vn") == StatisticId::vn);
    CHECK(statistic_from_string("tau") == StatisticId::tau);

    CHECK(statistic_requires_univariate(StatisticId::gamma));
    CHECK_FALSE(statistic_requires_univariate(StatisticId::vn));
    CHECK(statistic_uses_partition(StatisticId::ln));
    CHECK_FALSE(statistic_uses_partition(StatisticId::tau));

    const std::vector<StatisticId> multi = supported_statistics(2, 3);
    CHECK(multi == std::vector<StatisticId>{StatisticId::vn, StatisticId::ln});
    CHECK(supported_statistics(1, 1).size() == 8);
}

TEST_CASE("compute_statistics shares one context across the roster") {
    std::mt19937_64 eng(17);
    auto [xs, ys] = testutil::random_pairs(eng, 20, 0.2);
    const PairedSample sample = PairedSample::univariate(xs, ys);
    const StatisticContext ctx = make_context(sample, CubicPartition::unit_grid(1, 1, 4));

    const std::vector<StatisticId> ids(all_statistics().begin(), all_statistics().end());
    const std::vector<double> batch = compute_statistics(ids, sample, ctx);
    REQUIRE(batch.size() == ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
        REQUIRE(batch[i] == compute_statistic(ids[i], sample, ctx));
    }

    // make_context froze the observed occupied cells, so ln == vn here.
    const std::size_t vn_at = 0, ln_at = 1;
    CHECK(batch[ln_at] == batch[vn_at]);

    // On a permuted sample the frozen sets still cover every occupied
    // marginal cell (margins are permutation invariant), so ln == vn again.
    std::vector<double> py = ys;
    std::shuffle(py.begin(), py.end(), eng);
    const PairedSample permuted = PairedSample::univariate(xs, py);
    CHECK(compute_statistic(StatisticId::ln, permuted, ctx) ==
          compute_statistic(StatisticId::vn, permuted, ctx));
}

TEST_CASE("make_context without a partition derives one from the data") {
    std::mt19937_64 eng(23);
    auto [xs, ys] = testutil::random_pairs(eng, 60, 0.0);
    const PairedSample sample = PairedSample::univariate(xs, ys);
    const StatisticContext ctx = make_context(sample);
    CHECK(ctx.partition.width_x > 0.0);
    CHECK_FALSE(ctx.ln_cells_x.empty());
    CHECK_FALSE(ctx.ln_cells_y.empty());
    CHECK_NOTHROW(compute_statistic(StatisticId::vn, sample, ctx));
}
