#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "l1indep/calibration.hpp"
#include "l1indep/common.hpp"
#include "l1indep/statistics.hpp"
#include "l1indep/synthgen.hpp"
#include "testutil.hpp"

using namespace l1indep;

namespace {

GeneratorSpec independent() {
    return GeneratorSpec{};
}

GeneratorSpec gauss(double rho) {
    GeneratorSpec spec;
    spec.alt.family = Family::gaussian_copula;
    spec.alt.theta = rho;
    return spec;
}

StatisticContext grid_context(int cells) {
    StatisticContext ctx;
    ctx.partition = CubicPartition::unit_grid(1, 1, cells);
    return ctx;
}

NullTable tiny_table(std::vector<double> draws) {
    NullTable t;
    t.statistic_id = "tau";
    t.n = 10;
    t.generator_id = "independent";
    t.seed = 1;
    t.draws = std::move(draws);
    return t;
}

} // namespace

TEST_CASE("stream ids pack domain, size and replicate") {
    CHECK(make_stream(StreamDomain::null_draws, 5, 7) ==
          ((std::uint64_t{1} << 56) | (std::uint64_t{5} << 28) | 7));
    CHECK(make_stream(StreamDomain::permutation, 0, 1) ==
          ((std::uint64_t{3} << 56) | 1));
    const std::uint64_t max_field = (std::uint64_t{1} << 28) - 1;
    CHECK_NOTHROW(make_stream(StreamDomain::slope, max_field, max_field));
    CHECK_THROWS_AS(make_stream(StreamDomain::slope, std::uint64_t{1} << 28, 0), InvalidInput);
    CHECK_THROWS_AS(make_stream(StreamDomain::slope, 0, std::uint64_t{1} << 28), InvalidInput);
}

TEST_CASE("permutation p-value is 1 when the statistic ignores the pairing") {
    // All Y equal: every permutation reproduces the observed value.
    std::vector<double> xs, ys;
    for (int i = 0; i < 30; ++i) {
        xs.push_back(0.03 * i);
        ys.push_back(0.4);
    }
    const PairedSample sample = PairedSample::univariate(xs, ys);
    const StatisticContext ctx = grid_context(4);
    const PermutationResult vn_res = permutation_pvalue(sample, StatisticId::vn, 99, 5, ctx);
    CHECK(vn_res.p_value == 1.0);
    const PermutationResult tau_res = permutation_pvalue(sample, StatisticId::tau, 99, 5, ctx);
    CHECK(tau_res.observed == 0.0);
    CHECK(tau_res.p_value == 1.0);
}

TEST_CASE("permutation p-value hits the floor on a comonotone sample") {
    std::vector<double> xs;
    for (int i = 0; i < 100; ++i) {
        xs.push_back(i * 0.01);
    }
    const PairedSample sample = PairedSample::univariate(xs, xs);
    const StatisticContext ctx = grid_context(4);
    const PermutationResult res = permutation_pvalue(sample, StatisticId::tau, 199, 8, ctx);
    CHECK(res.observed == 1.0);
    // Only the identity permutation ties tau = 1; the chance of drawing it
    // is 1/100!, so the p-value sits at its floor.
    CHECK(res.p_value == doctest::Approx(1.0 / 200.0).epsilon(1e-15));
    CHECK(res.num_permutations == 199);
}

TEST_CASE("permutation p-value under strong dependence is at the floor in most seeds") {
    const StatisticContext ctx = grid_context(4);
    int at_floor = 0;
    const int reps = 100;
    for (int r = 0; r < reps; ++r) {
        const GeneratorSpec spec = gauss(0.8);
        GeneratorSpec seeded = spec;
        seeded.stream = static_cast<std::uint64_t>(r);
        const PairedSample sample = draw_sample(seeded, 200, 4242);
        const PermutationResult res =
            permutation_pvalue(sample, StatisticId::vn, 999, 1000 + static_cast<std::uint64_t>(r), ctx);
        at_floor += std::fabs(res.p_value - 0.001) < 1e-12;
    }
    CHECK(at_floor >= 95);
}

TEST_CASE("permutation results are deterministic and thread independent") {
    std::mt19937_64 eng(3);
    auto [xs, ys] = testutil::random_pairs(eng, 60, 0.0);
    const PairedSample sample = PairedSample::univariate(xs, ys);
    const StatisticContext ctx = make_context(sample);
    const std::vector<StatisticId> ids(all_statistics().begin(), all_statistics().end());

    const auto a = permutation_pvalues(sample, ids, 199, 31, ctx, 1);
    const auto b = permutation_pvalues(sample, ids, 199, 31, ctx, 4);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].statistic == b[i].statistic);
        CHECK(a[i].observed == b[i].observed);
        CHECK(a[i].p_value == b[i].p_value);
    }
}

TEST_CASE("permutation preconditions") {
    const PairedSample sample = PairedSample::univariate({1, 2, 3}, {4, 5, 6});
    const StatisticContext ctx = grid_context(4);
    CHECK_THROWS_WITH_AS(permutation_pvalue(sample, StatisticId::tau, 98, 1, ctx),
                         doctest::Contains("at least 99"), InvalidInput);
    CHECK_THROWS_AS(
        permutation_pvalues(sample, std::vector<StatisticId>{}, 199, 1, ctx), InvalidInput);
}

TEST_CASE("null tables are sorted, sized and thread independent") {
    const StatisticContext ctx = grid_context(4);
    const NullTable t1 = mc_null_table(StatisticId::vn, 30, 200, independent(), 17, ctx, 1);
    const NullTable t4 = mc_null_table(StatisticId::vn, 30, 200, independent(), 17, ctx, 4);
    CHECK(t1.draws.size() == 200);
    CHECK(std::is_sorted(t1.draws.begin(), t1.draws.end()));
    CHECK(t1.draws == t4.draws);
    CHECK(t1.statistic_id == "vn");
    CHECK(t1.n == 30);
    CHECK(t1.generator_id == "independent");
    CHECK(t1.seed == 17);

    const NullTable other = mc_null_table(StatisticId::vn, 30, 200, independent(), 18, ctx, 1);
    CHECK(t1.draws != other.draws);

    CHECK_THROWS_WITH_AS(mc_null_table(StatisticId::vn, 30, 99, independent(), 17, ctx),
                         doctest::Contains("at least 100"), InvalidInput);
}

TEST_CASE("tau null table is centered at zero") {
    const StatisticContext ctx = grid_context(4);
    const NullTable t = mc_null_table(StatisticId::tau, 10, 10000, independent(), 23, ctx);
    double mean = 0.0, var = 0.0;
    for (double d : t.draws) {
        mean += d;
    }
    mean /= static_cast<double>(t.draws.size());
    for (double d : t.draws) {
        var += (d - mean) * (d - mean);
    }
    var /= static_cast<double>(t.draws.size() - 1);
    // Under independence tau has mean 0; a 3 sigma band on the MC average.
    CHECK(std::fabs(mean) <= 3.0 * std::sqrt(var / 10000.0));
}

TEST_CASE("table p-values count upper-tail mass with the plus-one rule") {
    const NullTable t = tiny_table({0.1, 0.2, 0.3, 0.4, 0.5});
    CHECK(pvalue_from_table(0.05, t) == 1.0);
    CHECK(pvalue_from_table(0.6, t) == doctest::Approx(1.0 / 6.0));
    CHECK(pvalue_from_table(0.35, t) == doctest::Approx(3.0 / 6.0));
    CHECK(pvalue_from_table(0.3, t) == doctest::Approx(4.0 / 6.0));  // ties count as >=
    double prev = 2.0;
    for (double obs = 0.0; obs <= 0.7; obs += 0.01) {
        const double p = pvalue_from_table(obs, t);
        REQUIRE(p <= prev);
        prev = p;
    }
    CHECK_THROWS_WITH_AS(pvalue_from_table(0.5, tiny_table({})), doctest::Contains("empty"),
                         InvalidInput);
}

TEST_CASE("null table files round trip bit for bit") {
    testutil::TempDir dir;
    const StatisticContext ctx = grid_context(4);
    const NullTable t = mc_null_table(StatisticId::kn, 25, 150, gauss(0.0), 29, ctx);
    const auto path = dir.path() / "kn.l1nt";
    save_null_table(t, path);
    const NullTable back = load_null_table(path);
    CHECK(back.statistic_id == t.statistic_id);
    CHECK(back.n == t.n);
    CHECK(back.generator_id == t.generator_id);
    CHECK(back.seed == t.seed);
    REQUIRE(back.draws.size() == t.draws.size());
    for (std::size_t i = 0; i < t.draws.size(); ++i) {
        REQUIRE(back.draws[i] == t.draws[i]);
    }

    // Writing the same table twice produces identical bytes.
    const auto path2 = dir.path() / "kn2.l1nt";
    save_null_table(t, path2);
    CHECK(testutil::slurp(path) == testutil::slurp(path2));
}

TEST_CASE("null table loader rejects corruption") {
    testutil::TempDir dir;
    // Strictly increasing draws so byte-level edits below are guaranteed to
    // break the sortedness invariant.
    std::vector<double> draws(120);
    for (std::size_t i = 0; i < draws.size(); ++i) {
        draws[i] = 0.001 * static_cast<double>(i + 1);
    }
    const NullTable t = tiny_table(draws);
    const auto good = dir.path() / "good.l1nt";
    save_null_table(t, good);
    const std::string bytes = testutil::slurp(good);

    SUBCASE("bad magic") {
        std::string bad = bytes;
        bad[0] = 'X';
        const auto path = dir.path() / "magic.l1nt";
        testutil::spit(path, bad);
        CHECK_THROWS_WITH_AS(load_null_table(path), doctest::Contains("bad magic"),
                             InvalidInput);
    }
    SUBCASE("unknown version") {
        std::string bad = bytes;
        bad[4] = static_cast<char>(99);  // version field, little endian
        const auto path = dir.path() / "version.l1nt";
        testutil::spit(path, bad);
        CHECK_THROWS_WITH_AS(load_null_table(path), doctest::Contains("format version"),
                             InvalidInput);
    }
    SUBCASE("truncated draws") {
        const auto path = dir.path() / "short.l1nt";
        testutil::spit(path, bytes.substr(0, bytes.size() - 11));
        CHECK_THROWS_WITH_AS(load_null_table(path), doctest::Contains("truncated"),
                             InvalidInput);
    }
    SUBCASE("unsorted draws") {
        // Swap the last two doubles; the loader must notice.
        std::string bad = bytes;
        const std::size_t end = bad.size();
        std::swap_ranges(bad.begin() + static_cast<std::ptrdiff_t>(end - 8),
                         bad.end(), bad.begin() + static_cast<std::ptrdiff_t>(end - 16));
        const auto path = dir.path() / "unsorted.l1nt";
        testutil::spit(path, bad);
        CHECK_THROWS_WITH_AS(load_null_table(path), doctest::Contains("not sorted"),
                             InvalidInput);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(load_null_table(dir.path() / "absent.l1nt"), InvalidInput);
    }
}

TEST_CASE("null table text export") {
    NullTable t = tiny_table({0.25, 0.5});
    std::ostringstream out;
    write_null_table_csv(t, out);
    std::istringstream lines(out.str());
    std::string line;
    std::getline(lines, line);
    CHECK(line == "statistic,n,num_draws,generator,seed");
    std::getline(lines, line);
    CHECK(line == "tau,10,2,independent,1");
    std::getline(lines, line);
    CHECK(line == "draw");
    std::getline(lines, line);
    CHECK(std::stod(line) == 0.25);
    std::getline(lines, line);
    CHECK(std::stod(line) == 0.5);
}
