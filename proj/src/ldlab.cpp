#include "l1indep/ldlab.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "l1indep/common.hpp"
#include "l1indep/parallel.hpp"

namespace l1indep {
namespace {

// One set of null statistic draws for sample size n: replicate r lives on
// stream (null_draws, n, r), shared by tail_prob and rate_curve so both see
// identical draws.
std::vector<double> null_statistic_draws(StatisticId id, std::size_t n,
                                         std::size_t num_draws, const GeneratorSpec& gen,
                                         std::uint64_t seed, const StatisticContext& ctx,
                                         unsigned threads) {
    gen.validate();
    if (n < 1) {
        throw InvalidInput("tail estimation: sample size must be positive");
    }
    if (num_draws < 1000) {
        throw InvalidInput("tail estimation: need at least 1000 draws");
    }
    std::vector<double> values(num_draws);
    parallel_for(num_draws, threads, [&](std::size_t r) {
        Philox rng(seed, make_stream(StreamDomain::null_draws, n, r));
        const PairedSample s = draw_sample_rng(gen, n, rng);
        values[r] = compute_statistic(id, s, ctx);
    });
    return values;
}

TailEstimate tail_from_draws(const std::vector<double>& sorted_draws, std::size_t n,
                             double lambda) {
    TailEstimate t;
    t.n = n;
    t.lambda = lambda;
    t.draws = sorted_draws.size();
    const auto first_gt = std::upper_bound(sorted_draws.begin(), sorted_draws.end(), lambda);
    t.hits = static_cast<std::uint64_t>(sorted_draws.end() - first_gt);
    const double nn = static_cast<double>(t.draws);
    t.p_hat = static_cast<double>(t.hits) / nn;
    if (t.hits == 0) {
        t.censored = true;
        // One-sided 95% bound: the largest p with (1-p)^N >= 0.05.
        t.censored_upper = 1.0 - std::pow(0.05, 1.0 / nn);
    } else {
        t.se = std::sqrt(t.p_hat * (1.0 - t.p_hat) / nn);
    }
    return t;
}

RateFit fit_rate(double lambda, std::span<const TailEstimate> column) {
    RateFit fit;
    fit.lambda = lambda;
    std::vector<double> xs, ys;
    for (const TailEstimate& t : column) {
        if (!t.censored) {
            xs.push_back(static_cast<double>(t.n));
            ys.push_back(-std::log(t.p_hat));
        }
    }
    fit.points_used = xs.size();
    fit.usable = xs.size() >= 3;
    if (xs.size() >= 2) {
        double mx = 0.0, my = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            mx += xs[i];
            my += ys[i];
        }
        mx /= static_cast<double>(xs.size());
        my /= static_cast<double>(xs.size());
        double sxy = 0.0, sxx = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i) {
            sxy += (xs[i] - mx) * (ys[i] - my);
            sxx += (xs[i] - mx) * (xs[i] - mx);
        }
        fit.slope = sxy / sxx;
        fit.intercept = my - fit.slope * mx;
    } else {
        fit.slope = std::numeric_limits<double>::quiet_NaN();
        fit.intercept = std::numeric_limits<double>::quiet_NaN();
    }
    return fit;
}

// Midpoint rule on [ax,bx] x [ay,by] with m points per axis.
double midpoint_2d(const std::function<double(double, double)>& f, double ax, double bx,
                   double ay, double by, std::size_t m) {
    const double hx = (bx - ax) / static_cast<double>(m);
    const double hy = (by - ay) / static_cast<double>(m);
    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        const double x = ax + (static_cast<double>(i) + 0.5) * hx;
        double row = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            const double y = ay + (static_cast<double>(j) + 0.5) * hy;
            row += f(x, y);
        }
        total += row * hy;
    }
    return total * hx;
}

double doubling_quadrature(const std::function<double(double, double)>& f, double ax,
                           double bx, double ay, double by) {
    std::size_t m = 16;
    double prev = midpoint_2d(f, ax, bx, ay, by, m);
    for (int doubling = 0; doubling < 12; ++doubling) {
        m *= 2;
        const double cur = midpoint_2d(f, ax, bx, ay, by, m);
        if (std::fabs(cur - prev) < 1e-4) {
            return cur;
        }
        prev = cur;
    }
    throw InvalidInput("l1_divergence: quadrature did not converge after 12 doublings");
}

constexpr double kInvSqrt2Pi = 0.39894228040143267794;

double normal_pdf(double x) {
    return kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

} // namespace

double theoretical_rate(double lambda) {
    if (!(lambda > 0.0)) {
        throw InvalidInput("theoretical_rate: lambda must be positive");
    }
    return 0.5 * lambda * lambda;
}

TailEstimate tail_prob(StatisticId id, std::size_t n, double lambda, std::size_t num_draws,
                       const GeneratorSpec& gen, std::uint64_t seed,
                       const StatisticContext& ctx, unsigned threads) {
    if (!(lambda >= 0.0)) {
        throw InvalidInput("tail_prob: lambda must be nonnegative");
    }
    std::vector<double> values =
        null_statistic_draws(id, n, num_draws, gen, seed, ctx, threads);
    std::sort(values.begin(), values.end());
    return tail_from_draws(values, n, lambda);
}

LDCurve rate_curve(StatisticId id, std::span<const double> lambdas,
                   std::span<const std::size_t> ns, std::size_t num_draws,
                   const GeneratorSpec& gen, std::uint64_t seed,
                   const StatisticContext& ctx, unsigned threads) {
    if (lambdas.empty() || ns.empty()) {
        throw InvalidInput("rate_curve: empty lambda or n grid");
    }
    for (double l : lambdas) {
        if (!(l > 0.0)) {
            throw InvalidInput("rate_curve: lambdas must be positive");
        }
    }
    if (!std::is_sorted(lambdas.begin(), lambdas.end()) ||
        std::adjacent_find(lambdas.begin(), lambdas.end()) != lambdas.end()) {
        throw InvalidInput("rate_curve: lambda grid must be strictly increasing");
    }
    if (!std::is_sorted(ns.begin(), ns.end()) ||
        std::adjacent_find(ns.begin(), ns.end()) != ns.end()) {
        throw InvalidInput("rate_curve: n grid must be strictly increasing");
    }
    LDCurve curve;
    curve.statistic_id = std::string(to_string(id));
    curve.gen = gen;
    curve.partition = ctx.partition;
    curve.lambdas.assign(lambdas.begin(), lambdas.end());
    curve.ns.assign(ns.begin(), ns.end());
    curve.num_draws = num_draws;
    curve.seed = seed;
    curve.tails.reserve(ns.size() * lambdas.size());
    for (std::size_t n : ns) {
        std::vector<double> values =
            null_statistic_draws(id, n, num_draws, gen, seed, ctx, threads);
        std::sort(values.begin(), values.end());
        for (double lambda : lambdas) {
            curve.tails.push_back(tail_from_draws(values, n, lambda));
        }
    }
    curve.fits.reserve(lambdas.size());
    std::vector<TailEstimate> column(ns.size());
    for (std::size_t j = 0; j < lambdas.size(); ++j) {
        for (std::size_t i = 0; i < ns.size(); ++i) {
            column[i] = curve.tail_at(i, j);
        }
        curve.fits.push_back(fit_rate(lambdas[j], column));
    }
    return curve;
}

double gretton_envelope(std::size_t n, double eps1, double eps2, double eps3,
                        std::size_t m, std::size_t m_prime) {
    if (n < 1 || m < 1 || m_prime < 1) {
        throw InvalidInput("gretton_envelope: n, m, m' must be positive");
    }
    if (!(eps1 > 0.0 && eps2 > 0.0 && eps3 > 0.0)) {
        throw InvalidInput("gretton_envelope: epsilons must be positive");
    }
    const double ln2 = 0.6931471805599453094;
    const double nn = static_cast<double>(n);
    const double t1 = static_cast<double>(m) * static_cast<double>(m_prime) * ln2 -
                      0.5 * nn * eps1 * eps1;
    const double t2 = static_cast<double>(m) * ln2 - 0.5 * nn * eps2 * eps2;
    const double t3 = static_cast<double>(m_prime) * ln2 - 0.5 * nn * eps3 * eps3;
    return std::exp(t1) + std::exp(t2) + std::exp(t3);
}

double l1_divergence(const AlternativeSpec& alt) {
    alt.validate();
    if (alt.dim_x != 1 || alt.dim_y != 1) {
        throw InvalidInput("l1_divergence: univariate alternatives only");
    }
    switch (alt.family) {
        case Family::independent_uniform:
            return 0.0;
        case Family::fgm: {
            const double a = alt.theta;
            if (a == 0.0) {
                return 0.0;
            }
            return doubling_quadrature(
                [a](double u, double v) {
                    return std::fabs(a * (1.0 - 2.0 * u) * (1.0 - 2.0 * v));
                },
                0.0, 1.0, 0.0, 1.0);
        }
        case Family::gaussian_copula: {
            const double rho = alt.theta;
            if (rho == 0.0) {
                return 0.0;
            }
            // |f_rho - f_0| for the bivariate normal: coordinates are normal
            // quantiles of the copula, the integrand decays like a Gaussian.
            const double r2 = 1.0 - rho * rho;
            const double norm = 1.0 / (2.0 * M_PI * std::sqrt(r2));
            return doubling_quadrature(
                [rho, r2, norm](double x, double y) {
                    const double joint =
                        norm * std::exp(-0.5 * (x * x - 2.0 * rho * x * y + y * y) / r2);
                    return std::fabs(joint - normal_pdf(x) * normal_pdf(y));
                },
                -8.0, 8.0, -8.0, 8.0);
        }
        case Family::functional: {
            const double sigma = alt.theta;
            if (!(sigma > 0.0)) {
                throw InvalidInput("l1_divergence: functional family needs sigma > 0");
            }
            // f = phi_sigma(y - x) on the strip x in [0,1]; f2 carries the
            // smoothed uniform. Beyond 8 sigma outside the strip everything
            // vanishes to double precision.
            return doubling_quadrature(
                [sigma](double x, double y) {
                    const double joint = normal_pdf((y - x) / sigma) / sigma;
                    const double f2 = normal_cdf(y / sigma) - normal_cdf((y - 1.0) / sigma);
                    return std::fabs(joint - f2);
                },
                0.0, 1.0, -8.0 * sigma, 1.0 + 8.0 * sigma);
        }
    }
    throw InvalidInput("l1_divergence: unknown family");
}

double l1_divergence_mc(const AlternativeSpec& alt, std::size_t num_draws,
                        std::uint64_t seed, unsigned threads) {
    alt.validate();
    if (alt.dim_x != 1 || alt.dim_y != 1) {
        throw InvalidInput("l1_divergence_mc: univariate alternatives only");
    }
    if (num_draws < 1) {
        throw InvalidInput("l1_divergence_mc: need at least one draw");
    }
    GeneratorSpec gen;
    gen.alt = alt;
    constexpr std::size_t kChunk = 4096;
    const std::size_t num_chunks = (num_draws + kChunk - 1) / kChunk;
    std::vector<double> partial(num_chunks, 0.0);
    parallel_for(num_chunks, threads, [&](std::size_t c) {
        Philox rng(seed, make_stream(StreamDomain::divergence, 0, c));
        const std::size_t begin = c * kChunk;
        const std::size_t count = std::min(kChunk, num_draws - begin);
        const PairedSample s = draw_sample_rng(gen, count, rng);
        double acc = 0.0;
        for (std::size_t i = 0; i < count; ++i) {
            const DensityValue d = density_at(gen, s.x[i], s.y[i]);
            acc += std::fabs(1.0 - d.marginal_x * d.marginal_y / d.joint);
        }
        partial[c] = acc;
    });
    // Fixed-order reduction keeps the result identical for any thread count.
    double total = 0.0;
    for (double p : partial) {
        total += p;
    }
    return total / static_cast<double>(num_draws);
}

TheoreticalSlope vn_theoretical_slope(const AlternativeSpec& alt) {
    const double delta = l1_divergence(alt);
    TheoreticalSlope s;
    s.value = delta * delta;
    s.small_lambda_valid = delta <= kSmallLambdaLimit;
    return s;
}

SlopeReport empirical_slope(StatisticId id, const AlternativeSpec& alt,
                            std::span<const std::size_t> ns, std::size_t replicates,
                            const std::map<std::size_t, NullTable>& tables,
                            std::uint64_t seed, const StatisticContext& ctx,
                            unsigned threads) {
    alt.validate();
    if (ns.empty()) {
        throw InvalidInput("empirical_slope: empty n grid");
    }
    if (!std::is_sorted(ns.begin(), ns.end()) ||
        std::adjacent_find(ns.begin(), ns.end()) != ns.end()) {
        throw InvalidInput("empirical_slope: n grid must be strictly increasing");
    }
    if (replicates < 20) {
        throw InvalidInput("empirical_slope: need at least 20 replicates");
    }
    for (std::size_t n : ns) {
        const auto it = tables.find(n);
        if (it == tables.end()) {
            throw InvalidInput("empirical_slope: no null table for n = " + std::to_string(n));
        }
        if (it->second.statistic_id != to_string(id)) {
            throw InvalidInput("empirical_slope: null table for n = " + std::to_string(n) +
                               " was built for statistic '" + it->second.statistic_id +
                               "', not '" + std::string(to_string(id)) + "'");
        }
        if (it->second.n != n) {
            throw InvalidInput("empirical_slope: null table keyed to n = " + std::to_string(n) +
                               " was built at n = " + std::to_string(it->second.n));
        }
    }

    GeneratorSpec gen;
    gen.alt = alt;

    SlopeReport report;
    report.statistic_id = std::string(to_string(id));
    report.alternative = alt;
    report.seed = seed;

    for (std::size_t n : ns) {
        const NullTable& table = tables.at(n);
        std::vector<double> khat(replicates);
        std::vector<double> stat_values(replicates);
        std::vector<std::uint8_t> censored(replicates, 0);
        parallel_for(replicates, threads, [&](std::size_t r) {
            Philox rng(seed, make_stream(StreamDomain::slope, n, r));
            const PairedSample s = draw_sample_rng(gen, n, rng);
            const double value = compute_statistic(id, s, ctx);
            const double p = pvalue_from_table(value, table);
            stat_values[r] = value;
            khat[r] = -(2.0 / static_cast<double>(n)) * std::log(p);
            censored[r] = value > table.draws.back() ? 1 : 0;
        });
        SlopePoint point;
        point.n = n;
        point.replicates = replicates;
        double mean = 0.0;
        for (double k : khat) {
            mean += k;
        }
        mean /= static_cast<double>(replicates);
        double ss = 0.0;
        for (double k : khat) {
            ss += (k - mean) * (k - mean);
        }
        point.mean = mean;
        point.se = std::sqrt(ss / static_cast<double>(replicates - 1) /
                             static_cast<double>(replicates));
        std::size_t censored_count = 0;
        for (std::uint8_t c : censored) {
            censored_count += c;
        }
        point.censor_fraction =
            static_cast<double>(censored_count) / static_cast<double>(replicates);
        report.points.push_back(point);
        if (n == ns.back()) {
            double stat_mean = 0.0;
            for (double v : stat_values) {
                stat_mean += v;
            }
            report.statistic_mean = stat_mean / static_cast<double>(replicates);
            report.slope = point.mean;
            report.slope_se = point.se;
            report.table_limited = point.censor_fraction > 0.5;
        }
    }
    if (id == StatisticId::vn) {
        report.theoretical = vn_theoretical_slope(alt);
    }
    return report;
}

EfficiencyRatio efficiency_ratio(const SlopeReport& numerator, const SlopeReport& denominator) {
    if (numerator.alternative.id() != denominator.alternative.id()) {
        throw InvalidInput("efficiency_ratio: slope reports target different alternatives");
    }
    if (denominator.table_limited) {
        throw InvalidInput("efficiency_ratio: denominator slope is table-limited");
    }
    if (denominator.slope == 0.0) {
        throw InvalidInput("efficiency_ratio: denominator slope is zero");
    }
    EfficiencyRatio r;
    const double a = numerator.slope;
    const double b = denominator.slope;
    const double sa = numerator.slope_se;
    const double sb = denominator.slope_se;
    r.value = a / b;
    r.se = std::sqrt(sa * sa / (b * b) + a * a * sb * sb / (b * b * b * b));
    return r;
}

} // namespace l1indep
