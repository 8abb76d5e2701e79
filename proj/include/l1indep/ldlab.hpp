#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "l1indep/calibration.hpp"

namespace l1indep {

// Leading-order large-deviation rate of the binned L1 statistic under
// independence: g(lambda) = lambda^2 / 2. The expansion is a small-lambda
// statement; beyond kSmallLambdaLimit it is extrapolation.
double theoretical_rate(double lambda);
inline constexpr double kSmallLambdaLimit = 0.5;

// Monte Carlo estimate of P(T > lambda) under a null generator, N replicates
// at sample size n. A zero-hit estimate is flagged censored and carries the
// one-sided 95% upper confidence bound instead of a standard error.
struct TailEstimate {
    std::size_t n = 0;
    double lambda = 0.0;
    std::uint64_t hits = 0;
    std::uint64_t draws = 0;
    double p_hat = 0.0;
    double se = 0.0;
    bool censored = false;
    double censored_upper = 0.0;
};

TailEstimate tail_prob(StatisticId id, std::size_t n, double lambda, std::size_t num_draws,
                       const GeneratorSpec& gen, std::uint64_t seed,
                       const StatisticContext& ctx, unsigned threads = 0);

// Least-squares fit of -log p_hat(n, lambda) against n over the uncensored
// sample sizes: the slope estimates g(lambda). A fit needs at least two
// points; the usable flag additionally demands three.
struct RateFit {
    double lambda = 0.0;
    double slope = 0.0;
    double intercept = 0.0;
    std::size_t points_used = 0;
    bool usable = false;
};

// Tail estimates on a (n, lambda) grid plus per-lambda rate fits. Each n
// reuses one set of N statistic draws across the whole lambda grid, so the
// estimates are exactly the ones tail_prob would produce one by one.
struct LDCurve {
    std::string statistic_id;
    GeneratorSpec gen;
    CubicPartition partition;
    std::vector<double> lambdas;
    std::vector<std::size_t> ns;
    std::uint64_t num_draws = 0;
    std::uint64_t seed = 0;
    std::vector<TailEstimate> tails;  // row-major: ns.size() rows of lambdas.size()
    std::vector<RateFit> fits;        // one per lambda

    const TailEstimate& tail_at(std::size_t n_index, std::size_t lambda_index) const {
        return tails[n_index * lambdas.size() + lambda_index];
    }
};

LDCurve rate_curve(StatisticId id, std::span<const double> lambdas,
                   std::span<const std::size_t> ns, std::size_t num_draws,
                   const GeneratorSpec& gen, std::uint64_t seed,
                   const StatisticContext& ctx, unsigned threads = 0);

// Finite-sample union-bound tail envelope for the binned L1 statistic over
// an m x m' partition at threshold eps1 + eps2 + eps3:
//   2^(m m') exp(-n eps1^2/2) + 2^m exp(-n eps2^2/2) + 2^m' exp(-n eps3^2/2).
// Evaluated in log space; epsilons must be positive.
double gretton_envelope(std::size_t n, double eps1, double eps2, double eps3,
                        std::size_t m, std::size_t m_prime);

// L1 divergence Delta(theta) = integral |f - f1 f2| for a univariate
// alternative, by midpoint quadrature with mesh doubling until two
// consecutive refinements agree. Gaussian-copula alternatives integrate in
// normal-marginal coordinates where the integrand is smooth; the divergence
// is invariant under monotone coordinate maps, so the value is the
// copula-space one.
double l1_divergence(const AlternativeSpec& alt);

// Monte Carlo check of the same integral via E|1 - (f1 f2 / f)(X, Y)| with
// (X, Y) drawn from the alternative.
double l1_divergence_mc(const AlternativeSpec& alt, std::size_t num_draws,
                        std::uint64_t seed, unsigned threads = 0);

// Small-lambda theoretical Bahadur slope of the binned L1 test:
// Delta(theta)^2. The flag records whether Delta itself is inside the
// small-lambda regime.
struct TheoreticalSlope {
    double value = 0.0;
    bool small_lambda_valid = true;
};
TheoreticalSlope vn_theoretical_slope(const AlternativeSpec& alt);

// Empirical Bahadur slope: K_hat = -(2/n) log p_n averaged over replicates
// drawn from the alternative, with p_n read off a premade null table.
struct SlopePoint {
    std::size_t n = 0;
    std::size_t replicates = 0;
    double mean = 0.0;
    double se = 0.0;
    double censor_fraction = 0.0;  // replicates whose p hit the table floor
};

struct SlopeReport {
    std::string statistic_id;
    AlternativeSpec alternative;
    std::uint64_t seed = 0;
    double statistic_mean = 0.0;  // mean statistic value at the largest n
    std::vector<SlopePoint> points;
    double slope = 0.0;    // mean K_hat at the largest n
    double slope_se = 0.0;
    bool table_limited = false;  // censoring above 50% at the largest n
    std::optional<TheoreticalSlope> theoretical;  // set for the vn statistic
};

// Tables are keyed by sample size and must match the statistic and the n
// they are used for; a missing or mismatched table is an input error.
SlopeReport empirical_slope(StatisticId id, const AlternativeSpec& alt,
                            std::span<const std::size_t> ns, std::size_t replicates,
                            const std::map<std::size_t, NullTable>& tables,
                            std::uint64_t seed, const StatisticContext& ctx,
                            unsigned threads = 0);

// Ratio of two slope estimates with a delta-method standard error. The
// denominator slope must be nonzero.
struct EfficiencyRatio {
    double value = 0.0;
    double se = 0.0;
};
EfficiencyRatio efficiency_ratio(const SlopeReport& numerator, const SlopeReport& denominator);

} // namespace l1indep
