#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "l1indep/statistics.hpp"
#include "l1indep/synthgen.hpp"

namespace l1indep {

// Philox stream layout shared by every Monte Carlo driver: domain tag in the
// top byte, a size tag in the middle, the replicate index at the bottom.
// Drivers sharing a seed therefore never reuse a stream. Sizes and replicate
// indices must stay below 2^28.
enum class StreamDomain : std::uint64_t {
    null_draws = 1,   // null tables, tail probabilities, rate curves
    slope = 2,        // alternative replicates of the slope estimator
    permutation = 3,  // permutation resampling
    divergence = 4,   // Monte Carlo divergence checks
};

std::uint64_t make_stream(StreamDomain domain, std::uint64_t size_tag, std::uint64_t replicate);

// One permutation test result. The p-value is
//   (1 + #{b : T(X, pi_b(Y)) >= T_observed}) / (B + 1),
// with pi_b the uniformly random permutation drawn from stream (seed, b).
struct PermutationResult {
    StatisticId statistic = StatisticId::vn;
    double observed = 0.0;
    double p_value = 1.0;
    std::uint64_t num_permutations = 0;
};

// Runs all requested statistics through one shared set of permutations.
// Everything in ctx (partition, ln cells, scores) stays frozen while the Y
// rows are permuted. Needs at least 99 permutations.
std::vector<PermutationResult> permutation_pvalues(const PairedSample& sample,
                                                   std::span<const StatisticId> ids,
                                                   std::size_t num_permutations,
                                                   std::uint64_t seed,
                                                   const StatisticContext& ctx,
                                                   unsigned threads = 0);

PermutationResult permutation_pvalue(const PairedSample& sample, StatisticId id,
                                     std::size_t num_permutations, std::uint64_t seed,
                                     const StatisticContext& ctx, unsigned threads = 0);

// Monte Carlo reference distribution of one statistic at sample size n,
// drawn under a null generator. Draws are sorted ascending.
struct NullTable {
    std::string statistic_id;
    std::uint64_t n = 0;
    std::string generator_id;
    std::uint64_t seed = 0;
    std::vector<double> draws;
};

// num_draws independent replicates (at least 100), replicate r on stream
// (null_draws, n, r). The result is identical for any thread count.
NullTable mc_null_table(StatisticId id, std::size_t n, std::size_t num_draws,
                        const GeneratorSpec& gen, std::uint64_t seed,
                        const StatisticContext& ctx, unsigned threads = 0);

// (1 + #{draws >= observed}) / (N + 1); smallest attainable value 1/(N+1).
double pvalue_from_table(double observed, const NullTable& table);

// Binary table cache. Little-endian, fixed magic and version; loading
// rejects anything that does not round-trip exactly.
void save_null_table(const NullTable& table, const std::filesystem::path& path);
NullTable load_null_table(const std::filesystem::path& path);

// Plain-text export: one metadata header line pair plus one draw per line.
void write_null_table_csv(const NullTable& table, std::ostream& out);

} // namespace l1indep
