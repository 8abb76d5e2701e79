#include "l1indep/calibration.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <numeric>

#include "l1indep/common.hpp"
#include "l1indep/parallel.hpp"

namespace l1indep {
namespace {

constexpr std::uint64_t kStreamFieldLimit = std::uint64_t(1) << 28;
constexpr char kTableMagic[4] = {'L', '1', 'N', 'T'};

void permute_rows_into(const PairedSample& sample, std::span<const std::uint32_t> perm,
                       PairedSample& out) {
    const std::size_t n = sample.size();
    out.dim_x = sample.dim_x;
    out.dim_y = sample.dim_y;
    out.x = sample.x;
    out.y.resize(sample.y.size());
    for (std::size_t i = 0; i < n; ++i) {
        const double* src = sample.y.data() + perm[i] * sample.dim_y;
        std::copy(src, src + sample.dim_y, out.y.data() + i * sample.dim_y);
    }
}

template <typename T>
void write_raw(std::ostream& out, const T& value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof value);
}

template <typename T>
void read_raw(std::istream& in, T& value, const char* what) {
    in.read(reinterpret_cast<char*>(&value), sizeof value);
    if (!in) {
        throw InvalidInput(std::string("null table: truncated file while reading ") + what);
    }
}

void write_string(std::ostream& out, const std::string& s) {
    const std::uint32_t len = static_cast<std::uint32_t>(s.size());
    write_raw(out, len);
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in, const char* what) {
    std::uint32_t len = 0;
    read_raw(in, len, what);
    if (len > 4096) {
        throw InvalidInput(std::string("null table: implausible string length for ") + what);
    }
    std::string s(len, '\0');
    in.read(s.data(), len);
    if (!in) {
        throw InvalidInput(std::string("null table: truncated file while reading ") + what);
    }
    return s;
}

} // namespace

std::uint64_t make_stream(StreamDomain domain, std::uint64_t size_tag, std::uint64_t replicate) {
    if (size_tag >= kStreamFieldLimit || replicate >= kStreamFieldLimit) {
        throw InvalidInput("make_stream: size or replicate index exceeds 2^28");
    }
    return (static_cast<std::uint64_t>(domain) << 56) | (size_tag << 28) | replicate;
}

std::vector<PermutationResult> permutation_pvalues(const PairedSample& sample,
                                                   std::span<const StatisticId> ids,
                                                   std::size_t num_permutations,
                                                   std::uint64_t seed,
                                                   const StatisticContext& ctx,
                                                   unsigned threads) {
    sample.validate();
    if (ids.empty()) {
        throw InvalidInput("permutation test: no statistics requested");
    }
    if (num_permutations < 99) {
        throw InvalidInput("permutation test: need at least 99 permutations");
    }
    const std::size_t n = sample.size();
    if (n < 1) {
        throw InvalidInput("permutation test: empty sample");
    }

    const std::vector<double> observed = compute_statistics(ids, sample, ctx);

    std::vector<std::atomic<std::uint64_t>> exceed(ids.size());
    for (auto& c : exceed) {
        c.store(0);
    }

    parallel_for(num_permutations, threads, [&](std::size_t b) {
        // Permutation b (1-based) on its own stream; Fisher-Yates.
        Philox rng(seed, make_stream(StreamDomain::permutation, 0, b + 1));
        std::vector<std::uint32_t> perm(n);
        std::iota(perm.begin(), perm.end(), 0u);
        for (std::size_t i = n - 1; i > 0; --i) {
            const std::size_t j = static_cast<std::size_t>(rng.next_below(i + 1));
            std::swap(perm[i], perm[j]);
        }
        PairedSample permuted;
        permute_rows_into(sample, perm, permuted);
        const std::vector<double> stats = compute_statistics(ids, permuted, ctx);
        for (std::size_t k = 0; k < stats.size(); ++k) {
            if (stats[k] >= observed[k]) {
                exceed[k].fetch_add(1, std::memory_order_relaxed);
            }
        }
    });

    std::vector<PermutationResult> out(ids.size());
    for (std::size_t k = 0; k < ids.size(); ++k) {
        out[k].statistic = ids[k];
        out[k].observed = observed[k];
        out[k].num_permutations = num_permutations;
        out[k].p_value = static_cast<double>(1 + exceed[k].load()) /
                         static_cast<double>(num_permutations + 1);
    }
    return out;
}

PermutationResult permutation_pvalue(const PairedSample& sample, StatisticId id,
                                     std::size_t num_permutations, std::uint64_t seed,
                                     const StatisticContext& ctx, unsigned threads) {
    const std::array<StatisticId, 1> one = {id};
    return permutation_pvalues(sample, one, num_permutations, seed, ctx, threads)[0];
}

NullTable mc_null_table(StatisticId id, std::size_t n, std::size_t num_draws,
                        const GeneratorSpec& gen, std::uint64_t seed,
                        const StatisticContext& ctx, unsigned threads) {
    gen.validate();
    if (n < 1) {
        throw InvalidInput("null table: sample size must be positive");
    }
    if (num_draws < 100) {
        throw InvalidInput("null table: need at least 100 draws");
    }
    NullTable table;
    table.statistic_id = std::string(to_string(id));
    table.n = n;
    table.generator_id = gen.id();
    table.seed = seed;
    table.draws.resize(num_draws);
    parallel_for(num_draws, threads, [&](std::size_t r) {
        Philox rng(seed, make_stream(StreamDomain::null_draws, n, r));
        const PairedSample s = draw_sample_rng(gen, n, rng);
        table.draws[r] = compute_statistic(id, s, ctx);
    });
    std::sort(table.draws.begin(), table.draws.end());
    return table;
}

double pvalue_from_table(double observed, const NullTable& table) {
    if (table.draws.empty()) {
        throw InvalidInput("null table: empty table");
    }
    const auto first_ge = std::lower_bound(table.draws.begin(), table.draws.end(), observed);
    const std::uint64_t count_ge = static_cast<std::uint64_t>(table.draws.end() - first_ge);
    return static_cast<double>(1 + count_ge) / static_cast<double>(table.draws.size() + 1);
}

void save_null_table(const NullTable& table, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw InvalidInput("null table: cannot open " + path.string() + " for writing");
    }
    out.write(kTableMagic, sizeof kTableMagic);
    write_raw(out, kNullTableFormatVersion);
    write_raw(out, table.n);
    write_raw(out, static_cast<std::uint64_t>(table.draws.size()));
    write_raw(out, table.seed);
    write_string(out, table.statistic_id);
    write_string(out, table.generator_id);
    out.write(reinterpret_cast<const char*>(table.draws.data()),
              static_cast<std::streamsize>(table.draws.size() * sizeof(double)));
    if (!out) {
        throw InvalidInput("null table: write failed for " + path.string());
    }
}

NullTable load_null_table(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InvalidInput("null table: cannot open " + path.string());
    }
    char magic[4] = {};
    in.read(magic, sizeof magic);
    if (!in || std::memcmp(magic, kTableMagic, sizeof magic) != 0) {
        throw InvalidInput("null table: " + path.string() + " is not a null table file (bad magic)");
    }
    std::uint32_t version = 0;
    read_raw(in, version, "format version");
    if (version != kNullTableFormatVersion) {
        throw InvalidInput("null table: " + path.string() + " has format version " +
                           std::to_string(version) + ", expected " +
                           std::to_string(kNullTableFormatVersion));
    }
    NullTable table;
    std::uint64_t num_draws = 0;
    read_raw(in, table.n, "sample size");
    read_raw(in, num_draws, "draw count");
    read_raw(in, table.seed, "seed");
    table.statistic_id = read_string(in, "statistic id");
    table.generator_id = read_string(in, "generator id");
    if (num_draws < 1 || num_draws > (std::uint64_t(1) << 33)) {
        throw InvalidInput("null table: " + path.string() + " declares an implausible draw count");
    }
    table.draws.resize(num_draws);
    in.read(reinterpret_cast<char*>(table.draws.data()),
            static_cast<std::streamsize>(num_draws * sizeof(double)));
    if (!in) {
        throw InvalidInput("null table: " + path.string() + " is truncated");
    }
    if (!std::is_sorted(table.draws.begin(), table.draws.end())) {
        throw InvalidInput("null table: " + path.string() + " draws are not sorted; file corrupted");
    }
    return table;
}

void write_null_table_csv(const NullTable& table, std::ostream& out) {
    out << "statistic,n,num_draws,generator,seed\n";
    out << table.statistic_id << ',' << table.n << ',' << table.draws.size() << ','
        << table.generator_id << ',' << table.seed << "\n";
    out << "draw\n";
    char buf[40];
    for (double d : table.draws) {
        std::snprintf(buf, sizeof buf, "%.17g", d);
        out << buf << '\n';
    }
}

} // namespace l1indep
