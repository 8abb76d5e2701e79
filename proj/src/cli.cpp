#include "l1indep/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "l1indep/calibration.hpp"
#include "l1indep/common.hpp"
#include "l1indep/csv.hpp"
#include "l1indep/ldlab.hpp"
#include "l1indep/report_json.hpp"

namespace l1indep {
namespace {

std::vector<double> parse_double_list(const std::string& text, const char* what) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        char* end = nullptr;
        const double v = std::strtod(item.c_str(), &end);
        if (item.empty() || end != item.c_str() + item.size() || !std::isfinite(v)) {
            throw InvalidInput(std::string(what) + ": bad number '" + item + "'");
        }
        out.push_back(v);
    }
    if (out.empty()) {
        throw InvalidInput(std::string(what) + ": empty list");
    }
    return out;
}

std::vector<std::size_t> parse_size_list(const std::string& text, const char* what) {
    std::vector<std::size_t> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        char* end = nullptr;
        const unsigned long long v = std::strtoull(item.c_str(), &end, 10);
        if (item.empty() || end != item.c_str() + item.size() || v == 0) {
            throw InvalidInput(std::string(what) + ": bad positive integer '" + item + "'");
        }
        out.push_back(static_cast<std::size_t>(v));
    }
    if (out.empty()) {
        throw InvalidInput(std::string(what) + ": empty list");
    }
    return out;
}

Family parse_family(const std::string& name) {
    if (name == "independent") return Family::independent_uniform;
    if (name == "gauss") return Family::gaussian_copula;
    if (name == "fgm") return Family::fgm;
    if (name == "functional") return Family::functional;
    throw InvalidInput("unknown family '" + name +
                       "' (expected independent, gauss, fgm, functional)");
}

MarginalTransform parse_margins(const std::string& name) {
    if (name == "uniform") return MarginalTransform::uniform;
    if (name == "normal") return MarginalTransform::normal_quantile;
    throw InvalidInput("unknown margins '" + name + "' (expected uniform or normal)");
}

std::vector<StatisticId> parse_stat_list(const std::string& text, std::size_t dim_x,
                                         std::size_t dim_y) {
    std::vector<StatisticId> out;
    if (text == "all") {
        out = supported_statistics(dim_x, dim_y);
        if (out.empty()) {
            throw InvalidInput("no statistic supports a " + std::to_string(dim_x) + "x" +
                               std::to_string(dim_y) + "-dimensional sample");
        }
        return out;
    }
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto id = statistic_from_string(item);
        if (!id) {
            throw InvalidInput("unknown statistic '" + item + "'");
        }
        if (statistic_requires_univariate(*id) && (dim_x != 1 || dim_y != 1)) {
            throw InvalidInput("statistic '" + item + "' supports univariate X and Y only, "
                               "but the sample is " + std::to_string(dim_x) + "x" +
                               std::to_string(dim_y));
        }
        out.push_back(*id);
    }
    if (out.empty()) {
        throw InvalidInput("no statistics requested");
    }
    return out;
}

std::string join_stats(const std::vector<StatisticId>& ids) {
    std::string out;
    for (StatisticId id : ids) {
        if (!out.empty()) {
            out += ",";
        }
        out += std::string(to_string(id));
    }
    return out;
}

void write_output(const std::string& text, const std::string& out_path) {
    if (out_path.empty() || out_path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out) {
        throw InvalidInput("cannot open output file " + out_path);
    }
    out << text;
    if (!out) {
        throw InvalidInput("failed writing output file " + out_path);
    }
}

// Generator flags shared by the sampling commands.
struct GeneratorOptions {
    std::string family = "independent";
    double theta = 0.0;
    std::size_t dim_x = 1;
    std::size_t dim_y = 1;
    std::string margins = "uniform";

    void attach(CLI::App* cmd) {
        cmd->add_option("--family", family,
                        "Data family: independent, gauss, fgm, functional");
        cmd->add_option("--theta", theta,
                        "Family parameter (rho, alpha, or sigma)");
        cmd->add_option("--dx", dim_x, "X dimension (independent family only)");
        cmd->add_option("--dy", dim_y, "Y dimension (independent family only)");
        cmd->add_option("--margins", margins, "Marginal transform: uniform or normal");
    }

    GeneratorSpec spec(std::uint64_t stream = 0) const {
        GeneratorSpec g;
        g.alt.family = parse_family(family);
        g.alt.theta = theta;
        g.alt.dim_x = dim_x;
        g.alt.dim_y = dim_y;
        g.transform = parse_margins(margins);
        g.stream = stream;
        g.validate();
        return g;
    }

    Json config_json() const {
        Json j;
        j["family"] = family;
        j["theta"] = theta;
        j["dx"] = dim_x;
        j["dy"] = dim_y;
        j["margins"] = margins;
        return j;
    }
};

// Partition flags shared by every command that evaluates vn or ln.
struct PartitionOptions {
    int grid = 0;  // unit grid cells per axis; 0 = not set
    double width_x = 0.0;
    double width_y = 0.0;
    std::string origin_x;
    std::string origin_y;

    void attach(CLI::App* cmd, int default_grid) {
        default_grid_ = default_grid;
        cmd->add_option("--grid", grid,
                        "Cells per axis of a unit-cube grid partition" +
                            (default_grid ? " (default " + std::to_string(default_grid) + ")"
                                          : std::string(" (default: data-driven widths)")));
        cmd->add_option("--width-x", width_x, "Explicit X cell width");
        cmd->add_option("--width-y", width_y, "Explicit Y cell width");
        cmd->add_option("--origin-x", origin_x, "Comma list of X origin coordinates");
        cmd->add_option("--origin-y", origin_y, "Comma list of Y origin coordinates");
    }

    // Mode: "grid" when a unit grid applies, "explicit" for widths given by
    // hand, "auto" for the data-driven rule (test command only).
    std::string mode() const {
        if (width_x > 0.0 || width_y > 0.0) {
            return "explicit";
        }
        if (grid > 0 || default_grid_ > 0) {
            return "grid";
        }
        return "auto";
    }

    int grid_cells() const { return grid > 0 ? grid : default_grid_; }

    std::optional<CubicPartition> resolve(std::size_t dim_x, std::size_t dim_y) const {
        const std::string m = mode();
        if (m == "explicit") {
            if (!(width_x > 0.0) || !(width_y > 0.0)) {
                throw InvalidInput("explicit partitions need both --width-x and --width-y");
            }
            CubicPartition p;
            p.dim_x = dim_x;
            p.dim_y = dim_y;
            p.width_x = width_x;
            p.width_y = width_y;
            p.origin_x = origin_x.empty() ? std::vector<double>(dim_x, 0.0)
                                          : parse_double_list(origin_x, "--origin-x");
            p.origin_y = origin_y.empty() ? std::vector<double>(dim_y, 0.0)
                                          : parse_double_list(origin_y, "--origin-y");
            p.validate();
            return p;
        }
        if (m == "grid") {
            return CubicPartition::unit_grid(dim_x, dim_y, grid_cells());
        }
        return std::nullopt;  // data-driven
    }

    Json config_json() const {
        Json j;
        j["mode"] = mode();
        if (mode() == "grid") {
            j["cells"] = grid_cells();
        } else if (mode() == "explicit") {
            j["width_x"] = width_x;
            j["width_y"] = width_y;
            if (!origin_x.empty()) {
                j["origin_x"] = origin_x;
            }
            if (!origin_y.empty()) {
                j["origin_y"] = origin_y;
            }
        }
        return j;
    }

private:
    int default_grid_ = 0;
};

struct CommonOptions {
    std::uint64_t seed = 1;
    unsigned threads = 0;
    std::string out = "-";

    void attach(CLI::App* cmd) {
        cmd->add_option("--seed", seed, "RNG seed (default 1)");
        cmd->add_option("--threads", threads, "Worker threads, 0 = all cores");
        cmd->add_option("--out", out, "Output path, '-' for stdout");
    }
};

PairedSample load_csv_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw InvalidInput("cannot open input file " + path);
    }
    return read_sample_csv(in, path);
}

int cmd_test(const std::string& input, const std::string& stat_text,
             std::size_t permutations, const PartitionOptions& part,
             const CommonOptions& common) {
    const PairedSample sample = load_csv_file(input);
    const std::vector<StatisticId> ids = parse_stat_list(stat_text, sample.dim_x, sample.dim_y);
    const std::optional<CubicPartition> partition = part.resolve(sample.dim_x, sample.dim_y);
    const StatisticContext ctx = make_context(sample, partition);
    const std::vector<PermutationResult> results =
        permutation_pvalues(sample, ids, permutations, common.seed, ctx, common.threads);

    Json j;
    j["format_version"] = kReportFormatVersion;
    j["kind"] = "test_report";
    Json config;
    config["command"] = "test";
    config["input"] = input;
    config["stat"] = join_stats(ids);
    config["permutations"] = permutations;
    config["seed"] = common.seed;
    config["partition"] = part.config_json();
    j["config"] = config;
    j["n"] = sample.size();
    j["dim_x"] = sample.dim_x;
    j["dim_y"] = sample.dim_y;
    j["partition"] = partition_json(ctx.partition);
    Json out = Json::array();
    for (const PermutationResult& r : results) {
        Json jr;
        jr["statistic"] = std::string(to_string(r.statistic));
        jr["observed"] = r.observed;
        jr["p_value"] = r.p_value;
        jr["permutations"] = r.num_permutations;
        out.push_back(jr);
    }
    j["results"] = out;
    write_output(render_report(j), common.out);
    return 0;
}

int cmd_nulltable(const std::string& stat_text, std::size_t n, std::size_t draws,
                  const GeneratorOptions& gen_opts, const PartitionOptions& part,
                  const std::string& table_path, const std::string& csv_path,
                  const CommonOptions& common) {
    const auto id = statistic_from_string(stat_text);
    if (!id) {
        throw InvalidInput("unknown statistic '" + stat_text + "'");
    }
    const GeneratorSpec gen = gen_opts.spec();
    if (statistic_requires_univariate(*id) && (gen.alt.dim_x != 1 || gen.alt.dim_y != 1)) {
        throw InvalidInput("statistic '" + stat_text + "' supports univariate X and Y only");
    }
    const std::optional<CubicPartition> partition =
        part.resolve(gen.alt.dim_x, gen.alt.dim_y);
    if (!partition && statistic_uses_partition(*id)) {
        throw InvalidInput("null tables for vn/ln need a fixed partition; pass --grid or widths");
    }
    StatisticContext ctx;
    if (partition) {
        ctx.partition = *partition;
    }
    const NullTable table =
        mc_null_table(*id, n, draws, gen, common.seed, ctx, common.threads);
    save_null_table(table, table_path);
    if (!csv_path.empty()) {
        std::ofstream csv(csv_path, std::ios::binary);
        if (!csv) {
            throw InvalidInput("cannot open CSV export path " + csv_path);
        }
        write_null_table_csv(table, csv);
    }

    Json j;
    j["format_version"] = kReportFormatVersion;
    j["kind"] = "null_table_summary";
    Json config;
    config["command"] = "nulltable";
    config["stat"] = stat_text;
    config["n"] = n;
    config["draws"] = draws;
    config["seed"] = common.seed;
    config["generator"] = gen_opts.config_json();
    config["partition"] = part.config_json();
    j["config"] = config;
    j["statistic"] = table.statistic_id;
    j["generator"] = table.generator_id;
    j["n"] = table.n;
    j["draws"] = table.draws.size();
    j["min"] = table.draws.front();
    j["median"] = table.draws[table.draws.size() / 2];
    j["max"] = table.draws.back();
    j["file"] = table_path;
    write_output(render_report(j), common.out);
    return 0;
}

int cmd_ldcurve(const std::string& stat_text, const std::string& lambdas_text,
                const std::string& ns_text, std::size_t draws,
                const GeneratorOptions& gen_opts, const PartitionOptions& part,
                const std::string& plot_csv, const CommonOptions& common) {
    const auto id = statistic_from_string(stat_text);
    if (!id) {
        throw InvalidInput("unknown statistic '" + stat_text + "'");
    }
    const std::vector<double> lambdas = parse_double_list(lambdas_text, "--lambdas");
    const std::vector<std::size_t> ns = parse_size_list(ns_text, "--ns");
    const GeneratorSpec gen = gen_opts.spec();
    if (statistic_requires_univariate(*id) && (gen.alt.dim_x != 1 || gen.alt.dim_y != 1)) {
        throw InvalidInput("statistic '" + stat_text + "' supports univariate X and Y only");
    }
    const std::optional<CubicPartition> partition =
        part.resolve(gen.alt.dim_x, gen.alt.dim_y);
    if (!partition && statistic_uses_partition(*id)) {
        throw InvalidInput("rate curves for vn/ln need a fixed partition; pass --grid or widths");
    }
    StatisticContext ctx;
    if (partition) {
        ctx.partition = *partition;
    }
    const LDCurve curve =
        rate_curve(*id, lambdas, ns, draws, gen, common.seed, ctx, common.threads);
    if (std::none_of(curve.fits.begin(), curve.fits.end(),
                     [](const RateFit& f) { return f.usable; })) {
        throw InvalidInput(
            "ldcurve: no lambda has three uncensored tail estimates; "
            "lower the lambdas, raise --draws, or extend --ns");
    }

    Json j = curve_json(curve);
    Json config;
    config["command"] = "ldcurve";
    config["stat"] = stat_text;
    config["lambdas"] = lambdas;
    config["ns"] = ns;
    config["draws"] = draws;
    config["seed"] = common.seed;
    config["generator"] = gen_opts.config_json();
    config["partition"] = part.config_json();
    j["config"] = config;

    if (!plot_csv.empty()) {
        std::ofstream csv(plot_csv, std::ios::binary);
        if (!csv) {
            throw InvalidInput("cannot open plot CSV path " + plot_csv);
        }
        csv << "lambda,n,p_hat,se,g_hat,g_theory\n";
        char buf[40];
        auto put = [&](double v) {
            std::snprintf(buf, sizeof buf, "%.17g", v);
            csv << buf;
        };
        for (std::size_t jdx = 0; jdx < curve.lambdas.size(); ++jdx) {
            for (std::size_t idx = 0; idx < curve.ns.size(); ++idx) {
                const TailEstimate& t = curve.tail_at(idx, jdx);
                put(t.lambda);
                csv << ',' << t.n << ',';
                put(t.p_hat);
                csv << ',';
                put(t.se);
                csv << ',';
                if (t.censored) {
                    csv << "nan";
                } else {
                    put(-std::log(t.p_hat) / static_cast<double>(t.n));
                }
                csv << ',';
                put(theoretical_rate(t.lambda));
                csv << '\n';
            }
        }
    }
    write_output(render_report(j), common.out);
    return 0;
}

int cmd_slope(const std::string& stats_text, const std::string& ns_text,
              std::size_t replicates, const GeneratorOptions& gen_opts,
              const PartitionOptions& part, const std::string& tables_dir,
              const CommonOptions& common) {
    const std::vector<std::size_t> ns = parse_size_list(ns_text, "--ns");
    GeneratorSpec gen = gen_opts.spec();
    if (gen.transform != MarginalTransform::uniform) {
        throw InvalidInput("slope: the slope experiment runs on uniform margins");
    }
    std::vector<StatisticId> ids = parse_stat_list(stats_text, gen.alt.dim_x, gen.alt.dim_y);
    const std::optional<CubicPartition> partition =
        part.resolve(gen.alt.dim_x, gen.alt.dim_y);
    StatisticContext ctx;
    if (partition) {
        ctx.partition = *partition;
    } else if (std::any_of(ids.begin(), ids.end(), statistic_uses_partition)) {
        throw InvalidInput("slope: vn/ln need a fixed partition; pass --grid or widths");
    }

    Json reports = Json::array();
    std::vector<SlopeReport> slope_reports;
    for (StatisticId id : ids) {
        std::map<std::size_t, NullTable> tables;
        for (std::size_t n : ns) {
            const std::filesystem::path path =
                std::filesystem::path(tables_dir) /
                (std::string(to_string(id)) + "_n" + std::to_string(n) + ".l1nt");
            if (!std::filesystem::exists(path)) {
                throw InvalidInput(
                    "missing null table " + path.string() + "; build it with: l1indep nulltable --stat " +
                    std::string(to_string(id)) + " --n " + std::to_string(n) +
                    " --draws 100000 --grid " + std::to_string(part.grid_cells() > 0 ? part.grid_cells() : 4) +
                    " --table " + path.string());
            }
            tables.emplace(n, load_null_table(path));
        }
        slope_reports.push_back(empirical_slope(id, gen.alt, ns, replicates, tables,
                                                common.seed, ctx, common.threads));
        reports.push_back(slope_json(slope_reports.back()));
    }

    Json j;
    j["format_version"] = kReportFormatVersion;
    j["kind"] = "slope_comparison";
    Json config;
    config["command"] = "slope";
    config["stats"] = join_stats(ids);
    config["ns"] = ns;
    config["replicates"] = replicates;
    config["seed"] = common.seed;
    config["generator"] = gen_opts.config_json();
    config["partition"] = part.config_json();
    config["tables"] = tables_dir;
    j["config"] = config;
    j["reports"] = reports;
    Json ratios = Json::array();
    for (std::size_t k = 1; k < slope_reports.size(); ++k) {
        const EfficiencyRatio r = efficiency_ratio(slope_reports[0], slope_reports[k]);
        Json jr;
        jr["numerator"] = slope_reports[0].statistic_id;
        jr["denominator"] = slope_reports[k].statistic_id;
        jr["value"] = r.value;
        jr["se"] = r.se;
        ratios.push_back(jr);
    }
    j["efficiency_ratios"] = ratios;
    write_output(render_report(j), common.out);
    return 0;
}

int cmd_simulate(std::size_t n, const GeneratorOptions& gen_opts, std::uint64_t stream,
                 const CommonOptions& common) {
    const GeneratorSpec gen = gen_opts.spec(stream);
    const PairedSample sample = draw_sample(gen, n, common.seed);
    std::ostringstream out;
    write_sample_csv(sample, out);
    write_output(out.str(), common.out);
    return 0;
}

} // namespace

int run_cli(int argc, char** argv) {
    CLI::App app{"Histogram L1 independence testing and large-deviation experiments"};
    app.require_subcommand(1);

    // test
    auto* test = app.add_subcommand("test", "Permutation independence tests on a CSV sample");
    std::string test_input;
    std::string test_stat = "all";
    std::size_t test_permutations = 999;
    PartitionOptions test_part;
    CommonOptions test_common;
    test->add_option("--input", test_input, "CSV file with columns x1..xd,y1..yd'")
        ->required();
    test->add_option("--stat", test_stat, "Statistic id, comma list, or 'all'");
    test->add_option("--permutations", test_permutations, "Permutation count B (default 999)");
    test_part.attach(test, 0);
    test_common.attach(test);

    // nulltable
    auto* nulltable = app.add_subcommand("nulltable", "Monte Carlo null table for one statistic");
    std::string nt_stat;
    std::size_t nt_n = 0;
    std::size_t nt_draws = 10000;
    std::string nt_out;
    std::string nt_csv;
    GeneratorOptions nt_gen;
    PartitionOptions nt_part;
    CommonOptions nt_common;
    nulltable->add_option("--stat", nt_stat, "Statistic id")->required();
    nulltable->add_option("--n", nt_n, "Sample size the table is built for")->required();
    nulltable->add_option("--draws", nt_draws, "Monte Carlo draws (default 10000)");
    nulltable->add_option("--table", nt_out, "Output table file")->required();
    nulltable->add_option("--csv", nt_csv, "Optional CSV export of the draws");
    nt_gen.attach(nulltable);
    nt_part.attach(nulltable, 4);
    nt_common.attach(nulltable);

    // ldcurve
    auto* ldcurve = app.add_subcommand("ldcurve", "Tail probabilities and rate fits on an (n, lambda) grid");
    std::string ld_stat = "vn";
    std::string ld_lambdas = "0.2,0.3,0.4";
    std::string ld_ns = "50,100,200,400";
    std::size_t ld_draws = 100000;
    std::string ld_plot;
    GeneratorOptions ld_gen;
    PartitionOptions ld_part;
    CommonOptions ld_common;
    ldcurve->add_option("--stat", ld_stat, "Statistic id (default vn)");
    ldcurve->add_option("--lambdas", ld_lambdas, "Comma list of thresholds");
    ldcurve->add_option("--ns", ld_ns, "Comma list of sample sizes");
    ldcurve->add_option("--draws", ld_draws, "Monte Carlo draws per n (default 100000)");
    ldcurve->add_option("--plot-csv", ld_plot, "Optional CSV of points for plotting");
    ld_gen.attach(ldcurve);
    ld_part.attach(ldcurve, 4);
    ld_common.attach(ldcurve);

    // slope
    auto* slope = app.add_subcommand("slope", "Empirical Bahadur slopes against premade null tables");
    std::string sl_stats = "vn,tau";
    std::string sl_ns = "50,100,200,400";
    std::size_t sl_replicates = 50;
    std::string sl_tables;
    GeneratorOptions sl_gen;
    PartitionOptions sl_part;
    CommonOptions sl_common;
    slope->add_option("--stats", sl_stats, "Comma list of statistic ids (first is the numerator)");
    slope->add_option("--ns", sl_ns, "Comma list of sample sizes");
    slope->add_option("--replicates", sl_replicates, "Replicates per n (default 50)");
    slope->add_option("--tables", sl_tables, "Directory of <stat>_n<N>.l1nt null tables")
        ->required();
    sl_gen.attach(slope);
    sl_part.attach(slope, 4);
    sl_common.attach(slope);

    // simulate
    auto* simulate = app.add_subcommand("simulate", "Draw a synthetic sample and write it as CSV");
    std::size_t sim_n = 0;
    std::uint64_t sim_stream = 0;
    GeneratorOptions sim_gen;
    CommonOptions sim_common;
    simulate->add_option("--n", sim_n, "Number of pairs")->required();
    simulate->add_option("--stream", sim_stream, "Generator stream id (default 0)");
    sim_gen.attach(simulate);
    sim_common.attach(simulate);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (test->parsed()) {
            return cmd_test(test_input, test_stat, test_permutations, test_part, test_common);
        }
        if (nulltable->parsed()) {
            return cmd_nulltable(nt_stat, nt_n, nt_draws, nt_gen, nt_part, nt_out, nt_csv,
                                 nt_common);
        }
        if (ldcurve->parsed()) {
            return cmd_ldcurve(ld_stat, ld_lambdas, ld_ns, ld_draws, ld_gen, ld_part, ld_plot,
                               ld_common);
        }
        if (slope->parsed()) {
            return cmd_slope(sl_stats, sl_ns, sl_replicates, sl_gen, sl_part, sl_tables,
                             sl_common);
        }
        if (simulate->parsed()) {
            return cmd_simulate(sim_n, sim_gen, sim_stream, sim_common);
        }
        std::cerr << "error: no subcommand selected\n";
        return 2;
    } catch (const InvalidInput& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 1;
    }
}

} // namespace l1indep
