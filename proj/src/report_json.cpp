#include "l1indep/report_json.hpp"

#include <cmath>

#include "l1indep/common.hpp"

namespace l1indep {

Json partition_json(const CubicPartition& p) {
    Json j;
    j["dim_x"] = p.dim_x;
    j["dim_y"] = p.dim_y;
    j["width_x"] = p.width_x;
    j["width_y"] = p.width_y;
    j["origin_x"] = p.origin_x.empty() ? std::vector<double>(p.dim_x, 0.0) : p.origin_x;
    j["origin_y"] = p.origin_y.empty() ? std::vector<double>(p.dim_y, 0.0) : p.origin_y;
    j["degenerate_x"] = p.degenerate_x;
    j["degenerate_y"] = p.degenerate_y;
    return j;
}

Json alternative_json(const AlternativeSpec& alt) {
    Json j;
    j["family"] = std::string(family_name(alt.family));
    j["theta"] = alt.theta;
    j["dim_x"] = alt.dim_x;
    j["dim_y"] = alt.dim_y;
    j["id"] = alt.id();
    return j;
}

Json generator_json(const GeneratorSpec& gen) {
    Json j = alternative_json(gen.alt);
    j["margins"] =
        gen.transform == MarginalTransform::normal_quantile ? "normal" : "uniform";
    j["id"] = gen.id();
    return j;
}

Json tail_json(const TailEstimate& t) {
    Json j;
    j["n"] = t.n;
    j["lambda"] = t.lambda;
    j["hits"] = t.hits;
    j["draws"] = t.draws;
    j["p_hat"] = t.p_hat;
    j["se"] = t.se;
    j["censored"] = t.censored;
    if (t.censored) {
        j["censored_upper"] = t.censored_upper;
        j["g_hat"] = nullptr;
    } else {
        j["g_hat"] = -std::log(t.p_hat) / static_cast<double>(t.n);
    }
    return j;
}

Json rate_fit_json(const RateFit& f) {
    Json j;
    j["lambda"] = f.lambda;
    j["points_used"] = f.points_used;
    j["usable"] = f.usable;
    if (f.points_used >= 2) {
        j["slope"] = f.slope;
        j["intercept"] = f.intercept;
    } else {
        j["slope"] = nullptr;
        j["intercept"] = nullptr;
    }
    j["theoretical_rate"] = theoretical_rate(f.lambda);
    return j;
}

Json curve_json(const LDCurve& c) {
    Json j;
    j["format_version"] = kReportFormatVersion;
    j["kind"] = "ld_curve";
    j["statistic"] = c.statistic_id;
    j["generator"] = generator_json(c.gen);
    j["partition"] = partition_json(c.partition);
    j["lambdas"] = c.lambdas;
    j["ns"] = c.ns;
    j["num_draws"] = c.num_draws;
    j["seed"] = c.seed;
    Json tails = Json::array();
    for (const TailEstimate& t : c.tails) {
        tails.push_back(tail_json(t));
    }
    j["tails"] = tails;
    Json fits = Json::array();
    for (const RateFit& f : c.fits) {
        fits.push_back(rate_fit_json(f));
    }
    j["fits"] = fits;
    return j;
}

Json slope_point_json(const SlopePoint& p) {
    Json j;
    j["n"] = p.n;
    j["replicates"] = p.replicates;
    j["mean"] = p.mean;
    j["se"] = p.se;
    j["censor_fraction"] = p.censor_fraction;
    return j;
}

Json slope_json(const SlopeReport& r) {
    Json j;
    j["format_version"] = kReportFormatVersion;
    j["kind"] = "slope_report";
    j["statistic"] = r.statistic_id;
    j["alternative"] = alternative_json(r.alternative);
    j["seed"] = r.seed;
    j["statistic_mean"] = r.statistic_mean;
    Json points = Json::array();
    for (const SlopePoint& p : r.points) {
        points.push_back(slope_point_json(p));
    }
    j["points"] = points;
    j["slope"] = r.slope;
    j["slope_se"] = r.slope_se;
    j["table_limited"] = r.table_limited;
    if (r.theoretical) {
        j["theoretical_slope"] = r.theoretical->value;
        j["theoretical_small_lambda_valid"] = r.theoretical->small_lambda_valid;
    } else {
        j["theoretical_slope"] = nullptr;
    }
    return j;
}

std::string render_report(const Json& body) {
    return body.dump(2) + "\n";
}

} // namespace l1indep
