#pragma once

#include <string>

#include <json.hpp>

#include "l1indep/ldlab.hpp"

namespace l1indep {

// Reports preserve field order and print numbers in shortest round-trip
// form, so rendered output is byte-stable for equal inputs.
using Json = nlohmann::ordered_json;

Json partition_json(const CubicPartition& partition);
Json alternative_json(const AlternativeSpec& alt);
Json generator_json(const GeneratorSpec& gen);
Json tail_json(const TailEstimate& tail);
Json rate_fit_json(const RateFit& fit);
Json curve_json(const LDCurve& curve);
Json slope_point_json(const SlopePoint& point);
Json slope_json(const SlopeReport& report);

// Final serialization: two-space indent plus trailing newline.
std::string render_report(const Json& body);

} // namespace l1indep
