#pragma once

#include <iosfwd>
#include <string>

#include "l1indep/partition.hpp"

namespace l1indep {

// Reads a paired sample from CSV. The header must name the columns
// x1..xd,y1..yd' in order; every data row needs exactly that many finite
// numeric fields. Errors carry the source name and the 1-based line number.
PairedSample read_sample_csv(std::istream& in, const std::string& source_name);

// Writes the matching CSV with 17 significant digits, enough for every
// double to survive a round trip exactly.
void write_sample_csv(const PairedSample& sample, std::ostream& out);

} // namespace l1indep
