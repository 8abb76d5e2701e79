#include "l1indep/csv.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>
#include <vector>

#include "l1indep/common.hpp"

namespace l1indep {
namespace {

std::string trim(const std::string& s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) {
        ++b;
    }
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) {
        --e;
    }
    return s.substr(b, e - b);
}

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            out.push_back(trim(line.substr(start)));
            return out;
        }
        out.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
}

[[noreturn]] void fail(const std::string& source, std::size_t line_no, const std::string& what) {
    throw InvalidInput(source + ", line " + std::to_string(line_no) + ": " + what);
}

// Header tokens must be x1..xd then y1..yd', both blocks contiguous and
// 1-based. Returns (d, d').
std::pair<std::size_t, std::size_t> parse_header(const std::vector<std::string>& fields,
                                                 const std::string& source, std::size_t line_no) {
    std::size_t dim_x = 0;
    std::size_t i = 0;
    while (i < fields.size() && fields[i] == "x" + std::to_string(i + 1)) {
        ++i;
        ++dim_x;
    }
    std::size_t dim_y = 0;
    while (i < fields.size() && fields[i] == "y" + std::to_string(dim_y + 1)) {
        ++i;
        ++dim_y;
    }
    if (dim_x == 0 || dim_y == 0 || i != fields.size()) {
        fail(source, line_no,
             "header must name columns x1..xd,y1..yd' (got '" +
                 (fields.empty() ? std::string() : fields[0]) + "...')");
    }
    return {dim_x, dim_y};
}

double parse_double(const std::string& field, const std::string& source, std::size_t line_no) {
    if (field.empty()) {
        fail(source, line_no, "empty numeric field");
    }
    char* end = nullptr;
    const double v = std::strtod(field.c_str(), &end);
    if (end != field.c_str() + field.size()) {
        fail(source, line_no, "not a number: '" + field + "'");
    }
    if (!std::isfinite(v)) {
        fail(source, line_no, "non-finite value: '" + field + "'");
    }
    return v;
}

} // namespace

PairedSample read_sample_csv(std::istream& in, const std::string& source_name) {
    std::string line;
    std::size_t line_no = 0;
    // Header: first nonempty line.
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (trim(line).empty()) {
            continue;
        }
        header = split_fields(line);
        break;
    }
    if (header.empty()) {
        throw InvalidInput(source_name + ": empty file, expected a header line x1..xd,y1..yd'");
    }
    const auto [dim_x, dim_y] = parse_header(header, source_name, line_no);
    const std::size_t expected = dim_x + dim_y;

    PairedSample sample;
    sample.dim_x = dim_x;
    sample.dim_y = dim_y;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (trim(line).empty()) {
            continue;
        }
        const std::vector<std::string> fields = split_fields(line);
        if (fields.size() != expected) {
            fail(source_name, line_no,
                 "expected " + std::to_string(expected) + " fields, got " +
                     std::to_string(fields.size()));
        }
        for (std::size_t k = 0; k < dim_x; ++k) {
            sample.x.push_back(parse_double(fields[k], source_name, line_no));
        }
        for (std::size_t k = 0; k < dim_y; ++k) {
            sample.y.push_back(parse_double(fields[dim_x + k], source_name, line_no));
        }
    }
    if (sample.x.empty()) {
        throw InvalidInput(source_name + ": no data rows");
    }
    sample.validate();
    return sample;
}

void write_sample_csv(const PairedSample& sample, std::ostream& out) {
    sample.validate();
    for (std::size_t k = 0; k < sample.dim_x; ++k) {
        out << (k == 0 ? "" : ",") << 'x' << k + 1;
    }
    for (std::size_t k = 0; k < sample.dim_y; ++k) {
        out << ",y" << k + 1;
    }
    out << '\n';
    char buf[40];
    const std::size_t n = sample.size();
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < sample.dim_x; ++k) {
            std::snprintf(buf, sizeof buf, "%.17g", sample.x[i * sample.dim_x + k]);
            out << (k == 0 ? "" : ",") << buf;
        }
        for (std::size_t k = 0; k < sample.dim_y; ++k) {
            std::snprintf(buf, sizeof buf, "%.17g", sample.y[i * sample.dim_y + k]);
            out << ',' << buf;
        }
        out << '\n';
    }
}

} // namespace l1indep
