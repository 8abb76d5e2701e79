#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace l1indep {

// Rejected user input: malformed files, out-of-range parameters, dimension
// mismatches, statistics asked for on samples they do not support. The CLI
// maps this to exit code 2; anything else that escapes maps to 1.
class InvalidInput : public std::runtime_error {
public:
    explicit InvalidInput(const std::string& what_arg) : std::runtime_error(what_arg) {}
};

inline constexpr int kReportFormatVersion = 1;
inline constexpr std::uint32_t kNullTableFormatVersion = 1;

} // namespace l1indep
