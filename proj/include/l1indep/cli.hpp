#pragma once

namespace l1indep {

// Full command-line surface; the binary's main() is a thin wrapper. Returns
// the process exit code: 0 success, 2 rejected input, 1 internal failure.
int run_cli(int argc, char** argv);

} // namespace l1indep
