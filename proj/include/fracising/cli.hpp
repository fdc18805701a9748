#pragma once

namespace fracising::cli {

// Full command-line entry point (subcommands: couplings, run, analyze,
// report). Returns the process exit code: 0 success, 2 config error,
// 3 partial campaign failure, 4 analysis precondition failure.
int main(int argc, char** argv);

}  // namespace fracising::cli
