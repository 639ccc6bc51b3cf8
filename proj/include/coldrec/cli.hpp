#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace coldrec::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

// Subcommands: ingest, synth, split, run, sweep, report, gains.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace coldrec::cli
