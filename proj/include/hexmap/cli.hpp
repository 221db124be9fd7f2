#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "hexmap/engine.hpp"

namespace hexmap::cli {

// Injection points for in-process tests. Null members fall back to the
// real thing (raw transport, steady clock, stdout/stderr).
struct RunHooks {
    Transport* transport = nullptr;
    Clock* clock = nullptr;
    std::ostream* out = nullptr; // results when -o is "-", and --help text
    std::ostream* err = nullptr; // diagnostics, config echo, stats summary
    ScanStats* stats = nullptr;  // aggregated run totals, for assertions
};

// Full command-line entry point. args excludes argv[0].
// Exit status: 0 completed, 1 configuration error (nothing sent),
// 2 runtime failure (partial results flushed).
int run(const std::vector<std::string>& args, const RunHooks& hooks = {});

int run_main(int argc, char** argv);

} // namespace hexmap::cli
