#pragma once

namespace qmeas {

// Command line entry point. Exit codes: 0 success, 2 configuration or usage
// problem, 3 numeric guard tripped during a run, 4 verification failed.
int run_cli(int argc, const char* const* argv);

}  // namespace qmeas
