#ifndef P2S_CLI_HPP
#define P2S_CLI_HPP

namespace p2s {

// Full command-line entry point (subcommands: simulate, denoise, evaluate,
// sweep). Exposed as a library function so tests can drive it in-process.
// Exit codes: 0 success, 1 usage error, 2 I/O error, 3 numerical failure.
int run_cli(int argc, const char* const* argv);

}  // namespace p2s

#endif
