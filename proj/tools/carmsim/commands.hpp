#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

namespace carmsim::cli {

enum ExitCode : int {
    kOk = 0,
    kUsage = 2,
    kInput = 3,
    kRuntime = 4,
    kTransport = 5,
};

/// Where a command gets its volume: files on disk or a generated phantom.
struct SceneArgs {
    std::string volume;
    std::string landmarks;
    std::optional<std::uint64_t> phantom_seed;
};

struct Globals {
    unsigned threads = 0;
    std::vector<std::string> argv;
};

void add_gen_phantom(CLI::App& app, Globals& g);
void add_sample(CLI::App& app, Globals& g);
void add_render(CLI::App& app, Globals& g);
void add_build_dataset(CLI::App& app, Globals& g);
void add_navigate(CLI::App& app, Globals& g);
void add_evaluate(CLI::App& app, Globals& g);
void add_protocol_check(CLI::App& app, Globals& g);

/// Set by a command that finished but wants a non-zero status.
extern int g_exit_code;

}  // namespace carmsim::cli
