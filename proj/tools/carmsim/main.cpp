#include <iostream>

#include <json.hpp>

#include "carmsim/agent.hpp"
#include "carmsim/error.hpp"
#include "commands.hpp"

namespace {

using carmsim::ErrorKind;
using namespace carmsim::cli;

int report(const std::string& category, const std::string& message, int code) {
    nlohmann::json j{{"error", category}, {"message", message}};
    std::cerr << j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace) << '\n';
    return code;
}

int exit_code_for(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::io:
            return kRuntime;
        case ErrorKind::transport:
            return kTransport;
        default:
            return kInput;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"carmsim: C-arm imaging and navigation simulator"};
    app.require_subcommand(1);
    Globals globals;
    globals.argv.assign(argv, argv + argc);
    app.add_option("--threads", globals.threads, "Worker threads for rendering (0 = all cores)");

    add_gen_phantom(app, globals);
    add_sample(app, globals);
    add_render(app, globals);
    add_build_dataset(app, globals);
    add_navigate(app, globals);
    add_evaluate(app, globals);
    add_protocol_check(app, globals);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return report("usage", e.what(), kUsage);
    } catch (const carmsim::Error& e) {
        return report(std::string(carmsim::to_string(e.kind())), e.what(), exit_code_for(e.kind()));
    } catch (const carmsim::TransportError& e) {
        return report("transport", e.what(), kTransport);
    } catch (const std::exception& e) {
        return report("runtime", e.what(), kRuntime);
    }
    return g_exit_code;
}
