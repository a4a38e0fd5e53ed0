#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include <CLI11.hpp>

#include "commands.hpp"
#include "psl/types.hpp"

namespace fs = std::filesystem;
using psl::cli::json;

namespace {

struct Invocation {
    std::string config_path;
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed;
    std::vector<std::string> assignments;
    bool show_config = false;
};

json load_config(const std::string& path)
{
    if (path.empty())
        return json::object();
    std::ifstream f(path);
    if (!f)
        throw psl::Error(psl::ErrorCode::usage, "cannot read config file " + path);
    json j = json::parse(f, nullptr, false);
    if (j.is_discarded())
        throw psl::Error(psl::ErrorCode::usage, "config file " + path + " is not valid JSON");
    return j;
}

int execute(const psl::cli::Command& cmd, const Invocation& inv)
{
    json config = psl::cli::merge_config(cmd.defaults, load_config(inv.config_path));
    for (const auto& a : inv.assignments)
        psl::cli::apply_assignment(config, a);
    if (inv.seed) {
        if (config.contains("seed"))
            config["seed"] = *inv.seed;
        else
            std::clog << "note: '" << cmd.name << "' is deterministic; --seed has no effect\n";
    }
    if (inv.show_config) {
        std::cout << config.dump(2) << "\n";
        return 0;
    }
    std::error_code ec;
    fs::create_directories(inv.out_dir, ec);
    if (ec)
        throw psl::Error(psl::ErrorCode::usage, "cannot create output directory " + inv.out_dir);
    cmd.run(config, inv.out_dir, std::clog);
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Minimum purification times of Lindblad systems"};
    app.require_subcommand(1);
    std::map<std::string, Invocation> invocations;
    for (const auto& cmd : psl::cli::commands()) {
        auto& inv = invocations[cmd.name];
        auto* sub = app.add_subcommand(cmd.name, cmd.description);
        sub->add_option("--config", inv.config_path, "JSON config file; missing keys take embedded defaults");
        sub->add_option("--out", inv.out_dir, "Output directory")->capture_default_str();
        sub->add_option("--seed", inv.seed, "Seed for randomized restarts");
        sub->add_option("--set", inv.assignments, "Override a config key, e.g. --set system.dephasing=3")
            ->allow_extra_args(false);
        sub->add_flag("--show-config", inv.show_config, "Print the effective config and exit");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    for (const auto& cmd : psl::cli::commands()) {
        if (!app.got_subcommand(cmd.name))
            continue;
        try {
            return execute(cmd, invocations[cmd.name]);
        } catch (const psl::Error& e) {
            std::cerr << "psl " << cmd.name << ": " << e.what() << "\n";
            return e.code() == psl::ErrorCode::usage ? 2 : 1;
        } catch (const json::exception& e) {
            std::cerr << "psl " << cmd.name << ": config error: " << e.what() << "\n";
            return 2;
        }
    }
    return 2;
}
