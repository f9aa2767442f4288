// Command-line front end: decompose, compare and stream experiments.

#include <cstdlib>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "tdmd/tdmd.hpp"

namespace {

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
        if (!item.empty())
            out.push_back(item);
    return out;
}

struct Flags {
    std::string config, input, gen, transform, method, gamma, out;
    tdmd::Index m = 0, n = 0, t = 0, rank = 0, batches = 0, rho_max = 0;
    std::uint64_t seed = 0;
    int threads = 0;
};

void add_flags(CLI::App* cmd, Flags& f) {
    cmd->add_option("--config", f.config, "JSON config file; other flags override it");
    auto* input = cmd->add_option("--input", f.input, "snapshot tensor (.tdt) or directory of CSV snapshots");
    cmd->add_option("--gen", f.gen, "synthetic trajectory")->check(CLI::IsMember({"wave", "vortex", "linear"}))->excludes(input);
    cmd->add_option("--m", f.m, "grid points along x (rows)")->check(CLI::PositiveNumber);
    cmd->add_option("--n", f.n, "grid points along y (tubes)")->check(CLI::PositiveNumber);
    cmd->add_option("--t", f.t, "time horizon T (T+1 snapshots)")->check(CLI::PositiveNumber);
    cmd->add_option("--transform", f.transform, "transform along tubes")->check(CLI::IsMember({"dct", "dst", "data"}));
    cmd->add_option("--method", f.method, "comma separated subset of dmd,starm_dmd,starm_dmd2");
    cmd->add_option("--gamma", f.gamma, "comma separated energy fractions in (0, 1]");
    cmd->add_option("--rank", f.rank, "uniform truncation rank (decompose)")->check(CLI::PositiveNumber);
    cmd->add_option("--batches", f.batches, "number of streaming batches")->check(CLI::PositiveNumber);
    cmd->add_option("--rho-max", f.rho_max, "sketch size rho_1")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", f.seed, "random seed");
    cmd->add_option("--threads", f.threads, "worker threads (default: TDMD_THREADS or 1)")->check(CLI::PositiveNumber);
    cmd->add_option("--out", f.out, "output directory");
}

tdmd::ExperimentConfig build_config(const CLI::App* cmd, const Flags& f) {
    tdmd::ExperimentConfig c = f.config.empty() ? tdmd::ExperimentConfig{} : tdmd::load_config(f.config);
    auto given = [&](const char* name) { return cmd->get_option(name)->count() > 0; };
    if (given("--input")) {
        c.input = f.input;
    }
    if (given("--gen")) {
        c.generator = f.gen;
        c.input.clear();
    }
    if (given("--m")) c.m = f.m;
    if (given("--n")) c.n = f.n;
    if (given("--t")) c.steps = f.t;
    if (given("--transform")) c.transform = tdmd::parse_transform_kind(f.transform);
    if (given("--method")) {
        c.methods.clear();
        for (const auto& s : split_list(f.method))
            c.methods.push_back(tdmd::parse_dmd_method(s));
    }
    if (given("--gamma")) {
        c.gammas.clear();
        for (const auto& s : split_list(f.gamma)) {
            double g = 0.0;
            auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), g);
            if (ec != std::errc() || ptr != s.data() + s.size())
                throw tdmd::Error(tdmd::ErrorCode::invalid_parameter, "cannot parse gamma '" + s + "'");
            c.gammas.push_back(g);
        }
    }
    if (given("--rank")) c.rank = f.rank;
    if (given("--batches")) c.batches = f.batches;
    if (given("--rho-max")) c.rho_max = f.rho_max;
    if (given("--seed")) c.seed = f.seed;
    if (given("--out")) c.out = f.out;
    if (given("--threads"))
        c.threads = f.threads;
    else if (f.config.empty())
        c.threads = tdmd::default_threads();
    return c;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Tensor-based dynamic mode decomposition experiments"};
    app.require_subcommand(1);
    Flags f;
    auto* decompose = app.add_subcommand("decompose", "truncated t-SVDM of the input; writes U/S/V.tdt and summary.json");
    auto* compare = app.add_subcommand("compare", "storage-matched DMD comparison; writes results.csv and statewise_re.csv");
    auto* stream = app.add_subcommand("stream", "streaming DMD over batches; writes batch_re.csv and statewise_re.csv");
    for (auto* cmd : {decompose, compare, stream})
        add_flags(cmd, f);

    CLI11_PARSE(app, argc, argv);

    try {
        CLI::App* cmd = app.get_subcommands().front();
        const tdmd::ExperimentConfig c = build_config(cmd, f);
        std::filesystem::create_directories(c.out);
        tdmd::save_config(c, std::filesystem::path(c.out) / "config.json");
        if (cmd == decompose) {
            const auto s = tdmd::run_decompose(c);
            std::cout << "relative error " << tdmd::format_number(s.relative_error) << ", storage " << s.storage << '\n';
        } else if (cmd == compare) {
            const auto rows = tdmd::run_compare(c);
            for (const auto& r : rows)
                std::cout << "gamma " << tdmd::format_number(r.gamma) << ' ' << tdmd::to_string(r.method) << " storage "
                          << r.storage << " RE " << tdmd::format_number(r.error.global) << '\n';
        } else {
            const auto rep = tdmd::run_stream(c);
            std::cout << rep.batch_re.size() << " batch rows written to " << c.out << '\n';
        }
    } catch (const tdmd::Error& e) {
        std::cerr << "error [" << tdmd::to_string(e.code()) << "]: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
