#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "aerial_twin/datagen.hpp"
#include "aerial_twin/metric_store.hpp"
#include "aerial_twin/runner.hpp"
#include "aerial_twin/scenario.hpp"

namespace at = aerial_twin;
using namespace aerial_twin::expcli;

namespace {

int cmd_run(const std::string& scenario_path, const std::string& out, std::optional<uint64_t> seed,
            const std::string& transport) {
    auto sc = load_scenario(scenario_path);
    RunOptions opts;
    opts.seed = seed;
    if (!transport.empty()) opts.transport = transport_kind_from_string(transport);
    const auto art = run(sc, out, opts);
    std::cout << format_summary(art.summary, sc);
    std::cout << "\nindications " << art.indications << ", outputs in " << out << '\n';
    return kExitOk;
}

int cmd_datagen(const std::string& input, double power_dbm, const std::string& out,
                const std::string& scenario_path) {
    const auto curve = at::datagen::read_curve(input);
    at::datagen::DatagenConfig cfg;
    if (scenario_path.empty()) {
        cfg = at::datagen::make_config({}, {}, {});
    } else {
        const auto sc = load_scenario(scenario_path);
        cfg = at::datagen::make_config(sc.tdd, sc.sched, sc.channel);
    }
    at::datagen::write_curve(at::datagen::power_shift_curve(curve, power_dbm, cfg), out);
    return kExitOk;
}

int cmd_score(const std::string& gen, const std::string& oracle) {
    const auto cfg = at::datagen::make_config({}, {}, {});
    const auto s = at::datagen::score_generated(at::datagen::read_curve(gen), at::datagen::read_curve(oracle), cfg);
    std::cout << "points " << s.points << "\nmedian_rel_err " << s.median_rel_err << "\nmax_rel_err "
              << s.max_rel_err << "\nfraction_within_10pct " << s.fraction_within_10pct << '\n';
    return kExitOk;
}

int cmd_dump(const std::string& store_path, const std::string& out) {
    try {
        at::ric::MetricStore store(store_path, at::ric::MetricStore::Mode::ReadOnly);
        at::ric::dump_csv(store, out);
    } catch (const at::ric::StoreError& e) {
        throw IoFailure(e.what());
    }
    return kExitOk;
}

int cmd_plot(const std::string& series_path, const std::string& out) {
    const auto series = at::xapp::import_series(series_path);
    for (const auto& p : plot_series(series, out)) std::cout << p.string() << '\n';
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Aerial 5G O-RAN digital twin"};
    app.require_subcommand(1);
    std::string level = "warn";
    app.add_option("--log-level", level, "trace, debug, info, warn, error or off");

    std::string scenario, out, transport, input, gen, oracle, store, series, dg_scenario;
    std::optional<uint64_t> seed;
    double power_dbm = 0.0;

    auto* run_cmd = app.add_subcommand("run", "Run a scenario and export its results");
    run_cmd->add_option("--scenario", scenario, "Scenario JSON file")->required();
    run_cmd->add_option("--out", out, "Output directory")->required();
    run_cmd->add_option("--seed", seed, "Override the scenario seed");
    run_cmd->add_option("--transport", transport, "Override the E2 transport")
        ->check(CLI::IsMember({"inproc", "socket"}));

    auto* dg_cmd = app.add_subcommand("datagen", "Shift a measured throughput curve to another power");
    dg_cmd->add_option("--input", input, "Input curve CSV")->required();
    dg_cmd->add_option("--power-dbm", power_dbm, "New transmit power (dBm)")->required();
    dg_cmd->add_option("--out", out, "Output curve CSV")->required();
    dg_cmd->add_option("--scenario", dg_scenario, "Take TDD, scheduler and channel constants from a scenario");

    auto* score_cmd = app.add_subcommand("score", "Compare a generated curve with an oracle curve");
    score_cmd->add_option("--gen", gen, "Generated curve CSV")->required();
    score_cmd->add_option("--oracle", oracle, "Oracle curve CSV")->required();

    auto* dump_cmd = app.add_subcommand("dump", "Export a metric store as CSV");
    dump_cmd->add_option("--store", store, "Metric store file")->required();
    dump_cmd->add_option("--out", out, "Output CSV")->required();

    auto* plot_cmd = app.add_subcommand("plot", "Render static SVG charts of an xApp series");
    plot_cmd->add_option("--series", series, "Series CSV")->required();
    plot_cmd->add_option("--out", out, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitUsage;
    }
    spdlog::set_level(spdlog::level::from_str(level));

    try {
        if (*run_cmd) return cmd_run(scenario, out, seed, transport);
        if (*dg_cmd) return cmd_datagen(input, power_dbm, out, dg_scenario);
        if (*score_cmd) return cmd_score(gen, oracle);
        if (*dump_cmd) return cmd_dump(store, out);
        if (*plot_cmd) return cmd_plot(series, out);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const ProtocolFailure& e) {
        std::cerr << "protocol error: " << e.what() << '\n';
        return kExitProtocol;
    } catch (const IoFailure& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::runtime_error& e) {
        // file readers report missing or malformed inputs this way
        std::cerr << "I/O error: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    }
    return kExitUsage;
}
