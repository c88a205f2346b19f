// restructure: simulate a deployment, analyze its traces, print lifetimes.

#include "restructure/gateway_sim.hpp"
#include "restructure/node_sim.hpp"
#include "restructure/report.hpp"
#include "restructure/scenario.hpp"
#include "restructure/simulator.hpp"
#include "restructure/trace_io.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using namespace restructure;

namespace {

std::string read_text(const fs::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open '" + path.string() + "'");
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

/// Applies command-line overrides to the scenario text so the copy written
/// next to the traces reproduces the run on its own.
std::string with_overrides(const std::string& text, std::optional<std::uint64_t> seed,
                           std::optional<int> tz) {
    if (!seed && !tz) {
        return text;
    }
    nlohmann::ordered_json doc;
    try {
        doc = nlohmann::ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(std::string("scenario is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) {
        throw ConfigError("$: expected an object");
    }
    if (seed) doc["seed"] = *seed;
    if (tz) doc["timezone_offset_min"] = *tz;
    return doc.dump(2) + "\n";
}

int run_simulate(const fs::path& scenario_path, const fs::path& out_dir,
                 std::optional<std::uint64_t> seed, std::optional<int> tz) {
    const auto text = with_overrides(read_text(scenario_path), seed, tz);
    const Scenario sc = parse_scenario(text, scenario_path.parent_path());
    const auto result = simulate(sc);
    write_simulation(result, sc, text, out_dir);
    std::size_t died = 0;
    for (const auto& [id, node] : result.nodes) died += node.alive() ? 0 : 1;
    fmt::print("simulated {:.2f} days, {} nodes ({} died), {} samples archived -> {}\n",
               static_cast<double>(sc.duration_ms) / kDayMs, result.nodes.size(), died,
               result.gateway.archive().size(), out_dir.string());
    return 0;
}

ReportBundle run_analysis(const fs::path& dir, const std::optional<fs::path>& scenario_path,
                          std::optional<int> tz) {
    RunData data = load_run(dir);
    if (scenario_path) {
        data.scenario = load_scenario(*scenario_path);
    }
    ReportOptions options =
        data.scenario ? ReportOptions::from_scenario(*data.scenario) : ReportOptions{};
    if (!data.scenario) {
        data.warnings.push_back(
            "no scenario found: no outage windows, default struts and profiles assumed");
    }
    if (tz) options.timezone_offset_min = *tz;
    return analyze(data, options);
}

int run_analyze(const fs::path& dir, const std::optional<fs::path>& out,
                const std::optional<fs::path>& scenario_path, std::optional<int> tz) {
    const auto bundle = run_analysis(dir, scenario_path, tz);
    const fs::path target = out ? *out : dir / "report";
    write_report(bundle, target);
    for (const auto& w : bundle.warnings) {
        fmt::print(stderr, "warning: {}\n", w);
    }
    fmt::print("report written to {}\n", target.string());
    return 0;
}

int run_report(const fs::path& dir, const std::optional<fs::path>& scenario_path,
               std::optional<int> tz) {
    const auto bundle = run_analysis(dir, scenario_path, tz);
    fmt::print("{}", render_summary(bundle));
    return 0;
}

struct LifetimeArgs {
    std::optional<fs::path> profile;
    int cells = 2;
    double amp_hours = 7.8;
    double cell_voltage = 1.5;
    double supply_voltage = 3.0;
    double derating = 1.0;
    double attempts = 1.0;
    double gateway_derating = 0.956;
};

int run_lifetime(const LifetimeArgs& a) {
    EnergyProfile profile = default_node_profile();
    if (a.profile) {
        std::ifstream in(*a.profile);
        if (!in) {
            throw ConfigError("cannot open profile '" + a.profile->string() + "'");
        }
        try {
            profile = read_energy_profile_csv(in, a.supply_voltage);
        } catch (const DataError& e) {
            throw ConfigError(e.what());
        }
    }
    if (a.attempts < 1.0) {
        throw ConfigError("--attempts must be >= 1");
    }
    const auto battery =
        BatteryModel::cells(a.cells, a.amp_hours, a.cell_voltage, a.supply_voltage, a.derating);
    battery.validate();

    const auto breakdown = energy_breakdown(profile);
    fmt::print("Node energy breakdown\n");
    fmt::print("  {:<16} {:>10} {:>10} {:>11} {:>7}\n", "operation", "ms", "mA", "mW", "%");
    for (const auto& r : breakdown.rows) {
        fmt::print("  {:<16} {:>10} {:>10.1f} {:>11.6f} {:>7.2f}\n", r.operation, r.duration_ms,
                   r.current_ma, r.power_mw, r.percent);
    }
    fmt::print("  {:<16} {:>10} {:>10} {:>11.6f}\n", "total", "", "", breakdown.total_mw);
    const auto split = energy_split(breakdown);
    fmt::print("  sensing {:.1f}%, storage {:.2f}%, network {:.1f}%\n\n", split.sensing_pct,
               split.storage_pct, split.network_pct);

    const double days = predict_node_lifetime(profile, battery, a.attempts);
    const bool stock = !a.profile && a.cells == 2 && a.amp_hours == 7.8 && a.cell_voltage == 1.5 &&
                       a.derating == 1.0 && a.attempts == 1.0;
    fmt::print("Node lifetime: {:.2f} days at {:.2f} attempts per send ({:.1f} Wh usable)", days,
               a.attempts, battery.usable_wh());
    if (stock) {
        fmt::print(" -> ≈{:.0f} days (published estimate: 205)", std::floor(days));
    }
    fmt::print("\n");

    const auto gw_profile = default_gateway_profile();
    const double gw_full = predict_gateway_lifetime(gw_profile, default_gateway_battery(1.0));
    const double gw_derated =
        predict_gateway_lifetime(gw_profile, default_gateway_battery(a.gateway_derating));
    fmt::print("Gateway: {:.2f} As per hour, {:.4f} W average\n", gw_profile.charge_per_hour_as(),
               gw_profile.average_power_w());
    fmt::print("Gateway lifetime: {:.1f} days (published estimate: 31) at derating 1.0; "
               "{:.1f} days at derating {:.3f}\n",
               gw_full, gw_derated, a.gateway_derating);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Wireless strut-strain monitoring: simulator and analysis toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "restructure 1.0");

    std::optional<std::uint64_t> seed;
    std::optional<int> tz;
    std::optional<fs::path> scenario_override;

    fs::path sim_scenario = "scenarios/default.json";
    fs::path sim_out = "out";
    auto* sim = app.add_subcommand("simulate", "Run a scenario and write trace CSVs");
    sim->add_option("scenario", sim_scenario, "Scenario JSON file")->capture_default_str();
    sim->add_option("--out,-o", sim_out, "Output directory")->capture_default_str();
    sim->add_option("--seed", seed, "Override the scenario seed");
    sim->add_option("--timezone-offset-min", tz, "Override the site UTC offset (minutes)");

    fs::path an_dir = "out";
    std::optional<fs::path> an_out;
    auto* an = app.add_subcommand("analyze", "Run the analysis pipeline on a trace directory");
    an->add_option("traces", an_dir, "Trace directory from simulate (or external CSVs)")
        ->capture_default_str();
    an->add_option("--out,-o", an_out, "Report directory (default: <traces>/report)");
    an->add_option("--scenario", scenario_override, "Scenario to use instead of scenario.json");
    an->add_option("--timezone-offset-min", tz, "Site UTC offset for day buckets (minutes)");

    LifetimeArgs life;
    auto* lt = app.add_subcommand("lifetime", "Print node and gateway lifetime predictions");
    lt->add_option("--profile", life.profile,
                   "Energy profile CSV (operation,duration_ms,current_ma); default: built-in");
    lt->add_option("--cells", life.cells, "Cells in the node pack")->capture_default_str();
    lt->add_option("--amp-hours", life.amp_hours, "Cell capacity (Ah)")->capture_default_str();
    lt->add_option("--cell-voltage", life.cell_voltage, "Cell voltage (V)")->capture_default_str();
    lt->add_option("--supply-voltage", life.supply_voltage, "Node supply voltage (V)")
        ->capture_default_str();
    lt->add_option("--derating", life.derating, "Node battery derating in (0,1]")
        ->capture_default_str();
    lt->add_option("--attempts", life.attempts, "Average MAC attempts per send")
        ->capture_default_str();
    lt->add_option("--gateway-derating", life.gateway_derating,
                   "Gateway battery derating for the second figure")
        ->capture_default_str();

    fs::path rp_dir = "out";
    auto* rp = app.add_subcommand("report", "Analyze a trace directory and print the tables");
    rp->add_option("traces", rp_dir, "Trace directory")->capture_default_str();
    rp->add_option("--scenario", scenario_override, "Scenario to use instead of scenario.json");
    rp->add_option("--timezone-offset-min", tz, "Site UTC offset for day buckets (minutes)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (sim->parsed()) return run_simulate(sim_scenario, sim_out, seed, tz);
        if (an->parsed()) return run_analyze(an_dir, an_out, scenario_override, tz);
        if (lt->parsed()) return run_lifetime(life);
        if (rp->parsed()) return run_report(rp_dir, scenario_override, tz);
    } catch (const ConfigError& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return 1;
    } catch (const DataError& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        fmt::print(stderr, "error: {}\n", e.what());
        return 2;
    }
    return 1;
}
