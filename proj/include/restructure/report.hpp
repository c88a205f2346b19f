#pragma once

#include "restructure/analysis.hpp"
#include "restructure/gateway_sim.hpp"
#include "restructure/node_sim.hpp"
#include "restructure/trace_io.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace restructure {

struct ReportOptions {
    int timezone_offset_min = 0;
    std::vector<TimeWindow> outages;
    AnalysisOptions analysis;
    EnergyProfile node_profile = default_node_profile();
    BatteryModel node_battery = default_node_battery();
    GatewayEnergyProfile gateway_profile = default_gateway_profile();
    BatteryModel gateway_battery = default_gateway_battery();
    int beacon_max_s = 3600;
    std::map<std::string, StrutSpec> struts;

    /// Knobs taken from the scenario (outages, time zone, struts, profiles).
    static ReportOptions from_scenario(const Scenario& scenario);
};

struct YieldRow {
    NodeId node = 0;
    std::string strut_id;
    Timestamp start = 0;
    Timestamp end = 0;
    double days = 0.0;
    std::int64_t expected = 0;
    std::int64_t received = 0;
    double yield_pct = 0.0;
    std::optional<double> yield_without_outages_pct;
};

struct NetworkRow {
    NodeId node = 0;
    double distance_m = 0.0;
    std::optional<double> pdr_pct;
    std::optional<double> stability_pct;
    std::optional<ParentShare> mcp;
    std::optional<double> mean_attempts;
};

struct CompensationRow {
    NodeId node = 0;
    std::size_t samples = 0;
    std::size_t band_samples = 0;
    double p2p_raw_ue = 0.0;
    double p2p_compensated_ue = 0.0;
    double reduction_pct = 0.0;
    std::optional<double> r_compensated_temp;
    std::optional<double> curve_slope_ue_per_c;
};

struct DailyRow {
    NodeId node = 0;
    std::int64_t day = 0;
    double wbf_raw_ue = 0.0;
    double wbf_compensated_ue = 0.0;
    std::optional<double> vw_ue;
    std::optional<double> load_kn;
};

struct CorrelationRow {
    NodeId node = 0;
    std::string strut_id;
    std::size_t days = 0;
    std::optional<double> r;
    double offset_ue = 0.0;
    double offset_se_ue = 0.0;
};

struct GatewayBudget {
    std::vector<GatewayEnergyStep> steps;
    double charge_per_hour_as = 0.0;
    double average_power_w = 0.0;
    double lifetime_days_underated = 0.0;
    double lifetime_days_derated = 0.0;
    double derating = 1.0;
};

struct ReportBundle {
    EnergyBreakdown node_energy;
    EnergySplit split;
    double node_lifetime_days = 0.0;
    GatewayBudget gateway;
    std::vector<YieldRow> yield;
    std::vector<NetworkRow> network;
    std::vector<std::tuple<NodeId, std::int64_t, double>> daily_pdr;
    std::vector<CompensationRow> compensation;
    std::map<NodeId, CompensationCurve> curves;
    std::vector<DailyRow> daily;
    std::vector<CorrelationRow> correlation;
    std::vector<std::string> warnings;
};

/// Whole offline pipeline. Per-node failures become warnings; the bundle
/// is always produced.
ReportBundle analyze(const RunData& data, const ReportOptions& options);

/// Writes node_energy.csv, gateway_budget.csv, yield.csv, network.csv,
/// daily_pdr.csv, compensation.csv, compensation_curves.csv,
/// daily_median.csv, correlation.csv and summary.txt.
void write_report(const ReportBundle& bundle, const std::filesystem::path& dir);

/// Plain-text tables in the layout of the published ones.
std::string render_summary(const ReportBundle& bundle);

}  // namespace restructure
