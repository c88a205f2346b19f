#pragma once

#include "restructure/analysis.hpp"
#include "restructure/domain.hpp"
#include "restructure/gateway_sim.hpp"
#include "restructure/net_sim.hpp"
#include "restructure/site_model.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace restructure {

/// Reference instruments mounted on a strut next to the wireless gauges.
struct StrutInstruments {
    std::optional<VWNoiseModel> vw;
    bool load_cell = false;
};

struct NodePlacement {
    NodeId id = 1;
    std::string strut_id;
    int level = 1;
    double distance_m = 1.0;
    Timestamp installed_at = 0;
    BatteryModel battery = default_node_battery();
    ApparentStrainModel apparent;
    std::optional<DebondFault> debond;
    double relay_receive_factor = 1.0;
};

struct LinkChange {
    Timestamp t = 0;
    LinkModel model;
};

struct UplinkSchedule {
    double success_probability = 1.0;
    /// Hourly uplinks inside these windows always fail.
    std::vector<TimeWindow> failures;
};

struct AnalysisOptions {
    int median_filter_k = 5;
    CompensationConfig compensation;
};

struct Scenario {
    std::uint64_t seed = 0;
    std::string start_date;
    Timestamp duration_ms = 0;
    int timezone_offset_min = 0;
    Site site;
    std::map<std::string, StrutInstruments> instruments;
    Timestamp reference_period_ms = kHourMs;
    EnergyProfile profile = default_node_profile();
    std::vector<NodePlacement> nodes;
    std::vector<LinkModel> links;
    std::vector<LinkChange> link_changes;
    ProtocolConfig protocol;
    GatewayConfig gateway;
    UplinkSchedule uplink;
    std::vector<Timestamp> sink_hangs;
    /// Zero disables swaps.
    Timestamp gateway_battery_swap_ms = 0;
    AnalysisOptions analysis;

    const NodePlacement* node(NodeId id) const noexcept;
};

/// Parses and validates a scenario. Every problem found is reported at once,
/// one "path: message" per line, in a single ConfigError. Relative paths
/// inside the document resolve against `base_dir`.
Scenario parse_scenario(const std::string& json_text,
                        const std::filesystem::path& base_dir = {});
Scenario load_scenario(const std::filesystem::path& path);

}  // namespace restructure
