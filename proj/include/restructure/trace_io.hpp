#pragma once

#include "restructure/simulator.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace restructure {

/// Column orders are part of the file contract; tests pin them.
namespace header {
inline constexpr const char* kSamples =
    "node_id,ts_ms,strain_ue,temp_c,rh_pct,seq,rssi_dbm,beacon_interval_s,parent";
inline constexpr const char* kGateway =
    "node_id,ts_ms,strain_ue,temp_c,rh_pct,seq,rssi_dbm,beacon_interval_s,parent,arrival_ts_ms,hops";
inline constexpr const char* kRouting = "node_id,ts_ms,parent,beacon_interval_s";
inline constexpr const char* kEnergy = "node_id,ts_ms,remaining_j,spent_j";
inline constexpr const char* kEvents = "ts_ms,kind,node_id,detail";
inline constexpr const char* kReference = "strut_id,instrument,ts_ms,value";
inline constexpr const char* kNodes =
    "node_id,strut_id,level,distance_m,installed_ts_ms,died_ts_ms,initial_j,remaining_j,cycles,"
    "transmissions,mean_attempts";
}  // namespace header

/// "sink", "none" or the numeric id.
std::string parent_label(NodeId parent);
NodeId parse_parent_label(const std::string& s);

/// Writes samples.csv (every node's flash), gateway.csv (server store),
/// archive.csv (local gateway archive), routing.csv, energy.csv, events.csv,
/// reference.csv, nodes.csv and a copy of the scenario text. Each file is
/// written atomically; the directory is created if needed.
void write_simulation(const SimulationResult& result, const Scenario& scenario,
                      const std::string& scenario_text, const std::filesystem::path& dir);

struct NodeInfo {
    NodeId id = 0;
    std::string strut_id;
    int level = 0;
    double distance_m = 0.0;
    std::optional<double> mean_attempts;
};

/// Everything the analysis pipeline consumes, from disk or from memory.
struct RunData {
    std::vector<StrainSample> flash;
    std::vector<ArchivedSample> received;
    std::map<NodeId, RoutingHistory> routing;
    std::vector<ReferenceSample> reference;
    std::map<NodeId, NodeInfo> nodes;
    std::optional<Scenario> scenario;
    std::vector<std::string> warnings;
};

/// Reads a trace directory. samples.csv is required; received packets come
/// from archive.csv, or gateway.csv when there is no archive. Other files
/// are optional. Missing columns raise DataError naming file and column.
RunData load_run(const std::filesystem::path& dir);

RunData run_data(const SimulationResult& result, const Scenario& scenario);

}  // namespace restructure
