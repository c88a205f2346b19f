#pragma once

#include "restructure/gateway_sim.hpp"
#include "restructure/net_sim.hpp"
#include "restructure/node_sim.hpp"
#include "restructure/scenario.hpp"

#include <map>
#include <string>
#include <vector>

namespace restructure {

/// A packet that reached the sink, and what the gateway made of it.
struct Delivery {
    NodeId origin = 0;
    std::int64_t seq = 0;
    Timestamp created_at = 0;
    Timestamp arrival = 0;
    int hops = 0;
    IngestResult result = IngestResult::Archived;
};

struct ReferenceSample {
    std::string strut_id;
    std::string instrument;  // "vw" (ue) or "load_cell" (N)
    Timestamp t = 0;
    double value = 0.0;
};

struct EnergySnapshot {
    NodeId node = 0;
    Timestamp t = 0;
    Nanojoules remaining = 0;
    Nanojoules spent = 0;
};

struct SimEvent {
    Timestamp t = 0;
    std::string kind;
    NodeId node = kNoParent;
    std::string detail;
};

struct TxStats {
    std::int64_t cycles = 0;
    std::int64_t transmissions = 0;
    std::int64_t attempts = 0;
};

struct SimulationResult {
    Timestamp end = 0;
    std::map<NodeId, NodeState> nodes;
    std::map<NodeId, RoutingHistory> routing;
    std::map<NodeId, TxStats> tx;
    GatewayState gateway;
    std::vector<Delivery> deliveries;
    std::vector<ReferenceSample> reference;
    std::vector<EnergySnapshot> energy;
    std::vector<SimEvent> events;
};

/// Runs the scenario over [0, duration) on a single-threaded event queue.
/// Same-time events run in a fixed order (scheduled changes, installs,
/// channel steps, watchdog, sense cycles, beacons, uplink, reference
/// instruments, energy snapshots), then by node id, so the result is a pure
/// function of the scenario.
SimulationResult simulate(const Scenario& scenario);

}  // namespace restructure
