#pragma once

#include "restructure/domain.hpp"
#include "restructure/node_sim.hpp"
#include "restructure/rng.hpp"

#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace restructure {

struct ProtocolConfig {
    /// Total MAC attempts per packet per hop.
    int max_retries = 16;
    int beacon_min_s = 8;
    int beacon_max_s = 3600;
    /// 802.15.4 channel; recorded as metadata only.
    int channel = 26;
    double ewma_alpha = 0.2;
    /// A new parent must beat the current one by more than this path ETX.
    double parent_switch_threshold = 1.0;
    /// Beacons per link-estimator window.
    int estimator_window = 3;

    void validate() const;
};

/// Two-state (good/bad) burst-loss link. The state steps once per sampling
/// period; attempts within a period are independent Bernoulli trials at the
/// current state's success probability.
struct LinkModel {
    NodeId from = 0;
    NodeId to = 0;
    double base_success = 1.0;
    double bad_success = 0.0;
    double p_good_to_bad = 0.0;
    double p_bad_to_good = 1.0;
    double distance_m = 1.0;

    void validate() const;
    /// Long-run success probability of a single attempt.
    double mean_success() const noexcept;
};

class LinkState {
public:
    LinkState(LinkModel model, Rng rng);

    const LinkModel& model() const noexcept { return model_; }
    void set_model(const LinkModel& model);
    bool in_bad_state() const noexcept { return bad_; }
    double success_probability() const noexcept;
    /// Advances the burst state machine by one period.
    void advance();
    bool trial();
    int rssi_dbm() const noexcept;

private:
    LinkModel model_;
    Rng rng_;
    bool bad_ = false;
};

struct TxAttempt {
    bool delivered = false;
    int attempts_used = 0;
};

/// Called before each attempt; returning false (sender out of energy) stops
/// the sequence without that attempt.
using AttemptHook = std::function<bool()>;

/// Bernoulli trials against the link until success or max_retries attempts.
/// packet.attempts_used is set to the attempts spent on this hop.
TxAttempt attempt_transmission(LinkState& link, Packet& packet, int max_retries,
                               const AttemptHook& on_attempt = {});

inline constexpr double kInfiniteEtx = std::numeric_limits<double>::infinity();

struct NeighborView {
    NodeId id = 0;
    double link_etx = kInfiniteEtx;
    /// Advertised path ETX from this neighbor to the sink.
    double path_etx = kInfiniteEtx;
    /// True if choosing this neighbor would close a routing cycle.
    bool would_loop = false;
};

/// Min-cost parent with lowest-id tie-break. The current parent is kept
/// unless the best candidate improves on it by more than `threshold`.
/// nullopt when no neighbor offers a finite, loop-free route.
std::optional<NodeId> select_parent(NodeId current_parent, std::span<const NeighborView> neighbors,
                                    double threshold);

enum class BeaconEvent { Stable, ParentChange };

/// Trickle-style interval: doubles while stable up to beacon_max, resets to
/// beacon_min on a parent change.
int beacon_tick(int interval_s, BeaconEvent event, const ProtocolConfig& config);

struct RoutingRecord {
    Timestamp t = 0;
    NodeId parent = kNoParent;
    int beacon_interval_s = 0;
};

using RoutingHistory = std::vector<RoutingRecord>;

struct ReceivedPacket {
    NodeId origin = 0;
    std::int64_t seq = 0;
    Timestamp created_at = 0;
    Timestamp arrival = 0;
    std::vector<NodeId> hop_path;
};

using GatewayLog = std::vector<ReceivedPacket>;

struct SentRecord {
    std::int64_t seq = 0;
    Timestamp t = 0;
};

/// Packets a node generated: one per alive cycle tick.
struct NodeTrace {
    NodeId node = 0;
    std::vector<SentRecord> sent;

    static NodeTrace from_flash(NodeId node, std::span<const StrainSample> flash);
};

/// Half-open [start, end).
struct TimeWindow {
    Timestamp start = 0;
    Timestamp end = 0;

    Timestamp length() const noexcept { return end - start; }
    bool contains(Timestamp t) const noexcept { return t >= start && t < end; }
};

/// 100 * received / expected for packets created inside the window.
/// nullopt when nothing was expected.
std::optional<double> compute_pdr(const NodeTrace& trace, const GatewayLog& log,
                                  TimeWindow window);

/// Percentage of window time spent beaconing at beacon_max_s. Time before the
/// first record counts as not at max. Throws DataError on an empty window.
double compute_link_stability(const RoutingHistory& history, TimeWindow window, int beacon_max_s);

struct ParentShare {
    NodeId parent = kNoParent;
    double percent = 0.0;
};

/// Time-weighted modal parent; ties go to the lower id (so the sink wins).
/// Throws DataError if no parent record covers any of the window.
ParentShare most_common_parent(const RoutingHistory& history, TimeWindow window);

/// Collection-tree routing over lossy links: per-node parent choice by path
/// ETX, EWMA link estimators fed by data traffic and beacon windows, and
/// Trickle-style beacon intervals. Owned and driven by the single-threaded
/// event loop.
class CollectionNetwork final : public Radio {
public:
    using DeliverFn = std::function<void(const Packet&, const StrainSample&, Timestamp)>;

    CollectionNetwork(ProtocolConfig config, std::uint64_t seed, std::map<NodeId, NodeState>& nodes);

    const ProtocolConfig& config() const noexcept { return config_; }

    void add_link(const LinkModel& model);
    void set_link(const LinkModel& model);
    bool has_link(NodeId from, NodeId to) const;
    LinkState& link(NodeId from, NodeId to);

    void on_deliver(DeliverFn fn) { deliver_ = std::move(fn); }

    /// Node joins the tree at t. Returns the first beacon time. Joining the
    /// sink starts root beacons.
    Timestamp join(NodeId node, Timestamp t);

    /// Advances every link's burst state by one period.
    void advance_links();

    /// Node (or the joined sink) broadcasts a beacon at t. Returns the next
    /// beacon time, or nullopt if the node is gone.
    std::optional<Timestamp> beacon(NodeId node, Timestamp t);

    /// Runs parent selection for node at t; returns true on a parent change.
    bool refresh_parent(NodeId node, Timestamp t);

    /// Time at which the node's next beacon is due.
    std::optional<Timestamp> next_beacon(NodeId node) const;
    /// Bumped on every trickle reset so stale queued beacons can be skipped.
    std::uint64_t beacon_generation(NodeId node) const;

    NodeId parent(NodeId node) const;
    double path_etx(NodeId node) const;
    double link_etx(NodeId node, NodeId neighbor) const;
    int beacon_interval_s(NodeId node) const;
    const RoutingHistory& history(NodeId node) const;
    const std::map<NodeId, RoutingHistory>& histories() const noexcept { return history_; }

    /// True if following parents from any node never revisits a node.
    bool is_forest() const;

    RadioStatus status(NodeId node) const override;
    TxOutcome send(NodeState& node, const StrainSample& sample, Timestamp t) override;

private:
    struct Route {
        NodeId parent = kNoParent;
        std::map<NodeId, double> etx;
        struct Window {
            int expected = 0;
            int received = 0;
        };
        std::map<NodeId, Window> beacon_window;
        int interval_s = 0;
        Timestamp next_beacon = 0;
        std::uint64_t generation = 0;
        bool changed_since_beacon = false;
        bool joined = false;
    };

    bool participating(NodeId node) const;
    void update_etx(NodeId node, NodeId neighbor, double sample);
    bool ancestor_chain_contains(NodeId start, NodeId target) const;
    void set_parent(NodeId node, NodeId parent, Timestamp t);
    void record(NodeId node, Timestamp t);
    std::vector<NodeId> neighbors_of(NodeId node) const;

    ProtocolConfig config_;
    std::uint64_t seed_;
    std::map<NodeId, NodeState>& nodes_;
    std::map<std::pair<NodeId, NodeId>, LinkState> links_;
    std::map<NodeId, Route> routes_;
    std::map<NodeId, RoutingHistory> history_;
    DeliverFn deliver_;
};

}  // namespace restructure
