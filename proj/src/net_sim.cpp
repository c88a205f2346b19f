#include "restructure/net_sim.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace restructure {

namespace {

constexpr std::uint64_t kLinkStreamTag = 0x4c494e4bu;  // "LINK"

bool valid_probability(double p) { return p >= 0.0 && p <= 1.0; }

}  // namespace

void ProtocolConfig::validate() const {
    if (max_retries < 1) {
        throw ConfigError("protocol.max_retries must be >= 1");
    }
    if (beacon_min_s < 1 || beacon_min_s > beacon_max_s) {
        throw ConfigError("protocol needs 1 <= beacon_min_s <= beacon_max_s");
    }
    if (!(ewma_alpha > 0.0 && ewma_alpha < 1.0)) {
        throw ConfigError("protocol.ewma_alpha must lie in (0, 1)");
    }
    if (!(parent_switch_threshold >= 0.0)) {
        throw ConfigError("protocol.parent_switch_threshold must be >= 0");
    }
    if (estimator_window < 1) {
        throw ConfigError("protocol.estimator_window must be >= 1");
    }
}

void LinkModel::validate() const {
    if (!valid_probability(base_success) || !valid_probability(bad_success) ||
        !valid_probability(p_good_to_bad) || !valid_probability(p_bad_to_good)) {
        throw ConfigError("link " + std::to_string(from) + "->" + std::to_string(to) +
                          ": probabilities must lie in [0, 1]");
    }
    if (from == to) {
        throw ConfigError("link " + std::to_string(from) + "->" + std::to_string(to) +
                          " is a self loop");
    }
    if (!(distance_m > 0.0)) {
        throw ConfigError("link " + std::to_string(from) + "->" + std::to_string(to) +
                          ": distance_m must be > 0");
    }
}

double LinkModel::mean_success() const noexcept {
    const double flow = p_good_to_bad + p_bad_to_good;
    const double bad_share = flow > 0.0 ? p_good_to_bad / flow : 0.0;
    return (1.0 - bad_share) * base_success + bad_share * bad_success;
}

LinkState::LinkState(LinkModel model, Rng rng) : model_(model), rng_(std::move(rng)) {
    model_.validate();
}

void LinkState::set_model(const LinkModel& model) {
    model.validate();
    model_ = model;
}

double LinkState::success_probability() const noexcept {
    return bad_ ? model_.bad_success : model_.base_success;
}

void LinkState::advance() {
    const double u = rng_.uniform();
    if (bad_) {
        bad_ = !(u < model_.p_bad_to_good);
    } else {
        bad_ = u < model_.p_good_to_bad;
    }
}

bool LinkState::trial() { return rng_.bernoulli(success_probability()); }

int LinkState::rssi_dbm() const noexcept {
    // Log-distance path loss, 12 dB deeper in a fade.
    const double rssi = -45.0 - 25.0 * std::log10(std::max(model_.distance_m, 0.1)) -
                        (bad_ ? 12.0 : 0.0);
    return static_cast<int>(std::lround(rssi));
}

TxAttempt attempt_transmission(LinkState& link, Packet& packet, int max_retries,
                               const AttemptHook& on_attempt) {
    TxAttempt result;
    for (int i = 0; i < max_retries; ++i) {
        if (on_attempt && !on_attempt()) {
            break;
        }
        ++result.attempts_used;
        if (link.trial()) {
            result.delivered = true;
            break;
        }
    }
    packet.attempts_used = result.attempts_used;
    return result;
}

std::optional<NodeId> select_parent(NodeId current_parent, std::span<const NeighborView> neighbors,
                                    double threshold) {
    std::optional<NodeId> best;
    double best_cost = kInfiniteEtx;
    double current_cost = kInfiniteEtx;
    for (const auto& n : neighbors) {
        if (n.would_loop) {
            continue;
        }
        const double cost = n.link_etx + n.path_etx;
        if (!std::isfinite(cost)) {
            continue;
        }
        if (n.id == current_parent) {
            current_cost = cost;
        }
        if (cost < best_cost || (cost == best_cost && best && n.id < *best)) {
            best = n.id;
            best_cost = cost;
        }
    }
    if (best && std::isfinite(current_cost) && current_cost - best_cost <= threshold) {
        return current_parent;
    }
    return best;
}

int beacon_tick(int interval_s, BeaconEvent event, const ProtocolConfig& config) {
    if (event == BeaconEvent::ParentChange) {
        return config.beacon_min_s;
    }
    const long long doubled = 2LL * std::max(interval_s, config.beacon_min_s);
    return static_cast<int>(std::min<long long>(doubled, config.beacon_max_s));
}

NodeTrace NodeTrace::from_flash(NodeId node, std::span<const StrainSample> flash) {
    NodeTrace trace;
    trace.node = node;
    trace.sent.reserve(flash.size());
    for (const auto& s : flash) {
        trace.sent.push_back({s.seq, s.t});
    }
    return trace;
}

std::optional<double> compute_pdr(const NodeTrace& trace, const GatewayLog& log,
                                  TimeWindow window) {
    std::set<std::int64_t> expected;
    for (const auto& s : trace.sent) {
        if (window.contains(s.t)) {
            expected.insert(s.seq);
        }
    }
    if (expected.empty()) {
        return std::nullopt;
    }
    std::set<std::int64_t> received;
    for (const auto& r : log) {
        if (r.origin == trace.node && window.contains(r.created_at) && expected.count(r.seq)) {
            received.insert(r.seq);
        }
    }
    return 100.0 * static_cast<double>(received.size()) / static_cast<double>(expected.size());
}

namespace {

/// Calls fn(record, overlap_ms) for each record's share of the window.
template <typename Fn>
void for_each_overlap(const RoutingHistory& history, TimeWindow window, Fn&& fn) {
    for (std::size_t i = 0; i < history.size(); ++i) {
        const Timestamp seg_start = std::max(history[i].t, window.start);
        const Timestamp seg_end =
            i + 1 < history.size() ? std::min(history[i + 1].t, window.end) : window.end;
        if (seg_end > seg_start) {
            fn(history[i], seg_end - seg_start);
        }
    }
}

}  // namespace

double compute_link_stability(const RoutingHistory& history, TimeWindow window,
                              int beacon_max_s) {
    if (window.length() <= 0) {
        throw DataError("link stability over an empty window");
    }
    Timestamp at_max = 0;
    for_each_overlap(history, window, [&](const RoutingRecord& r, Timestamp span) {
        if (r.beacon_interval_s == beacon_max_s) {
            at_max += span;
        }
    });
    return 100.0 * static_cast<double>(at_max) / static_cast<double>(window.length());
}

ParentShare most_common_parent(const RoutingHistory& history, TimeWindow window) {
    if (window.length() <= 0) {
        throw DataError("most common parent over an empty window");
    }
    std::map<NodeId, Timestamp> time_by_parent;
    for_each_overlap(history, window, [&](const RoutingRecord& r, Timestamp span) {
        if (r.parent != kNoParent) {
            time_by_parent[r.parent] += span;
        }
    });
    if (time_by_parent.empty()) {
        throw DataError("no parent records inside the window");
    }
    // std::map iterates ids ascending, so strict > keeps the lowest id on ties.
    ParentShare best;
    Timestamp best_time = -1;
    for (const auto& [parent, span] : time_by_parent) {
        if (span > best_time) {
            best = {parent, 0.0};
            best_time = span;
        }
    }
    best.percent = 100.0 * static_cast<double>(best_time) / static_cast<double>(window.length());
    return best;
}

CollectionNetwork::CollectionNetwork(ProtocolConfig config, std::uint64_t seed,
                                     std::map<NodeId, NodeState>& nodes)
    : config_(config), seed_(seed), nodes_(nodes) {
    config_.validate();
}

void CollectionNetwork::add_link(const LinkModel& model) {
    const auto key = std::make_pair(model.from, model.to);
    if (links_.count(key)) {
        throw ConfigError("duplicate link " + std::to_string(model.from) + "->" +
                          std::to_string(model.to));
    }
    Rng rng(seed_, {kLinkStreamTag, static_cast<std::uint64_t>(model.from),
                    static_cast<std::uint64_t>(model.to)});
    links_.emplace(key, LinkState(model, std::move(rng)));
}

void CollectionNetwork::set_link(const LinkModel& model) {
    auto it = links_.find({model.from, model.to});
    if (it == links_.end()) {
        add_link(model);
    } else {
        it->second.set_model(model);
    }
}

bool CollectionNetwork::has_link(NodeId from, NodeId to) const {
    return links_.count({from, to}) != 0;
}

LinkState& CollectionNetwork::link(NodeId from, NodeId to) {
    auto it = links_.find({from, to});
    if (it == links_.end()) {
        throw ConfigError("no link " + std::to_string(from) + "->" + std::to_string(to));
    }
    return it->second;
}

bool CollectionNetwork::participating(NodeId node) const {
    if (node == kSinkId) {
        return true;
    }
    auto r = routes_.find(node);
    if (r == routes_.end() || !r->second.joined) {
        return false;
    }
    auto n = nodes_.find(node);
    return n != nodes_.end() && n->second.alive();
}

std::vector<NodeId> CollectionNetwork::neighbors_of(NodeId node) const {
    std::vector<NodeId> out;
    for (auto it = links_.lower_bound({node, std::numeric_limits<NodeId>::min()});
         it != links_.end() && it->first.first == node; ++it) {
        out.push_back(it->first.second);
    }
    return out;
}

void CollectionNetwork::update_etx(NodeId node, NodeId neighbor, double sample) {
    auto& route = routes_[node];
    auto it = route.etx.find(neighbor);
    const double clamped = std::clamp(sample, 1.0, static_cast<double>(config_.max_retries));
    if (it == route.etx.end()) {
        route.etx.emplace(neighbor, clamped);
    } else {
        it->second = (1.0 - config_.ewma_alpha) * it->second + config_.ewma_alpha * clamped;
    }
}

double CollectionNetwork::link_etx(NodeId node, NodeId neighbor) const {
    auto r = routes_.find(node);
    if (r != routes_.end()) {
        auto e = r->second.etx.find(neighbor);
        if (e != r->second.etx.end()) {
            return e->second;
        }
    }
    auto l = links_.find({node, neighbor});
    if (l == links_.end()) {
        return kInfiniteEtx;
    }
    // Discovery estimate before any traffic has been observed.
    const double p = l->second.model().base_success;
    return p > 0.0 ? std::clamp(1.0 / p, 1.0, static_cast<double>(config_.max_retries))
                   : static_cast<double>(config_.max_retries);
}

double CollectionNetwork::path_etx(NodeId node) const {
    double total = 0.0;
    NodeId cur = node;
    for (std::size_t depth = 0; depth <= nodes_.size() + 1; ++depth) {
        if (cur == kSinkId) {
            return total;
        }
        if (!participating(cur)) {
            return kInfiniteEtx;
        }
        const NodeId p = routes_.at(cur).parent;
        if (p == kNoParent) {
            return kInfiniteEtx;
        }
        total += link_etx(cur, p);
        cur = p;
    }
    return kInfiniteEtx;
}

bool CollectionNetwork::ancestor_chain_contains(NodeId start, NodeId target) const {
    NodeId cur = start;
    for (std::size_t depth = 0; depth <= nodes_.size() + 1; ++depth) {
        if (cur == target) {
            return true;
        }
        if (cur == kSinkId) {
            return false;
        }
        auto r = routes_.find(cur);
        if (r == routes_.end() || r->second.parent == kNoParent) {
            return false;
        }
        cur = r->second.parent;
    }
    return true;
}

void CollectionNetwork::record(NodeId node, Timestamp t) {
    const auto& route = routes_.at(node);
    auto& h = history_[node];
    const RoutingRecord rec{t, route.parent, route.interval_s};
    if (!h.empty() && h.back().parent == rec.parent &&
        h.back().beacon_interval_s == rec.beacon_interval_s) {
        return;
    }
    if (!h.empty() && h.back().t == t) {
        h.back() = rec;
    } else {
        h.push_back(rec);
    }
}

void CollectionNetwork::set_parent(NodeId node, NodeId parent, Timestamp t) {
    auto& route = routes_.at(node);
    route.parent = parent;
    route.changed_since_beacon = true;
    route.interval_s = beacon_tick(route.interval_s, BeaconEvent::ParentChange, config_);
    route.next_beacon = t + route.interval_s * kSecondMs;
    ++route.generation;
    record(node, t);
}

Timestamp CollectionNetwork::join(NodeId node, Timestamp t) {
    auto& route = routes_[node];
    if (node == kSinkId) {
        // The root only beacons, so neighbors can keep estimating their
        // direct link to it while routing elsewhere.
        route.joined = true;
        route.parent = kNoParent;
        route.interval_s = config_.beacon_min_s;
        route.next_beacon = t + route.interval_s * kSecondMs;
        ++route.generation;
        return route.next_beacon;
    }
    route.joined = true;
    route.parent = kNoParent;
    route.interval_s = config_.beacon_min_s;
    route.next_beacon = t + route.interval_s * kSecondMs;
    ++route.generation;
    record(node, t);
    refresh_parent(node, t);
    return routes_.at(node).next_beacon;
}

void CollectionNetwork::advance_links() {
    for (auto& [key, link] : links_) {
        link.advance();
    }
}

bool CollectionNetwork::refresh_parent(NodeId node, Timestamp t) {
    if (!participating(node) || node == kSinkId) {
        return false;
    }
    std::vector<NeighborView> views;
    for (NodeId n : neighbors_of(node)) {
        if (!participating(n)) {
            continue;
        }
        NeighborView v;
        v.id = n;
        v.link_etx = link_etx(node, n);
        v.path_etx = path_etx(n);
        v.would_loop = n != kSinkId && ancestor_chain_contains(n, node);
        views.push_back(v);
    }
    const NodeId current = routes_.at(node).parent;
    const NodeId chosen = select_parent(current, views, config_.parent_switch_threshold)
                              .value_or(kNoParent);
    if (chosen != current) {
        set_parent(node, chosen, t);
        return true;
    }
    return false;
}

std::optional<Timestamp> CollectionNetwork::beacon(NodeId node, Timestamp t) {
    const bool root = node == kSinkId;
    if (root ? !routes_.count(kSinkId) : !participating(node)) {
        return std::nullopt;
    }
    // Neighbors that can hear this node update their beacon-window estimate.
    for (auto& [key, link] : links_) {
        const auto [listener, speaker] = key;
        if (speaker != node || listener == kSinkId || !participating(listener)) {
            continue;
        }
        auto& w = routes_.at(listener).beacon_window[node];
        ++w.expected;
        if (link.trial()) {
            ++w.received;
        }
        if (w.expected >= config_.estimator_window) {
            const double sample = w.received > 0
                                      ? static_cast<double>(w.expected) / w.received
                                      : static_cast<double>(config_.max_retries);
            w = {};
            update_etx(listener, node, sample);
            refresh_parent(listener, t);
        }
    }

    auto& route = routes_.at(node);
    if (root) {
        route.interval_s = beacon_tick(route.interval_s, BeaconEvent::Stable, config_);
        route.next_beacon = t + route.interval_s * kSecondMs;
        return route.next_beacon;
    }
    if (route.parent == kNoParent) {
        route.interval_s = config_.beacon_min_s;
    } else if (route.changed_since_beacon) {
        route.changed_since_beacon = false;
    } else {
        route.interval_s = beacon_tick(route.interval_s, BeaconEvent::Stable, config_);
    }
    route.next_beacon = t + route.interval_s * kSecondMs;
    record(node, t);
    return route.next_beacon;
}

std::optional<Timestamp> CollectionNetwork::next_beacon(NodeId node) const {
    if (node == kSinkId ? !routes_.count(kSinkId) : !participating(node)) {
        return std::nullopt;
    }
    return routes_.at(node).next_beacon;
}

std::uint64_t CollectionNetwork::beacon_generation(NodeId node) const {
    auto r = routes_.find(node);
    return r == routes_.end() ? 0 : r->second.generation;
}

NodeId CollectionNetwork::parent(NodeId node) const {
    auto r = routes_.find(node);
    return r == routes_.end() ? kNoParent : r->second.parent;
}

int CollectionNetwork::beacon_interval_s(NodeId node) const {
    auto r = routes_.find(node);
    return r == routes_.end() ? 0 : r->second.interval_s;
}

const RoutingHistory& CollectionNetwork::history(NodeId node) const {
    static const RoutingHistory empty;
    auto h = history_.find(node);
    return h == history_.end() ? empty : h->second;
}

bool CollectionNetwork::is_forest() const {
    for (const auto& [id, route] : routes_) {
        std::set<NodeId> seen{id};
        NodeId cur = route.parent;
        while (cur != kNoParent && cur != kSinkId) {
            if (!seen.insert(cur).second) {
                return false;
            }
            auto r = routes_.find(cur);
            if (r == routes_.end()) {
                break;
            }
            cur = r->second.parent;
        }
    }
    return true;
}

RadioStatus CollectionNetwork::status(NodeId node) const {
    RadioStatus s;
    auto r = routes_.find(node);
    if (r == routes_.end()) {
        return s;
    }
    s.parent = r->second.parent;
    s.beacon_interval_s = r->second.interval_s;
    if (s.parent != kNoParent) {
        auto l = links_.find({node, s.parent});
        if (l != links_.end()) {
            s.rssi_dbm = l->second.rssi_dbm();
        }
    }
    return s;
}

TxOutcome CollectionNetwork::send(NodeState& node, const StrainSample& sample, Timestamp t) {
    TxOutcome out;
    if (!participating(node.id()) || routes_.at(node.id()).parent == kNoParent) {
        return out;
    }
    Packet packet;
    packet.origin = node.id();
    packet.seq = sample.seq;
    packet.created_at = t;
    packet.hop_path = {node.id()};

    NodeId cur = node.id();
    for (std::size_t hop = 0; hop <= nodes_.size(); ++hop) {
        const NodeId next = routes_.at(cur).parent;
        if (next == kNoParent) {
            break;
        }
        NodeState& sender = nodes_.at(cur);
        const AttemptHook pay = [&] { return sender.try_debit(sender.send_cost(), t); };

        TxAttempt a;
        auto l = links_.find({cur, next});
        if (l != links_.end() && participating(next)) {
            a = attempt_transmission(l->second, packet, config_.max_retries, pay);
        } else {
            // Receiver gone or unreachable: every attempt goes unacknowledged.
            for (int i = 0; i < config_.max_retries && pay(); ++i) {
                ++a.attempts_used;
            }
            packet.attempts_used = a.attempts_used;
        }
        if (hop == 0) {
            out.attempted = true;
            out.attempts = a.attempts_used;
        }
        if (!sender.alive()) {
            break;
        }
        update_etx(cur, next,
                   a.delivered ? a.attempts_used : static_cast<double>(config_.max_retries));
        if (!a.delivered) {
            refresh_parent(cur, t);
            break;
        }
        packet.hop_path.push_back(next);
        if (next == kSinkId) {
            out.delivered = true;
            if (deliver_) {
                deliver_(packet, sample, t);
            }
            break;
        }
        NodeState& relay = nodes_.at(next);
        if (!relay.try_debit(relay.receive_cost(), t)) {
            break;
        }
        cur = next;
    }
    return out;
}

}  // namespace restructure
