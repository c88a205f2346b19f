#include "restructure/simulator.hpp"

#include <queue>
#include <tuple>

namespace restructure {

namespace {

constexpr std::uint64_t kUplinkStreamTag = 0x55504c4bu;  // "UPLK"
constexpr std::uint64_t kVwStreamTag = 0x56574e5au;      // "VWNZ"

// Same-time ordering; lower runs first.
enum class Kind : int {
    Change = 0,
    Install,
    Channel,
    Watchdog,
    Cycle,
    Beacon,
    Uplink,
    Reference,
    Snapshot,
};

struct Ev {
    Timestamp t = 0;
    Kind kind = Kind::Change;
    NodeId node = kNoParent;
    std::int64_t aux = 0;

    bool operator>(const Ev& o) const {
        return std::tie(t, kind, node, aux) > std::tie(o.t, o.kind, o.node, o.aux);
    }
};

enum class ChangeKind { Link, SinkHang, OutageStart, OutageEnd, BatterySwap };

struct Change {
    ChangeKind kind;
    std::size_t index = 0;
};

}  // namespace

SimulationResult simulate(const Scenario& sc) {
    SimulationResult out;
    out.end = sc.duration_ms;
    out.gateway = GatewayState(sc.gateway);
    const Timestamp end = sc.duration_ms;
    const Timestamp period = sc.profile.period_ms;

    for (const auto& p : sc.nodes) {
        NodeConfig cfg;
        cfg.id = p.id;
        cfg.gauge = WbfGauge{p.strut_id, p.apparent, p.debond};
        cfg.battery = p.battery;
        cfg.profile = sc.profile;
        cfg.installed_at = p.installed_at;
        cfg.relay_receive_factor = p.relay_receive_factor;
        out.nodes.emplace(p.id, NodeState(cfg));
        out.tx[p.id] = {};
    }

    CollectionNetwork net(sc.protocol, sc.seed, out.nodes);
    for (const auto& l : sc.links) {
        net.add_link(l);
    }
    net.on_deliver([&](const Packet& packet, const StrainSample& sample, Timestamp t) {
        const auto r = out.gateway.ingest_packet(packet, sample, t);
        out.deliveries.push_back({packet.origin, packet.seq, packet.created_at, t,
                                  static_cast<int>(packet.hop_path.size()) - 1, r});
    });

    std::priority_queue<Ev, std::vector<Ev>, std::greater<>> queue;
    auto push = [&](Timestamp t, Kind k, NodeId node = kNoParent, std::int64_t aux = 0) {
        if (t >= 0 && t < end) {
            queue.push({t, k, node, aux});
        }
    };

    std::vector<Change> changes;
    auto add_change = [&](Timestamp t, ChangeKind k, std::size_t index) {
        changes.push_back({k, index});
        push(t, Kind::Change, kNoParent, static_cast<std::int64_t>(changes.size() - 1));
    };
    for (std::size_t i = 0; i < sc.link_changes.size(); ++i) {
        add_change(sc.link_changes[i].t, ChangeKind::Link, i);
    }
    for (std::size_t i = 0; i < sc.sink_hangs.size(); ++i) {
        add_change(sc.sink_hangs[i], ChangeKind::SinkHang, i);
    }
    for (std::size_t i = 0; i < sc.gateway.outages.size(); ++i) {
        add_change(sc.gateway.outages[i].start, ChangeKind::OutageStart, i);
        add_change(sc.gateway.outages[i].end, ChangeKind::OutageEnd, i);
    }
    if (sc.gateway_battery_swap_ms > 0) {
        for (Timestamp t = sc.gateway_battery_swap_ms; t < end; t += sc.gateway_battery_swap_ms) {
            add_change(t, ChangeKind::BatterySwap, 0);
        }
    }
    for (const auto& p : sc.nodes) {
        push(p.installed_at, Kind::Install, p.id);
    }
    if (!sc.nodes.empty() && end > 0) {
        net.join(kSinkId, 0);
    }
    push(0, Kind::Channel);
    // Off the sampling grid, so a restart never coincides with a send.
    push(30 * kSecondMs, Kind::Watchdog);
    push(kHourMs, Kind::Uplink);
    push(0, Kind::Reference);
    push(0, Kind::Snapshot);

    Rng uplink_rng(sc.seed, {kUplinkStreamTag});
    std::map<std::string, Rng> vw_rng;
    {
        std::uint64_t index = 0;
        for (const auto& [strut, inst] : sc.instruments) {
            vw_rng.emplace(strut, Rng(sc.seed, {kVwStreamTag, index++}));
        }
    }

    std::map<NodeId, Timestamp> queued_beacon;
    std::map<NodeId, bool> death_logged;
    bool exhaustion_logged = false;

    auto snapshot = [&](Timestamp t) {
        for (const auto& [id, node] : out.nodes) {
            if (node.installed_at() <= t) {
                out.energy.push_back({id, t, node.remaining_energy(), node.debited_energy()});
            }
        }
    };

    while (!queue.empty()) {
        const Ev ev = queue.top();
        queue.pop();
        const Timestamp t = ev.t;
        switch (ev.kind) {
            case Kind::Change: {
                const auto& c = changes[static_cast<std::size_t>(ev.aux)];
                switch (c.kind) {
                    case ChangeKind::Link: {
                        const auto& m = sc.link_changes[c.index].model;
                        if (net.has_link(m.from, m.to)) {
                            net.set_link(m);
                        } else {
                            net.add_link(m);
                        }
                        out.events.push_back({t, "link_change", m.from,
                                              "to=" + (m.to == kSinkId ? std::string("sink")
                                                                       : std::to_string(m.to))});
                        break;
                    }
                    case ChangeKind::SinkHang:
                        out.gateway.hang_sink(t);
                        out.events.push_back({t, "sink_hang", kSinkId, ""});
                        break;
                    case ChangeKind::OutageStart:
                        out.events.push_back({t, "outage_start", kNoParent, ""});
                        break;
                    case ChangeKind::OutageEnd:
                        out.events.push_back({t, "outage_end", kNoParent, ""});
                        break;
                    case ChangeKind::BatterySwap:
                        out.gateway.replace_battery(t);
                        exhaustion_logged = false;
                        out.events.push_back({t, "gateway_battery_swap", kNoParent, ""});
                        break;
                }
                break;
            }
            case Kind::Install: {
                auto& node = out.nodes.at(ev.node);
                balance_bridge(node, sc.site, t);
                net.join(ev.node, t);
                out.events.push_back({t, "install", ev.node, ""});
                push(t, Kind::Cycle, ev.node);
                break;
            }
            case Kind::Channel:
                net.advance_links();
                push(t + period, Kind::Channel);
                break;
            case Kind::Watchdog:
                if (out.gateway.watchdog_tick(t)) {
                    out.events.push_back({t, "sink_restart", kSinkId, ""});
                }
                push(t + kMinuteMs, Kind::Watchdog);
                break;
            case Kind::Cycle: {
                auto& node = out.nodes.at(ev.node);
                if (!node.alive()) {
                    break;
                }
                net.refresh_parent(ev.node, t);
                const auto r = run_sense_cycle(node, t, sc.site, net);
                auto& stats = out.tx[ev.node];
                if (r.sample) {
                    ++stats.cycles;
                }
                if (r.tx.attempted) {
                    ++stats.transmissions;
                    stats.attempts += r.tx.attempts;
                }
                if (node.alive()) {
                    push(t + period, Kind::Cycle, ev.node);
                }
                break;
            }
            case Kind::Beacon: {
                const auto due = net.next_beacon(ev.node);
                if (due && *due == t) {
                    net.beacon(ev.node, t);
                }
                break;
            }
            case Kind::Uplink: {
                bool ok = uplink_rng.bernoulli(sc.uplink.success_probability);
                for (const auto& w : sc.uplink.failures) {
                    ok = ok && !w.contains(t);
                }
                const bool powered = !out.gateway.in_outage(t);
                out.gateway.hourly_uplink(t, ok);
                if (powered && !ok) {
                    out.events.push_back({t, "uplink_failed", kNoParent,
                                          "pending=" + std::to_string(
                                                           out.gateway.pending_uplink().size())});
                }
                if (out.gateway.battery_exhausted_at() && !exhaustion_logged) {
                    exhaustion_logged = true;
                    out.events.push_back({t, "gateway_battery_exhausted", kNoParent, ""});
                }
                push(t + kHourMs, Kind::Uplink);
                break;
            }
            case Kind::Reference: {
                for (const auto& [strut, inst] : sc.instruments) {
                    const auto& spec = sc.site.strut(strut);
                    const auto& schedule = sc.site.schedule;
                    if (inst.vw) {
                        const auto zero = schedule.preload_at(strut);
                        if (zero && t >= *zero) {
                            out.reference.push_back(
                                {strut, "vw", t,
                                 vw_reading(schedule, spec, t, *inst.vw, vw_rng.at(strut))});
                        }
                    }
                    if (inst.load_cell) {
                        const auto installed = schedule.installed_at(strut);
                        if (installed && t >= *installed) {
                            out.reference.push_back(
                                {strut, "load_cell", t,
                                 loadcell_reading(schedule, spec, sc.site.env, t)});
                        }
                    }
                }
                push(t + sc.reference_period_ms, Kind::Reference);
                break;
            }
            case Kind::Snapshot:
                snapshot(t);
                push(t + kDayMs, Kind::Snapshot);
                break;
        }

        auto queue_beacon = [&](NodeId id) {
            if (const auto due = net.next_beacon(id)) {
                auto q = queued_beacon.find(id);
                if (q == queued_beacon.end() || q->second != *due) {
                    queued_beacon[id] = *due;
                    push(*due, Kind::Beacon, id);
                }
            }
        };
        queue_beacon(kSinkId);
        for (const auto& [id, node] : out.nodes) {
            if (!node.alive() && !death_logged[id]) {
                death_logged[id] = true;
                out.events.push_back({*node.died_at(), "node_died", id, ""});
            }
            if (node.alive()) {
                queue_beacon(id);
            }
        }
    }

    if (end > 0) {
        snapshot(end);
    }
    out.routing = net.histories();
    return out;
}

}  // namespace restructure
