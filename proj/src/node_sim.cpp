#include "restructure/node_sim.hpp"

#include "restructure/csv.hpp"

#include <cmath>
#include <ostream>

namespace restructure {

Nanojoules to_nanojoules(double joules) noexcept {
    return static_cast<Nanojoules>(std::llround(joules * 1e9));
}

double to_joules(Nanojoules nj) noexcept { return static_cast<double>(nj) * 1e-9; }

Nanojoules step_cost(double duration_ms, double current_ma, double supply_voltage) noexcept {
    return static_cast<Nanojoules>(std::llround(duration_ms * current_ma * supply_voltage * 1000.0));
}

NodeState::NodeState(NodeConfig config) : config_(std::move(config)) {
    config_.battery.validate();
    config_.profile.validate();
    initial_nj_ = to_nanojoules(config_.battery.usable_joules());
    remaining_nj_ = initial_nj_;
}

bool NodeState::try_debit(Nanojoules cost, Timestamp t) {
    if (!alive_) {
        return false;
    }
    if (remaining_nj_ < cost) {
        alive_ = false;
        died_at_ = t;
        return false;
    }
    remaining_nj_ -= cost;
    debited_nj_ += cost;
    return true;
}

Nanojoules NodeState::send_cost() const noexcept {
    const auto* send = config_.profile.find(op::kSendMessage);
    if (send == nullptr) {
        return 0;
    }
    return step_cost(send->duration_ms, send->current_ma, config_.profile.supply_voltage);
}

Nanojoules NodeState::receive_cost() const noexcept {
    return static_cast<Nanojoules>(
        std::llround(static_cast<double>(send_cost()) * config_.relay_receive_factor));
}

NodeState& balance_bridge(NodeState& node, const Site& site, Timestamp t) {
    if (!node.alive()) {
        throw DataError("cannot balance the bridge of dead node " + std::to_string(node.id()));
    }
    if (t < node.installed_at()) {
        throw DataError("node " + std::to_string(node.id()) + " is not installed yet");
    }
    node.zero_ = BridgeZero{t, wbf_raw(site, node.config_.gauge, t)};
    return node;
}

CycleResult run_sense_cycle(NodeState& node, Timestamp t, const Site& site, Radio& radio) {
    CycleResult result;
    if (!node.alive_) {
        return result;
    }
    const auto& profile = node.config_.profile;
    if (t < node.installed_at() || (t - node.installed_at()) % profile.period_ms != 0) {
        throw DataError("sense cycle for node " + std::to_string(node.id()) +
                        " off the sampling grid at t=" + std::to_string(t));
    }
    const Nanojoules before = node.debited_nj_;
    auto finish = [&] {
        result.energy_spent = node.debited_nj_ - before;
        result.died = !node.alive_;
        return result;
    };

    for (const auto& step : profile.steps) {
        if (step.name == op::kSendMessage) {
            continue;
        }
        if (!node.try_debit(step_cost(step.duration_ms, step.current_ma, profile.supply_voltage),
                            t)) {
            return finish();
        }
    }

    const Ambient air = ambient_conditions(site.env, t);
    const RadioStatus rs = radio.status(node.id());
    StrainSample s;
    s.node_id = node.id();
    s.t = t;
    s.strain = wbf_reading(site, node.config_.gauge, node.zero_, t);
    s.temp_c = air.temp_c;
    s.rh_pct = air.rh_pct;
    s.seq = node.next_seq_++;
    s.rssi_dbm = rs.rssi_dbm;
    s.beacon_interval_s = rs.beacon_interval_s;
    s.parent = rs.parent;
    node.flash_.push_back(s);
    result.sample = s;

    result.tx = radio.send(node, s, t);
    if (!node.alive_) {
        return finish();
    }

    node.try_debit(step_cost(static_cast<double>(profile.period_ms), profile.idle_current_ma,
                             profile.supply_voltage),
                   t);
    return finish();
}

const BreakdownRow& EnergyBreakdown::row(const std::string& operation) const {
    for (const auto& r : rows) {
        if (r.operation == operation) {
            return r;
        }
    }
    throw ConfigError("no breakdown row for '" + operation + "'");
}

EnergyBreakdown energy_breakdown(const EnergyProfile& profile) {
    if (profile.period_ms <= 0) {
        throw ConfigError("energy breakdown needs a positive cycle period");
    }
    profile.validate();
    const double period = static_cast<double>(profile.period_ms);
    EnergyBreakdown b;
    for (const auto& s : profile.steps) {
        b.rows.push_back({s.name, s.duration_ms, s.current_ma,
                          s.duration_ms / period * s.current_ma * profile.supply_voltage, 0.0});
    }
    b.rows.push_back({op::kIdle, period, profile.idle_current_ma,
                      profile.idle_current_ma * profile.supply_voltage, 0.0});
    for (const auto& r : b.rows) {
        b.total_mw += r.power_mw;
    }
    if (b.total_mw > 0.0) {
        for (auto& r : b.rows) {
            r.percent = 100.0 * r.power_mw / b.total_mw;
        }
    }
    return b;
}

EnergySplit energy_split(const EnergyBreakdown& breakdown) {
    EnergySplit split;
    for (const auto& r : breakdown.rows) {
        if (r.operation == op::kWarmUpBridge || r.operation == op::kStrainSample ||
            r.operation == op::kTempRhSample) {
            split.sensing_pct += r.percent;
        } else if (r.operation == op::kFlashWrite) {
            split.storage_pct += r.percent;
        } else if (r.operation == op::kSendMessage || r.operation == op::kIdle) {
            split.network_pct += r.percent;
        }
    }
    return split;
}

double average_power_w(const EnergyProfile& profile, double avg_tx_attempts) {
    const auto b = energy_breakdown(profile);
    double mw = b.total_mw;
    if (const auto* send = profile.find(op::kSendMessage)) {
        mw += (avg_tx_attempts - 1.0) * b.row(send->name).power_mw;
    }
    return mw * 1e-3;
}

double predict_node_lifetime(const EnergyProfile& profile, const BatteryModel& battery,
                             double avg_tx_attempts) {
    battery.validate();
    if (!(avg_tx_attempts >= 1.0)) {
        throw ConfigError("average transmission attempts must be >= 1");
    }
    const double watts = average_power_w(profile, avg_tx_attempts);
    if (!(watts > 0.0)) {
        throw ConfigError("profile has zero average power; lifetime is unbounded");
    }
    return battery.usable_wh() / watts / 24.0;
}

EnergyProfile read_energy_profile_csv(std::istream& in, double supply_voltage) {
    const auto table = csv::Table::read(in, "energy profile");
    const auto c_op = table.column("operation");
    const auto c_dur = table.column("duration_ms");
    const auto c_cur = table.column("current_ma");
    EnergyProfile p;
    p.supply_voltage = supply_voltage;
    bool has_idle = false;
    for (std::size_t r = 0; r < table.rows(); ++r) {
        const auto& name = table.cell(r, c_op);
        const double dur = table.number(r, c_dur);
        const double cur = table.number(r, c_cur);
        if (name == op::kIdle) {
            if (has_idle) {
                throw ConfigError("energy profile: duplicate idle row");
            }
            has_idle = true;
            p.idle_current_ma = cur;
            p.period_ms = static_cast<Timestamp>(std::llround(dur));
        } else {
            p.steps.push_back({name, dur, cur});
        }
    }
    if (!has_idle) {
        throw ConfigError("energy profile: missing idle row (duration_ms = cycle period)");
    }
    p.validate();
    return p;
}

void write_energy_profile_csv(std::ostream& out, const EnergyProfile& profile) {
    out << "operation,duration_ms,current_ma\n";
    for (const auto& s : profile.steps) {
        out << s.name << ',' << s.duration_ms << ',' << s.current_ma << '\n';
    }
    out << op::kIdle << ',' << profile.period_ms << ',' << profile.idle_current_ma << '\n';
}

}  // namespace restructure
