#include "restructure/gateway_sim.hpp"

#include <algorithm>
#include <cmath>

namespace restructure {

double GatewayEnergyProfile::charge_per_hour_as() const noexcept {
    double as = 0.0;
    for (const auto& s : steps) {
        as += s.duration_s * s.current_a;
    }
    return as;
}

double GatewayEnergyProfile::average_power_w() const noexcept {
    return charge_per_hour_as() / 3600.0 * supply_voltage;
}

void GatewayEnergyProfile::validate() const {
    double total = 0.0;
    for (const auto& s : steps) {
        if (!(s.duration_s >= 0.0) || !(s.current_a >= 0.0)) {
            throw ConfigError("gateway profile step '" + s.name +
                              "' has negative duration or current");
        }
        total += s.duration_s;
    }
    if (std::abs(total - 3600.0) > 1e-9) {
        throw ConfigError("gateway profile durations must sum to 3600 s");
    }
    if (!(supply_voltage > 0.0)) {
        throw ConfigError("gateway supply voltage must be > 0");
    }
}

GatewayEnergyProfile default_gateway_profile() {
    GatewayEnergyProfile p;
    p.steps = {
        {"uplink_3g", 60.0, 0.27},
        {"plotting", 60.0, 0.13},
        {"processing", 3480.0, 0.126},
    };
    p.supply_voltage = 12.0;
    return p;
}

double predict_gateway_lifetime(const GatewayEnergyProfile& profile, const BatteryModel& battery) {
    profile.validate();
    battery.validate();
    const double per_hour = profile.charge_per_hour_as();
    if (!(per_hour > 0.0)) {
        throw ConfigError("gateway profile draws no charge; lifetime is unbounded");
    }
    const double capacity_as = battery.capacity_wh / battery.supply_voltage * 3600.0;
    return capacity_as * battery.derating / per_hour / 24.0;
}

GatewayState::GatewayState(GatewayConfig config) : config_(std::move(config)) {
    if (config_.watchdog_threshold_ms <= 0 || config_.restart_gap_ms < 0) {
        throw ConfigError("gateway watchdog threshold must be > 0 and restart gap >= 0");
    }
    std::sort(config_.outages.begin(), config_.outages.end(),
              [](const auto& a, const auto& b) { return a.start < b.start; });
    for (std::size_t i = 0; i < config_.outages.size(); ++i) {
        if (config_.outages[i].end <= config_.outages[i].start) {
            throw ConfigError("gateway outage with end <= start");
        }
        if (i > 0 && config_.outages[i].start < config_.outages[i - 1].end) {
            throw ConfigError("gateway outages overlap");
        }
    }
    config_.battery.validate();
    config_.profile.validate();
    replace_battery(0);
}

bool GatewayState::in_outage(Timestamp t) const noexcept {
    return std::any_of(config_.outages.begin(), config_.outages.end(),
                       [t](const TimeWindow& w) { return w.contains(t); });
}

bool GatewayState::sink_up(Timestamp t) const noexcept {
    return !in_outage(t) && !hung_ && t >= down_until_;
}

GatewayLog GatewayState::log() const {
    GatewayLog out;
    out.reserve(archive_.size());
    for (const auto& a : archive_) {
        out.push_back({a.sample.node_id, a.sample.seq, a.sample.t, a.arrival, a.hop_path});
    }
    return out;
}

IngestResult GatewayState::ingest_packet(const Packet& packet, const StrainSample& sample,
                                         Timestamp t) {
    if (in_outage(t)) {
        return IngestResult::LostOutage;
    }
    if (!sink_up(t)) {
        return IngestResult::LostSinkDown;
    }
    last_rx_ = t;
    if (!seen_.emplace(packet.origin, packet.seq).second) {
        return IngestResult::Duplicate;
    }
    ArchivedSample a{sample, t, packet.hop_path};
    archive_.push_back(a);
    pending_.push_back(std::move(a));
    return IngestResult::Archived;
}

void GatewayState::hourly_uplink(Timestamp t, bool uplink_success) {
    if (in_outage(t)) {
        return;
    }
    remaining_as_ -= config_.profile.charge_per_hour_as();
    if (remaining_as_ <= 0.0) {
        remaining_as_ = 0.0;
        if (!exhausted_at_) {
            exhausted_at_ = t;
        }
    }
    if (!uplink_success) {
        ++uplink_failures_;
        return;
    }
    server_.insert(server_.end(), std::make_move_iterator(pending_.begin()),
                   std::make_move_iterator(pending_.end()));
    pending_.clear();
}

bool GatewayState::watchdog_tick(Timestamp t) {
    if (in_outage(t)) {
        // Nothing runs; restart the silence clock when power returns.
        last_rx_ = t;
        return false;
    }
    if (t < down_until_ || t - last_rx_ < config_.watchdog_threshold_ms) {
        return false;
    }
    hung_ = false;
    down_until_ = t + config_.restart_gap_ms;
    last_rx_ = t;
    ++restarts_;
    return true;
}

void GatewayState::hang_sink(Timestamp) { hung_ = true; }

void GatewayState::replace_battery(Timestamp) {
    remaining_as_ =
        config_.battery.capacity_wh / config_.battery.supply_voltage * 3600.0 * config_.battery.derating;
}

}  // namespace restructure
