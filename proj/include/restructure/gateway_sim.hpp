#pragma once

#include "restructure/domain.hpp"
#include "restructure/net_sim.hpp"

#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace restructure {

struct GatewayEnergyStep {
    std::string name;
    double duration_s = 0.0;
    double current_a = 0.0;
};

/// Hourly duty cycle of the gateway; durations must add up to one hour.
struct GatewayEnergyProfile {
    std::vector<GatewayEnergyStep> steps;
    double supply_voltage = 12.0;

    /// Ampere-seconds drawn per hour.
    double charge_per_hour_as() const noexcept;
    double average_power_w() const noexcept;
    void validate() const;
};

GatewayEnergyProfile default_gateway_profile();

/// Days of operation from a derated battery at the profile's hourly draw.
double predict_gateway_lifetime(const GatewayEnergyProfile& profile, const BatteryModel& battery);

struct GatewayConfig {
    /// Silence after which the sink radio is restarted.
    Timestamp watchdog_threshold_ms = 2 * kCyclePeriodMs;
    /// Packets arriving while the sink reboots are lost.
    Timestamp restart_gap_ms = 30 * kSecondMs;
    std::vector<TimeWindow> outages;
    BatteryModel battery = default_gateway_battery();
    GatewayEnergyProfile profile = default_gateway_profile();
};

/// An archived sample plus how it reached the gateway.
struct ArchivedSample {
    StrainSample sample;
    Timestamp arrival = 0;
    std::vector<NodeId> hop_path;
};

enum class IngestResult { Archived, Duplicate, LostOutage, LostSinkDown };

/// Gateway-side state: dedup, local archive, pending uplink batch, server
/// store, sink watchdog.
class GatewayState {
public:
    explicit GatewayState(GatewayConfig config = {});

    const GatewayConfig& config() const noexcept { return config_; }

    bool in_outage(Timestamp t) const noexcept;
    /// Sink able to hand packets to the gateway at t.
    bool sink_up(Timestamp t) const noexcept;

    const std::vector<ArchivedSample>& archive() const noexcept { return archive_; }
    const std::vector<ArchivedSample>& pending_uplink() const noexcept { return pending_; }
    const std::vector<ArchivedSample>& server() const noexcept { return server_; }
    int restarts() const noexcept { return restarts_; }
    int uplink_failures() const noexcept { return uplink_failures_; }
    Timestamp last_rx() const noexcept { return last_rx_; }

    /// Battery charge left. Drawn down one profile-hour per powered hourly
    /// tick; exhaustion is recorded, outages themselves are scheduled.
    double remaining_charge_as() const noexcept { return remaining_as_; }
    std::optional<Timestamp> battery_exhausted_at() const noexcept { return exhausted_at_; }

    /// Archive view in the shape network metrics expect.
    GatewayLog log() const;

    IngestResult ingest_packet(const Packet& packet, const StrainSample& sample, Timestamp t);

    /// On success the pending batch moves to the server store; on failure it
    /// rolls into the next hour. The archive is never touched.
    void hourly_uplink(Timestamp t, bool uplink_success);

    /// Restarts the sink if nothing arrived for the watchdog threshold.
    /// Returns true when a restart happened.
    bool watchdog_tick(Timestamp t);

    /// Sink stops passing packets until the watchdog restarts it.
    void hang_sink(Timestamp t);

    /// Fresh battery at full derated charge.
    void replace_battery(Timestamp t);

private:
    GatewayConfig config_;
    std::set<std::pair<NodeId, std::int64_t>> seen_;
    std::vector<ArchivedSample> archive_;
    std::vector<ArchivedSample> pending_;
    std::vector<ArchivedSample> server_;
    bool hung_ = false;
    Timestamp down_until_ = -1;
    Timestamp last_rx_ = 0;
    int restarts_ = 0;
    int uplink_failures_ = 0;
    double remaining_as_ = 0.0;
    std::optional<Timestamp> exhausted_at_;
};

}  // namespace restructure
