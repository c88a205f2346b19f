#pragma once

#include "restructure/domain.hpp"
#include "restructure/site_model.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace restructure {

/// Energy is accounted in integer nanojoules so that conservation holds
/// exactly over any run.
using Nanojoules = std::int64_t;

Nanojoules to_nanojoules(double joules) noexcept;
double to_joules(Nanojoules nj) noexcept;

/// ms * mA * V = uJ.
Nanojoules step_cost(double duration_ms, double current_ma, double supply_voltage) noexcept;

struct NodeConfig {
    NodeId id = 1;
    WbfGauge gauge;
    BatteryModel battery = default_node_battery();
    EnergyProfile profile = default_node_profile();
    Timestamp installed_at = 0;
    /// Receiving a packet to relay costs this multiple of one send attempt;
    /// the relay then pays send_message per attempt like the origin does.
    /// Zero gives the best-case budget with free reception.
    double relay_receive_factor = 1.0;
};

struct RadioStatus {
    int rssi_dbm = 0;
    int beacon_interval_s = 0;
    NodeId parent = kNoParent;
};

struct TxOutcome {
    bool attempted = false;
    bool delivered = false;
    int attempts = 0;
};

struct CycleResult {
    std::optional<StrainSample> sample;
    Nanojoules energy_spent = 0;
    TxOutcome tx;
    bool died = false;
};

class Radio;

class NodeState {
public:
    explicit NodeState(NodeConfig config);

    NodeId id() const noexcept { return config_.id; }
    const NodeConfig& config() const noexcept { return config_; }
    bool alive() const noexcept { return alive_; }
    std::optional<Timestamp> died_at() const noexcept { return died_at_; }
    Timestamp installed_at() const noexcept { return config_.installed_at; }

    Nanojoules initial_energy() const noexcept { return initial_nj_; }
    Nanojoules remaining_energy() const noexcept { return remaining_nj_; }
    Nanojoules debited_energy() const noexcept { return debited_nj_; }

    const std::vector<StrainSample>& flash() const noexcept { return flash_; }
    const std::optional<BridgeZero>& bridge_zero() const noexcept { return zero_; }

    /// Debits `cost` if affordable. Otherwise the node dies at t and nothing
    /// is debited.
    bool try_debit(Nanojoules cost, Timestamp t);

    /// Cost of one send_message attempt.
    Nanojoules send_cost() const noexcept;
    /// Cost of receiving one packet to relay.
    Nanojoules receive_cost() const noexcept;

private:
    friend NodeState& balance_bridge(NodeState& node, const Site& site, Timestamp t);
    friend CycleResult run_sense_cycle(NodeState& node, Timestamp t, const Site& site,
                                       Radio& radio);

    NodeConfig config_;
    Nanojoules initial_nj_ = 0;
    Nanojoules remaining_nj_ = 0;
    Nanojoules debited_nj_ = 0;
    std::vector<StrainSample> flash_;
    std::optional<BridgeZero> zero_;
    bool alive_ = true;
    std::optional<Timestamp> died_at_;
    std::int64_t next_seq_ = 0;
};

/// Sets the bridge zero so an immediate reading is 0 (within half an ADC
/// step). Throws DataError on a dead or not-yet-installed node.
NodeState& balance_bridge(NodeState& node, const Site& site, Timestamp t);

/// Network side of the sense-and-send cycle. send() must call
/// node.try_debit(node.send_cost(), t) once per MAC attempt.
class Radio {
public:
    virtual ~Radio() = default;
    virtual RadioStatus status(NodeId node) const = 0;
    virtual TxOutcome send(NodeState& node, const StrainSample& sample, Timestamp t) = 0;
};

/// Radio switched off: nothing is sent, nothing is debited for sending.
class DisabledRadio final : public Radio {
public:
    RadioStatus status(NodeId) const override { return {}; }
    TxOutcome send(NodeState&, const StrainSample&, Timestamp) override { return {}; }
};

/// One sense-and-send cycle at t: warm up, sample strain and temp/RH, write
/// flash, hand to the radio, then pay the idle floor for the period. The
/// flash write happens regardless of the radio outcome. A dead node returns
/// an empty result and is not charged.
CycleResult run_sense_cycle(NodeState& node, Timestamp t, const Site& site, Radio& radio);

struct BreakdownRow {
    std::string operation;
    double duration_ms = 0.0;
    double current_ma = 0.0;
    double power_mw = 0.0;
    double percent = 0.0;
};

struct EnergyBreakdown {
    std::vector<BreakdownRow> rows;  // profile steps in order, then idle
    double total_mw = 0.0;

    const BreakdownRow& row(const std::string& operation) const;
};

EnergyBreakdown energy_breakdown(const EnergyProfile& profile);

/// Shares of total average power: sensing (bridge warm-up, strain, temp/RH),
/// storage (flash) and network (send plus idle listening).
struct EnergySplit {
    double sensing_pct = 0.0;
    double storage_pct = 0.0;
    double network_pct = 0.0;
};

EnergySplit energy_split(const EnergyBreakdown& breakdown);

/// Average power in watts with the send step scaled by avg_tx_attempts.
double average_power_w(const EnergyProfile& profile, double avg_tx_attempts = 1.0);

/// Days until the derated battery is exhausted.
double predict_node_lifetime(const EnergyProfile& profile, const BatteryModel& battery,
                             double avg_tx_attempts = 1.0);

/// CSV with header operation,duration_ms,current_ma. The idle row carries
/// the cycle period as its duration.
EnergyProfile read_energy_profile_csv(std::istream& in, double supply_voltage = 3.0);
void write_energy_profile_csv(std::ostream& out, const EnergyProfile& profile);

}  // namespace restructure
