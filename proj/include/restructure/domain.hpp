#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace restructure {

/// Milliseconds since the scenario epoch.
using Timestamp = std::int64_t;

/// Microstrain, compression positive.
using Microstrain = double;

/// Node identifier. The sink (gateway radio) is always id 0, which makes it
/// win every lowest-id tie-break.
using NodeId = int;

inline constexpr NodeId kSinkId = 0;
inline constexpr NodeId kNoParent = -1;

inline constexpr Timestamp kSecondMs = 1000;
inline constexpr Timestamp kMinuteMs = 60 * kSecondMs;
inline constexpr Timestamp kHourMs = 60 * kMinuteMs;
inline constexpr Timestamp kDayMs = 24 * kHourMs;
inline constexpr Timestamp kCyclePeriodMs = 5 * kMinuteMs;

inline constexpr int kPayloadBytes = 92;

inline constexpr double kStrainRangeUe = 2500.0;
inline constexpr int kAdcBits = 16;
/// Full-scale span divided into 2^16 codes.
inline constexpr double kAdcStepUe = 2.0 * kStrainRangeUe / static_cast<double>(1 << kAdcBits);

/// Error in scenario or model configuration (exit code 1 at the CLI).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Error in input data or runtime state (exit code 2 at the CLI).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Mid-tread uniform quantizer over [-2500, +2500] ue, round half away from
/// zero. Total and idempotent.
Microstrain quantize_strain(Microstrain raw) noexcept;

struct StrainSample {
    NodeId node_id = 0;
    Timestamp t = 0;
    Microstrain strain = 0.0;
    double temp_c = 0.0;
    double rh_pct = 0.0;
    std::int64_t seq = 0;
    int rssi_dbm = 0;
    int beacon_interval_s = 0;
    NodeId parent = kNoParent;
    int payload_bytes = kPayloadBytes;
};

struct Packet {
    NodeId origin = 0;
    std::int64_t seq = 0;
    Timestamp created_at = 0;
    std::vector<NodeId> hop_path;
    int attempts_used = 0;
};

struct BatteryModel {
    double capacity_wh = 0.0;
    double supply_voltage = 0.0;
    double derating = 1.0;

    /// Series/parallel pack of identical cells, energy = count * Ah * V.
    static BatteryModel cells(int count, double amp_hours, double cell_voltage,
                              double supply_voltage, double derating = 1.0);

    double usable_wh() const noexcept { return capacity_wh * derating; }
    double usable_joules() const noexcept { return usable_wh() * 3600.0; }
    void validate() const;
};

struct EnergyStep {
    std::string name;
    double duration_ms = 0.0;
    /// Current drawn above the idle floor.
    double current_ma = 0.0;
};

struct EnergyProfile {
    std::vector<EnergyStep> steps;
    double idle_current_ma = 0.0;
    Timestamp period_ms = kCyclePeriodMs;
    double supply_voltage = 3.0;

    const EnergyStep* find(const std::string& name) const noexcept;
    void validate() const;
};

namespace op {
inline constexpr const char* kWarmUpBridge = "warm_up_bridge";
inline constexpr const char* kStrainSample = "strain_sample";
inline constexpr const char* kTempRhSample = "temp_rh_sample";
inline constexpr const char* kFlashWrite = "flash_write";
inline constexpr const char* kSendMessage = "send_message";
inline constexpr const char* kIdle = "idle";
}  // namespace op

/// Sense-and-send micro-benchmark profile of a strain node (5 minute cycle).
EnergyProfile default_node_profile();

/// Two 7.8 Ah alkaline C cells in series at 1.5 V each.
BatteryModel default_node_battery(double derating = 1.0);

/// 12 V 100 Ah lead-acid.
BatteryModel default_gateway_battery(double derating = 1.0);

}  // namespace restructure
