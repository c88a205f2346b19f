#include "restructure/domain.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace restructure {

Microstrain quantize_strain(Microstrain raw) noexcept {
    if (std::isnan(raw)) {
        return 0.0;
    }
    const double clipped = std::clamp(raw, -kStrainRangeUe, kStrainRangeUe);
    // std::round is half-away-from-zero; the step is an exact binary fraction
    // so code * step is exact and the map is idempotent.
    const double code = std::round(clipped / kAdcStepUe);
    return code * kAdcStepUe;
}

BatteryModel BatteryModel::cells(int count, double amp_hours, double cell_voltage,
                                 double supply_voltage, double derating) {
    BatteryModel b;
    b.capacity_wh = count * amp_hours * cell_voltage;
    b.supply_voltage = supply_voltage;
    b.derating = derating;
    return b;
}

void BatteryModel::validate() const {
    if (!(capacity_wh > 0.0)) {
        throw ConfigError("battery capacity_wh must be > 0");
    }
    if (!(supply_voltage > 0.0)) {
        throw ConfigError("battery supply_voltage must be > 0");
    }
    if (!(derating > 0.0 && derating <= 1.0)) {
        throw ConfigError("battery derating must lie in (0, 1]");
    }
}

const EnergyStep* EnergyProfile::find(const std::string& name) const noexcept {
    auto it = std::find_if(steps.begin(), steps.end(),
                           [&](const EnergyStep& s) { return s.name == name; });
    return it == steps.end() ? nullptr : &*it;
}

void EnergyProfile::validate() const {
    std::set<std::string> seen;
    for (const auto& s : steps) {
        if (s.name.empty()) {
            throw ConfigError("energy profile step with empty name");
        }
        if (s.name == op::kIdle) {
            throw ConfigError("idle is not a step; set idle_current_ma instead");
        }
        if (!seen.insert(s.name).second) {
            throw ConfigError("duplicate energy profile step '" + s.name + "'");
        }
        if (!(s.duration_ms >= 0.0) || !(s.current_ma >= 0.0)) {
            throw ConfigError("energy profile step '" + s.name +
                              "' has negative duration or current");
        }
    }
    if (!(idle_current_ma >= 0.0)) {
        throw ConfigError("idle current must be >= 0");
    }
    if (period_ms <= 0) {
        throw ConfigError("energy profile period must be > 0");
    }
    if (!(supply_voltage > 0.0)) {
        throw ConfigError("energy profile supply voltage must be > 0");
    }
}

EnergyProfile default_node_profile() {
    // Table currents are measured totals minus the 1 mA idle floor.
    EnergyProfile p;
    p.steps = {
        {op::kWarmUpBridge, 5000.0, 33.6 - 1.0},
        {op::kStrainSample, 105.0, 33.6 - 1.0},
        {op::kTempRhSample, 315.0, 33.6 - 1.0},
        {op::kFlashWrite, 8.0, 6.7 - 1.0},
        {op::kSendMessage, 30.0, 17.9 - 1.0},
    };
    p.idle_current_ma = 1.0;
    p.period_ms = kCyclePeriodMs;
    p.supply_voltage = 3.0;
    return p;
}

BatteryModel default_node_battery(double derating) {
    return BatteryModel::cells(2, 7.8, 1.5, 3.0, derating);
}

BatteryModel default_gateway_battery(double derating) {
    return BatteryModel::cells(1, 100.0, 12.0, 12.0, derating);
}

}  // namespace restructure
