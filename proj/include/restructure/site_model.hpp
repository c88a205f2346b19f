#pragma once

#include "restructure/domain.hpp"
#include "restructure/rng.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace restructure {

struct EnvironmentModel {
    double t_mean_c = 28.0;
    double t_amplitude_c = 12.0;
    /// Seconds after epoch-midnight at which the daily maximum occurs.
    double t_peak_time_s = 14.0 * 3600.0;
    double rh_mean_pct = 70.0;
    double rh_amplitude_pct = 30.0;
    double noise_sd_c = 0.0;
    std::uint64_t noise_seed = 0;

    void validate() const;
};

struct Ambient {
    double temp_c = 0.0;
    double rh_pct = 0.0;
};

enum class TempTrend { Rising, Falling };

/// Temperature and humidity at t. RH runs anti-phase with temperature and is
/// clipped to [0, 100]. Noise is keyed on (noise_seed, t), so repeated calls
/// agree and every instrument sees the same air.
Ambient ambient_conditions(const EnvironmentModel& env, Timestamp t);

/// Noise-free diurnal temperature component.
double diurnal_temperature(const EnvironmentModel& env, Timestamp t);

/// Sign of the centered difference of the diurnal component over one sample
/// interval; ties count as falling.
TempTrend temperature_trend(const EnvironmentModel& env, Timestamp t,
                            Timestamp interval = kCyclePeriodMs);

enum class ConstructionKind { InstallStrut, Preload, ExcavationStage };

struct ConstructionEvent {
    Timestamp t = 0;
    ConstructionKind kind = ConstructionKind::InstallStrut;
    std::string strut_id;
    /// Axial load change, newtons, compression positive.
    double load_delta_n = 0.0;
};

class ConstructionSchedule {
public:
    ConstructionSchedule() = default;
    /// Sorts stably by time and checks ordering rules.
    explicit ConstructionSchedule(std::vector<ConstructionEvent> events);

    const std::vector<ConstructionEvent>& events() const noexcept { return events_; }

    /// Sum of load deltas with event time <= t.
    double load_n(const std::string& strut_id, Timestamp t) const;
    std::optional<Timestamp> installed_at(const std::string& strut_id) const;
    std::optional<Timestamp> preload_at(const std::string& strut_id) const;
    /// Time of the first event carrying a load on this strut.
    std::optional<Timestamp> first_load_at(const std::string& strut_id) const;

private:
    std::vector<ConstructionEvent> events_;
};

struct StrutSpec {
    std::string strut_id;
    double elastic_modulus_pa = 200e9;
    double area_m2 = 0.02;
    /// Real thermal loading of the restrained strut, ue per degree C.
    double thermal_coeff_ue_per_c = 0.0;
    double ref_temp_c = 27.0;

    double axial_stiffness_n() const noexcept { return elastic_modulus_pa * area_m2; }
    void validate() const;
};

/// Gauge-only apparent strain: a1*dT + a2*dT^2 about ref_temp, plus a
/// hysteresis offset while temperature is rising.
struct ApparentStrainModel {
    double a1_ue_per_c = 0.0;
    double a2_ue_per_c2 = 0.0;
    double hysteresis_ue = 0.0;
    double ref_temp_c = 27.0;

    Microstrain evaluate(double temp_c, TempTrend trend) const noexcept;
};

struct VWNoiseModel {
    double base_sd_ue = 0.0;
    double spike_probability = 0.0;
    /// Mean magnitude of the negative exponential spike.
    double spike_scale_ue = 0.0;

    void validate() const;
};

/// Gauge debond fault. Not a measured mechanism: after `start` the foil only
/// couples a fraction of further strut strain and wanders slowly.
struct DebondFault {
    Timestamp start = 0;
    double coupling = 0.05;
    double wander_amplitude_ue = 60.0;
    double wander_period_days = 17.0;
};

struct WbfGauge {
    std::string strut_id;
    ApparentStrainModel apparent;
    std::optional<DebondFault> debond;
};

struct BridgeZero {
    Timestamp at = 0;
    Microstrain offset = 0.0;
};

/// Everything needed to evaluate ground truth at a time.
struct Site {
    EnvironmentModel env;
    ConstructionSchedule schedule;
    std::map<std::string, StrutSpec> struts;

    const StrutSpec& strut(const std::string& id) const;
};

/// Mechanical strain from scheduled loads only (no thermal term).
Microstrain mechanical_strain(const ConstructionSchedule& schedule, const StrutSpec& spec,
                              Timestamp t);

/// Load/(E A) plus thermal loading once the strut is jacked. Zero before any
/// load event.
Microstrain true_strut_strain(const ConstructionSchedule& schedule, const StrutSpec& spec,
                              const EnvironmentModel& env, Timestamp t);
Microstrain true_strut_strain(const Site& site, const std::string& strut_id, Timestamp t);

/// Unbalanced, unquantized bridge output: what the foil sees.
Microstrain wbf_raw(const Site& site, const WbfGauge& gauge, Timestamp t);

/// quantize(raw(t) - zero.offset). Throws DataError when the bridge has not
/// been balanced or t precedes the balancing.
Microstrain wbf_reading(const Site& site, const WbfGauge& gauge,
                        const std::optional<BridgeZero>& zero, Timestamp t);

/// Mechanical strain relative to the value right after the strut's preload,
/// plus Gaussian noise and occasional negative spikes.
Microstrain vw_reading(const ConstructionSchedule& schedule, const StrutSpec& spec, Timestamp t,
                       const VWNoiseModel& noise, Rng& rng);

/// Axial load in newtons, thermal loading included.
double loadcell_reading(const ConstructionSchedule& schedule, const StrutSpec& spec,
                        const EnvironmentModel& env, Timestamp t);

}  // namespace restructure
