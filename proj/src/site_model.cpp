#include "restructure/site_model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

namespace restructure {

namespace {

double diurnal_phase(const EnvironmentModel& env, Timestamp t) {
    const double t_s = static_cast<double>(t) / 1000.0;
    constexpr double day_s = 86400.0;
    return 2.0 * std::numbers::pi * (t_s - env.t_peak_time_s + 0.25 * day_s) / day_s;
}

}  // namespace

void EnvironmentModel::validate() const {
    if (!(t_amplitude_c >= 0.0)) {
        throw ConfigError("environment.t_amplitude_c must be >= 0");
    }
    if (!(rh_amplitude_pct >= 0.0)) {
        throw ConfigError("environment.rh_amplitude_pct must be >= 0");
    }
    if (!(noise_sd_c >= 0.0)) {
        throw ConfigError("environment.noise_sd_c must be >= 0");
    }
}

double diurnal_temperature(const EnvironmentModel& env, Timestamp t) {
    return env.t_mean_c + env.t_amplitude_c * std::sin(diurnal_phase(env, t));
}

Ambient ambient_conditions(const EnvironmentModel& env, Timestamp t) {
    const double s = std::sin(diurnal_phase(env, t));
    Ambient a;
    a.temp_c = env.t_mean_c + env.t_amplitude_c * s;
    if (env.noise_sd_c > 0.0) {
        a.temp_c += env.noise_sd_c * keyed_normal(env.noise_seed, static_cast<std::uint64_t>(t));
    }
    a.rh_pct = std::clamp(env.rh_mean_pct - env.rh_amplitude_pct * s, 0.0, 100.0);
    return a;
}

TempTrend temperature_trend(const EnvironmentModel& env, Timestamp t, Timestamp interval) {
    const double ahead = diurnal_temperature(env, t + interval / 2);
    const double behind = diurnal_temperature(env, t - interval / 2);
    return ahead - behind > 0.0 ? TempTrend::Rising : TempTrend::Falling;
}

ConstructionSchedule::ConstructionSchedule(std::vector<ConstructionEvent> events)
    : events_(std::move(events)) {
    std::stable_sort(events_.begin(), events_.end(),
                     [](const auto& a, const auto& b) { return a.t < b.t; });
    std::map<std::string, Timestamp> installs;
    for (const auto& e : events_) {
        if (e.kind == ConstructionKind::InstallStrut) {
            if (!installs.emplace(e.strut_id, e.t).second) {
                throw ConfigError("strut '" + e.strut_id + "' installed twice");
            }
        } else if (e.kind == ConstructionKind::Preload) {
            auto it = installs.find(e.strut_id);
            if (it == installs.end()) {
                throw ConfigError("preload of strut '" + e.strut_id + "' before its install");
            }
        }
    }
}

double ConstructionSchedule::load_n(const std::string& strut_id, Timestamp t) const {
    double load = 0.0;
    for (const auto& e : events_) {
        if (e.t > t) {
            break;
        }
        if (e.strut_id == strut_id) {
            load += e.load_delta_n;
        }
    }
    return load;
}

std::optional<Timestamp> ConstructionSchedule::installed_at(const std::string& strut_id) const {
    for (const auto& e : events_) {
        if (e.strut_id == strut_id && e.kind == ConstructionKind::InstallStrut) {
            return e.t;
        }
    }
    return std::nullopt;
}

std::optional<Timestamp> ConstructionSchedule::preload_at(const std::string& strut_id) const {
    for (const auto& e : events_) {
        if (e.strut_id == strut_id && e.kind == ConstructionKind::Preload) {
            return e.t;
        }
    }
    return std::nullopt;
}

std::optional<Timestamp> ConstructionSchedule::first_load_at(const std::string& strut_id) const {
    for (const auto& e : events_) {
        if (e.strut_id == strut_id && e.load_delta_n != 0.0) {
            return e.t;
        }
    }
    return std::nullopt;
}

void StrutSpec::validate() const {
    if (!(elastic_modulus_pa > 0.0) || !(area_m2 > 0.0)) {
        throw ConfigError("strut '" + strut_id + "' needs E > 0 and A > 0");
    }
}

Microstrain ApparentStrainModel::evaluate(double temp_c, TempTrend trend) const noexcept {
    const double dt = temp_c - ref_temp_c;
    double v = a1_ue_per_c * dt + a2_ue_per_c2 * dt * dt;
    if (trend == TempTrend::Rising) {
        v += hysteresis_ue;
    }
    return v;
}

void VWNoiseModel::validate() const {
    if (!(base_sd_ue >= 0.0) || !(spike_scale_ue >= 0.0)) {
        throw ConfigError("VW noise sd and spike scale must be >= 0");
    }
    if (!(spike_probability >= 0.0 && spike_probability <= 1.0)) {
        throw ConfigError("VW spike probability must lie in [0, 1]");
    }
}

const StrutSpec& Site::strut(const std::string& id) const {
    auto it = struts.find(id);
    if (it == struts.end()) {
        throw ConfigError("unknown strut_id '" + id + "'");
    }
    return it->second;
}

Microstrain mechanical_strain(const ConstructionSchedule& schedule, const StrutSpec& spec,
                              Timestamp t) {
    return schedule.load_n(spec.strut_id, t) / spec.axial_stiffness_n() * 1e6;
}

Microstrain true_strut_strain(const ConstructionSchedule& schedule, const StrutSpec& spec,
                              const EnvironmentModel& env, Timestamp t) {
    const auto loaded = schedule.first_load_at(spec.strut_id);
    if (!loaded || *loaded > t) {
        return 0.0;
    }
    const double temp = ambient_conditions(env, t).temp_c;
    return mechanical_strain(schedule, spec, t) +
           spec.thermal_coeff_ue_per_c * (temp - spec.ref_temp_c);
}

Microstrain true_strut_strain(const Site& site, const std::string& strut_id, Timestamp t) {
    return true_strut_strain(site.schedule, site.strut(strut_id), site.env, t);
}

Microstrain wbf_raw(const Site& site, const WbfGauge& gauge, Timestamp t) {
    const auto& spec = site.strut(gauge.strut_id);
    const double temp = ambient_conditions(site.env, t).temp_c;
    const double apparent = gauge.apparent.evaluate(temp, temperature_trend(site.env, t));

    double structural = true_strut_strain(site.schedule, spec, site.env, t);
    if (gauge.debond && t > gauge.debond->start) {
        const auto& d = *gauge.debond;
        const double at_start = true_strut_strain(site.schedule, spec, site.env, d.start);
        const double days = static_cast<double>(t - d.start) / static_cast<double>(kDayMs);
        const double wander =
            d.wander_amplitude_ue * std::sin(2.0 * std::numbers::pi * days / d.wander_period_days);
        structural = at_start + d.coupling * (structural - at_start) + wander;
    }
    return structural + apparent;
}

Microstrain wbf_reading(const Site& site, const WbfGauge& gauge,
                        const std::optional<BridgeZero>& zero, Timestamp t) {
    if (!zero) {
        throw DataError("WBF reading requested before the bridge was balanced");
    }
    if (t < zero->at) {
        throw DataError("WBF reading requested before the balancing time");
    }
    return quantize_strain(wbf_raw(site, gauge, t) - zero->offset);
}

Microstrain vw_reading(const ConstructionSchedule& schedule, const StrutSpec& spec, Timestamp t,
                       const VWNoiseModel& noise, Rng& rng) {
    const auto preload = schedule.preload_at(spec.strut_id);
    if (!preload) {
        throw DataError("strut '" + spec.strut_id + "' has no preload; VW gauge never zeroed");
    }
    if (t < *preload) {
        throw DataError("VW reading requested before the preload of '" + spec.strut_id + "'");
    }
    double v = mechanical_strain(schedule, spec, t) - mechanical_strain(schedule, spec, *preload);
    v += rng.normal(0.0, noise.base_sd_ue);
    if (rng.bernoulli(noise.spike_probability)) {
        v -= rng.exponential(noise.spike_scale_ue);
    }
    return v;
}

double loadcell_reading(const ConstructionSchedule& schedule, const StrutSpec& spec,
                        const EnvironmentModel& env, Timestamp t) {
    return true_strut_strain(schedule, spec, env, t) * 1e-6 * spec.axial_stiffness_n();
}

}  // namespace restructure
