#include "doctest.h"

#include "restructure/node_sim.hpp"

#include <cmath>
#include <sstream>
#include <string>

using namespace restructure;

namespace {

Site flat_site() {
    Site site;
    site.env.noise_sd_c = 0.0;
    StrutSpec s;
    s.strut_id = "S1";
    site.struts.emplace("S1", s);
    site.schedule = ConstructionSchedule({
        {0, ConstructionKind::InstallStrut, "S1", 0.0},
        {kDayMs, ConstructionKind::Preload, "S1", 1e6},
    });
    return site;
}

NodeConfig basic_config(Timestamp installed_at = 0) {
    NodeConfig c;
    c.id = 7;
    c.gauge = WbfGauge{"S1", {-3.0, 0.0, -8.0, 27.0}, std::nullopt};
    c.installed_at = installed_at;
    return c;
}

/// Always delivers on the first attempt.
class PerfectRadio final : public Radio {
public:
    RadioStatus status(NodeId) const override { return {-50, 3600, kSinkId}; }
    TxOutcome send(NodeState& node, const StrainSample&, Timestamp t) override {
        if (!node.try_debit(node.send_cost(), t)) {
            return {true, false, 1};
        }
        return {true, true, 1};
    }
};

/// Burns every allowed attempt without delivering.
class HopelessRadio final : public Radio {
public:
    explicit HopelessRadio(int attempts) : attempts_(attempts) {}
    RadioStatus status(NodeId) const override { return {}; }
    TxOutcome send(NodeState& node, const StrainSample&, Timestamp t) override {
        TxOutcome out{true, false, 0};
        for (int i = 0; i < attempts_; ++i) {
            ++out.attempts;
            if (!node.try_debit(node.send_cost(), t)) {
                break;
            }
        }
        return out;
    }

private:
    int attempts_;
};

// Independent recomputation of the per-cycle energy from the profile rows.
double cycle_joules_oracle() {
    const double v = 3.0;
    const double uj = 5000 * 32.6 * v + 105 * 32.6 * v + 315 * 32.6 * v + 8 * 5.7 * v +
                      30 * 16.9 * v + 300000 * 1.0 * v;
    return uj * 1e-6;
}

}  // namespace

TEST_CASE("one sense-and-send cycle costs the sum of its rows") {
    const auto site = flat_site();
    NodeState node(basic_config());
    balance_bridge(node, site, 0);
    PerfectRadio radio;
    const auto r = run_sense_cycle(node, 0, site, radio);
    REQUIRE(r.sample);
    CHECK(to_joules(r.energy_spent) == doctest::Approx(cycle_joules_oracle()).epsilon(1e-12));
    CHECK(to_joules(r.energy_spent) == doctest::Approx(1.4318).epsilon(1e-4));
    // The rounded 4.8 mW total over 300 s gives 1.44 J; the row sum is within 1%.
    CHECK(std::abs(to_joules(r.energy_spent) - 1.44) / 1.44 < 0.01);
    CHECK(r.sample->payload_bytes == kPayloadBytes);
    CHECK(r.sample->strain == 0.0);
}

TEST_CASE("energy breakdown matches the micro-benchmark rows") {
    const auto b = energy_breakdown(default_node_profile());
    // Independent oracle: duration/period * dI * V for each row.
    const double v = 3.0;
    const double period = 300000.0;
    struct Row {
        const char* name;
        double oracle_mw;
        double printed_mw;
        double printed_half_ulp;
    };
    const Row rows[] = {
        {op::kWarmUpBridge, 5000 / period * 32.6 * v, 1.63, 0.005},
        {op::kStrainSample, 105 / period * 32.6 * v, 0.034, 0.0005},
        {op::kTempRhSample, 315 / period * 32.6 * v, 0.1, 0.05},
        {op::kFlashWrite, 8 / period * 5.7 * v, 0.00046, 0.000005},
        {op::kSendMessage, 30 / period * 16.9 * v, 0.0051, 0.00005},
        {op::kIdle, 1.0 * v, 3.0, 0.5},
    };
    for (const auto& r : rows) {
        CAPTURE(r.name);
        CHECK(b.row(r.name).power_mw == doctest::Approx(r.oracle_mw).epsilon(1e-12));
        // Agrees with the published value at the precision it was printed.
        CHECK(std::abs(b.row(r.name).power_mw - r.printed_mw) <= r.printed_half_ulp);
    }
    // Within 1% of the published rows, except temp/RH: 315/300000 * 32.6 * 3
    // is 0.1027 mW, printed to one significant figure as 0.1.
    for (const auto* name : {op::kWarmUpBridge, op::kStrainSample, op::kFlashWrite,
                             op::kSendMessage, op::kIdle}) {
        CAPTURE(name);
        double printed = 0.0;
        for (const auto& r : rows) {
            if (std::string(r.name) == name) printed = r.printed_mw;
        }
        CHECK(std::abs(b.row(name).power_mw - printed) / printed <= 0.01);
    }
    CHECK(std::abs(b.row(op::kTempRhSample).power_mw - 0.1) / 0.1 ==
          doctest::Approx(0.0269).epsilon(1e-3));
    CHECK(std::abs(b.total_mw - 4.8) <= 0.05);
    double pct = 0.0;
    for (const auto& r : b.rows) {
        pct += r.percent;
    }
    CHECK(pct == doctest::Approx(100.0));
    CHECK_THROWS_AS(b.row("nope"), ConfigError);

    auto zero = default_node_profile();
    zero.period_ms = 0;
    CHECK_THROWS_AS(energy_breakdown(zero), ConfigError);
}

TEST_CASE("sensing and network shares") {
    const auto split = energy_split(energy_breakdown(default_node_profile()));
    CHECK(std::abs(split.sensing_pct - 37.0) <= 2.0);
    CHECK(std::abs(split.network_pct - 63.0) <= 2.0);
    CHECK(split.sensing_pct + split.storage_pct + split.network_pct == doctest::Approx(100.0));
}

TEST_CASE("node lifetime prediction") {
    const auto profile = default_node_profile();
    const auto battery = default_node_battery();
    const double days = predict_node_lifetime(profile, battery, 1.0);
    CHECK(days >= 201.0);
    CHECK(days <= 207.0);
    const double total_mw = (5420 * 32.6 + 8 * 5.7 + 30 * 16.9) / 300000.0 * 3.0 + 3.0;
    CHECK(days == doctest::Approx(23.4 / (total_mw * 1e-3) / 24.0).epsilon(1e-12));
    // The rounded 4.8 mW total gives 203.1 days; both sit inside [201, 207].
    CHECK(23.4 / 4.8e-3 / 24.0 == doctest::Approx(203.125));

    auto half = battery;
    half.capacity_wh /= 2.0;
    CHECK(predict_node_lifetime(profile, half) == doctest::Approx(days / 2.0));
    CHECK(predict_node_lifetime(profile, battery, 16.0) < days);
    CHECK(predict_node_lifetime(profile, battery, 2.0) < days);
    CHECK_THROWS_AS(predict_node_lifetime(profile, battery, 0.5), ConfigError);

    EnergyProfile idle_only;
    CHECK_THROWS_AS(predict_node_lifetime(idle_only, battery), ConfigError);
}

TEST_CASE("flash grows every cycle with the radio off") {
    const auto site = flat_site();
    NodeState node(basic_config());
    balance_bridge(node, site, 0);
    DisabledRadio radio;
    const int cycles = 3 * 288;
    for (int i = 0; i < cycles; ++i) {
        const auto r = run_sense_cycle(node, i * kCyclePeriodMs, site, radio);
        CHECK_FALSE(r.tx.attempted);
    }
    REQUIRE(node.flash().size() == static_cast<std::size_t>(cycles));
    for (std::size_t i = 0; i < node.flash().size(); ++i) {
        CHECK(node.flash()[i].seq == static_cast<std::int64_t>(i));
    }
    // The preload step shows up in the log.
    CHECK(node.flash().back().strain > 90.0);
}

TEST_CASE("cycles off the sampling grid are rejected") {
    const auto site = flat_site();
    NodeState node(basic_config(kMinuteMs));
    balance_bridge(node, site, kMinuteMs);
    DisabledRadio radio;
    CHECK_THROWS_AS(run_sense_cycle(node, 0, site, radio), DataError);
    CHECK_THROWS_AS(run_sense_cycle(node, kCyclePeriodMs, site, radio), DataError);
    CHECK_NOTHROW(run_sense_cycle(node, kMinuteMs + kCyclePeriodMs, site, radio));
}

TEST_CASE("energy is conserved exactly and never increases") {
    const auto site = flat_site();
    auto cfg = basic_config();
    cfg.battery.capacity_wh = 0.01;  // dies after ~25 cycles of 16 attempts
    NodeState node(cfg);
    balance_bridge(node, site, 0);
    HopelessRadio radio(16);
    Nanojoules last = node.remaining_energy();
    int i = 0;
    while (node.alive()) {
        run_sense_cycle(node, i++ * kCyclePeriodMs, site, radio);
        CHECK(node.remaining_energy() <= last);
        CHECK(node.initial_energy() == node.remaining_energy() + node.debited_energy());
        last = node.remaining_energy();
    }
    CHECK(node.died_at().has_value());
    CHECK(node.remaining_energy() >= 0);
}

TEST_CASE("dead node emits nothing and spends nothing") {
    const auto site = flat_site();
    auto cfg = basic_config();
    cfg.battery.capacity_wh = 1e-4;
    NodeState node(cfg);
    balance_bridge(node, site, 0);
    PerfectRadio radio;
    int i = 0;
    while (node.alive()) {
        run_sense_cycle(node, i++ * kCyclePeriodMs, site, radio);
    }
    const auto flash = node.flash().size();
    const auto remaining = node.remaining_energy();
    const auto r = run_sense_cycle(node, i * kCyclePeriodMs, site, radio);
    CHECK_FALSE(r.sample.has_value());
    CHECK(r.energy_spent == 0);
    CHECK(node.flash().size() == flash);
    CHECK(node.remaining_energy() == remaining);
    CHECK_THROWS_AS(balance_bridge(node, site, i * kCyclePeriodMs), DataError);
}

TEST_CASE("simulated death lands within one cycle of the prediction") {
    const auto site = flat_site();
    NodeState node(basic_config());
    balance_bridge(node, site, 0);
    PerfectRadio radio;
    Timestamp t = 0;
    while (node.alive()) {
        run_sense_cycle(node, t, site, radio);
        t += kCyclePeriodMs;
    }
    const double predicted_ms =
        predict_node_lifetime(default_node_profile(), default_node_battery(), 1.0) *
        static_cast<double>(kDayMs);
    REQUIRE(node.died_at());
    CHECK(std::abs(static_cast<double>(*node.died_at()) - predicted_ms) <=
          static_cast<double>(kCyclePeriodMs));
}

TEST_CASE("bridge balancing") {
    auto site = flat_site();
    site.struts["S1"].thermal_coeff_ue_per_c = 1.0;
    NodeState node(basic_config(kHourMs));
    CHECK_THROWS_AS(balance_bridge(node, site, 0), DataError);
    DisabledRadio radio;
    CHECK_THROWS_AS(run_sense_cycle(node, kHourMs, site, radio), DataError);

    balance_bridge(node, site, kHourMs);
    const auto first = node.bridge_zero();
    balance_bridge(node, site, kHourMs);
    CHECK(node.bridge_zero()->offset == first->offset);
    const auto r = run_sense_cycle(node, kHourMs, site, radio);
    CHECK(std::abs(r.sample->strain) <= kAdcStepUe / 2);
}

TEST_CASE("zeroing at dawn or noon shifts later readings") {
    const auto site = flat_site();
    const Timestamp dawn = 6 * kHourMs;
    const Timestamp noon = 12 * kHourMs;
    NodeState a(basic_config());
    NodeState b(basic_config());
    balance_bridge(a, site, dawn);
    balance_bridge(b, site, noon);
    const Timestamp later = 5 * kDayMs;
    const auto& g = a.config().gauge;
    const double ra = wbf_reading(site, g, a.bridge_zero(), later);
    const double rb = wbf_reading(site, g, b.bridge_zero(), later);
    CHECK(std::abs(ra - rb) > 1.0);
}

TEST_CASE("energy profile CSV round-trip and errors") {
    std::stringstream buf;
    write_energy_profile_csv(buf, default_node_profile());
    const auto back = read_energy_profile_csv(buf);
    const auto orig = default_node_profile();
    REQUIRE(back.steps.size() == orig.steps.size());
    for (std::size_t i = 0; i < orig.steps.size(); ++i) {
        CHECK(back.steps[i].name == orig.steps[i].name);
        CHECK(back.steps[i].duration_ms == orig.steps[i].duration_ms);
        CHECK(back.steps[i].current_ma == orig.steps[i].current_ma);
    }
    CHECK(back.period_ms == orig.period_ms);
    CHECK(back.idle_current_ma == orig.idle_current_ma);

    std::stringstream missing_idle("operation,duration_ms,current_ma\nsend_message,30,16.9\n");
    CHECK_THROWS_AS(read_energy_profile_csv(missing_idle), ConfigError);
    std::stringstream missing_col("operation,duration_ms\nidle,300000\n");
    CHECK_THROWS_AS(read_energy_profile_csv(missing_col), DataError);
    std::stringstream negative("operation,duration_ms,current_ma\nx,-1,2\nidle,300000,1\n");
    CHECK_THROWS_AS(read_energy_profile_csv(negative), ConfigError);
}
