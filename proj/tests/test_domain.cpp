#include "doctest.h"

#include "restructure/domain.hpp"

#include <algorithm>
#include <cmath>
#include <random>

using namespace restructure;

TEST_CASE("ADC step is 5000 ue over 2^16 codes and below 1 ue") {
    const double step = 5000.0 / 65536.0;
    CHECK(kAdcStepUe == step);
    CHECK(step == 0.0762939453125);
    CHECK(step < 1.0);
}

TEST_CASE("quantize_strain examples") {
    CHECK(quantize_strain(0.0) == 0.0);
    CHECK(quantize_strain(3000.0) == 2500.0);
    CHECK(quantize_strain(-3000.0) == -2500.0);
    // 1.0 / 0.0762939453125 = 13.107..., so code 13.
    CHECK(quantize_strain(1.0) == 0.9918212890625);
}

TEST_CASE("quantize_strain rounds half away from zero") {
    CHECK(quantize_strain(0.5 * kAdcStepUe) == kAdcStepUe);
    CHECK(quantize_strain(-0.5 * kAdcStepUe) == -kAdcStepUe);
    CHECK(quantize_strain(0.49 * kAdcStepUe) == 0.0);
}

TEST_CASE("quantize_strain properties over random inputs") {
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> dist(-4000.0, 4000.0);
    for (int i = 0; i < 20000; ++i) {
        const double x = dist(gen);
        const double y = dist(gen);
        const double qx = quantize_strain(x);
        CHECK(quantize_strain(qx) == qx);
        CHECK(std::abs(qx - std::clamp(x, -2500.0, 2500.0)) <= kAdcStepUe / 2 + 1e-12);
        CHECK(qx >= -2500.0);
        CHECK(qx <= 2500.0);
        if (x <= y) {
            CHECK(qx <= quantize_strain(y));
        }
    }
}

TEST_CASE("default node battery is 23.4 Wh") {
    const auto b = default_node_battery();
    CHECK(b.capacity_wh == doctest::Approx(23.4));
    CHECK(b.supply_voltage == 3.0);
    CHECK_NOTHROW(b.validate());
    auto bad = b;
    bad.derating = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("energy profile validation") {
    auto p = default_node_profile();
    CHECK_NOTHROW(p.validate());
    REQUIRE(p.find(op::kWarmUpBridge) != nullptr);
    CHECK(p.find(op::kWarmUpBridge)->current_ma == doctest::Approx(32.6));

    auto dup = p;
    dup.steps.push_back(dup.steps.front());
    CHECK_THROWS_AS(dup.validate(), ConfigError);

    auto neg = p;
    neg.steps[0].duration_ms = -1.0;
    CHECK_THROWS_AS(neg.validate(), ConfigError);
}
