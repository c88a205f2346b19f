#include "doctest.h"

#include "restructure/analysis.hpp"
#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

using namespace restructure;
using namespace restructure::oracle;

namespace {

Series make_series(const std::vector<double>& values, Timestamp step = kCyclePeriodMs,
                   Unit unit = Unit::Microstrain) {
    std::vector<Point> pts;
    for (std::size_t i = 0; i < values.size(); ++i) {
        pts.push_back({static_cast<Timestamp>(i) * step, values[i]});
    }
    return Series(unit, std::move(pts));
}

/// A diurnal temperature trace sampled every 5 min for `days`.
std::pair<Series, Series> apparent_scenario(int days, double slope, double noise_sd,
                                            std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> noise(0.0, noise_sd);
    std::vector<Point> strain, temp;
    for (Timestamp t = 0; t < days * kDayMs; t += kCyclePeriodMs) {
        const double phase = 2.0 * std::numbers::pi * static_cast<double>(t % kDayMs) / kDayMs;
        const double T = 28.0 + 12.0 * std::sin(phase - std::numbers::pi / 2.0 - 0.5);
        // Slow baseline drift plus the temperature-correlated term.
        const double base = 100.0 + 0.5 * static_cast<double>(t) / kDayMs;
        strain.push_back({t, base + slope * (T - 27.0) + noise(gen)});
        temp.push_back({t, T});
    }
    return {Series(Unit::Microstrain, strain), Series(Unit::Celsius, temp)};
}

}  // namespace

TEST_CASE("series rejects non-increasing timestamps") {
    CHECK_THROWS_AS(Series(Unit::None, {{0, 1.0}, {0, 2.0}}), DataError);
    CHECK_THROWS_AS(Series(Unit::None, {{5, 1.0}, {3, 2.0}}), DataError);
}

TEST_CASE("median conventions") {
    CHECK(median({3, 1, 2}) == 2.0);
    CHECK(median({4, 1, 3, 2}) == 2.5);
    CHECK_THROWS_AS(median({}), DataError);
}

TEST_CASE("median_filter examples") {
    const auto s = make_series({1, 2, 100, 3, 4, 5, 6});
    const auto f = median_filter(s, 5);
    CHECK(f[2].v == 3.0);
    CHECK(f[2].t == s[2].t);
    const auto c = make_series({7, 7, 7, 7});
    CHECK(median_filter(c, 3).values() == c.values());
    CHECK(median_filter(s, 1).values() == s.values());
    CHECK_THROWS_AS(median_filter(s, 4), ConfigError);
    CHECK_THROWS_AS(median_filter(s, 0), ConfigError);
}

TEST_CASE("median_filter matches a sort-based oracle on random series") {
    std::mt19937_64 gen(5);
    std::uniform_int_distribution<int> len(1, 301);
    std::normal_distribution<double> val(0.0, 50.0);
    const int ks[] = {1, 3, 5, 7};
    for (int inst = 0; inst < 1000; ++inst) {
        std::vector<double> v(static_cast<std::size_t>(len(gen)));
        for (auto& x : v) x = std::round(val(gen));
        const int k = ks[inst % 4];
        CHECK(median_filter(make_series(v), k).values() == median_filter_oracle(v, k));
    }
}

TEST_CASE("LOESS reproduces lines and tracks a sine") {
    std::vector<std::pair<double, double>> line;
    for (int i = 0; i < 50; ++i) line.emplace_back(i * 0.37, 3.0 - 2.5 * i * 0.37);
    for (double span : {0.1, 0.3, 1.0}) {
        const auto fit = loess_fit(line, span);
        for (double x : {0.0, 1.1, 9.0, 18.13}) {
            const double y = 3.0 - 2.5 * x;
            CHECK(std::abs(fit(x) - y) <= 1e-9 * std::max(1.0, std::abs(y)));
        }
    }

    std::vector<std::pair<double, double>> sine;
    const int n = 200;
    for (int i = 0; i < n; ++i) {
        const double x = 2.0 * std::numbers::pi * i / (n - 1);
        sine.emplace_back(x, std::sin(x));
    }
    auto worst_error = [&](const LoessFit& fit) {
        double worst = 0.0;
        for (int i = 0; i <= 2000; ++i) {
            const double x = 2.0 * std::numbers::pi * i / 2000;
            worst = std::max(worst, std::abs(fit(x) - std::sin(x)));
        }
        return worst;
    };
    // Local quadratic follows the curvature.
    CHECK(worst_error(loess_fit(sine, 0.3, 2)) < 0.05);
    // Local linear flattens the peaks by its smoothing bias, about
    // 0.5 * |sin''| * h^2 * mu2 = 0.07 for this window; it stays under 0.08.
    const double linear = worst_error(loess_fit(sine, 0.3, 1));
    CHECK(linear < 0.08);
    CHECK(std::abs(loess_fit(sine, 0.3)(std::numbers::pi / 2) - 1.0) ==
          doctest::Approx(linear).epsilon(0.05));
}

TEST_CASE("local linear LOESS matches a brute-force weighted least squares") {
    std::mt19937_64 gen(12);
    std::uniform_real_distribution<double> ux(0.0, 10.0);
    std::normal_distribution<double> uy(0.0, 3.0);
    for (int inst = 0; inst < 200; ++inst) {
        const int n = std::uniform_int_distribution<int>(5, 80)(gen);
        const double span = std::uniform_real_distribution<double>(0.2, 1.0)(gen);
        std::vector<std::pair<double, double>> pts;
        for (int i = 0; i < n; ++i) pts.emplace_back(ux(gen), uy(gen));
        const auto fit = loess_fit(pts, span);
        const auto q = std::max<std::size_t>(3, static_cast<std::size_t>(std::ceil(span * n - 1e-9)));
        for (int k = 0; k < 5; ++k) {
            const double x = ux(gen);
            std::vector<double> dist;
            for (const auto& p : pts) dist.push_back(std::abs(p.first - x));
            std::sort(dist.begin(), dist.end());
            const double d = dist[std::min<std::size_t>(q, pts.size()) - 1];
            double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
            for (const auto& [px, py] : pts) {
                const double u = std::abs(px - x) / d;
                const double w = u < 1.0 ? std::pow(1.0 - u * u * u, 3) : 0.0;
                sw += w;
                sx += w * px;
                sy += w * py;
                sxx += w * px * px;
                sxy += w * px * py;
            }
            const double slope = (sw * sxy - sx * sy) / (sw * sxx - sx * sx);
            const double want = (sy - slope * sx) / sw + slope * x;
            CHECK(fit(x) == doctest::Approx(want).epsilon(1e-8));
        }
    }
    CHECK_THROWS_AS(loess_fit({{0, 1}, {1, 2}, {2, 3}}, 0.5, 3), ConfigError);
}

TEST_CASE("LOESS outlier and error cases") {
    std::vector<std::pair<double, double>> pts;
    for (int i = 0; i < 60; ++i) pts.emplace_back(i, 2.0 * i);
    pts[30].second += 500.0;
    const auto fit = loess_fit(pts, 0.3);
    CHECK(std::abs(fit(30.0) - 60.0) < std::abs(fit(30.0) - 560.0));

    CHECK_THROWS_AS(loess_fit({{0, 1}, {1, 2}}, 0.5), ConfigError);
    CHECK_THROWS_AS(loess_fit(pts, 0.0), ConfigError);
    CHECK_THROWS_AS(loess_fit(pts, 1.5), ConfigError);
    CHECK_THROWS_AS(loess_fit({{1, 1}, {1, 2}, {1, 3}}, 0.5), DataError);
}

TEST_CASE("compensation recovers an injected linear apparent strain") {
    const auto [strain, temp] = apparent_scenario(30, -5.0, 0.5, 1);
    const auto curve = derive_compensation_curve(strain, temp);
    CHECK(curve.band_count >= 10);
    std::vector<double> ts, cs;
    for (const auto& p : temp.points()) {
        ts.push_back(p.v);
        cs.push_back(curve(p.v));
    }
    const double slope = *linear_slope(ts, cs);
    CHECK(std::abs(slope - -5.0) <= 0.5);
    // Sign-level check: hotter means more negative residual.
    CHECK(curve(38.0) < curve(20.0));

    const auto comp = apply_compensation(strain, temp, curve);
    const double before = diurnal_peak_to_peak(strain, 0);
    const double after = diurnal_peak_to_peak(comp, 0);
    CHECK(after <= 0.2 * before);
    const auto r = pearson(comp.values(), temp.values());
    REQUIRE(r);
    CHECK(std::abs(*r) < 0.2);
}

TEST_CASE("constant 27 C gives a flat, near-zero curve") {
    std::vector<Point> s, t;
    std::mt19937_64 gen(3);
    std::normal_distribution<double> noise(0.0, 1.0);
    for (int i = 0; i < 2000; ++i) {
        s.push_back({i * kCyclePeriodMs, 50.0 + noise(gen)});
        t.push_back({i * kCyclePeriodMs, 27.0});
    }
    const auto curve = derive_compensation_curve(Series(Unit::Microstrain, s), Series(Unit::Celsius, t));
    for (double T : {10.0, 27.0, 45.0}) CHECK(std::abs(curve(T)) < 1.0);
}

TEST_CASE("compensation is a no-op on white-noise strain") {
    const auto [strain, temp] = apparent_scenario(30, 0.0, 2.0, 8);
    const auto comp = apply_compensation(strain, temp, derive_compensation_curve(strain, temp));
    double ss = 0.0;
    for (std::size_t i = 0; i < comp.size(); ++i) {
        const double d = comp[i].v - strain[i].v;
        ss += d * d;
    }
    CHECK(std::sqrt(ss / static_cast<double>(comp.size())) < 1.0);

    CompensationCurve zero;
    zero.grid = {{0.0, 0.0}, {50.0, 0.0}};
    CHECK(apply_compensation(strain, temp, zero).values() == strain.values());
}

TEST_CASE("compensation needs enough in-band samples") {
    std::vector<Point> s, t;
    for (int i = 0; i < 100; ++i) {
        s.push_back({i * kCyclePeriodMs, 1.0});
        t.push_back({i * kCyclePeriodMs, 35.0});
    }
    try {
        derive_compensation_curve(Series(Unit::Microstrain, s), Series(Unit::Celsius, t));
        FAIL("expected an error");
    } catch (const DataError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("found 0") != std::string::npos);
        CHECK(msg.find("26.9") != std::string::npos);
    }
}

TEST_CASE("daily median") {
    std::vector<double> same(288, 12.5);
    CHECK(daily_median(make_series(same), 0)[0].v == 12.5);

    std::vector<double> ramp(288);
    for (int i = 0; i < 288; ++i) ramp[static_cast<std::size_t>(i)] = i + 1;
    const auto d = daily_median(make_series(ramp), 0);
    REQUIRE(d.size() == 1);
    CHECK(d[0].v == 144.5);

    // 40% of the day replaced by huge spikes. The median can only move to
    // another quantile of the clean values, so the shift is bounded by their
    // spread (here a 0.5 ue gauge noise floor).
    std::mt19937_64 gen(4);
    std::normal_distribution<double> noise(0.0, 0.5);
    std::vector<double> clean(288), spiky;
    for (auto& x : clean) x = 75.0 + noise(gen);
    spiky = clean;
    for (std::size_t i = 0; i < 115; ++i) spiky[i * 2] = 1e6;
    CHECK(std::abs(daily_median(make_series(spiky), 0)[0].v -
                   daily_median(make_series(clean), 0)[0].v) < 1.0);

    // Permutation invariance within a day.
    auto shuffled = clean;
    std::shuffle(shuffled.begin(), shuffled.end(), gen);
    CHECK(daily_median(make_series(shuffled), 0)[0].v == daily_median(make_series(clean), 0)[0].v);
}

TEST_CASE("daily median buckets by local day and skips empty days") {
    // Points at 23:00 UTC on day 0 and 01:00 UTC on day 3.
    const Series s(Unit::None, {{23 * kHourMs, 1.0}, {3 * kDayMs + kHourMs, 2.0}});
    const auto utc = daily_median(s, 0);
    REQUIRE(utc.size() == 2);
    CHECK(utc[0].t == 0);
    CHECK(utc[1].t == 3 * kDayMs);
    const auto east = daily_median(s, 8 * 60);
    CHECK(east[0].t == kDayMs);
    CHECK(local_day(-1, 0) == -1);
}

TEST_CASE("correlate_offset examples and errors") {
    const auto a = make_series({1, 3, 2, 5, 4}, kDayMs);
    auto res = correlate_offset(a, a);
    CHECK(*res.r == doctest::Approx(1.0));
    CHECK(res.offset == 0.0);
    CHECK(res.offset_se == 0.0);

    const auto b = make_series({11, 13, 12, 15, 14}, kDayMs);
    res = correlate_offset(a, b);
    CHECK(*res.r == doctest::Approx(1.0));
    CHECK(res.offset == 10.0);
    CHECK(res.offset_se == 0.0);

    CHECK_THROWS_AS(correlate_offset(make_series({1, 2}, kDayMs), make_series({1, 2}, kDayMs)),
                    DataError);
    const auto flat = make_series({4, 4, 4, 4, 4}, kDayMs);
    CHECK_FALSE(correlate_offset(a, flat).r.has_value());
}

TEST_CASE("correlate_offset matches the textbook formula on random 30-day pairs") {
    std::mt19937_64 gen(30);
    std::normal_distribution<double> v(0.0, 40.0);
    for (int inst = 0; inst < 1000; ++inst) {
        std::vector<double> a(30), b(30);
        for (std::size_t i = 0; i < 30; ++i) {
            a[i] = v(gen);
            b[i] = 0.6 * a[i] + v(gen) + 20.0;
        }
        const auto res = correlate_offset(make_series(a, kDayMs), make_series(b, kDayMs));
        const auto want = textbook(a, b);
        CHECK(std::abs(*res.r - want.r) <= 1e-12);
        CHECK(std::abs(res.offset - want.offset) <= 1e-12);
        CHECK(std::abs(res.offset_se - want.se) <= 1e-12);
    }
}

TEST_CASE("correlate_offset under positive affine transforms") {
    const auto a = make_series({1, 4, 2, 8, 5, 7}, kDayMs);
    const auto b = make_series({2, 3, 3, 9, 4, 8}, kDayMs);
    const auto base = correlate_offset(a, b);
    const auto shifted = correlate_offset(a, make_series({12, 13, 13, 19, 14, 18}, kDayMs));
    CHECK(*shifted.r == doctest::Approx(*base.r).epsilon(1e-14));
    CHECK(shifted.offset == base.offset + 10.0);
    const auto scaled = correlate_offset(make_series({2, 8, 4, 16, 10, 14}, kDayMs), b);
    CHECK(*scaled.r == doctest::Approx(*base.r).epsilon(1e-14));
}

TEST_CASE("strain_to_load") {
    StrutSpec spec;
    spec.elastic_modulus_pa = 200e9;
    spec.area_m2 = 0.05;
    CHECK(strain_to_load(0.0, spec) == 0.0);
    CHECK(strain_to_load(100.0, spec) == doctest::Approx(1e6));
    CHECK(strain_to_load(-50.0, spec) == doctest::Approx(-0.5e6));
    CHECK(strain_to_load(30.0 + 45.0, spec) ==
          doctest::Approx(strain_to_load(30.0, spec) + strain_to_load(45.0, spec)));
    CHECK(strain_to_load(3.0 * 17.0, spec) == doctest::Approx(3.0 * strain_to_load(17.0, spec)));
}

TEST_CASE("data yield") {
    NodeTrace trace{52, {}};
    GatewayLog all, most;
    for (int i = 0; i < 288; ++i) {
        const Timestamp t = i * kCyclePeriodMs;
        trace.sent.push_back({i, t});
        all.push_back({52, i, t, t, {52, 0}});
        if (i < 252) most.push_back({52, i, t, t, {52, 0}});
    }
    const TimeWindow day{0, kDayMs};
    auto y = data_yield(trace, all, day, {});
    CHECK(*y.yield_pct == 100.0);
    CHECK(*y.yield_without_outages_pct == 100.0);
    y = data_yield(trace, most, day, {});
    CHECK(*y.yield_pct == 87.5);
    CHECK(*y.yield_without_outages_pct == 87.5);

    // Losses only inside a declared 2 h outage.
    GatewayLog gap;
    const TimeWindow outage{10 * kHourMs, 12 * kHourMs};
    for (const auto& s : trace.sent) {
        if (!outage.contains(s.t)) gap.push_back({52, s.seq, s.t, s.t, {52, 0}});
    }
    const std::vector<TimeWindow> outages{outage};
    y = data_yield(trace, gap, day, outages);
    CHECK(*y.yield_pct < 100.0);
    CHECK(*y.yield_without_outages_pct == 100.0);

    CHECK_FALSE(data_yield(trace, all, {2 * kDayMs, 3 * kDayMs}, {}).yield_pct.has_value());
}

TEST_CASE("daily PDR drops on the day of a gateway outage") {
    NodeTrace trace{50, {}};
    GatewayLog log;
    for (int i = 0; i < 3 * 288; ++i) {
        const Timestamp t = i * kCyclePeriodMs;
        trace.sent.push_back({i, t});
        if (t < kDayMs + 6 * kHourMs || t >= kDayMs + 12 * kHourMs) log.push_back({50, i, t, t, {}});
    }
    const auto pdr = daily_pdr(trace, log, 0);
    REQUIRE(pdr.size() == 3);
    CHECK(pdr[0].second == 100.0);
    CHECK(pdr[1].second == 75.0);
    CHECK(pdr[2].second == 100.0);
}

TEST_CASE("rank and slope helpers") {
    const std::vector<double> x{1, 2, 3, 4, 5};
    const std::vector<double> y{1, 4, 9, 16, 100};
    CHECK(*spearman(x, y) == doctest::Approx(1.0));
    const std::vector<double> ties{1, 1, 2, 2, 3};
    CHECK(*spearman(x, ties) > 0.9);
    CHECK(*linear_slope(x, std::vector<double>{3, 5, 7, 9, 11}) == doctest::Approx(2.0));
    CHECK_FALSE(pearson(std::vector<double>{1}, std::vector<double>{2}).has_value());
}
