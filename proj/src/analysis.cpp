#include "restructure/analysis.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <unordered_set>

namespace restructure {

Series::Series(Unit unit, std::vector<Point> points) : unit_(unit), points_(std::move(points)) {
    for (std::size_t i = 1; i < points_.size(); ++i) {
        if (points_[i].t <= points_[i - 1].t) {
            throw DataError("series timestamps must strictly increase (index " +
                            std::to_string(i) + ")");
        }
    }
}

std::vector<double> Series::values() const {
    std::vector<double> out;
    out.reserve(points_.size());
    for (const auto& p : points_) {
        out.push_back(p.v);
    }
    return out;
}

double median(std::vector<double> values) {
    if (values.empty()) {
        throw DataError("median of an empty sample");
    }
    const std::size_t mid = values.size() / 2;
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid),
                     values.end());
    const double upper = values[mid];
    if (values.size() % 2 == 1) {
        return upper;
    }
    const double lower = *std::max_element(values.begin(),
                                           values.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

Series median_filter(const Series& series, int k) {
    if (k < 1 || k % 2 == 0) {
        throw ConfigError("median filter window k must be odd and >= 1, got " + std::to_string(k));
    }
    const auto& pts = series.points();
    const std::size_t n = pts.size();
    const std::size_t half = static_cast<std::size_t>(k / 2);
    std::vector<Point> out;
    out.reserve(n);
    std::vector<double> window;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t h = std::min({half, i, n - 1 - i});
        window.clear();
        for (std::size_t j = i - h; j <= i + h; ++j) {
            window.push_back(pts[j].v);
        }
        out.push_back({pts[i].t, median(window)});
    }
    return Series(series.unit(), std::move(out));
}

LoessFit::LoessFit(std::vector<std::pair<double, double>> points, double span, int degree)
    : span_(span), degree_(degree) {
    if (!(span > 0.0 && span <= 1.0)) {
        throw ConfigError("LOESS span must lie in (0, 1]");
    }
    if (degree != 1 && degree != 2) {
        throw ConfigError("LOESS degree must be 1 or 2");
    }
    if (points.size() < 3) {
        throw ConfigError("LOESS needs at least 3 points, got " + std::to_string(points.size()));
    }
    std::sort(points.begin(), points.end());
    if (points.front().first == points.back().first) {
        throw DataError("LOESS over degenerate x (all values equal)");
    }
    xs_.reserve(points.size());
    ys_.reserve(points.size());
    for (const auto& [x, y] : points) {
        xs_.push_back(x);
        ys_.push_back(y);
    }
    const auto n = xs_.size();
    const auto wanted = static_cast<std::size_t>(std::ceil(span * static_cast<double>(n) - 1e-9));
    neighbors_ = std::clamp<std::size_t>(wanted, 3, n);
}

double LoessFit::operator()(double x) const {
    const std::size_t n = xs_.size();
    // Grow [left, right) outward from the insertion point to the q nearest.
    std::size_t right = static_cast<std::size_t>(std::lower_bound(xs_.begin(), xs_.end(), x) -
                                                 xs_.begin());
    std::size_t left = right;
    while (right - left < neighbors_) {
        if (left == 0) {
            ++right;
        } else if (right == n) {
            --left;
        } else if (x - xs_[left - 1] <= xs_[right] - x) {
            --left;
        } else {
            ++right;
        }
    }
    const double d = std::max(x - xs_[left], xs_[right - 1] - x);

    double sw = 0.0, swx = 0.0, swy = 0.0;
    std::vector<double> w(right - left);
    for (std::size_t i = left; i < right; ++i) {
        double wi = 1.0;
        if (d > 0.0) {
            const double u = std::abs(x - xs_[i]) / d;
            const double c = 1.0 - u * u * u;
            wi = u < 1.0 ? c * c * c : 0.0;
        }
        w[i - left] = wi;
        sw += wi;
        swx += wi * xs_[i];
        swy += wi * ys_[i];
    }
    if (sw <= 0.0) {
        double sum = 0.0;
        for (std::size_t i = left; i < right; ++i) {
            sum += ys_[i];
        }
        return sum / static_cast<double>(right - left);
    }
    const double mx = swx / sw;
    const double my = swy / sw;
    if (degree_ == 2) {
        if (const auto q = local_quadratic(x, left, right, w)) {
            return *q;
        }
    }
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = left; i < right; ++i) {
        const double dx = xs_[i] - mx;
        sxx += w[i - left] * dx * dx;
        sxy += w[i - left] * dx * (ys_[i] - my);
    }
    const double scale = std::max(1.0, mx * mx) * sw;
    if (sxx <= 1e-14 * scale) {
        return my;
    }
    return my + sxy / sxx * (x - mx);
}

std::optional<double> LoessFit::local_quadratic(double x, std::size_t left, std::size_t right,
                                                const std::vector<double>& w) const {
    // Weighted normal equations in u = x_i - x; the intercept is the fit.
    std::array<double, 5> m{};  // sum w u^k, k = 0..4
    std::array<double, 3> r{};  // sum w u^k y, k = 0..2
    for (std::size_t i = left; i < right; ++i) {
        const double u = xs_[i] - x;
        const double wi = w[i - left];
        double p = wi;
        for (std::size_t k = 0; k < 5; ++k) {
            m[k] += p;
            if (k < 3) {
                r[k] += p * ys_[i];
            }
            p *= u;
        }
    }
    std::array<std::array<double, 4>, 3> a{{{m[0], m[1], m[2], r[0]},
                                            {m[1], m[2], m[3], r[1]},
                                            {m[2], m[3], m[4], r[2]}}};
    for (std::size_t c = 0; c < 3; ++c) {
        std::size_t pivot = c;
        for (std::size_t row = c + 1; row < 3; ++row) {
            if (std::abs(a[row][c]) > std::abs(a[pivot][c])) {
                pivot = row;
            }
        }
        if (std::abs(a[pivot][c]) <= 1e-12 * std::max(1.0, std::abs(m[0]))) {
            return std::nullopt;
        }
        std::swap(a[c], a[pivot]);
        for (std::size_t row = 0; row < 3; ++row) {
            if (row == c) {
                continue;
            }
            const double f = a[row][c] / a[c][c];
            for (std::size_t k = c; k < 4; ++k) {
                a[row][k] -= f * a[c][k];
            }
        }
    }
    return a[0][3] / a[0][0];
}

LoessFit loess_fit(std::vector<std::pair<double, double>> points, double span, int degree) {
    return LoessFit(std::move(points), span, degree);
}

double CompensationCurve::operator()(double temp_c) const {
    if (grid.empty()) {
        return 0.0;
    }
    if (temp_c <= grid.front().first) {
        return grid.front().second;
    }
    if (temp_c >= grid.back().first) {
        return grid.back().second;
    }
    auto hi = std::lower_bound(grid.begin(), grid.end(), temp_c,
                               [](const auto& p, double v) { return p.first < v; });
    auto lo = hi - 1;
    const double f = (temp_c - lo->first) / (hi->first - lo->first);
    return lo->second + f * (hi->second - lo->second);
}

namespace {

struct Aligned {
    std::vector<Timestamp> t;
    std::vector<double> a;
    std::vector<double> b;
};

Aligned align(const Series& a, const Series& b) {
    Aligned out;
    const auto& pa = a.points();
    const auto& pb = b.points();
    std::size_t i = 0, j = 0;
    while (i < pa.size() && j < pb.size()) {
        if (pa[i].t < pb[j].t) {
            ++i;
        } else if (pb[j].t < pa[i].t) {
            ++j;
        } else {
            out.t.push_back(pa[i].t);
            out.a.push_back(pa[i].v);
            out.b.push_back(pb[j].v);
            ++i;
            ++j;
        }
    }
    return out;
}

double to_days(Timestamp t) { return static_cast<double>(t) / static_cast<double>(kDayMs); }

}  // namespace

CompensationCurve derive_compensation_curve(const Series& strain, const Series& temp,
                                            const CompensationConfig& config) {
    const auto joined = align(strain, temp);
    const double lo = config.ref_temp_c - config.band_half_width_c;
    const double hi = config.ref_temp_c + config.band_half_width_c;

    std::vector<std::pair<double, double>> band;
    for (std::size_t i = 0; i < joined.t.size(); ++i) {
        if (joined.b[i] >= lo && joined.b[i] <= hi) {
            band.emplace_back(to_days(joined.t[i]), joined.a[i]);
        }
    }
    if (band.size() < std::max<std::size_t>(config.min_band_count, 3)) {
        throw DataError("compensation needs at least " +
                        std::to_string(std::max<std::size_t>(config.min_band_count, 3)) +
                        " samples with temperature in [" + std::to_string(lo) + ", " +
                        std::to_string(hi) + "] C, found " + std::to_string(band.size()));
    }
    const std::size_t band_count = band.size();
    const LoessFit trend(std::move(band), config.trend_span);

    std::vector<std::pair<double, double>> residuals;
    residuals.reserve(joined.t.size());
    double t_min = joined.b.front(), t_max = joined.b.front();
    for (std::size_t i = 0; i < joined.t.size(); ++i) {
        residuals.emplace_back(joined.b[i], joined.a[i] - trend(to_days(joined.t[i])));
        t_min = std::min(t_min, joined.b[i]);
        t_max = std::max(t_max, joined.b[i]);
    }

    CompensationCurve curve;
    curve.ref_temp_c = config.ref_temp_c;
    curve.band_half_width_c = config.band_half_width_c;
    curve.span = config.curve_span;
    curve.sample_count = residuals.size();
    curve.band_count = band_count;

    if (t_max == t_min) {
        // No temperature variation to attribute anything to.
        double mean = 0.0;
        for (const auto& r : residuals) {
            mean += r.second;
        }
        curve.grid = {{t_min, mean / static_cast<double>(residuals.size())}};
        return curve;
    }
    const LoessFit fit(std::move(residuals), config.curve_span);
    const std::size_t g = std::max<std::size_t>(config.grid_points, 2);
    curve.grid.reserve(g);
    for (std::size_t i = 0; i < g; ++i) {
        const double x = t_min + (t_max - t_min) * static_cast<double>(i) / static_cast<double>(g - 1);
        curve.grid.emplace_back(x, fit(x));
    }
    return curve;
}

Series apply_compensation(const Series& strain, const Series& temp,
                          const CompensationCurve& curve) {
    const auto joined = align(strain, temp);
    std::vector<Point> out;
    out.reserve(joined.t.size());
    for (std::size_t i = 0; i < joined.t.size(); ++i) {
        out.push_back({joined.t[i], joined.a[i] - curve(joined.b[i])});
    }
    return Series(strain.unit(), std::move(out));
}

std::int64_t local_day(Timestamp t, int tz_offset_min) noexcept {
    const Timestamp local = t + static_cast<Timestamp>(tz_offset_min) * kMinuteMs;
    return local >= 0 ? local / kDayMs : -((-local + kDayMs - 1) / kDayMs);
}

Series daily_median(const Series& series, int tz_offset_min) {
    std::vector<Point> out;
    std::vector<double> bucket;
    std::int64_t current = 0;
    auto flush = [&] {
        if (!bucket.empty()) {
            out.push_back({current * kDayMs, median(bucket)});
            bucket.clear();
        }
    };
    for (const auto& p : series.points()) {
        const auto day = local_day(p.t, tz_offset_min);
        if (!bucket.empty() && day != current) {
            flush();
        }
        current = day;
        bucket.push_back(p.v);
    }
    flush();
    return Series(series.unit(), std::move(out));
}

CorrelationResult correlate_offset(const Series& a, const Series& b) {
    const auto joined = align(a, b);
    const std::size_t n = joined.t.size();
    if (n < 3) {
        throw DataError("correlation needs at least 3 common dates, found " + std::to_string(n));
    }
    CorrelationResult res;
    res.n = n;
    res.r = pearson(joined.a, joined.b);

    double mean_d = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mean_d += joined.b[i] - joined.a[i];
    }
    mean_d /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = joined.b[i] - joined.a[i] - mean_d;
        ss += d * d;
    }
    res.offset = mean_d;
    res.offset_se = std::sqrt(ss / static_cast<double>(n - 1)) / std::sqrt(static_cast<double>(n));
    return res;
}

double strain_to_load(Microstrain strain, const StrutSpec& spec) noexcept {
    return strain * 1e-6 * spec.elastic_modulus_pa * spec.area_m2;
}

YieldResult data_yield(const NodeTrace& trace, const GatewayLog& log, TimeWindow window,
                       std::span<const TimeWindow> outages) {
    auto in_outage = [&](Timestamp t) {
        return std::any_of(outages.begin(), outages.end(),
                           [t](const TimeWindow& w) { return w.contains(t); });
    };
    std::unordered_set<std::int64_t> received;
    for (const auto& r : log) {
        if (r.origin == trace.node) {
            received.insert(r.seq);
        }
    }
    std::size_t expected = 0, got = 0, expected_wo = 0, got_wo = 0;
    for (const auto& s : trace.sent) {
        if (!window.contains(s.t)) {
            continue;
        }
        const bool rx = received.count(s.seq) != 0;
        ++expected;
        got += rx ? 1 : 0;
        if (!in_outage(s.t)) {
            ++expected_wo;
            got_wo += rx ? 1 : 0;
        }
    }
    YieldResult y;
    if (expected > 0) {
        y.yield_pct = 100.0 * static_cast<double>(got) / static_cast<double>(expected);
    }
    if (expected_wo > 0) {
        y.yield_without_outages_pct =
            100.0 * static_cast<double>(got_wo) / static_cast<double>(expected_wo);
    }
    return y;
}

std::vector<std::pair<std::int64_t, double>> daily_pdr(const NodeTrace& trace,
                                                       const GatewayLog& log, int tz_offset_min) {
    std::unordered_set<std::int64_t> received;
    for (const auto& r : log) {
        if (r.origin == trace.node) {
            received.insert(r.seq);
        }
    }
    std::map<std::int64_t, std::pair<std::size_t, std::size_t>> per_day;
    for (const auto& s : trace.sent) {
        auto& [exp, got] = per_day[local_day(s.t, tz_offset_min)];
        ++exp;
        got += received.count(s.seq) ? 1 : 0;
    }
    std::vector<std::pair<std::int64_t, double>> out;
    out.reserve(per_day.size());
    for (const auto& [day, counts] : per_day) {
        out.emplace_back(day, 100.0 * static_cast<double>(counts.second) /
                                  static_cast<double>(counts.first));
    }
    return out;
}

std::optional<double> pearson(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = std::min(x.size(), y.size());
    if (n < 2) {
        return std::nullopt;
    }
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if (sxx <= 0.0 || syy <= 0.0) {
        return std::nullopt;
    }
    return sxy / std::sqrt(sxx * syy);
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size());
    for (std::size_t i = 0; i < idx.size();) {
        std::size_t j = i;
        while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) {
            ++j;
        }
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) {
            ranks[idx[k]] = r;
        }
        i = j + 1;
    }
    return ranks;
}

}  // namespace

std::optional<double> spearman(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = std::min(x.size(), y.size());
    const auto rx = average_ranks(x.first(n));
    const auto ry = average_ranks(y.first(n));
    return pearson(rx, ry);
}

std::optional<double> linear_slope(std::span<const double> x, std::span<const double> y) {
    const std::size_t n = std::min(x.size(), y.size());
    if (n < 2) {
        return std::nullopt;
    }
    const double mx = std::accumulate(x.begin(), x.begin() + n, 0.0) / static_cast<double>(n);
    const double my = std::accumulate(y.begin(), y.begin() + n, 0.0) / static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    if (sxx <= 0.0) {
        return std::nullopt;
    }
    return sxy / sxx;
}

double diurnal_peak_to_peak(const Series& series, int tz_offset_min) {
    const Timestamp off = static_cast<Timestamp>(tz_offset_min) * kMinuteMs;
    auto local_of = [&](Timestamp t) {
        const Timestamp local = t + off;
        const Timestamp day = local >= 0 ? local / kDayMs : (local - kDayMs + 1) / kDayMs;
        return std::pair{day, local - day * kDayMs};
    };
    // Each day's own mean is removed first so steps and trends drop out.
    std::map<Timestamp, std::pair<double, std::size_t>> day_mean;
    for (const auto& p : series.points()) {
        auto& [s, n] = day_mean[local_of(p.t).first];
        s += p.v;
        ++n;
    }
    std::array<double, 24> sum{};
    std::array<std::size_t, 24> count{};
    for (const auto& p : series.points()) {
        const auto [day, tod] = local_of(p.t);
        const auto& [s, n] = day_mean.at(day);
        const auto bin = static_cast<std::size_t>(tod / kHourMs);
        sum[bin] += p.v - s / static_cast<double>(n);
        ++count[bin];
    }
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (std::size_t b = 0; b < 24; ++b) {
        if (count[b] == 0) {
            continue;
        }
        const double m = sum[b] / static_cast<double>(count[b]);
        lo = std::min(lo, m);
        hi = std::max(hi, m);
    }
    return hi >= lo ? hi - lo : 0.0;
}

}  // namespace restructure
