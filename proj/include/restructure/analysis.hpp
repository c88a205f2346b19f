#pragma once

#include "restructure/domain.hpp"
#include "restructure/net_sim.hpp"
#include "restructure/site_model.hpp"

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace restructure {

enum class Unit { Microstrain, Celsius, Newton, Percent, None };

struct Point {
    Timestamp t = 0;
    double v = 0.0;
};

/// Time-ordered values with a unit tag. Timestamps strictly increase.
class Series {
public:
    Series() = default;
    Series(Unit unit, std::vector<Point> points);

    Unit unit() const noexcept { return unit_; }
    const std::vector<Point>& points() const noexcept { return points_; }
    std::size_t size() const noexcept { return points_.size(); }
    bool empty() const noexcept { return points_.empty(); }
    const Point& operator[](std::size_t i) const { return points_[i]; }

    std::vector<double> values() const;

private:
    Unit unit_ = Unit::None;
    std::vector<Point> points_;
};

/// Median of an unsorted sample; even counts average the middle pair.
double median(std::vector<double> values);

/// Centered running median over up to k points, shrinking symmetrically at
/// the edges. Throws ConfigError for even or non-positive k.
Series median_filter(const Series& series, int k);

/// Local polynomial regression (degree 1 by default, or 2) with tricube
/// weights over the ceil(span * n) nearest neighbors of each query.
class LoessFit {
public:
    LoessFit(std::vector<std::pair<double, double>> points, double span, int degree = 1);

    double operator()(double x) const;
    double span() const noexcept { return span_; }
    int degree() const noexcept { return degree_; }
    std::size_t size() const noexcept { return xs_.size(); }
    double min_x() const noexcept { return xs_.front(); }
    double max_x() const noexcept { return xs_.back(); }

private:
    std::optional<double> local_quadratic(double x, std::size_t left, std::size_t right,
                                          const std::vector<double>& w) const;

    std::vector<double> xs_;
    std::vector<double> ys_;
    double span_;
    int degree_;
    std::size_t neighbors_;
};

/// Throws ConfigError for span outside (0, 1], degree other than 1 or 2, or
/// fewer than 3 points, and DataError when every x is equal.
LoessFit loess_fit(std::vector<std::pair<double, double>> points, double span = 0.3,
                   int degree = 1);

struct CompensationConfig {
    double ref_temp_c = 27.0;
    double band_half_width_c = 0.1;
    /// Span of the strain-vs-time trend through the in-band samples.
    double trend_span = 0.3;
    /// Span of the residual-vs-temperature curve.
    double curve_span = 0.3;
    std::size_t min_band_count = 10;
    std::size_t grid_points = 101;
};

/// Residual strain as a function of temperature, tabulated on a grid and
/// linearly interpolated; flat beyond the observed range.
struct CompensationCurve {
    double ref_temp_c = 27.0;
    double band_half_width_c = 0.1;
    double span = 0.3;
    std::size_t sample_count = 0;
    std::size_t band_count = 0;
    std::vector<std::pair<double, double>> grid;  // (temp_c, residual_ue)

    double operator()(double temp_c) const;
};

/// Baseline trend from samples inside the reference band, residuals for all
/// samples against it, then a LOESS of residual on temperature.
CompensationCurve derive_compensation_curve(const Series& strain, const Series& temp,
                                            const CompensationConfig& config = {});

/// strain(t) - curve(temp(t)) at timestamps present in both series.
Series apply_compensation(const Series& strain, const Series& temp,
                          const CompensationCurve& curve);

/// Calendar day index in site-local time.
std::int64_t local_day(Timestamp t, int tz_offset_min) noexcept;

/// One median per local calendar day, stamped day_index * 24 h. Empty days
/// are absent.
Series daily_median(const Series& series, int tz_offset_min);

struct CorrelationResult {
    std::optional<double> r;
    double offset = 0.0;
    double offset_se = 0.0;
    std::size_t n = 0;
};

/// Pearson r over timestamps common to both series, with the mean of (b - a)
/// and its standard error. Throws DataError with fewer than 3 common points.
CorrelationResult correlate_offset(const Series& a, const Series& b);

/// Load in newtons from microstrain, compression positive.
double strain_to_load(Microstrain strain, const StrutSpec& spec) noexcept;

struct YieldResult {
    std::optional<double> yield_pct;
    std::optional<double> yield_without_outages_pct;
};

YieldResult data_yield(const NodeTrace& trace, const GatewayLog& log, TimeWindow window,
                       std::span<const TimeWindow> outages);

/// Daily PDR per local calendar day the node was alive.
std::vector<std::pair<std::int64_t, double>> daily_pdr(const NodeTrace& trace,
                                                       const GatewayLog& log, int tz_offset_min);

std::optional<double> pearson(std::span<const double> x, std::span<const double> y);
std::optional<double> spearman(std::span<const double> x, std::span<const double> y);
/// Least-squares slope of y on x.
std::optional<double> linear_slope(std::span<const double> x, std::span<const double> y);

/// Peak-to-peak of the mean time-of-day profile (hourly bins) after each
/// local day's mean is subtracted, so steps and trends do not leak in.
double diurnal_peak_to_peak(const Series& series, int tz_offset_min);

}  // namespace restructure
