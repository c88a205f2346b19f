#include "restructure/report.hpp"

#include "restructure/csv.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <set>

namespace restructure {

namespace fs = std::filesystem;

ReportOptions ReportOptions::from_scenario(const Scenario& sc) {
    ReportOptions o;
    o.timezone_offset_min = sc.timezone_offset_min;
    o.outages = sc.gateway.outages;
    o.analysis = sc.analysis;
    o.node_profile = sc.profile;
    o.gateway_profile = sc.gateway.profile;
    o.gateway_battery = sc.gateway.battery;
    o.beacon_max_s = sc.protocol.beacon_max_s;
    o.struts = sc.site.struts;
    return o;
}

namespace {

std::string opt(const std::optional<double>& v, int precision) {
    return v ? fmt::format("{:.{}f}", *v, precision) : std::string();
}

Series series_of(std::vector<Point> pts, Unit unit) {
    std::sort(pts.begin(), pts.end(), [](const Point& a, const Point& b) { return a.t < b.t; });
    pts.erase(std::unique(pts.begin(), pts.end(),
                          [](const Point& a, const Point& b) { return a.t == b.t; }),
              pts.end());
    return Series(unit, std::move(pts));
}

}  // namespace

ReportBundle analyze(const RunData& data, const ReportOptions& o) {
    ReportBundle b;
    b.warnings = data.warnings;
    b.node_energy = energy_breakdown(o.node_profile);
    b.split = energy_split(b.node_energy);
    b.node_lifetime_days = predict_node_lifetime(o.node_profile, o.node_battery, 1.0);

    b.gateway.steps = o.gateway_profile.steps;
    b.gateway.charge_per_hour_as = o.gateway_profile.charge_per_hour_as();
    b.gateway.average_power_w = o.gateway_profile.average_power_w();
    auto underated = o.gateway_battery;
    underated.derating = 1.0;
    b.gateway.lifetime_days_underated = predict_gateway_lifetime(o.gateway_profile, underated);
    auto derated = o.gateway_battery;
    derated.derating = o.gateway_battery.derating < 1.0 ? o.gateway_battery.derating : 0.956;
    b.gateway.derating = derated.derating;
    b.gateway.lifetime_days_derated = predict_gateway_lifetime(o.gateway_profile, derated);

    std::map<NodeId, std::vector<StrainSample>> flash;
    for (const auto& s : data.flash) {
        flash[s.node_id].push_back(s);
    }
    std::map<NodeId, std::vector<const StrainSample*>> received;
    GatewayLog log;
    log.reserve(data.received.size());
    for (const auto& a : data.received) {
        received[a.sample.node_id].push_back(&a.sample);
        log.push_back({a.sample.node_id, a.sample.seq, a.sample.t, a.arrival, a.hop_path});
    }
    std::set<NodeId> ids;
    for (const auto& [id, f] : flash) ids.insert(id);
    for (const auto& [id, r] : received) ids.insert(id);

    const Timestamp period = o.node_profile.period_ms;
    const int tz = o.timezone_offset_min;

    for (const NodeId id : ids) {
        const auto info_it = data.nodes.find(id);
        NodeInfo info;
        info.id = id;
        if (info_it != data.nodes.end()) info = info_it->second;

        // Yield and network metrics, judged against the node's own flash.
        auto& f = flash[id];
        std::sort(f.begin(), f.end(),
                  [](const StrainSample& x, const StrainSample& y) { return x.seq < y.seq; });
        if (!f.empty()) {
            const NodeTrace trace = NodeTrace::from_flash(id, f);
            const TimeWindow window{f.front().t, f.back().t + period};
            std::set<std::int64_t> got;
            for (const auto* s : received[id]) got.insert(s->seq);
            YieldRow y;
            y.node = id;
            y.strut_id = info.strut_id;
            y.start = window.start;
            y.end = window.end;
            y.days = static_cast<double>(window.length()) / static_cast<double>(kDayMs);
            y.expected = static_cast<std::int64_t>(f.size());
            for (const auto& s : f) y.received += got.count(s.seq) ? 1 : 0;
            const auto yr = data_yield(trace, log, window, o.outages);
            y.yield_pct = yr.yield_pct.value_or(0.0);
            y.yield_without_outages_pct = yr.yield_without_outages_pct;
            b.yield.push_back(y);

            NetworkRow n;
            n.node = id;
            n.distance_m = info.distance_m;
            n.pdr_pct = compute_pdr(trace, log, window);
            n.mean_attempts = info.mean_attempts;
            if (auto h = data.routing.find(id); h != data.routing.end() && !h->second.empty()) {
                try {
                    n.stability_pct = compute_link_stability(h->second, window, o.beacon_max_s);
                    n.mcp = most_common_parent(h->second, window);
                } catch (const DataError& e) {
                    b.warnings.push_back(fmt::format("node {}: routing metrics: {}", id, e.what()));
                }
            }
            b.network.push_back(n);

            for (const auto& [day, pdr] : daily_pdr(trace, log, tz)) {
                b.daily_pdr.emplace_back(id, day, pdr);
            }
        } else {
            b.warnings.push_back(fmt::format("node {}: no flash samples; yield not computed", id));
        }

        // Strain pipeline on what reached the gateway.
        try {
            std::vector<Point> sp, tp;
            for (const auto* s : received[id]) {
                sp.push_back({s->t, s->strain});
                tp.push_back({s->t, s->temp_c});
            }
            if (sp.empty()) {
                throw DataError("no samples reached the gateway");
            }
            const Series strain = series_of(std::move(sp), Unit::Microstrain);
            const Series temp = series_of(std::move(tp), Unit::Celsius);
            const auto curve = derive_compensation_curve(strain, temp, o.analysis.compensation);
            const Series comp = apply_compensation(strain, temp, curve);

            CompensationRow c;
            c.node = id;
            c.samples = curve.sample_count;
            c.band_samples = curve.band_count;
            c.p2p_raw_ue = diurnal_peak_to_peak(strain, tz);
            c.p2p_compensated_ue = diurnal_peak_to_peak(comp, tz);
            c.reduction_pct =
                c.p2p_raw_ue > 0.0 ? 100.0 * (1.0 - c.p2p_compensated_ue / c.p2p_raw_ue) : 0.0;
            const auto temps = temp.values();
            const auto comp_values = comp.values();
            c.r_compensated_temp = pearson(comp_values, temps);
            std::vector<double> fitted;
            fitted.reserve(temps.size());
            for (double t : temps) fitted.push_back(curve(t));
            c.curve_slope_ue_per_c = linear_slope(temps, fitted);
            b.compensation.push_back(c);
            b.curves.emplace(id, curve);

            const Series raw_daily = daily_median(strain, tz);
            const Series comp_daily = daily_median(comp, tz);
            std::optional<Series> vw_daily;
            if (!info.strut_id.empty()) {
                std::vector<Point> vp;
                for (const auto& r : data.reference) {
                    if (r.strut_id == info.strut_id && r.instrument == "vw") {
                        vp.push_back({r.t, r.value});
                    }
                }
                if (!vp.empty()) {
                    vw_daily = daily_median(
                        median_filter(series_of(std::move(vp), Unit::Microstrain),
                                      o.analysis.median_filter_k),
                        tz);
                }
            }
            const StrutSpec* spec = nullptr;
            if (auto s = o.struts.find(info.strut_id); s != o.struts.end()) spec = &s->second;
            std::map<Timestamp, double> vw_by_day;
            if (vw_daily) {
                for (const auto& p : vw_daily->points()) vw_by_day[p.t] = p.v;
            }
            for (std::size_t i = 0; i < comp_daily.size(); ++i) {
                DailyRow d;
                d.node = id;
                d.day = comp_daily[i].t / kDayMs;
                d.wbf_raw_ue = raw_daily[i].v;
                d.wbf_compensated_ue = comp_daily[i].v;
                if (auto v = vw_by_day.find(comp_daily[i].t); v != vw_by_day.end()) {
                    d.vw_ue = v->second;
                }
                if (spec) d.load_kn = strain_to_load(comp_daily[i].v, *spec) / 1000.0;
                b.daily.push_back(d);
            }
            if (vw_daily) {
                try {
                    const auto cr = correlate_offset(*vw_daily, comp_daily);
                    b.correlation.push_back(
                        {id, info.strut_id, cr.n, cr.r, cr.offset, cr.offset_se});
                } catch (const DataError& e) {
                    b.warnings.push_back(fmt::format("node {}: correlation: {}", id, e.what()));
                }
            }
        } catch (const std::exception& e) {
            b.warnings.push_back(fmt::format("node {}: strain pipeline skipped: {}", id, e.what()));
        }
    }
    return b;
}

void write_report(const ReportBundle& b, const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw DataError("cannot create output directory " + dir.string() + ": " + ec.message());
    }
    auto emit = [&](const char* name, const std::string& header, auto&& rows) {
        fmt::memory_buffer buf;
        fmt::format_to(std::back_inserter(buf), "{}\n", header);
        rows(buf);
        csv::write_atomically(dir / name, fmt::to_string(buf));
    };
    using Buf = fmt::memory_buffer;

    emit("node_energy.csv", "operation,duration_ms,current_ma,power_mw,percent", [&](Buf& buf) {
        for (const auto& r : b.node_energy.rows) {
            fmt::format_to(std::back_inserter(buf), "{},{},{},{:.6f},{:.3f}\n", r.operation,
                           r.duration_ms, r.current_ma, r.power_mw, r.percent);
        }
        fmt::format_to(std::back_inserter(buf), "total,,,{:.6f},100.000\n", b.node_energy.total_mw);
    });
    emit("gateway_budget.csv", "item,duration_s,current_a,charge_as", [&](Buf& buf) {
        for (const auto& s : b.gateway.steps) {
            fmt::format_to(std::back_inserter(buf), "{},{},{},{:.3f}\n", s.name, s.duration_s,
                           s.current_a, s.duration_s * s.current_a);
        }
        fmt::format_to(std::back_inserter(buf), "total_per_hour,3600,,{:.3f}\n",
                       b.gateway.charge_per_hour_as);
        fmt::format_to(std::back_inserter(buf), "average_power_w,,,{:.4f}\n",
                       b.gateway.average_power_w);
        fmt::format_to(std::back_inserter(buf), "lifetime_days_derating_1,,,{:.2f}\n",
                       b.gateway.lifetime_days_underated);
        fmt::format_to(std::back_inserter(buf), "lifetime_days_derating_{:.3f},,,{:.2f}\n",
                       b.gateway.derating, b.gateway.lifetime_days_derated);
    });
    emit("yield.csv",
         "node_id,strut_id,start_ts_ms,end_ts_ms,days,expected,received,yield_pct,"
         "yield_wo_outages_pct",
         [&](Buf& buf) {
             for (const auto& y : b.yield) {
                 fmt::format_to(std::back_inserter(buf), "{},{},{},{},{:.2f},{},{},{:.2f},{}\n",
                                y.node, y.strut_id, y.start, y.end, y.days, y.expected,
                                y.received, y.yield_pct, opt(y.yield_without_outages_pct, 2));
             }
         });
    emit("network.csv",
         "node_id,distance_m,pdr_pct,link_stability_pct,most_common_parent,mcp_pct,mean_attempts",
         [&](Buf& buf) {
             for (const auto& n : b.network) {
                 fmt::format_to(std::back_inserter(buf), "{},{},{},{},{},{},{}\n", n.node,
                                n.distance_m, opt(n.pdr_pct, 2), opt(n.stability_pct, 2),
                                n.mcp ? parent_label(n.mcp->parent) : std::string(),
                                n.mcp ? fmt::format("{:.2f}", n.mcp->percent) : std::string(),
                                opt(n.mean_attempts, 4));
             }
         });
    emit("daily_pdr.csv", "node_id,day,pdr_pct", [&](Buf& buf) {
        for (const auto& [node, day, pdr] : b.daily_pdr) {
            fmt::format_to(std::back_inserter(buf), "{},{},{:.2f}\n", node, day, pdr);
        }
    });
    emit("compensation.csv",
         "node_id,samples,band_samples,p2p_raw_ue,p2p_compensated_ue,reduction_pct,"
         "r_compensated_temp,curve_slope_ue_per_c",
         [&](Buf& buf) {
             for (const auto& c : b.compensation) {
                 fmt::format_to(std::back_inserter(buf), "{},{},{},{:.3f},{:.3f},{:.2f},{},{}\n",
                                c.node, c.samples, c.band_samples, c.p2p_raw_ue,
                                c.p2p_compensated_ue, c.reduction_pct,
                                opt(c.r_compensated_temp, 4), opt(c.curve_slope_ue_per_c, 4));
             }
         });
    emit("compensation_curves.csv", "node_id,temp_c,residual_ue", [&](Buf& buf) {
        for (const auto& [node, curve] : b.curves) {
            for (const auto& [t, r] : curve.grid) {
                fmt::format_to(std::back_inserter(buf), "{},{:.4f},{:.4f}\n", node, t, r);
            }
        }
    });
    emit("daily_median.csv", "node_id,day,wbf_raw_ue,wbf_compensated_ue,vw_ue,load_kn",
         [&](Buf& buf) {
             for (const auto& d : b.daily) {
                 fmt::format_to(std::back_inserter(buf), "{},{},{:.3f},{:.3f},{},{}\n", d.node,
                                d.day, d.wbf_raw_ue, d.wbf_compensated_ue, opt(d.vw_ue, 3),
                                opt(d.load_kn, 3));
             }
         });
    emit("correlation.csv", "node_id,strut_id,n_days,pearson_r,offset_ue,offset_se_ue",
         [&](Buf& buf) {
             for (const auto& c : b.correlation) {
                 fmt::format_to(std::back_inserter(buf), "{},{},{},{},{:.3f},{:.3f}\n", c.node,
                                c.strut_id, c.days, opt(c.r, 4), c.offset_ue, c.offset_se_ue);
             }
         });
    csv::write_atomically(dir / "summary.txt", render_summary(b));
}

std::string render_summary(const ReportBundle& b) {
    fmt::memory_buffer buf;
    auto out = std::back_inserter(buf);

    fmt::format_to(out, "Node energy (sense-and-send, per 300 s cycle)\n");
    fmt::format_to(out, "  {:<16} {:>10} {:>10} {:>10} {:>7}\n", "operation", "ms", "mA", "mW",
                   "%");
    for (const auto& r : b.node_energy.rows) {
        fmt::format_to(out, "  {:<16} {:>10} {:>10.1f} {:>10.5f} {:>7.2f}\n", r.operation,
                       r.duration_ms, r.current_ma, r.power_mw, r.percent);
    }
    fmt::format_to(out, "  {:<16} {:>10} {:>10} {:>10.4f}\n", "total", "", "",
                   b.node_energy.total_mw);
    fmt::format_to(out, "  sensing {:.1f}%  storage {:.2f}%  network {:.1f}%\n", b.split.sensing_pct,
                   b.split.storage_pct, b.split.network_pct);
    fmt::format_to(out, "  predicted node lifetime: {:.1f} days\n\n", b.node_lifetime_days);

    fmt::format_to(out, "Gateway hourly budget\n");
    for (const auto& s : b.gateway.steps) {
        fmt::format_to(out, "  {:<12} {:>6} s {:>7.3f} A {:>9.2f} As\n", s.name, s.duration_s,
                       s.current_a, s.duration_s * s.current_a);
    }
    fmt::format_to(out, "  total {:.2f} As/h, {:.4f} W\n", b.gateway.charge_per_hour_as,
                   b.gateway.average_power_w);
    fmt::format_to(out, "  lifetime {:.1f} days at derating 1.0, {:.1f} days at derating {:.3f}\n\n",
                   b.gateway.lifetime_days_underated, b.gateway.lifetime_days_derated,
                   b.gateway.derating);

    fmt::format_to(out, "Deployment summary\n");
    fmt::format_to(out, "  {:>5} {:>6} {:>9} {:>9} {:>8} {:>9} {:>12}\n", "node", "strut", "start d",
                   "days", "expected", "yield %", "w/o outages");
    for (const auto& y : b.yield) {
        fmt::format_to(out, "  {:>5} {:>6} {:>9.2f} {:>9.2f} {:>8} {:>9.1f} {:>12}\n", y.node,
                       y.strut_id, static_cast<double>(y.start) / kDayMs, y.days, y.expected,
                       y.yield_pct, opt(y.yield_without_outages_pct, 1));
    }
    fmt::format_to(out, "\nNetwork configuration\n");
    fmt::format_to(out, "  {:>5} {:>8} {:>8} {:>8} {:>8} {:>10} {:>9}\n", "node", "dist m",
                   "PDR %", "parent", "MCP %", "stability", "attempts");
    for (const auto& n : b.network) {
        fmt::format_to(out, "  {:>5} {:>8.2f} {:>8} {:>8} {:>8} {:>10} {:>9}\n", n.node,
                       n.distance_m, opt(n.pdr_pct, 1),
                       n.mcp ? parent_label(n.mcp->parent) : std::string("-"),
                       n.mcp ? fmt::format("{:.1f}", n.mcp->percent) : std::string("-"),
                       opt(n.stability_pct, 1), opt(n.mean_attempts, 3));
    }
    fmt::format_to(out, "\nThermal compensation\n");
    fmt::format_to(out, "  {:>5} {:>9} {:>10} {:>10} {:>9} {:>8} {:>10}\n", "node", "in band",
                   "p2p raw", "p2p comp", "reduced%", "r(T)", "slope/C");
    for (const auto& c : b.compensation) {
        fmt::format_to(out, "  {:>5} {:>9} {:>10.2f} {:>10.2f} {:>9.1f} {:>8} {:>10}\n", c.node,
                       c.band_samples, c.p2p_raw_ue, c.p2p_compensated_ue, c.reduction_pct,
                       opt(c.r_compensated_temp, 3), opt(c.curve_slope_ue_per_c, 2));
    }
    fmt::format_to(out, "\nDaily median WBF vs VW\n");
    fmt::format_to(out, "  {:>5} {:>6} {:>6} {:>8} {:>18}\n", "node", "strut", "days", "r",
                   "offset ue");
    for (const auto& c : b.correlation) {
        fmt::format_to(out, "  {:>5} {:>6} {:>6} {:>8} {:>18}\n", c.node, c.strut_id, c.days,
                       opt(c.r, 2), fmt::format("{:.1f} +/- {:.1f}", c.offset_ue, c.offset_se_ue));
    }
    if (!b.warnings.empty()) {
        fmt::format_to(out, "\nWarnings\n");
        for (const auto& w : b.warnings) {
            fmt::format_to(out, "  {}\n", w);
        }
    }
    return fmt::to_string(buf);
}

}  // namespace restructure
