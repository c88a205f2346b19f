#include "restructure/scenario.hpp"

#include "json.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace restructure {

using nlohmann::json;

const NodePlacement* Scenario::node(NodeId id) const noexcept {
    for (const auto& n : nodes) {
        if (n.id == id) {
            return &n;
        }
    }
    return nullptr;
}

namespace {

Timestamp days_to_ms(double days) { return static_cast<Timestamp>(std::llround(days * kDayMs)); }

/// Walks the document collecting every problem instead of stopping at the
/// first one.
class Reader {
public:
    std::vector<std::string> errors;

    void fail(const std::string& path, const std::string& msg) {
        errors.push_back(path + ": " + msg);
    }

    bool object(const json& j, const std::string& path) {
        if (!j.is_object()) {
            fail(path, "expected an object");
            return false;
        }
        return true;
    }

    bool array(const json& j, const std::string& path) {
        if (!j.is_array()) {
            fail(path, "expected an array");
            return false;
        }
        return true;
    }

    void known_keys(const json& j, const std::string& path, std::initializer_list<const char*> keys) {
        if (!j.is_object()) {
            return;
        }
        const std::set<std::string> allowed(keys.begin(), keys.end());
        for (const auto& [k, v] : j.items()) {
            if (!allowed.count(k)) {
                fail(path + "." + k, "unknown field");
            }
        }
    }

    double number(const json& j, const std::string& path, const char* key, double fallback) {
        if (!j.contains(key)) {
            return fallback;
        }
        const auto& v = j.at(key);
        if (!v.is_number()) {
            fail(path + "." + key, "expected a number");
            return fallback;
        }
        const double d = v.get<double>();
        if (!std::isfinite(d)) {
            fail(path + "." + key, "must be finite");
            return fallback;
        }
        return d;
    }

    std::optional<double> required_number(const json& j, const std::string& path, const char* key) {
        if (!j.contains(key)) {
            fail(path + "." + key, "required");
            return std::nullopt;
        }
        const auto before = errors.size();
        const double d = number(j, path, key, 0.0);
        return errors.size() == before ? std::optional<double>(d) : std::nullopt;
    }

    std::int64_t integer(const json& j, const std::string& path, const char* key,
                         std::int64_t fallback) {
        if (!j.contains(key)) {
            return fallback;
        }
        const auto& v = j.at(key);
        if (!v.is_number_integer()) {
            fail(path + "." + key, "expected an integer");
            return fallback;
        }
        return v.get<std::int64_t>();
    }

    bool boolean(const json& j, const std::string& path, const char* key, bool fallback) {
        if (!j.contains(key)) {
            return fallback;
        }
        if (!j.at(key).is_boolean()) {
            fail(path + "." + key, "expected true or false");
            return fallback;
        }
        return j.at(key).get<bool>();
    }

    std::string string(const json& j, const std::string& path, const char* key,
                       const std::string& fallback) {
        if (!j.contains(key)) {
            return fallback;
        }
        if (!j.at(key).is_string()) {
            fail(path + "." + key, "expected a string");
            return fallback;
        }
        return j.at(key).get<std::string>();
    }

    /// Node reference: a positive integer, or "sink" / 0 for the sink.
    std::optional<NodeId> node_ref(const json& j, const std::string& path, const char* key) {
        if (!j.contains(key)) {
            fail(path + "." + key, "required");
            return std::nullopt;
        }
        const auto& v = j.at(key);
        if (v.is_string() && v.get<std::string>() == "sink") {
            return kSinkId;
        }
        if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
            return static_cast<NodeId>(v.get<std::int64_t>());
        }
        fail(path + "." + key, "expected a node id or \"sink\"");
        return std::nullopt;
    }

    void check(bool ok, const std::string& path, const std::string& msg) {
        if (!ok) {
            fail(path, msg);
        }
    }
};

std::string at(const std::string& path, std::size_t i) {
    return path + "[" + std::to_string(i) + "]";
}

BatteryModel read_battery(Reader& r, const json& j, const std::string& path,
                          const BatteryModel& fallback) {
    if (!r.object(j, path)) {
        return fallback;
    }
    r.known_keys(j, path,
                 {"capacity_wh", "supply_voltage", "derating", "cells", "amp_hours", "cell_voltage"});
    BatteryModel b = fallback;
    if (j.contains("cells") || j.contains("amp_hours") || j.contains("cell_voltage")) {
        const auto cells = r.integer(j, path, "cells", 1);
        const double ah = r.number(j, path, "amp_hours", 0.0);
        const double cv = r.number(j, path, "cell_voltage", 0.0);
        r.check(cells >= 1, path + ".cells", "must be >= 1");
        r.check(ah > 0.0, path + ".amp_hours", "must be > 0");
        r.check(cv > 0.0, path + ".cell_voltage", "must be > 0");
        r.check(!j.contains("capacity_wh"), path,
                "give either capacity_wh or cells/amp_hours/cell_voltage, not both");
        b.capacity_wh = static_cast<double>(cells) * ah * cv;
    } else {
        b.capacity_wh = r.number(j, path, "capacity_wh", b.capacity_wh);
    }
    b.supply_voltage = r.number(j, path, "supply_voltage", b.supply_voltage);
    b.derating = r.number(j, path, "derating", b.derating);
    try {
        b.validate();
    } catch (const ConfigError& e) {
        r.fail(path, e.what());
    }
    return b;
}

std::vector<TimeWindow> read_windows(Reader& r, const json& j, const std::string& path) {
    std::vector<TimeWindow> out;
    if (!r.array(j, path)) {
        return out;
    }
    for (std::size_t i = 0; i < j.size(); ++i) {
        const auto p = at(path, i);
        if (!r.object(j[i], p)) {
            continue;
        }
        r.known_keys(j[i], p, {"start_day", "end_day"});
        const auto s = r.required_number(j[i], p, "start_day");
        const auto e = r.required_number(j[i], p, "end_day");
        if (s && e) {
            if (*e <= *s) {
                r.fail(p, "end_day must be after start_day");
            } else {
                out.push_back({days_to_ms(*s), days_to_ms(*e)});
            }
        }
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.start < b.start; });
    for (std::size_t i = 1; i < out.size(); ++i) {
        if (out[i].start < out[i - 1].end) {
            r.fail(path, "windows overlap");
        }
    }
    return out;
}

LinkModel read_link_fields(Reader& r, const json& j, const std::string& path, LinkModel m) {
    m.base_success = r.number(j, path, "base_success", m.base_success);
    m.bad_success = r.number(j, path, "bad_success", m.bad_success);
    m.p_good_to_bad = r.number(j, path, "p_good_to_bad", m.p_good_to_bad);
    m.p_bad_to_good = r.number(j, path, "p_bad_to_good", m.p_bad_to_good);
    m.distance_m = r.number(j, path, "distance_m", m.distance_m);
    try {
        m.validate();
    } catch (const ConfigError& e) {
        r.fail(path, e.what());
    }
    return m;
}

EnergyProfile read_profile(Reader& r, const json& j, const std::string& path) {
    EnergyProfile p;
    if (!r.object(j, path)) {
        return default_node_profile();
    }
    r.known_keys(j, path, {"steps", "idle_current_ma", "period_ms", "supply_voltage"});
    p.idle_current_ma = r.number(j, path, "idle_current_ma", 0.0);
    p.period_ms = r.integer(j, path, "period_ms", kCyclePeriodMs);
    p.supply_voltage = r.number(j, path, "supply_voltage", 3.0);
    if (j.contains("steps") && r.array(j["steps"], path + ".steps")) {
        for (std::size_t i = 0; i < j["steps"].size(); ++i) {
            const auto sp = at(path + ".steps", i);
            const auto& s = j["steps"][i];
            if (!r.object(s, sp)) {
                continue;
            }
            r.known_keys(s, sp, {"operation", "duration_ms", "current_ma"});
            p.steps.push_back({r.string(s, sp, "operation", ""), r.number(s, sp, "duration_ms", 0.0),
                               r.number(s, sp, "current_ma", 0.0)});
        }
    }
    r.check(p.period_ms > 0, path + ".period_ms", "must be > 0");
    try {
        p.validate();
    } catch (const ConfigError& e) {
        r.fail(path, e.what());
    }
    return p;
}

ConstructionKind parse_kind(Reader& r, const std::string& s, const std::string& path) {
    if (s == "install_strut") return ConstructionKind::InstallStrut;
    if (s == "preload") return ConstructionKind::Preload;
    if (s == "excavation_stage") return ConstructionKind::ExcavationStage;
    r.fail(path, "unknown kind '" + s + "' (install_strut | preload | excavation_stage)");
    return ConstructionKind::ExcavationStage;
}

}  // namespace

Scenario parse_scenario(const std::string& json_text, const std::filesystem::path& base_dir) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("scenario is not valid JSON: ") + e.what());
    }
    Reader r;
    Scenario sc;
    const std::string root = "$";
    if (!r.object(doc, root)) {
        throw ConfigError(r.errors.front());
    }
    r.known_keys(doc, root,
                 {"seed", "start_date", "duration_days", "timezone_offset_min", "environment",
                  "struts", "construction", "reference_period_s", "energy_profile",
                  "energy_profile_csv", "nodes", "links", "link_changes", "protocol", "gateway",
                  "analysis", "description"});

    if (!doc.contains("seed")) {
        r.fail("$.seed", "required");
    } else if (!doc["seed"].is_number_unsigned()) {
        r.fail("$.seed", "expected a non-negative integer");
    } else {
        sc.seed = doc["seed"].get<std::uint64_t>();
    }
    sc.start_date = r.string(doc, root, "start_date", "");
    const double duration_days = r.number(doc, root, "duration_days", 0.0);
    r.check(duration_days >= 0.0, "$.duration_days", "must be >= 0");
    sc.duration_ms = days_to_ms(std::max(duration_days, 0.0));
    sc.timezone_offset_min = static_cast<int>(r.integer(doc, root, "timezone_offset_min", 0));
    r.check(std::abs(sc.timezone_offset_min) <= 14 * 60, "$.timezone_offset_min",
            "must lie within +/-840");
    const auto ref_period_s = r.integer(doc, root, "reference_period_s", 3600);
    r.check(ref_period_s > 0, "$.reference_period_s", "must be > 0");
    sc.reference_period_ms = std::max<std::int64_t>(ref_period_s, 1) * kSecondMs;

    // Environment.
    auto& env = sc.site.env;
    if (doc.contains("environment") && r.object(doc["environment"], "$.environment")) {
        const auto& e = doc["environment"];
        const std::string p = "$.environment";
        r.known_keys(e, p,
                     {"t_mean_c", "t_amplitude_c", "t_peak_hour", "rh_mean_pct", "rh_amplitude_pct",
                      "noise_sd_c"});
        env.t_mean_c = r.number(e, p, "t_mean_c", env.t_mean_c);
        env.t_amplitude_c = r.number(e, p, "t_amplitude_c", env.t_amplitude_c);
        env.t_peak_time_s = r.number(e, p, "t_peak_hour", env.t_peak_time_s / 3600.0) * 3600.0;
        env.rh_mean_pct = r.number(e, p, "rh_mean_pct", env.rh_mean_pct);
        env.rh_amplitude_pct = r.number(e, p, "rh_amplitude_pct", env.rh_amplitude_pct);
        env.noise_sd_c = r.number(e, p, "noise_sd_c", env.noise_sd_c);
    }
    env.noise_seed = sc.seed;
    try {
        env.validate();
    } catch (const ConfigError& e) {
        r.fail("$.environment", e.what());
    }

    // Struts and their reference instruments.
    if (doc.contains("struts") && r.array(doc["struts"], "$.struts")) {
        for (std::size_t i = 0; i < doc["struts"].size(); ++i) {
            const auto p = at("$.struts", i);
            const auto& s = doc["struts"][i];
            if (!r.object(s, p)) {
                continue;
            }
            r.known_keys(s, p,
                         {"id", "elastic_modulus_pa", "area_m2", "thermal_coeff_ue_per_c",
                          "ref_temp_c", "vw", "load_cell"});
            StrutSpec spec;
            spec.strut_id = r.string(s, p, "id", "");
            spec.elastic_modulus_pa = r.number(s, p, "elastic_modulus_pa", spec.elastic_modulus_pa);
            spec.area_m2 = r.number(s, p, "area_m2", spec.area_m2);
            spec.thermal_coeff_ue_per_c =
                r.number(s, p, "thermal_coeff_ue_per_c", spec.thermal_coeff_ue_per_c);
            spec.ref_temp_c = r.number(s, p, "ref_temp_c", spec.ref_temp_c);
            if (spec.strut_id.empty()) {
                r.fail(p + ".id", "required");
                continue;
            }
            try {
                spec.validate();
            } catch (const ConfigError& e) {
                r.fail(p, e.what());
            }
            StrutInstruments inst;
            inst.load_cell = r.boolean(s, p, "load_cell", false);
            if (s.contains("vw") && r.object(s["vw"], p + ".vw")) {
                const auto& v = s["vw"];
                r.known_keys(v, p + ".vw", {"base_sd_ue", "spike_probability", "spike_scale_ue"});
                VWNoiseModel noise;
                noise.base_sd_ue = r.number(v, p + ".vw", "base_sd_ue", 0.0);
                noise.spike_probability = r.number(v, p + ".vw", "spike_probability", 0.0);
                noise.spike_scale_ue = r.number(v, p + ".vw", "spike_scale_ue", 0.0);
                try {
                    noise.validate();
                } catch (const ConfigError& e) {
                    r.fail(p + ".vw", e.what());
                }
                inst.vw = noise;
            }
            if (!sc.site.struts.emplace(spec.strut_id, spec).second) {
                r.fail(p + ".id", "duplicate strut id '" + spec.strut_id + "'");
            }
            sc.instruments[spec.strut_id] = inst;
        }
    }

    // Construction schedule.
    std::vector<ConstructionEvent> events;
    if (doc.contains("construction") && r.array(doc["construction"], "$.construction")) {
        for (std::size_t i = 0; i < doc["construction"].size(); ++i) {
            const auto p = at("$.construction", i);
            const auto& e = doc["construction"][i];
            if (!r.object(e, p)) {
                continue;
            }
            r.known_keys(e, p, {"day", "kind", "strut", "load_kn"});
            const auto day = r.required_number(e, p, "day");
            ConstructionEvent ev;
            ev.kind = parse_kind(r, r.string(e, p, "kind", ""), p + ".kind");
            ev.strut_id = r.string(e, p, "strut", "");
            ev.load_delta_n = r.number(e, p, "load_kn", 0.0) * 1000.0;
            if (!sc.site.struts.count(ev.strut_id)) {
                r.fail(p + ".strut", "unknown strut '" + ev.strut_id + "'");
            }
            if (day) {
                r.check(*day >= 0.0, p + ".day", "must be >= 0");
                ev.t = days_to_ms(*day);
                events.push_back(ev);
            }
        }
    }
    try {
        sc.site.schedule = ConstructionSchedule(events);
    } catch (const ConfigError& e) {
        r.fail("$.construction", e.what());
    }

    // Energy profile.
    if (doc.contains("energy_profile") && doc.contains("energy_profile_csv")) {
        r.fail("$", "give energy_profile or energy_profile_csv, not both");
    }
    if (doc.contains("energy_profile")) {
        sc.profile = read_profile(r, doc["energy_profile"], "$.energy_profile");
    } else if (doc.contains("energy_profile_csv")) {
        const auto rel = r.string(doc, root, "energy_profile_csv", "");
        std::ifstream in(base_dir / rel);
        if (!in) {
            r.fail("$.energy_profile_csv", "cannot open '" + (base_dir / rel).string() + "'");
        } else {
            try {
                sc.profile = read_energy_profile_csv(in);
            } catch (const std::exception& e) {
                r.fail("$.energy_profile_csv", e.what());
            }
        }
    }

    // Nodes.
    std::set<NodeId> node_ids;
    if (doc.contains("nodes") && r.array(doc["nodes"], "$.nodes")) {
        for (std::size_t i = 0; i < doc["nodes"].size(); ++i) {
            const auto p = at("$.nodes", i);
            const auto& n = doc["nodes"][i];
            if (!r.object(n, p)) {
                continue;
            }
            r.known_keys(n, p,
                         {"id", "strut", "level", "distance_m", "install_day", "battery",
                          "apparent", "debond", "relay_receive_factor"});
            NodePlacement node;
            if (!n.contains("id")) {
                r.fail(p + ".id", "required");
                continue;
            }
            node.id = static_cast<NodeId>(r.integer(n, p, "id", 0));
            if (node.id <= 0) {
                r.fail(p + ".id", "must be a positive integer (0 is the sink)");
            } else if (!node_ids.insert(node.id).second) {
                r.fail(p + ".id", "duplicate node id " + std::to_string(node.id));
            }
            node.strut_id = r.string(n, p, "strut", "");
            if (!sc.site.struts.count(node.strut_id)) {
                r.fail(p + ".strut", "unknown strut '" + node.strut_id + "'");
            }
            node.level = static_cast<int>(r.integer(n, p, "level", 1));
            node.distance_m = r.number(n, p, "distance_m", 1.0);
            r.check(node.distance_m > 0.0, p + ".distance_m", "must be > 0");
            const double install = r.number(n, p, "install_day", 0.0);
            r.check(install >= 0.0, p + ".install_day", "must be >= 0");
            node.installed_at = days_to_ms(install);
            if (n.contains("battery")) {
                node.battery = read_battery(r, n["battery"], p + ".battery", default_node_battery());
            }
            if (n.contains("apparent") && r.object(n["apparent"], p + ".apparent")) {
                const auto& a = n["apparent"];
                const auto ap = p + ".apparent";
                r.known_keys(a, ap, {"a1_ue_per_c", "a2_ue_per_c2", "hysteresis_ue", "ref_temp_c"});
                node.apparent.a1_ue_per_c = r.number(a, ap, "a1_ue_per_c", 0.0);
                node.apparent.a2_ue_per_c2 = r.number(a, ap, "a2_ue_per_c2", 0.0);
                node.apparent.hysteresis_ue = r.number(a, ap, "hysteresis_ue", 0.0);
                node.apparent.ref_temp_c = r.number(a, ap, "ref_temp_c", 27.0);
            }
            if (n.contains("debond") && r.object(n["debond"], p + ".debond")) {
                const auto& d = n["debond"];
                const auto dp = p + ".debond";
                r.known_keys(d, dp,
                             {"start_day", "coupling", "wander_amplitude_ue", "wander_period_days"});
                DebondFault f;
                f.start = days_to_ms(r.number(d, dp, "start_day", 0.0));
                f.coupling = r.number(d, dp, "coupling", f.coupling);
                f.wander_amplitude_ue = r.number(d, dp, "wander_amplitude_ue", f.wander_amplitude_ue);
                f.wander_period_days = r.number(d, dp, "wander_period_days", f.wander_period_days);
                r.check(f.coupling >= 0.0 && f.coupling <= 1.0, dp + ".coupling",
                        "must lie in [0, 1]");
                r.check(f.wander_period_days > 0.0, dp + ".wander_period_days", "must be > 0");
                node.debond = f;
            }
            node.relay_receive_factor = r.number(n, p, "relay_receive_factor", 1.0);
            r.check(node.relay_receive_factor >= 0.0, p + ".relay_receive_factor", "must be >= 0");
            if (const auto strut_install = sc.site.schedule.installed_at(node.strut_id);
                strut_install && node.installed_at < *strut_install) {
                r.fail(p + ".install_day", "node installed before its strut");
            }
            sc.nodes.push_back(node);
        }
    }

    // Links.
    auto known_endpoint = [&](NodeId id) { return id == kSinkId || node_ids.count(id) != 0; };
    std::set<std::pair<NodeId, NodeId>> link_keys;
    auto read_link = [&](const json& l, const std::string& p, bool allow_symmetric,
                         std::vector<LinkModel>& out) {
        if (!r.object(l, p)) {
            return;
        }
        if (allow_symmetric) {
            r.known_keys(l, p,
                         {"from", "to", "base_success", "bad_success", "p_good_to_bad",
                          "p_bad_to_good", "distance_m", "symmetric"});
        } else {
            r.known_keys(l, p,
                         {"day", "from", "to", "base_success", "bad_success", "p_good_to_bad",
                          "p_bad_to_good", "distance_m"});
        }
        const auto from = r.node_ref(l, p, "from");
        const auto to = r.node_ref(l, p, "to");
        if (!from || !to) {
            return;
        }
        for (auto [id, key] : {std::pair{*from, "from"}, std::pair{*to, "to"}}) {
            if (!known_endpoint(id)) {
                r.fail(p + "." + key, "unknown node " + std::to_string(id));
            }
        }
        if (*from == kSinkId) {
            r.fail(p + ".from", "the sink never sends data; give node->sink links");
            return;
        }
        LinkModel m;
        m.from = *from;
        m.to = *to;
        m = read_link_fields(r, l, p, m);
        out.push_back(m);
        if (allow_symmetric && r.boolean(l, p, "symmetric", false) && m.to != kSinkId) {
            LinkModel back = m;
            std::swap(back.from, back.to);
            out.push_back(back);
        }
    };
    if (doc.contains("links") && r.array(doc["links"], "$.links")) {
        for (std::size_t i = 0; i < doc["links"].size(); ++i) {
            std::vector<LinkModel> got;
            read_link(doc["links"][i], at("$.links", i), true, got);
            for (const auto& m : got) {
                if (!link_keys.insert({m.from, m.to}).second) {
                    r.fail(at("$.links", i), "duplicate link " + std::to_string(m.from) + "->" +
                                                 std::to_string(m.to));
                } else {
                    sc.links.push_back(m);
                }
            }
        }
    }
    if (doc.contains("link_changes") && r.array(doc["link_changes"], "$.link_changes")) {
        for (std::size_t i = 0; i < doc["link_changes"].size(); ++i) {
            const auto p = at("$.link_changes", i);
            const auto& l = doc["link_changes"][i];
            std::vector<LinkModel> got;
            read_link(l, p, false, got);
            const auto day = r.required_number(l, p, "day");
            if (day && !got.empty()) {
                // Fields not given keep the link's current values.
                LinkModel base = got.front();
                for (const auto& m : sc.links) {
                    if (m.from == base.from && m.to == base.to) {
                        base = read_link_fields(r, l, p, m);
                    }
                }
                sc.link_changes.push_back({days_to_ms(*day), base});
            }
        }
        std::stable_sort(sc.link_changes.begin(), sc.link_changes.end(),
                         [](const auto& a, const auto& b) { return a.t < b.t; });
    }

    // Protocol.
    if (doc.contains("protocol") && r.object(doc["protocol"], "$.protocol")) {
        const auto& pr = doc["protocol"];
        const std::string p = "$.protocol";
        r.known_keys(pr, p,
                     {"max_retries", "beacon_min_s", "beacon_max_s", "channel", "ewma_alpha",
                      "parent_switch_threshold", "estimator_window"});
        auto& c = sc.protocol;
        c.max_retries = static_cast<int>(r.integer(pr, p, "max_retries", c.max_retries));
        c.beacon_min_s = static_cast<int>(r.integer(pr, p, "beacon_min_s", c.beacon_min_s));
        c.beacon_max_s = static_cast<int>(r.integer(pr, p, "beacon_max_s", c.beacon_max_s));
        c.channel = static_cast<int>(r.integer(pr, p, "channel", c.channel));
        c.ewma_alpha = r.number(pr, p, "ewma_alpha", c.ewma_alpha);
        c.parent_switch_threshold =
            r.number(pr, p, "parent_switch_threshold", c.parent_switch_threshold);
        c.estimator_window =
            static_cast<int>(r.integer(pr, p, "estimator_window", c.estimator_window));
    }
    try {
        sc.protocol.validate();
    } catch (const ConfigError& e) {
        r.fail("$.protocol", e.what());
    }

    // Gateway.
    if (doc.contains("gateway") && r.object(doc["gateway"], "$.gateway")) {
        const auto& g = doc["gateway"];
        const std::string p = "$.gateway";
        r.known_keys(g, p,
                     {"watchdog_threshold_s", "restart_gap_s", "outages", "battery",
                      "battery_swap_days", "uplink_success_probability", "uplink_failures",
                      "sink_hangs"});
        auto& c = sc.gateway;
        c.watchdog_threshold_ms =
            r.integer(g, p, "watchdog_threshold_s", c.watchdog_threshold_ms / kSecondMs) * kSecondMs;
        c.restart_gap_ms = r.integer(g, p, "restart_gap_s", c.restart_gap_ms / kSecondMs) * kSecondMs;
        r.check(c.watchdog_threshold_ms > 0, p + ".watchdog_threshold_s", "must be > 0");
        r.check(c.restart_gap_ms >= 0, p + ".restart_gap_s", "must be >= 0");
        if (g.contains("outages")) {
            c.outages = read_windows(r, g["outages"], p + ".outages");
        }
        if (g.contains("battery")) {
            c.battery = read_battery(r, g["battery"], p + ".battery", default_gateway_battery());
        }
        const double swap = r.number(g, p, "battery_swap_days", 0.0);
        r.check(swap >= 0.0, p + ".battery_swap_days", "must be >= 0");
        sc.gateway_battery_swap_ms = days_to_ms(std::max(swap, 0.0));
        sc.uplink.success_probability = r.number(g, p, "uplink_success_probability", 1.0);
        r.check(sc.uplink.success_probability >= 0.0 && sc.uplink.success_probability <= 1.0,
                p + ".uplink_success_probability", "must lie in [0, 1]");
        if (g.contains("uplink_failures")) {
            sc.uplink.failures = read_windows(r, g["uplink_failures"], p + ".uplink_failures");
        }
        if (g.contains("sink_hangs") && r.array(g["sink_hangs"], p + ".sink_hangs")) {
            for (std::size_t i = 0; i < g["sink_hangs"].size(); ++i) {
                const auto& h = g["sink_hangs"][i];
                const auto hp = at(p + ".sink_hangs", i);
                if (!h.is_number() || h.get<double>() < 0.0) {
                    r.fail(hp, "expected a day number >= 0");
                    continue;
                }
                sc.sink_hangs.push_back(days_to_ms(h.get<double>()));
            }
            std::sort(sc.sink_hangs.begin(), sc.sink_hangs.end());
        }
    }

    // Analysis knobs.
    if (doc.contains("analysis") && r.object(doc["analysis"], "$.analysis")) {
        const auto& a = doc["analysis"];
        const std::string p = "$.analysis";
        r.known_keys(a, p,
                     {"median_filter_k", "ref_temp_c", "band_half_width_c", "trend_span",
                      "curve_span", "min_band_count", "grid_points"});
        auto& o = sc.analysis;
        o.median_filter_k = static_cast<int>(r.integer(a, p, "median_filter_k", o.median_filter_k));
        r.check(o.median_filter_k >= 1 && o.median_filter_k % 2 == 1, p + ".median_filter_k",
                "must be odd and >= 1");
        auto& c = o.compensation;
        c.ref_temp_c = r.number(a, p, "ref_temp_c", c.ref_temp_c);
        c.band_half_width_c = r.number(a, p, "band_half_width_c", c.band_half_width_c);
        c.trend_span = r.number(a, p, "trend_span", c.trend_span);
        c.curve_span = r.number(a, p, "curve_span", c.curve_span);
        c.min_band_count =
            static_cast<std::size_t>(std::max<std::int64_t>(0, r.integer(a, p, "min_band_count", 10)));
        c.grid_points =
            static_cast<std::size_t>(std::max<std::int64_t>(2, r.integer(a, p, "grid_points", 101)));
        r.check(c.band_half_width_c > 0.0, p + ".band_half_width_c", "must be > 0");
        r.check(c.trend_span > 0.0 && c.trend_span <= 1.0, p + ".trend_span", "must lie in (0, 1]");
        r.check(c.curve_span > 0.0 && c.curve_span <= 1.0, p + ".curve_span", "must lie in (0, 1]");
    }

    if (!r.errors.empty()) {
        std::ostringstream msg;
        msg << "invalid scenario (" << r.errors.size() << " problem"
            << (r.errors.size() == 1 ? "" : "s") << "):";
        for (const auto& e : r.errors) {
            msg << "\n  " << e;
        }
        throw ConfigError(msg.str());
    }
    return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open scenario '" + path.string() + "'");
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str(), path.parent_path());
}

}  // namespace restructure
