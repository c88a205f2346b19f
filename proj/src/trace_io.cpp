#include "restructure/trace_io.hpp"

#include "restructure/csv.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <fstream>
#include <sstream>

namespace restructure {

namespace fs = std::filesystem;

std::string parent_label(NodeId parent) {
    if (parent == kSinkId) return "sink";
    if (parent == kNoParent) return "none";
    return std::to_string(parent);
}

NodeId parse_parent_label(const std::string& s) {
    if (s == "sink") return kSinkId;
    if (s == "none" || s.empty()) return kNoParent;
    try {
        std::size_t used = 0;
        const int v = std::stoi(s, &used);
        if (used == s.size() && v >= 0) {
            return v;
        }
    } catch (const std::exception&) {
    }
    throw DataError("bad parent value '" + s + "'");
}

namespace {

// Exact decimal rendering of a nanojoule count in joules.
std::string joules(Nanojoules nj) {
    const char* sign = nj < 0 ? "-" : "";
    const auto a = nj < 0 ? -nj : nj;
    return fmt::format("{}{}.{:09d}", sign, a / 1'000'000'000, a % 1'000'000'000);
}

void sample_fields(fmt::memory_buffer& buf, const StrainSample& s) {
    // Shortest round-trip form keeps the files lossless and deterministic.
    fmt::format_to(std::back_inserter(buf), "{},{},{},{},{},{},{},{},{}", s.node_id, s.t, s.strain,
                   s.temp_c, s.rh_pct, s.seq, s.rssi_dbm, s.beacon_interval_s,
                   parent_label(s.parent));
}

std::string archived_csv(const std::vector<ArchivedSample>& rows) {
    fmt::memory_buffer buf;
    fmt::format_to(std::back_inserter(buf), "{}\n", header::kGateway);
    for (const auto& a : rows) {
        sample_fields(buf, a.sample);
        fmt::format_to(std::back_inserter(buf), ",{},{}\n", a.arrival,
                       a.hop_path.empty() ? 0 : a.hop_path.size() - 1);
    }
    return fmt::to_string(buf);
}

}  // namespace

void write_simulation(const SimulationResult& result, const Scenario& scenario,
                      const std::string& scenario_text, const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) {
        throw DataError("cannot create output directory " + dir.string() + ": " + ec.message());
    }
    {
        fmt::memory_buffer buf;
        fmt::format_to(std::back_inserter(buf), "{}\n", header::kSamples);
        for (const auto& [id, node] : result.nodes) {
            for (const auto& s : node.flash()) {
                sample_fields(buf, s);
                buf.push_back('\n');
            }
        }
        csv::write_atomically(dir / "samples.csv", fmt::to_string(buf));
    }
    csv::write_atomically(dir / "gateway.csv", archived_csv(result.gateway.server()));
    csv::write_atomically(dir / "archive.csv", archived_csv(result.gateway.archive()));
    {
        fmt::memory_buffer buf;
        fmt::format_to(std::back_inserter(buf), "{}\n", header::kRouting);
        for (const auto& [id, history] : result.routing) {
            for (const auto& r : history) {
                fmt::format_to(std::back_inserter(buf), "{},{},{},{}\n", id, r.t,
                               parent_label(r.parent), r.beacon_interval_s);
            }
        }
        csv::write_atomically(dir / "routing.csv", fmt::to_string(buf));
    }
    {
        fmt::memory_buffer buf;
        fmt::format_to(std::back_inserter(buf), "{}\n", header::kEnergy);
        for (const auto& e : result.energy) {
            fmt::format_to(std::back_inserter(buf), "{},{},{},{}\n", e.node, e.t,
                           joules(e.remaining), joules(e.spent));
        }
        csv::write_atomically(dir / "energy.csv", fmt::to_string(buf));
    }
    {
        auto events = result.events;
        std::stable_sort(events.begin(), events.end(),
                         [](const SimEvent& a, const SimEvent& b) { return a.t < b.t; });
        fmt::memory_buffer buf;
        fmt::format_to(std::back_inserter(buf), "{}\n", header::kEvents);
        for (const auto& e : events) {
            fmt::format_to(std::back_inserter(buf), "{},{},{},{}\n", e.t, e.kind,
                           e.node == kNoParent ? std::string() : parent_label(e.node), e.detail);
        }
        csv::write_atomically(dir / "events.csv", fmt::to_string(buf));
    }
    {
        fmt::memory_buffer buf;
        fmt::format_to(std::back_inserter(buf), "{}\n", header::kReference);
        for (const auto& r : result.reference) {
            fmt::format_to(std::back_inserter(buf), "{},{},{},{}\n", r.strut_id, r.instrument, r.t,
                           r.value);
        }
        csv::write_atomically(dir / "reference.csv", fmt::to_string(buf));
    }
    {
        fmt::memory_buffer buf;
        fmt::format_to(std::back_inserter(buf), "{}\n", header::kNodes);
        for (const auto& [id, node] : result.nodes) {
            const auto* p = scenario.node(id);
            const auto& tx = result.tx.at(id);
            const std::string died =
                node.died_at() ? std::to_string(*node.died_at()) : std::string();
            const std::string attempts =
                tx.transmissions > 0
                    ? fmt::format("{:.6f}", static_cast<double>(tx.attempts) /
                                                static_cast<double>(tx.transmissions))
                    : std::string();
            fmt::format_to(std::back_inserter(buf), "{},{},{},{},{},{},{},{},{},{},{}\n", id,
                           p ? p->strut_id : std::string(), p ? p->level : 0,
                           p ? p->distance_m : 0.0, node.installed_at(), died,
                           joules(node.initial_energy()), joules(node.remaining_energy()),
                           tx.cycles, tx.transmissions, attempts);
        }
        csv::write_atomically(dir / "nodes.csv", fmt::to_string(buf));
    }
    csv::write_atomically(dir / "scenario.json", scenario_text);
}

namespace {

StrainSample read_sample(const csv::Table& t, std::size_t row) {
    StrainSample s;
    s.node_id = static_cast<NodeId>(t.integer(row, t.column("node_id")));
    s.t = t.integer(row, t.column("ts_ms"));
    s.strain = t.number(row, t.column("strain_ue"));
    s.temp_c = t.number(row, t.column("temp_c"));
    s.rh_pct = t.number(row, t.column("rh_pct"));
    s.seq = t.integer(row, t.column("seq"));
    s.rssi_dbm = t.has_column("rssi_dbm") ? static_cast<int>(t.integer(row, t.column("rssi_dbm"))) : 0;
    s.beacon_interval_s = t.has_column("beacon_interval_s")
                              ? static_cast<int>(t.integer(row, t.column("beacon_interval_s")))
                              : 0;
    if (t.has_column("parent")) {
        try {
            s.parent = parse_parent_label(t.cell(row, t.column("parent")));
        } catch (const DataError& e) {
            throw DataError(t.source() + ": row " + std::to_string(row + 2) + ": " + e.what());
        }
    }
    return s;
}

// Validates required columns up front so the error names the column even
// for an empty table.
void require(const csv::Table& t, std::initializer_list<const char*> cols) {
    for (const char* c : cols) {
        (void)t.column(c);
    }
}

}  // namespace

RunData load_run(const fs::path& dir) {
    RunData data;
    if (!fs::is_directory(dir)) {
        throw DataError("no such trace directory: " + dir.string());
    }
    {
        const auto t = csv::Table::read_file(dir / "samples.csv");
        require(t, {"node_id", "ts_ms", "strain_ue", "temp_c", "rh_pct", "seq"});
        data.flash.reserve(t.rows());
        for (std::size_t i = 0; i < t.rows(); ++i) {
            data.flash.push_back(read_sample(t, i));
        }
    }
    const auto received_path =
        fs::exists(dir / "archive.csv") ? dir / "archive.csv" : dir / "gateway.csv";
    if (fs::exists(received_path)) {
        const auto t = csv::Table::read_file(received_path);
        require(t, {"node_id", "ts_ms", "strain_ue", "temp_c", "rh_pct", "seq", "arrival_ts_ms"});
        for (std::size_t i = 0; i < t.rows(); ++i) {
            ArchivedSample a;
            a.sample = read_sample(t, i);
            a.arrival = t.integer(i, t.column("arrival_ts_ms"));
            data.received.push_back(std::move(a));
        }
    }
    if (fs::exists(dir / "routing.csv")) {
        const auto t = csv::Table::read_file(dir / "routing.csv");
        require(t, {"node_id", "ts_ms", "parent", "beacon_interval_s"});
        for (std::size_t i = 0; i < t.rows(); ++i) {
            RoutingRecord r;
            r.t = t.integer(i, t.column("ts_ms"));
            r.parent = parse_parent_label(t.cell(i, t.column("parent")));
            r.beacon_interval_s = static_cast<int>(t.integer(i, t.column("beacon_interval_s")));
            data.routing[static_cast<NodeId>(t.integer(i, t.column("node_id")))].push_back(r);
        }
    }
    if (fs::exists(dir / "reference.csv")) {
        const auto t = csv::Table::read_file(dir / "reference.csv");
        require(t, {"strut_id", "instrument", "ts_ms", "value"});
        for (std::size_t i = 0; i < t.rows(); ++i) {
            data.reference.push_back({t.cell(i, t.column("strut_id")),
                                      t.cell(i, t.column("instrument")),
                                      t.integer(i, t.column("ts_ms")),
                                      t.number(i, t.column("value"))});
        }
    }
    if (fs::exists(dir / "nodes.csv")) {
        const auto t = csv::Table::read_file(dir / "nodes.csv");
        require(t, {"node_id", "strut_id"});
        for (std::size_t i = 0; i < t.rows(); ++i) {
            NodeInfo n;
            n.id = static_cast<NodeId>(t.integer(i, t.column("node_id")));
            n.strut_id = t.cell(i, t.column("strut_id"));
            if (t.has_column("level")) n.level = static_cast<int>(t.integer(i, t.column("level")));
            if (t.has_column("distance_m")) n.distance_m = t.number(i, t.column("distance_m"));
            if (t.has_column("mean_attempts") && !t.cell(i, t.column("mean_attempts")).empty()) {
                n.mean_attempts = t.number(i, t.column("mean_attempts"));
            }
            data.nodes[n.id] = n;
        }
    }
    if (fs::exists(dir / "scenario.json")) {
        try {
            data.scenario = load_scenario(dir / "scenario.json");
        } catch (const ConfigError& e) {
            data.warnings.push_back(std::string("scenario.json ignored: ") + e.what());
        }
    }
    return data;
}

RunData run_data(const SimulationResult& result, const Scenario& scenario) {
    RunData data;
    for (const auto& [id, node] : result.nodes) {
        data.flash.insert(data.flash.end(), node.flash().begin(), node.flash().end());
        NodeInfo info;
        info.id = id;
        if (const auto* p = scenario.node(id)) {
            info.strut_id = p->strut_id;
            info.level = p->level;
            info.distance_m = p->distance_m;
        }
        const auto& tx = result.tx.at(id);
        if (tx.transmissions > 0) {
            // Same rounding as nodes.csv so both paths agree exactly.
            info.mean_attempts = std::stod(fmt::format(
                "{:.6f}", static_cast<double>(tx.attempts) / static_cast<double>(tx.transmissions)));
        }
        data.nodes[id] = info;
    }
    data.received = result.gateway.archive();
    data.routing = result.routing;
    data.reference = result.reference;
    data.scenario = scenario;
    return data;
}

}  // namespace restructure
