#include "doctest.h"

#include "restructure/trace_io.hpp"

#include "json.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>
#include <unistd.h>

namespace fs = std::filesystem;
using namespace restructure;

namespace {

const fs::path kSource = RESTRUCTURE_SOURCE_DIR;
const fs::path kTool = RESTRUCTURE_TOOL;

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void spit(const fs::path& p, const std::string& text) {
    std::ofstream(p, std::ios::binary) << text;
}

struct Run {
    int code = -1;
    std::string out;
    std::string err;
};

/// Scratch directory per test case, removed afterwards.
struct Scratch {
    fs::path dir;
    Scratch() {
        static int counter = 0;
        dir = fs::temp_directory_path() /
              ("restructure-cli-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        fs::remove_all(dir);
        fs::create_directories(dir);
    }
    ~Scratch() { fs::remove_all(dir); }

    Run run(const std::string& args) const {
        const auto out = dir / "stdout.txt";
        const auto err = dir / "stderr.txt";
        const std::string cmd = "'" + kTool.string() + "' " + args + " >'" + out.string() +
                                "' 2>'" + err.string() + "'";
        const int status = std::system(cmd.c_str());
        return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(out), slurp(err)};
    }

    fs::path scenario(const nlohmann::json& doc, const std::string& name = "sc.json") const {
        const auto p = dir / name;
        spit(p, doc.dump(2));
        return p;
    }
};

nlohmann::json default_doc() {
    return nlohmann::json::parse(slurp(kSource / "scenarios/default.json"));
}

std::string first_line(const std::string& text) { return text.substr(0, text.find('\n')); }

std::size_t line_count(const std::string& text) {
    return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

}  // namespace

TEST_CASE("simulate twice with the same seed gives byte-identical files") {
    Scratch s;
    auto doc = default_doc();
    doc["duration_days"] = 12;
    const auto sc = s.scenario(doc);
    REQUIRE(s.run("simulate '" + sc.string() + "' -o '" + (s.dir / "a").string() + "'").code == 0);
    REQUIRE(s.run("simulate '" + sc.string() + "' -o '" + (s.dir / "b").string() + "'").code == 0);
    std::size_t files = 0;
    for (const auto& e : fs::directory_iterator(s.dir / "a")) {
        CAPTURE(e.path().filename().string());
        CHECK(slurp(e.path()) == slurp(s.dir / "b" / e.path().filename()));
        ++files;
    }
    CHECK(files == 9);

    // A different seed changes the traces.
    REQUIRE(s.run("simulate '" + sc.string() + "' --seed 7 -o '" + (s.dir / "c").string() + "'")
                .code == 0);
    CHECK(slurp(s.dir / "a/samples.csv") != slurp(s.dir / "c/samples.csv"));
    CHECK(nlohmann::json::parse(slurp(s.dir / "c/scenario.json"))["seed"] == 7);
}

TEST_CASE("trace files carry the documented headers") {
    Scratch s;
    auto doc = default_doc();
    doc["duration_days"] = 2;
    REQUIRE(s.run("simulate '" + s.scenario(doc).string() + "' -o '" + s.dir.string() + "/t'")
                .code == 0);
    const auto t = s.dir / "t";
    CHECK(first_line(slurp(t / "samples.csv")) ==
          "node_id,ts_ms,strain_ue,temp_c,rh_pct,seq,rssi_dbm,beacon_interval_s,parent");
    CHECK(first_line(slurp(t / "gateway.csv")) ==
          "node_id,ts_ms,strain_ue,temp_c,rh_pct,seq,rssi_dbm,beacon_interval_s,parent,"
          "arrival_ts_ms,hops");
    CHECK(first_line(slurp(t / "archive.csv")) == first_line(slurp(t / "gateway.csv")));
    CHECK(first_line(slurp(t / "routing.csv")) == "node_id,ts_ms,parent,beacon_interval_s");
    CHECK(first_line(slurp(t / "energy.csv")) == "node_id,ts_ms,remaining_j,spent_j");
    CHECK(first_line(slurp(t / "events.csv")) == "ts_ms,kind,node_id,detail");
    CHECK(first_line(slurp(t / "reference.csv")) == "strut_id,instrument,ts_ms,value");
    CHECK(first_line(slurp(t / "nodes.csv")) ==
          "node_id,strut_id,level,distance_m,installed_ts_ms,died_ts_ms,initial_j,remaining_j,"
          "cycles,transmissions,mean_attempts");
    // Two nodes installed on day 0, 288 cycles a day each.
    CHECK(line_count(slurp(t / "samples.csv")) == 1 + 2 * 2 * 288);

    REQUIRE(s.run("analyze '" + t.string() + "'").code == 0);
    const auto r = t / "report";
    CHECK(first_line(slurp(r / "yield.csv")) ==
          "node_id,strut_id,start_ts_ms,end_ts_ms,days,expected,received,yield_pct,"
          "yield_wo_outages_pct");
    CHECK(first_line(slurp(r / "network.csv")) ==
          "node_id,distance_m,pdr_pct,link_stability_pct,most_common_parent,mcp_pct,mean_attempts");
    CHECK(first_line(slurp(r / "daily_pdr.csv")) == "node_id,day,pdr_pct");
    CHECK(fs::exists(r / "summary.txt"));
}

TEST_CASE("zero duration writes headers only and exits 0") {
    Scratch s;
    auto doc = default_doc();
    doc["duration_days"] = 0;
    const auto res =
        s.run("simulate '" + s.scenario(doc).string() + "' -o '" + (s.dir / "z").string() + "'");
    CHECK(res.code == 0);
    for (const char* f : {"samples.csv", "gateway.csv", "archive.csv", "routing.csv",
                          "energy.csv", "events.csv", "reference.csv"}) {
        CAPTURE(f);
        CHECK(line_count(slurp(s.dir / "z" / f)) == 1);
    }
}

TEST_CASE("lossless links and a healthy gateway give 100% yield end to end") {
    Scratch s;
    auto doc = default_doc();
    doc["duration_days"] = 10;
    for (auto& l : doc["links"]) {
        l["base_success"] = 1.0;
        l["bad_success"] = 1.0;
    }
    doc["gateway"]["outages"] = nlohmann::json::array();
    doc["gateway"]["sink_hangs"] = nlohmann::json::array();
    doc["gateway"]["uplink_failures"] = nlohmann::json::array();
    doc["gateway"]["uplink_success_probability"] = 1.0;
    const auto out = s.dir / "ll";
    REQUIRE(s.run("simulate '" + s.scenario(doc).string() + "' -o '" + out.string() + "'").code == 0);
    REQUIRE(s.run("analyze '" + out.string() + "'").code == 0);

    const auto data = load_run(out);
    CHECK(data.received.size() == data.flash.size());
    std::istringstream yield(slurp(out / "report/yield.csv"));
    std::string line;
    std::getline(yield, line);
    int rows = 0;
    while (std::getline(yield, line)) {
        CAPTURE(line);
        CHECK(line.find(",100.00,100.00") != std::string::npos);
        ++rows;
    }
    CHECK(rows == 2);
}

TEST_CASE("scenario validation reports every problem with its path") {
    Scratch s;
    auto doc = default_doc();
    doc.erase("seed");
    doc["nodes"][1]["battery"]["derating"] = 1.5;
    doc["links"][0]["base_success"] = -0.1;
    doc["bogus_field"] = true;
    const auto res =
        s.run("simulate '" + s.scenario(doc).string() + "' -o '" + (s.dir / "x").string() + "'");
    CHECK(res.code == 1);
    CAPTURE(res.err);
    CHECK(res.err.find("4 problems") != std::string::npos);
    CHECK(res.err.find("$.seed: required") != std::string::npos);
    CHECK(res.err.find("$.nodes[1].battery: battery derating") != std::string::npos);
    CHECK(res.err.find("$.links[0]: ") != std::string::npos);
    CHECK(res.err.find("$.bogus_field: unknown field") != std::string::npos);
    CHECK_FALSE(fs::exists(s.dir / "x"));
}

TEST_CASE("analyze names the missing column and exits 2") {
    Scratch s;
    fs::create_directories(s.dir / "bad");
    spit(s.dir / "bad/samples.csv", "node_id,ts_ms,strain_ue\n1,0,3.5\n");
    const auto res = s.run("analyze '" + (s.dir / "bad").string() + "'");
    CHECK(res.code == 2);
    CAPTURE(res.err);
    CHECK(res.err.find("samples.csv") != std::string::npos);
    CHECK(res.err.find("temp_c") != std::string::npos);
}

TEST_CASE("an empty gateway log still yields a report, with warnings") {
    Scratch s;
    auto doc = default_doc();
    doc["duration_days"] = 3;
    const auto out = s.dir / "e";
    REQUIRE(s.run("simulate '" + s.scenario(doc).string() + "' -o '" + out.string() + "'").code == 0);
    const auto header = first_line(slurp(out / "archive.csv"));
    spit(out / "archive.csv", header + "\n");
    const auto res = s.run("analyze '" + out.string() + "'");
    CHECK(res.code == 0);
    CAPTURE(res.err);
    CHECK(res.err.find("warning") != std::string::npos);
    CHECK(res.err.find("no samples reached the gateway") != std::string::npos);
    CHECK(slurp(out / "report/yield.csv").find(",0.00,") != std::string::npos);
}

TEST_CASE("lifetime subcommand") {
    Scratch s;
    const auto one = s.run("lifetime");
    REQUIRE(one.code == 0);
    CHECK(one.out.find("204.30 days") != std::string::npos);
    CHECK(one.out.find("462.48 As per hour") != std::string::npos);
    CHECK(one.out.find("32.4 days") != std::string::npos);
    CHECK(one.out.find("31.0 days at derating 0.956") != std::string::npos);

    const auto two = s.run("lifetime --attempts 2");
    REQUIRE(two.code == 0);
    const auto days = [](const std::string& out) {
        const auto at = out.find("Node lifetime: ") + 15;
        return std::stod(out.substr(at));
    };
    CHECK(days(two.out) < days(one.out));

    const auto profile = s.dir / "p.csv";
    spit(profile, "operation,duration_ms,current_ma\nwarm_up_bridge,5000,32.6\nidle,300000,1\n");
    const auto custom = s.run("lifetime --profile '" + profile.string() + "'");
    CHECK(custom.code == 0);
    CHECK(days(custom.out) > days(one.out));

    CHECK(s.run("lifetime --attempts 0.5").code == 1);
    CHECK(s.run("lifetime --derating 1.5").code == 1);
}

TEST_CASE("usage errors exit 1") {
    Scratch s;
    CHECK(s.run("").code == 1);
    CHECK(s.run("frobnicate").code == 1);
    CHECK(s.run("simulate '" + (s.dir / "missing.json").string() + "'").code == 1);
    CHECK(s.run("analyze '" + (s.dir / "nowhere").string() + "'").code == 2);
}
