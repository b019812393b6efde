#include <doctest.h>

#include <json.hpp>

#include "headwayrl/commands.hpp"
#include "headwayrl/od_data.hpp"
#include "headwayrl/simulator.hpp"
#include "headwayrl/line_model.hpp"
#include "headwayrl/util.hpp"
#include "helpers.hpp"

using namespace headwayrl;
namespace fs = std::filesystem;

namespace {

std::string tiny_line_json() {
    LineConfig line;
    line.stations = 4;
    line.seats = 10;
    line.capacity = 15;
    line.service_start = 100;
    line.service_end = 220;
    line.min_interval = 2;
    line.max_interval = 15;
    line.line_id = "tiny";
    return line.to_json_text();
}

std::string tiny_spec_json() {
    return R"({
      "stations": 4,
      "passengers": 120,
      "window_start": 100,
      "window_end": 220,
      "rate_curve": [[100, 0.3], [130, 1.0], [170, 0.3]]
    })";
}

std::string tiny_agent_json() {
    return R"({
      "hidden_layers": 1,
      "hidden_units": 8,
      "episodes": 2,
      "buffer_capacity": 200,
      "batch_size": 16,
      "target_sync_period": 100,
      "early_stop": false,
      "seed": 5
    })";
}

struct Workspace {
    fs::path dir = testutil::temp_dir();

    fs::path file(const std::string& name, const std::string& content) {
        auto p = dir / name;
        atomic_write(p, content);
        return p;
    }
    fs::path out(const std::string& name) { return dir / name; }
};

int run(const std::vector<std::string>& args) { return cli::run_cli(args); }

std::string slurp(const fs::path& p) { return read_file(p); }

} // namespace

TEST_CASE("gen-data writes a demand csv and a reproducible manifest") {
    Workspace ws;
    auto spec = ws.file("spec.json", tiny_spec_json());

    CHECK(run({"gen-data", "--spec", spec.string(), "--seed", "7",
               "--out", ws.out("a").string()}) == 0);
    std::string csv = slurp(ws.out("a") / "demand.csv");
    CHECK(csv.rfind("id,arrival_minute,origin_station,destination_station\n", 0) == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 121); // header + 120 records

    // identical invocation is byte-identical
    CHECK(run({"gen-data", "--spec", spec.string(), "--seed", "7",
               "--out", ws.out("b").string()}) == 0);
    CHECK(slurp(ws.out("b") / "demand.csv") == csv);
    CHECK(slurp(ws.out("b") / "manifest.json") == slurp(ws.out("a") / "manifest.json"));

    auto manifest = nlohmann::json::parse(slurp(ws.out("a") / "manifest.json"));
    CHECK(manifest["command"] == "gen-data");
    CHECK(manifest["seed"] == 7);
    CHECK(manifest["artifact_version"] == cli::kArtifactVersion);
    CHECK(manifest["outputs"].size() == 1);
}

TEST_CASE("gen-data fails cleanly on a broken spec") {
    Workspace ws;
    auto spec = ws.file("bad.json", "{\"stations\": 1}");
    CHECK(run({"gen-data", "--spec", spec.string(), "--out", ws.out("x").string()}) != 0);
    CHECK_FALSE(fs::exists(ws.out("x") / "demand.csv"));
    CHECK_FALSE(fs::exists(ws.out("x") / "manifest.json"));
}

TEST_CASE("rerunning any command from its manifest reproduces outputs byte for byte") {
    Workspace ws;
    auto spec = ws.file("spec.json", tiny_spec_json());
    REQUIRE(run({"gen-data", "--spec", spec.string(), "--seed", "3",
                 "--out", ws.out("first").string()}) == 0);

    auto argv = cli::rerun_argv_from_manifest(ws.out("first") / "manifest.json",
                                              ws.out("second").string());
    REQUIRE(run(argv) == 0);
    for (const char* name : {"demand.csv", "manifest.json"})
        CHECK(slurp(ws.out("first") / name) == slurp(ws.out("second") / name));
}

TEST_CASE("train emits the full artifact set deterministically") {
    Workspace ws;
    auto line = ws.file("line.json", tiny_line_json());
    auto spec = ws.file("spec.json", tiny_spec_json());
    auto agent = ws.file("agent.json", tiny_agent_json());
    REQUIRE(run({"gen-data", "--spec", spec.string(), "--seed", "1",
                 "--out", ws.out("data").string()}) == 0);
    auto demand = (ws.out("data") / "demand.csv").string();

    REQUIRE(run({"train", "--line", line.string(), "--demand", demand, "--agent",
                 agent.string(), "--out", ws.out("t1").string()}) == 0);
    for (const char* name : {"checkpoint.bin", "reward_curve.csv", "timetable.csv",
                             "metrics.json", "episode_trace.jsonl", "manifest.json"})
        CHECK(fs::exists(ws.out("t1") / name));

    auto metrics = nlohmann::json::parse(slurp(ws.out("t1") / "metrics.json"));
    for (const char* key : {"nd", "awt", "nsp", "unserved"}) CHECK(metrics.contains(key));

    // departure count sits inside the rule-band envelope
    const int window = 220 - 100;
    const int nd = metrics["nd"].get<int>();
    CHECK(nd >= window / 15);
    CHECK(nd <= window / 2 + 2);

    REQUIRE(run({"train", "--line", line.string(), "--demand", demand, "--agent",
                 agent.string(), "--out", ws.out("t2").string()}) == 0);
    CHECK(slurp(ws.out("t2") / "metrics.json") == slurp(ws.out("t1") / "metrics.json"));
    CHECK(slurp(ws.out("t2") / "checkpoint.bin") == slurp(ws.out("t1") / "checkpoint.bin"));

    // manifest rerun round-trips the whole artifact set
    auto argv = cli::rerun_argv_from_manifest(ws.out("t1") / "manifest.json",
                                              ws.out("t3").string());
    REQUIRE(run(argv) == 0);
    CHECK(slurp(ws.out("t3") / "checkpoint.bin") == slurp(ws.out("t1") / "checkpoint.bin"));
    CHECK(slurp(ws.out("t3") / "manifest.json") == slurp(ws.out("t1") / "manifest.json"));
}

TEST_CASE("eval matches the library evaluation and emits the series") {
    Workspace ws;
    auto line_path = ws.file("line.json", tiny_line_json());
    auto spec = ws.file("spec.json", tiny_spec_json());
    REQUIRE(run({"gen-data", "--spec", spec.string(), "--seed", "2",
                 "--out", ws.out("data").string()}) == 0);

    Timetable t{{100, 110, 125, 140, 155, 170, 185, 200, 215, 220}};
    auto tt_path = ws.out("tt.csv");
    save_timetable(t, tt_path);

    REQUIRE(run({"eval", "--line", line_path.string(), "--demand",
                 (ws.out("data") / "demand.csv").string(), "--timetable", tt_path.string(),
                 "--out", ws.out("e").string()}) == 0);

    auto [cfg, ttab] = load_line_file(line_path);
    DemandSet demand = load_demand(ws.out("data") / "demand.csv", kDemandCsvSchema,
                                   cfg.stations);
    EvalResult direct = evaluate_timetable(demand, cfg, ttab, t);
    CHECK(slurp(ws.out("e") / "metrics.json") == metrics_report_json(direct));
    CHECK(slurp(ws.out("e") / "capacity_series.csv") == capacity_series_csv(direct));
}

TEST_CASE("scenario compares fixed methods against transformed demand") {
    Workspace ws;
    auto line = ws.file("line.json", tiny_line_json());
    auto spec = ws.file("spec.json", tiny_spec_json());
    REQUIRE(run({"gen-data", "--spec", spec.string(), "--seed", "4",
                 "--out", ws.out("data").string()}) == 0);
    auto demand = (ws.out("data") / "demand.csv").string();

    Timetable fixed{{100, 112, 124, 136, 148, 160, 172, 184, 196, 208, 220}};
    save_timetable(fixed, ws.out("ga.csv"));

    REQUIRE(run({"scenario", "--line", line.string(), "--demand", demand, "--transform",
                 "sample", "--rates", "0.5,1,1.5", "--ga", ws.out("ga.csv").string(),
                 "--seed", "6", "--out", ws.out("sc").string(), "--jobs", "2"}) == 0);

    std::string csv = slurp(ws.out("sc") / "comparison.csv");
    CHECK(csv.rfind("method,setting,nd,awt,nsp\n", 0) == 0);
    // the frozen method's nd column never moves
    std::size_t rows = 0;
    for (auto& lineStr : split(csv, '\n')) {
        if (lineStr.rfind("ga,", 0) != 0) continue;
        auto cells = split(lineStr, ',');
        CHECK(cells[2] == fmt_int(fixed.nd()));
        ++rows;
    }
    CHECK(rows == 3);

    // rate 1.0 row equals a plain eval of the base demand
    REQUIRE(run({"eval", "--line", line.string(), "--demand", demand, "--timetable",
                 ws.out("ga.csv").string(), "--out", ws.out("ebase").string()}) == 0);
    auto m = nlohmann::json::parse(slurp(ws.out("ebase") / "metrics.json"));
    bool found = false;
    for (auto& lineStr : split(csv, '\n')) {
        if (lineStr.rfind("ga,rate:1,", 0) == 0) {
            auto cells = split(lineStr, ',');
            CHECK(cells[2] == fmt_int(m["nd"].get<long long>()));
            CHECK(cells[4] == fmt_int(m["nsp"].get<long long>()));
            found = true;
        }
    }
    CHECK(found);

    // shift transform with zero shift equals the base eval too
    REQUIRE(run({"scenario", "--line", line.string(), "--demand", demand, "--transform",
                 "shift", "--window-start", "130", "--window-end", "170", "--shifts",
                 "0,20", "--ga", ws.out("ga.csv").string(), "--seed", "6", "--out",
                 ws.out("sc2").string()}) == 0);
    std::string csv2 = slurp(ws.out("sc2") / "comparison.csv");
    for (auto& lineStr : split(csv2, '\n')) {
        if (lineStr.rfind("ga,shift:0,", 0) == 0) {
            auto cells = split(lineStr, ',');
            CHECK(cells[2] == fmt_int(m["nd"].get<long long>()));
            CHECK(cells[3] == fmt_double(m["awt"].get<double>()));
        }
    }

    // at least one method is mandatory
    CHECK(run({"scenario", "--line", line.string(), "--demand", demand, "--transform",
               "sample", "--rates", "1", "--out", ws.out("none").string()}) != 0);
}

TEST_CASE("sweep emits one row per value") {
    Workspace ws;
    auto line = ws.file("line.json", tiny_line_json());
    auto spec = ws.file("spec.json", tiny_spec_json());
    auto agent = ws.file("agent.json", tiny_agent_json());
    REQUIRE(run({"gen-data", "--spec", spec.string(), "--seed", "5",
                 "--out", ws.out("data").string()}) == 0);
    auto demand = (ws.out("data") / "demand.csv").string();

    REQUIRE(run({"sweep", "--param", "omega", "--values", "0.0002", "--repeats", "1",
                 "--line", line.string(), "--demand", demand, "--agent", agent.string(),
                 "--seed", "9", "--out", ws.out("sw").string()}) == 0);
    std::string csv = slurp(ws.out("sw") / "sweep.csv");
    auto rows = split(trim(csv), '\n');
    REQUIRE(rows.size() == 2);
    CHECK(rows[0] == "omega,nd_max,nd_min,nd_mode,awt_max,awt_min,awt_avg");
    auto cells = split(rows[1], ',');
    CHECK(std::stod(cells[0]) == doctest::Approx(0.0002));
    CHECK(cells[1] == cells[2]); // one repeat: max == min == mode
    CHECK(cells[1] == cells[3]);
    CHECK(cells[4] == cells[5]);

    CHECK(run({"sweep", "--param", "nonsense", "--values", "1", "--line", line.string(),
               "--demand", demand, "--out", ws.out("bad").string()}) != 0);
}

TEST_CASE("ablate trains a variant and reports its spread statistics") {
    Workspace ws;
    auto line = ws.file("line.json", tiny_line_json());
    auto spec = ws.file("spec.json", tiny_spec_json());
    auto agent = ws.file("agent.json", tiny_agent_json());
    REQUIRE(run({"gen-data", "--spec", spec.string(), "--seed", "8",
                 "--out", ws.out("data").string()}) == 0);
    auto demand = (ws.out("data") / "demand.csv").string();

    REQUIRE(run({"ablate", "--variant", "drop-feature:x4", "--line", line.string(),
                 "--demand", demand, "--agent", agent.string(), "--out",
                 ws.out("ab").string()}) == 0);
    std::string stats = slurp(ws.out("ab") / "variant_stats.csv");
    CHECK(stats.find("drop-feature:x4") != std::string::npos);
    CHECK(fs::exists(ws.out("ab") / "reward_curve.csv"));

    // the checkpoint records the reduced input width
    auto blob = slurp(ws.out("ab") / "checkpoint.bin");
    auto header_start = blob.find('\n') + 1;
    auto header = nlohmann::json::parse(
        blob.substr(header_start, blob.find('\n', header_start) - header_start));
    CHECK(header["layer_sizes"][0] == 5);
    CHECK(header["scheme"] == "drop-feature:x4");

    CHECK(run({"ablate", "--variant", "bogus", "--line", line.string(), "--demand", demand,
               "--out", ws.out("bad").string()}) != 0);
}

TEST_CASE("the config file supplies section defaults that flags and files override") {
    Workspace ws;
    auto line = ws.file("line.json", tiny_line_json());
    auto spec = ws.file("spec.json", tiny_spec_json());
    REQUIRE(run({"gen-data", "--spec", spec.string(), "--seed", "1",
                 "--out", ws.out("data").string()}) == 0);
    auto demand = (ws.out("data") / "demand.csv").string();

    auto config = ws.file("config.json", R"({
      "agent": {"hidden_layers": 1, "hidden_units": 8, "episodes": 1,
                 "batch_size": 8, "buffer_capacity": 64, "target_sync_period": 50,
                 "early_stop": false, "seed": 77},
      "reward": {"omega": 0.001}
    })");
    REQUIRE(run({"train", "--line", line.string(), "--demand", demand, "--config",
                 config.string(), "--out", ws.out("c1").string()}) == 0);
    auto manifest = nlohmann::json::parse(slurp(ws.out("c1") / "manifest.json"));
    CHECK(manifest["seed"] == 77);

    // an explicit --seed flag wins over the config section
    REQUIRE(run({"train", "--line", line.string(), "--demand", demand, "--config",
                 config.string(), "--seed", "78", "--out", ws.out("c2").string()}) == 0);
    auto manifest2 = nlohmann::json::parse(slurp(ws.out("c2") / "manifest.json"));
    CHECK(manifest2["seed"] == 78);
}
