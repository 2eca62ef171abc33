// End-to-end checks of the installed binary: every subcommand, every exit
// code class, driven through a shell the way an operator would use it.

#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include "flopwatt/flopwatt.hpp"

namespace fs = std::filesystem;
using flopwatt::json;

namespace {

const fs::path kDir = fs::temp_directory_path() / "flopwatt_cli_test";

struct CliResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

CliResult run_cli(const std::string& args) {
    fs::create_directories(kDir);
    const fs::path out = kDir / "stdout.txt";
    const fs::path err = kDir / "stderr.txt";
    const std::string cmd = std::string(FLOPWATT_CLI_PATH) + " " + args + " > " + out.string() +
                            " 2> " + err.string();
    const int raw = std::system(cmd.c_str());
    REQUIRE(raw != -1);
    REQUIRE(WIFEXITED(raw));
    return {WEXITSTATUS(raw), slurp(out), slurp(err)};
}

fs::path write_file(const std::string& name, const std::string& body) {
    fs::create_directories(kDir);
    const fs::path p = kDir / name;
    std::ofstream f(p);
    f << body;
    return p;
}

// Plateau at 100 W for 70 s, then a linear decay to 50 W at 100 s.
fs::path plateau_trace() {
    flopwatt::PowerTrace t;
    t.meter_id = "rack";
    t.samples = {{0.0, 100.0}, {70.0, 100.0}, {100.0, 50.0}};
    std::ostringstream body;
    flopwatt::write_trace_csv(body, t);
    return write_file("plateau.csv", body.str());
}

fs::path run_record() {
    return write_file("run.json", R"({
        "t_start_s": 0, "t_end_s": 100.0, "performance_gflops": 301500.0,
        "nodes_measured": 2, "nodes_total": 56, "network_included": false
    })");
}

} // namespace

TEST_CASE("help and argument errors") {
    CHECK(run_cli("--help").exit_code == 0);
    CHECK(run_cli("measure --help").exit_code == 0);
    CHECK(run_cli("").exit_code == 2);              // a subcommand is required
    CHECK(run_cli("frobnicate").exit_code == 2);    // unknown subcommand
    const fs::path trace = plateau_trace();
    const fs::path run = run_record();
    CHECK(run_cli("measure --trace " + trace.string() + " --run " + run.string() +
                  " --level 4 --window 74:90")
              .exit_code == 2); // level out of range
}

TEST_CASE("measure validates a compliant single-node window") {
    const fs::path trace = plateau_trace();
    const fs::path run = run_record();
    const CliResult r = run_cli("measure --trace " + trace.string() + " --run " + run.string() +
                                " --level 1 --window 74:90");
    REQUIRE(r.exit_code == 0);
    const json rep = json::parse(r.out);
    CHECK(rep.at("schema_version") == 1);
    CHECK(rep.at("ok") == true);
    CHECK_THAT(rep.at("metrics").at("avg_power_w").get<double>(),
               Catch::Matchers::WithinAbs(80.0, 1e-9));
    CHECK_THAT(rep.at("metrics").at("efficiency_mflops_per_w").get<double>(),
               Catch::Matchers::WithinRel(301500.0 * 1000.0 / 80.0, 1e-9));
    CHECK(rep.at("verdicts").at("window").at("ok") == true);
    CHECK(rep.at("verdicts").at("fraction").at("ok") == true);
}

TEST_CASE("measure flags rule violations with exit code 1") {
    const fs::path trace = plateau_trace();
    const fs::path run = run_record();
    const CliResult r = run_cli("measure --trace " + trace.string() + " --run " + run.string() +
                                " --level 3 --window 70:90");
    REQUIRE(r.exit_code == 1);
    const json rep = json::parse(r.out);
    CHECK(rep.at("ok") == false);
    CHECK(rep.at("verdicts").at("window").at("ok") == false);  // not the full runtime
    CHECK(rep.at("verdicts").at("fraction").at("ok") == false); // 2 of 56 nodes
}

TEST_CASE("measure input errors exit with code 2") {
    const fs::path trace = plateau_trace();
    const fs::path run = run_record();

    // level 1 requires an explicit window
    const CliResult no_window = run_cli("measure --trace " + trace.string() + " --run " +
                                        run.string() + " --level 1");
    CHECK(no_window.exit_code == 2);
    CHECK(no_window.err.find("window") != std::string::npos);

    CHECK(run_cli("measure --trace " + (kDir / "absent.csv").string() + " --run " + run.string() +
                  " --level 1 --window 74:90")
              .exit_code == 2);

    const fs::path bad_run = write_file("bad_run.json", "{\"t_start_s\": ");
    CHECK(run_cli("measure --trace " + trace.string() + " --run " + bad_run.string() +
                  " --level 1 --window 74:90")
              .exit_code == 2);

    const fs::path bad_window = run_record();
    CHECK(run_cli("measure --trace " + trace.string() + " --run " + bad_window.string() +
                  " --level 1 --window 74-90")
              .exit_code == 2);
}

TEST_CASE("windows quantifies the exploit gap and writes the sweep curve") {
    const fs::path trace = plateau_trace();
    const fs::path run = run_record();
    const fs::path curve = kDir / "curve.csv";
    const CliResult r = run_cli("windows --trace " + trace.string() + " --run " + run.string() +
                                " --curve-out " + curve.string());
    REQUIRE(r.exit_code == 0);
    const json rep = json::parse(r.out);
    const json& sweep = rep.at("sweep");
    CHECK_THAT(sweep.at("fair_avg_power_w").get<double>(),
               Catch::Matchers::WithinAbs(92.5, 1e-9));
    CHECK_THAT(sweep.at("best_avg_power_w").get<double>(),
               Catch::Matchers::WithinAbs(80.0, 1e-9));
    CHECK_THAT(sweep.at("exploit_gap").get<double>(),
               Catch::Matchers::WithinAbs(0.13513513513513514, 1e-9));
    CHECK_THAT(sweep.at("best_window").at("w0_s").get<double>(),
               Catch::Matchers::WithinAbs(74.0, 1e-6));
    CHECK(sweep.at("curve_points") == 641); // default step T/1000

    std::ifstream cf(curve);
    std::string header;
    REQUIRE(std::getline(cf, header));
    CHECK(header == "start_s,avg_power_w");
    std::size_t rows = 0;
    for (std::string line; std::getline(cf, line);) ++rows;
    CHECK(rows == 641);
}

TEST_CASE("windows output is deterministic") {
    const fs::path trace = plateau_trace();
    const fs::path run = run_record();
    const fs::path a = kDir / "sweep_a.json";
    const fs::path b = kDir / "sweep_b.json";
    REQUIRE(run_cli("windows --trace " + trace.string() + " --run " + run.string() + " --out " +
                    a.string())
                .exit_code == 0);
    REQUIRE(run_cli("windows --trace " + trace.string() + " --run " + run.string() + " --out " +
                    b.string())
                .exit_code == 0);
    CHECK(slurp(a) == slurp(b));
}

TEST_CASE("extrapolate scales subset power and bounds the uncertainty") {
    const CliResult r =
        run_cli("extrapolate --power 2658 --nodes-measured 2 --nodes-total 56 --network-w 257");
    REQUIRE(r.exit_code == 0);
    const json rep = json::parse(r.out);
    CHECK(rep.at("metrics").at("extrapolated_power_w").get<double>() == 74681.0);

    const fs::path nodes = write_file("nodes.csv",
                                      "node_id,efficiency_mflops_per_w\n"
                                      "node01,5154.1\nnode02,5260.1\nnode03,5248.4\n"
                                      "node04,5245.5\nnode05,5125.1\nnode06,5301.2\n"
                                      "node07,5169.3\n");
    const CliResult with_nodes =
        run_cli("extrapolate --power 2658 --nodes-measured 2 --nodes-total 56 --network-w 257 "
                "--nodes " +
                nodes.string());
    REQUIRE(with_nodes.exit_code == 0);
    const json rep2 = json::parse(with_nodes.out);
    CHECK_THAT(rep2.at("metrics").at("uncertainty_rel").get<double>(),
               Catch::Matchers::WithinAbs(0.011548823428132805, 1e-12));
    CHECK(rep2.at("variability").at("n") == 7);
    const double lo = rep2.at("metrics").at("power_low_w").get<double>();
    const double hi = rep2.at("metrics").at("power_high_w").get<double>();
    CHECK(lo < 74681.0);
    CHECK(hi > 74681.0);

    // node counts must come from somewhere
    CHECK(run_cli("extrapolate --power 2658").exit_code == 2);

    // run record supplies counts when flags are absent
    const fs::path run = run_record();
    const CliResult from_run = run_cli("extrapolate --power 2658 --run " + run.string() +
                                       " --network-w 257");
    REQUIRE(from_run.exit_code == 0);
    CHECK(json::parse(from_run.out).at("metrics").at("extrapolated_power_w").get<double>() ==
          74681.0);
}

TEST_CASE("synth emits a trace that measure can consume") {
    const fs::path params = write_file("hpl.json", R"({
        "duration_s": 100.0, "plateau_w": 100.0, "tail_start": 0.7, "tail_end_w": 50.0
    })");
    const fs::path trace = kDir / "synth.csv";
    REQUIRE(run_cli("synth --params " + params.string() + " --dt 0.5 --out " + trace.string())
                .exit_code == 0);

    const flopwatt::PowerTrace t = flopwatt::ingest_trace_file(trace.string());
    CHECK(t.meter_id == "synth");
    CHECK_THAT(flopwatt::average_power_w(t, 0.0, 100.0), Catch::Matchers::WithinAbs(92.5, 1e-9));

    const fs::path run = run_record();
    const CliResult measured = run_cli("measure --trace " + trace.string() + " --run " +
                                       run.string() + " --level 1 --window 74:90");
    REQUIRE(measured.exit_code == 0);
    CHECK_THAT(json::parse(measured.out).at("metrics").at("avg_power_w").get<double>(),
               Catch::Matchers::WithinAbs(80.0, 1e-9));

    // stdout emission has the same CSV shape
    const CliResult direct = run_cli("synth --params " + params.string() + " --dt 10");
    REQUIRE(direct.exit_code == 0);
    CHECK(direct.out.find("t_s,power_w") != std::string::npos);

    // shape parameters are validated before sampling
    const fs::path bad = write_file("bad_hpl.json", R"({
        "duration_s": 100.0, "plateau_w": 100.0, "tail_start": 0.7, "tail_end_w": 150.0
    })");
    CHECK(run_cli("synth --params " + bad.string()).exit_code == 2);
}

TEST_CASE("plan reports rooflines, placements, throughput and mode choice") {
    const fs::path inventory = write_file("inventory.json", R"({
        "gpu_boards": [
            {"name": "s9150", "chips_per_board": 1, "memory_per_chip_gb": 16,
             "bandwidth_per_chip_gb_s": 320, "board_power_w": 235},
            {"name": "s9150", "chips_per_board": 1, "memory_per_chip_gb": 16,
             "bandwidth_per_chip_gb_s": 320, "board_power_w": 235},
            {"name": "s9150", "chips_per_board": 1, "memory_per_chip_gb": 16,
             "bandwidth_per_chip_gb_s": 320, "board_power_w": 235},
            {"name": "s9150", "chips_per_board": 1, "memory_per_chip_gb": 16,
             "bandwidth_per_chip_gb_s": 320, "board_power_w": 235}
        ],
        "cpu": "2x e5-2690", "host_memory_gb": 256
    })");
    const fs::path kernel = write_file("kernel.json", R"({
        "arithmetic_intensity_flops_per_byte": 0.5208333333333334,
        "bandwidth_efficiency": 0.8
    })");
    const fs::path jobs = write_file("jobs.json", R"([
        {"nx": 32, "ny": 32, "nz": 32, "nt": 8, "bytes_per_site": 12288},
        {"nx": 1000, "ny": 1000, "nz": 1000, "nt": 20, "bytes_per_site": 1},
        {"nx": 1000, "ny": 1000, "nz": 1000, "nt": 100, "bytes_per_site": 1}
    ])");
    const fs::path modes = write_file("modes.json", R"([
        {"name": "performance", "performance_gflops": 10000, "power_w": 2000},
        {"name": "efficiency", "performance_gflops": 9500, "power_w": 1800}
    ])");

    const CliResult r = run_cli("plan --inventory " + inventory.string() + " --kernel " +
                                kernel.string() + " --jobs " + jobs.string() + " --modes " +
                                modes.string());
    REQUIRE(r.exit_code == 0);
    const json rep = json::parse(r.out);

    CHECK_THAT(rep.at("boards").at(0).at("kernel_perf_gflops_per_chip").get<double>(),
               Catch::Matchers::WithinAbs(133.33333333333334, 1e-6));

    const json& placements = rep.at("placements");
    REQUIRE(placements.size() == 3);
    CHECK(placements.at(0).at("kind") == "single_chip");
    CHECK(placements.at(0).at("footprint_bytes") == 3221225472);
    CHECK(placements.at(1).at("kind") == "spread");
    CHECK(placements.at(1).at("n_chips") == 2);
    CHECK(placements.at(2).at("kind") == "infeasible");

    // throughput packing is strict one-job-per-chip: the lattices that need
    // spreading or don't fit at all both stay queued
    CHECK(rep.at("throughput").at("unplaced") == 2);
    CHECK_THAT(rep.at("throughput").at("total_gflops").get<double>(),
               Catch::Matchers::WithinAbs(133.33333333333334, 1e-6));

    CHECK(rep.at("selected_mode").at("name") == "efficiency");
    CHECK_THAT(rep.at("selected_mode").at("gflops_per_w").get<double>(),
               Catch::Matchers::WithinRel(9500.0 / 1800.0, 1e-12));

    // jobs and modes are optional
    const CliResult bare =
        run_cli("plan --inventory " + inventory.string() + " --kernel " + kernel.string());
    REQUIRE(bare.exit_code == 0);
    const json bare_rep = json::parse(bare.out);
    CHECK_FALSE(bare_rep.contains("placements"));
    CHECK_FALSE(bare_rep.contains("selected_mode"));
}

TEST_CASE("report re-renders saved JSON and rejects foreign files") {
    const fs::path trace = plateau_trace();
    const fs::path run = run_record();
    const fs::path saved = kDir / "measure.json";
    REQUIRE(run_cli("measure --trace " + trace.string() + " --run " + run.string() +
                    " --level 1 --window 74:90 --out " + saved.string())
                .exit_code == 0);

    const CliResult text = run_cli("report --in " + saved.string() + " --format text");
    REQUIRE(text.exit_code == 0);
    CHECK(text.out.find("avg_power_w:") != std::string::npos);
    CHECK(text.out.find("command: \"measure\"") != std::string::npos);

    const CliResult csv = run_cli("report --in " + saved.string() + " --format csv");
    REQUIRE(csv.exit_code == 0);
    CHECK(csv.out.rfind("key,value\n", 0) == 0);
    CHECK(csv.out.find("metrics.avg_power_w,") != std::string::npos);
    CHECK(csv.out.find("schema_version,1\n") != std::string::npos);

    // a run record is not a report
    CHECK(run_cli("report --in " + run.string()).exit_code == 2);

    // measure itself renders text and csv directly
    CHECK(run_cli("measure --trace " + trace.string() + " --run " + run.string() +
                  " --level 1 --window 74:90 --format text")
              .exit_code == 0);
}
