#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#include "perc/cloud_io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

#ifndef PERC_CLI_PATH
#error "PERC_CLI_PATH must point at the perc binary"
#endif

namespace {

struct RunResult {
    int exit_code;
    std::string out;
    std::string err;
};

RunResult run_cli(const std::string& args) {
    fs::path out = fs::temp_directory_path() / "perc_cli_stdout.txt";
    fs::path err = fs::temp_directory_path() / "perc_cli_stderr.txt";
    std::string cmd = std::string(PERC_CLI_PATH) + " " + args + " >" + out.string() + " 2>" +
                      err.string();
    int rc = std::system(cmd.c_str());
    RunResult res;
    res.exit_code = rc == -1 ? -1 : WEXITSTATUS(rc);
    auto slurp = [](const fs::path& p) {
        std::ifstream f(p);
        std::stringstream ss;
        ss << f.rdbuf();
        return ss.str();
    };
    res.out = slurp(out);
    res.err = slurp(err);
    return res;
}

fs::path tmp(const std::string& name) {
    return fs::temp_directory_path() / ("perc_cli_" + name);
}

void write_three_csv(const fs::path& p) {
    std::ofstream f(p);
    f << "0\n1\n3\n";
}

} // namespace

TEST_CASE("gen writes a valid binary sphere cloud") {
    auto out = tmp("s2.pgc");
    auto res = run_cli("gen --kind hypersphere --d 2 --n 1000 --seed 7 --out " + out.string());
    REQUIRE(res.exit_code == 0);
    perc::PointCloud c = perc::load_cloud(out);
    CHECK(c.size() == 1000);
    CHECK(c.dim() == 3);
    CHECK(c.meta.at("kind") == "hypersphere");
    fs::remove(out);
}

TEST_CASE("gen without --n is a usage error") {
    auto res = run_cli("gen --kind hypersphere --d 2 --seed 7 --out /tmp/x.pgc");
    CHECK(res.exit_code == 2);
    CHECK(res.out.empty());
    CHECK_FALSE(res.err.empty());
}

TEST_CASE("gen step density splits mass as requested") {
    auto out = tmp("step.csv");
    auto res =
        run_cli("gen --kind step --w 0.8 --n 100000 --seed 1 --out " + out.string());
    REQUIRE(res.exit_code == 0);
    perc::PointCloud c = perc::load_cloud(out);
    std::size_t left = 0;
    for (std::size_t i = 0; i < c.size(); ++i)
        if (c.points(i, 0) < 0.5) ++left;
    double frac = static_cast<double>(left) / static_cast<double>(c.size());
    CHECK(frac > 0.79);
    CHECK(frac < 0.81);
    fs::remove(out);
}

TEST_CASE("gen accepts a JSON spec") {
    auto out = tmp("spec.pgc");
    auto res = run_cli(R"(gen --spec '{"kind":"ball","d":2,"n":50,"seed":3}' --out )" +
                       out.string());
    REQUIRE(res.exit_code == 0);
    perc::PointCloud c = perc::load_cloud(out);
    CHECK(c.size() == 50);
    CHECK(c.dim() == 2);
    fs::remove(out);
}

TEST_CASE("threshold on the documented 1-D example") {
    auto in = tmp("three.csv");
    write_three_csv(in);
    auto res = run_cli("threshold --in " + in.string() + " --out -");
    REQUIRE(res.exit_code == 0);
    json j = json::parse(res.out);
    CHECK(j["report"]["epsilon_c"] == 1.0);
    CHECK(j["report"]["connectivity_epsilon"] == 2.0);
    CHECK(j["report"]["rule"] == "strict-majority");
    CHECK(j["report"]["n"] == 3);
    CHECK(j["manifest"]["tool_version"] == "0.1.0");
    fs::remove(in);
}

TEST_CASE("stdout carries only the report with --out -") {
    auto in = tmp("three2.csv");
    write_three_csv(in);
    auto res = run_cli("threshold --in " + in.string());
    REQUIRE(res.exit_code == 0);
    REQUIRE_NOTHROW(json::parse(res.out)); // nothing but the JSON document
    fs::remove(in);
}

TEST_CASE("unreadable input is a data error (exit 3)") {
    auto res = run_cli("threshold --in /no/such/cloud.pgc");
    CHECK(res.exit_code == 3);
}

TEST_CASE("shift of a cloud against itself is healthy") {
    auto a = tmp("self.pgc");
    REQUIRE(run_cli("gen --kind ball --d 2 --n 200 --seed 5 --out " + a.string()).exit_code ==
            0);
    auto res = run_cli("shift --real " + a.string() + " --model " + a.string() +
                       " --resamples 0");
    REQUIRE(res.exit_code == 0);
    json j = json::parse(res.out);
    CHECK(j["report"]["delta_eps"] == 0.0);
    CHECK(j["report"]["zone"] == "healthy");
    fs::remove(a);
}

TEST_CASE("shift with mismatched N exits 3") {
    auto a = tmp("n100.pgc");
    auto b = tmp("n120.pgc");
    run_cli("gen --kind ball --d 2 --n 100 --seed 1 --out " + a.string());
    run_cli("gen --kind ball --d 2 --n 120 --seed 1 --out " + b.string());
    auto res = run_cli("shift --real " + a.string() + " --model " + b.string() +
                       " --resamples 0");
    CHECK(res.exit_code == 3);
    fs::remove(a);
    fs::remove(b);
}

TEST_CASE("shift with resamples requires a seed") {
    auto a = tmp("seedless.pgc");
    run_cli("gen --kind ball --d 2 --n 100 --seed 1 --out " + a.string());
    auto res = run_cli("shift --real " + a.string() + " --model " + a.string() +
                       " --resamples 10");
    CHECK(res.exit_code == 2);
    fs::remove(a);
}

TEST_CASE("fit-scaling reports a d=2 slope near -0.5") {
    auto res = run_cli("--quiet fit-scaling --kind hypersphere --d 2 --n 100,300,1000 "
                       "--trials 3 --seed 7");
    REQUIRE(res.exit_code == 0);
    json j = json::parse(res.out);
    double slope = j["report"]["slope"].get<double>();
    CHECK(slope > -0.6);
    CHECK(slope < -0.4);
    CHECK(j["manifest"]["seed_info"]["seeds"][0] == 7);
}

TEST_CASE("invariance subcommand checks the sandwich") {
    auto in = tmp("inv.pgc");
    run_cli("gen --kind cube --d 2 --n 150 --seed 9 --out " + in.string());
    auto res = run_cli("invariance --in " + in.string() + " --map scale --factor 2");
    REQUIRE(res.exit_code == 0);
    json j = json::parse(res.out);
    CHECK(j["report"]["lower_ok"] == true);
    CHECK(j["report"]["upper_ok"] == true);
    CHECK(j["report"]["c1"] == 2.0);

    auto res2 = run_cli("invariance --in " + in.string() + " --map linear --matrix '0,1;1,0'");
    REQUIRE(res2.exit_code == 0);

    // dimension mismatch: 3-column matrix against a 2-D cloud
    auto res3 =
        run_cli("invariance --in " + in.string() + " --map linear --matrix '1,0,0;0,1,0'");
    CHECK(res3.exit_code == 3);
    fs::remove(in);
}

TEST_CASE("loss subcommand emits value and optional gradient") {
    auto a = tmp("lossa.pgc");
    auto b = tmp("lossb.pgc");
    run_cli("gen --kind ball --d 2 --n 30 --seed 11 --out " + a.string());
    run_cli("gen --kind ball --d 2 --n 30 --seed 12 --out " + b.string());
    auto res = run_cli("loss --real " + a.string() + " --fake " + b.string());
    REQUIRE(res.exit_code == 0);
    json j = json::parse(res.out);
    CHECK(j["report"]["value"].get<double>() >= 0.0);
    CHECK_FALSE(j["report"].contains("gradient"));

    auto res2 = run_cli("loss --real " + a.string() + " --fake " + b.string() + " --grad");
    json j2 = json::parse(res2.out);
    REQUIRE(j2["report"].contains("gradient"));
    CHECK(j2["report"]["gradient"].size() == 30);
    fs::remove(a);
    fs::remove(b);
}

TEST_CASE("expand subcommand runs and writes a trace") {
    auto real = tmp("exr.pgc");
    auto fake = tmp("exf.pgc");
    auto trace = tmp("trace.csv");
    run_cli("gen --kind ball --d 2 --n 50 --seed 21 --out " + real.string());
    run_cli("gen --kind ball --d 2 --n 50 --seed 21 --radius 0.5 --out " + fake.string());
    auto res = run_cli("expand --real " + real.string() + " --fake " + fake.string() +
                       " --steps 50 --lr 2 --eval-every 10 --trace " + trace.string());
    REQUIRE(res.exit_code == 0);
    json j = json::parse(res.out);
    CHECK(j["report"]["diverged"] == false);
    std::ifstream tf(trace);
    std::string header;
    std::getline(tf, header);
    CHECK(header == "iter,loss,eps_c,delta_eps");
    fs::remove(real);
    fs::remove(fake);
    fs::remove(trace);
}

TEST_CASE("curve subcommand writes CSV and resamples grids") {
    auto in = tmp("curve.csv.pgc");
    auto csv = tmp("curve_out.csv");
    auto spectrum = tmp("spectrum_out.csv");
    run_cli("gen --kind cube --d 2 --n 40 --seed 2 --out " + in.string());
    auto res = run_cli("curve --in " + in.string() + " --csv " + csv.string() +
                       " --grid 0.05,0.1,0.2,0.4 --spectrum-csv " + spectrum.string());
    REQUIRE(res.exit_code == 0);
    json j = json::parse(res.out);
    REQUIRE(j["report"]["points"].size() == 4);
    std::ifstream cf(csv);
    std::string header;
    std::getline(cf, header);
    CHECK(header == "epsilon,p_inf");
    std::ifstream sf(spectrum);
    std::getline(sf, header);
    CHECK(header == "distance,i,j");
    std::size_t rows = 0;
    while (std::getline(sf, header)) ++rows;
    CHECK(rows == 40 * 39 / 2);
    fs::remove(in);
    fs::remove(csv);
    fs::remove(spectrum);
}

TEST_CASE("fit-scaling writes the per-N plot CSV") {
    auto csv = tmp("fit.csv");
    auto res = run_cli("--quiet fit-scaling --kind cube --d 1 --n 50,100 --trials 2 --seed 3 "
                       "--csv " + csv.string());
    REQUIRE(res.exit_code == 0);
    std::ifstream cf(csv);
    std::string line;
    std::getline(cf, line);
    CHECK(line == "n,eps_mean,eps_std");
    std::size_t rows = 0;
    while (std::getline(cf, line)) ++rows;
    CHECK(rows == 2);
    fs::remove(csv);
}

TEST_CASE("PERC_THREADS env caps workers without changing results") {
    auto in = tmp("envt.pgc");
    run_cli("gen --kind ball --d 2 --n 200 --seed 44 --out " + in.string());
    auto r1 = run_cli("threshold --in " + in.string());
    fs::path script = tmp("env_run.sh");
    {
        std::ofstream f(script);
        f << "PERC_THREADS=1 " << PERC_CLI_PATH << " threshold --in " << in.string() << "\n";
    }
    auto r2 = run_cli("threshold --in " + in.string() + " --threads 1");
    int rc = std::system(("sh " + script.string() + " > " + script.string() + ".out").c_str());
    REQUIRE(rc == 0);
    std::ifstream f(script.string() + ".out");
    std::stringstream ss;
    ss << f.rdbuf();
    json ja = json::parse(r1.out), jb = json::parse(r2.out), jc = json::parse(ss.str());
    CHECK(ja["report"].dump() == jb["report"].dump());
    CHECK(ja["report"].dump() == jc["report"].dump());
    fs::remove(in);
    fs::remove(script);
    fs::remove(script.string() + ".out");
}

TEST_CASE("reports are bit-identical across thread counts and reruns") {
    auto a = tmp("det_a.pgc");
    auto b = tmp("det_b.pgc");
    run_cli("gen --kind ball --d 2 --n 300 --seed 31 --out " + a.string());
    run_cli("gen --kind ball --d 2 --n 300 --seed 32 --radius 0.7 --out " + b.string());

    auto strip = [](const std::string& text) {
        json j = json::parse(text);
        return j["report"].dump(); // manifest carries wall time and thread count
    };

    auto s1 = run_cli("--quiet --threads 1 shift --real " + a.string() + " --model " +
                      b.string() + " --resamples 20 --seed 77");
    auto s4 = run_cli("--quiet --threads 4 shift --real " + a.string() + " --model " +
                      b.string() + " --resamples 20 --seed 77");
    REQUIRE(s1.exit_code == 0);
    REQUIRE(s4.exit_code == 0);
    REQUIRE(strip(s1.out) == strip(s4.out));

    auto f1 = run_cli("--quiet --threads 1 fit-scaling --kind cube --d 2 --n 50,100,200 "
                      "--trials 3 --seed 13");
    auto f2 = run_cli("--quiet --threads 4 fit-scaling --kind cube --d 2 --n 50,100,200 "
                      "--trials 3 --seed 13");
    REQUIRE(f1.exit_code == 0);
    REQUIRE(strip(f1.out) == strip(f2.out));

    // same command, same seed, fresh process: bit-identical point estimates
    auto f3 = run_cli("--quiet --threads 2 fit-scaling --kind cube --d 2 --n 50,100,200 "
                      "--trials 3 --seed 13");
    REQUIRE(strip(f1.out) == strip(f3.out));

    fs::remove(a);
    fs::remove(b);
}
