#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "loggas/sampler.hpp"
#include "loggas/transport.hpp"

using namespace loggas;
namespace fs = std::filesystem;

TEST_SUITE_BEGIN("cli");

namespace {

fs::path workdir() {
    auto p = fs::temp_directory_path() / "loggas_cli_test";
    fs::create_directories(p);
    return p;
}

int run(const std::string& args) {
    std::string cmd = std::string(LOGGAS_BIN_PATH) + " " + args + " 2>/dev/null";
    int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

void write(const fs::path& p, const std::string& s) {
    std::ofstream os(p);
    os << s;
}

}  // namespace

TEST_CASE("equilibrium command produces the expected edges, byte-stable") {
    auto dir = workdir();
    write(dir / "gaussian.json",
          R"({"kind":"polynomial","beta":2.0,"coefficients":[0,0,0.5],"domain":[["-inf","inf"]]})");
    std::string base = "equilibrium --potential " + (dir / "gaussian.json").string() +
                       " --cuts 1 --out ";
    REQUIRE(run(base + (dir / "m1.json").string()) == 0);
    REQUIRE(run(base + (dir / "m2.json").string()) == 0);
    CHECK(slurp(dir / "m1.json") == slurp(dir / "m2.json"));

    auto j = nlohmann::json::parse(slurp(dir / "m1.json"));
    CHECK(j["geometry"]["cuts"][0]["a"].get<double>() == doctest::Approx(-2.0).epsilon(1e-9));
    CHECK(j["geometry"]["cuts"][0]["b"].get<double>() == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(j.contains("_config"));
}

TEST_CASE("exit codes: validation, solver, band") {
    auto dir = workdir();
    // missing input file -> 2
    CHECK(run("equilibrium --potential " + (dir / "nope.json").string() + " --cuts 1 --out " +
              (dir / "x.json").string()) == 2);
    // unknown subcommand -> 2
    CHECK(run("frobnicate") == 2);

    // wrong cut-count ansatz -> solver error 3
    write(dir / "quartic.json",
          R"({"kind":"polynomial","beta":2.0,"coefficients":[0,0,-1.5,0,0.25],"domain":[["-inf","inf"]]})");
    CHECK(run("equilibrium --potential " + (dir / "quartic.json").string() + " --cuts 1 --out " +
              (dir / "bad.json").string()) == 3);
}

TEST_CASE("sample command: determinism, csv, seed required") {
    auto dir = workdir();
    write(dir / "gauss_model.json", R"({"type":"gaussian_tridiagonal","beta":2.0})");
    std::string base = "sample --model " + (dir / "gauss_model.json").string() +
                       " --n 16 --samples 10 --seed 42 --out ";
    REQUIRE(run(base + (dir / "b1.lgb").string()) == 0);
    REQUIRE(run(base + (dir / "b2.lgb").string() + " --csv " + (dir / "b2.csv").string()) == 0);
    CHECK(slurp(dir / "b1.lgb") == slurp(dir / "b2.lgb"));
    CHECK(!slurp(dir / "b2.csv").empty());
    // seed mandatory
    CHECK(run("sample --model " + (dir / "gauss_model.json").string() +
              " --n 16 --samples 10 --out " + (dir / "b3.lgb").string()) == 2);
    // threads flag leaves the result unchanged
    REQUIRE(run(base + (dir / "b4.lgb").string() + " --threads 1") == 0);
    CHECK(slurp(dir / "b1.lgb") == slurp(dir / "b4.lgb"));
}

TEST_CASE("xi-invert command") {
    auto dir = workdir();
    write(dir / "gaussian.json",
          R"({"kind":"polynomial","beta":2.0,"coefficients":[0,0,0.5],"domain":[["-inf","inf"]]})");
    REQUIRE(run("equilibrium --potential " + (dir / "gaussian.json").string() +
                " --cuts 1 --out " + (dir / "m.json").string()) == 0);
    REQUIRE(run("xi-invert --context " + (dir / "m.json").string() + " --k 1,0,-1 --out " +
                (dir / "f.json").string()) == 0);
    auto j = nlohmann::json::parse(slurp(dir / "f.json"));
    CHECK(j["residual"].get<double>() < 1e-5 * 3.0);
    // k = 1 - x^2 inverts to f(x) = x on the Gaussian
    auto nodes = j["f"][0]["nodes"].get<std::vector<double>>();
    auto vals = j["f"][0]["values"].get<std::vector<double>>();
    for (std::size_t i = 0; i < nodes.size(); i += 12)
        CHECK(vals[i] == doctest::Approx(nodes[i]).epsilon(1e-6));
}

TEST_CASE("gaps with assert flags a mismatched reference") {
    auto dir = workdir();
    write(dir / "gaussian.json",
          R"({"kind":"polynomial","beta":2.0,"coefficients":[0,0,0.5],"domain":[["-inf","inf"]]})");
    REQUIRE(run("equilibrium --potential " + (dir / "gaussian.json").string() +
                " --cuts 1 --out " + (dir / "m.json").string()) == 0);
    // batch: beta=2 tridiagonal; mismatched reference: beta=10 (stiffer gaps)
    auto good = sample_gaussian_tridiagonal(2.0, 32, 300, 7);
    good.save((dir / "good.lgb").string());
    auto bad = sample_gaussian_tridiagonal(10.0, 32, 300, 8);
    bad.save((dir / "bad.lgb").string());

    std::string common = "gaps --batch " + (dir / "good.lgb").string() + " --measure " +
                         (dir / "m.json").string() + " --cut 0 --index 16 --m 1";
    CHECK(run(common + " --out " + (dir / "g0.json").string()) == 0);
    CHECK(run(common + " --reference " + (dir / "bad.lgb").string() + " --assert --out " +
              (dir / "g1.json").string()) == 4);
    CHECK(run(common + " --reference " + (dir / "good2.lgb").string()) == 2);  // missing file
}

TEST_CASE("pipeline command runs a dag of steps") {
    auto dir = workdir();
    write(dir / "gaussian.json",
          R"({"kind":"polynomial","beta":2.0,"coefficients":[0,0,0.5],"domain":[["-inf","inf"]]})");
    write(dir / "model.json",
          std::string(R"({"type":"loggas","measure":")") + (dir / "mp.json").string() +
              R"(","constrained":true})");
    nlohmann::json pipe;
    pipe["steps"] = nlohmann::json::array();
    pipe["steps"].push_back({{"name", "eq"},
                             {"command", "equilibrium"},
                             {"args", {"--potential", (dir / "gaussian.json").string(), "--cuts",
                                       "1", "--out", (dir / "mp.json").string()}}});
    pipe["steps"].push_back({{"name", "smp"},
                             {"command", "sample"},
                             {"args", {"--model", (dir / "model.json").string(), "--n", "8",
                                       "--samples", "6", "--sweeps", "400", "--seed", "5", "--out",
                                       (dir / "pb.lgb").string()}}});
    write(dir / "pipe.json", pipe.dump());
    CHECK(run("pipeline " + (dir / "pipe.json").string()) == 0);
    CHECK(fs::exists(dir / "pb.lgb"));
    auto b = SampleBatch::load((dir / "pb.lgb").string());
    CHECK(b.N == 8);
    CHECK(b.n_samples == 6);
}

TEST_CASE("transport and edge commands") {
    auto dir = workdir();
    write(dir / "quartic.json",
          R"({"kind":"polynomial","beta":2.0,"coefficients":[0,0,-1.5,0,0.25],"domain":[["-inf","inf"]]})");
    REQUIRE(run("equilibrium --potential " + (dir / "quartic.json").string() + " --cuts 2 --out " +
                (dir / "mt.json").string()) == 0);
    REQUIRE(run("transport --measure " + (dir / "mt.json").string() + " --out " +
                (dir / "field.json").string()) == 0);
    // the schedule artifact reloads and evaluates
    auto fs = FieldSchedule::from_json(nlohmann::json::parse(slurp(dir / "field.json")));
    CHECK(fs.n_stages() >= 1);
    auto f0 = fs.at(0.0);
    CHECK(std::isfinite(f0.z(-1.5, 1.5)));
    CHECK(f0.z(0.0, 1.5) == 0.0);

    write(dir / "cmodel.json",
          std::string(R"({"type":"loggas","measure":")") + (dir / "mt.json").string() +
              R"(","constrained":true})");
    REQUIRE(run("sample --model " + (dir / "cmodel.json").string() +
                " --n 32 --samples 60 --sweeps 600 --seed 21 --out " + (dir / "cb.lgb").string()) ==
            0);
    // edge command with an explicit tridiagonal reference batch
    auto ref = sample_gaussian_tridiagonal(2.0, 16, 60, 22);
    ref.save((dir / "eref.lgb").string());
    CHECK(run("edge --batch " + (dir / "cb.lgb").string() + " --measure " +
              (dir / "mt.json").string() + " --cut 1 --m 1 --reference " +
              (dir / "eref.lgb").string() + " --out " + (dir / "edge.json").string()) == 0);
    auto ej = nlohmann::json::parse(slurp(dir / "edge.json"));
    CHECK(ej["phi_prime"].get<double>() > 0.0);
    CHECK(ej["ks"].get<double>() >= 0.0);
}

TEST_CASE("filling and loopcheck commands") {
    auto dir = workdir();
    write(dir / "quartic.json",
          R"({"kind":"polynomial","beta":2.0,"coefficients":[0,0,-1.5,0,0.25],"domain":[["-inf","inf"]]})");
    REQUIRE(run("equilibrium --potential " + (dir / "quartic.json").string() + " --cuts 2 --out " +
                (dir / "m2.json").string()) == 0);
    write(dir / "free_model.json",
          std::string(R"({"type":"loggas","measure":")") + (dir / "m2.json").string() +
              R"(","constrained":false})");
    REQUIRE(run("sample --model " + (dir / "free_model.json").string() +
                " --n 24 --samples 40 --sweeps 800 --seed 9 --out " + (dir / "fb.lgb").string()) ==
            0);
    CHECK(run("filling --batch " + (dir / "fb.lgb").string() + " --measure " +
              (dir / "m2.json").string() + " --out " + (dir / "fill.json").string()) == 0);
    auto j = nlohmann::json::parse(slurp(dir / "fill.json"));
    CHECK(j["tail"].size() == 3);

    CHECK(run("loopcheck --batch " + (dir / "fb.lgb").string() + " --measure " +
              (dir / "m2.json").string() + " --order 1 --f 0,1 --out " +
              (dir / "loop.json").string()) == 0);
    auto lj = nlohmann::json::parse(slurp(dir / "loop.json"));
    CHECK(std::abs(lj["residual"].get<double>()) <= 4.0 * lj["se"].get<double>() + 1e-9);

    // a mismatched measure violates the identity: --assert exits 4
    write(dir / "gaussian2.json",
          R"({"kind":"polynomial","beta":2.0,"coefficients":[0,0,0.5],"domain":[["-inf","inf"]]})");
    REQUIRE(run("equilibrium --potential " + (dir / "gaussian2.json").string() +
                " --cuts 1 --out " + (dir / "mg.json").string()) == 0);
    write(dir / "gmodel.json",
          std::string(R"({"type":"loggas","measure":")") + (dir / "mg.json").string() +
              R"(","constrained":true})");
    REQUIRE(run("sample --model " + (dir / "gmodel.json").string() +
                " --n 24 --samples 120 --sweeps 800 --seed 10 --out " + (dir / "gb.lgb").string()) ==
            0);
    // a batch from a stiffer potential violates the identity of the wider
    // measure: --assert exits 4 (supports nest, so no domain error)
    write(dir / "stiff.json",
          R"({"kind":"polynomial","beta":2.0,"coefficients":[0,0,0.65],"domain":[["-inf","inf"]]})");
    REQUIRE(run("equilibrium --potential " + (dir / "stiff.json").string() + " --cuts 1 --out " +
                (dir / "mstiff.json").string()) == 0);
    write(dir / "smodel.json",
          std::string(R"({"type":"loggas","measure":")") + (dir / "mstiff.json").string() +
              R"(","constrained":true})");
    REQUIRE(run("sample --model " + (dir / "smodel.json").string() +
                " --n 24 --samples 120 --sweeps 800 --seed 11 --out " + (dir / "sb.lgb").string()) ==
            0);
    CHECK(run("loopcheck --batch " + (dir / "sb.lgb").string() + " --measure " +
              (dir / "mg.json").string() + " --order 1 --f 0,1 --assert") == 4);
}

TEST_SUITE_END();
