#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

const std::string tool = HBFTOOL_PATH;
const std::string fixtures = FIXTURE_DIR;

int run(const std::string& args) {
    std::string cmd = tool + " " + args + " >/dev/null 2>&1";
    int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

fs::path fresh_dir(const std::string& name) {
    fs::path d = fs::temp_directory_path() / ("hbfcli_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

fs::path write_config(const fs::path& dir, const std::string& body) {
    fs::path p = dir / "config.json";
    std::ofstream(p) << body;
    return p;
}

// minimal config on a 2-beam line codebook
std::string small_config(const fs::path& dir, const std::string& extra = "") {
    fs::path cb = dir / "cb.json";
    std::ofstream(cb) << R"({
      "noise_power": 1e-12, "bandwidth": 1e6,
      "nodes": [
        {"id": 1, "parent": 0, "box": [0, 2, 0, 1], "gain": 1e-10},
        {"id": 2, "parent": 1, "box": [0, 1, 0, 1], "gain": 1e-9}
      ]})";
    return std::string(R"({"codebook": "cb.json",
      "traffic": {"rho": [0.25, 0.25], "r": [1.0, 1.0]})") +
           extra + "}";
}

} // namespace

TEST_CASE("analyze-pf emits the documented schema with metadata") {
    fs::path dir = fresh_dir("pf");
    fs::path cfg = write_config(dir, small_config(dir));
    CHECK(run("analyze-pf --config " + cfg.string() + " --output " +
              (dir / "out").string()) == 0);
    auto lines = lines_of(slurp(dir / "out" / "pf.csv"));
    REQUIRE(lines.size() == 4); // metadata + header + 2 beams x 1 factor
    CHECK(lines[0].rfind("# critical_load_factor=2", 0) == 0);
    CHECK(lines[1] ==
          "load_factor,beam,depth,method,lambda,rho,expected_n,throughput,"
          "normalized_throughput");
    // worked line: E[N] = (0.5, 0.5)
    CHECK(lines[2].rfind("1,1,0,pf-exact,0.25,0.25,0.5,0.5,0.5", 0) == 0);
}

TEST_CASE("csv output is deterministic and LF-terminated") {
    fs::path dir = fresh_dir("det");
    fs::path cfg = write_config(
        dir, small_config(dir, R"(, "sweep": [0.5, 1.0, 1.5])"));
    CHECK(run("analyze-pf --config " + cfg.string() + " --output " +
              (dir / "a").string()) == 0);
    CHECK(run("analyze-pf --config " + cfg.string() + " --output " +
              (dir / "b").string()) == 0);
    std::string a = slurp(dir / "a" / "pf.csv");
    CHECK(a == slurp(dir / "b" / "pf.csv"));
    CHECK(a.find('\r') == std::string::npos);
    CHECK(a.back() == '\n');
}

TEST_CASE("unknown config keys are rejected") {
    fs::path dir = fresh_dir("badkey");
    fs::path cfg = write_config(dir, small_config(dir, R"(, "bogus": 1)"));
    CHECK(run("analyze-pf --config " + cfg.string()) == 2);

    fs::path cfg2 = write_config(
        dir, small_config(dir, R"(, "sim": {"event": 10})"));
    CHECK(run("simulate --config " + cfg2.string()) == 2);
}

TEST_CASE("config mode must match the verb when present") {
    fs::path dir = fresh_dir("mode");
    fs::path cfg =
        write_config(dir, small_config(dir, R"(, "mode": "analyze-pf")"));
    CHECK(run("analyze-pf --config " + cfg.string() + " --output " +
              (dir / "out").string()) == 0);
    CHECK(run("analyze-mt --config " + cfg.string()) == 2);
}

TEST_CASE("malformed inputs fail with a nonzero status") {
    fs::path dir = fresh_dir("malformed");
    fs::path cfg = write_config(dir, "{nonsense");
    CHECK(run("analyze-pf --config " + cfg.string()) == 2);
    CHECK(run("analyze-pf --config " + (dir / "missing.json").string()) == 2);
    // traffic with both lambda and rho
    fs::path cfg2 = write_config(dir, small_config(dir).insert(
        small_config(dir).find("\"rho\""), "\"lambda\": [0.1, 0.1], "));
    CHECK(run("analyze-pf --config " + cfg2.string()) == 2);
}

TEST_CASE("unstable pf sweep propagates a model error") {
    fs::path dir = fresh_dir("unstable");
    fs::path cfg =
        write_config(dir, small_config(dir, R"(, "sweep": [0.5, 2.1])"));
    CHECK(run("analyze-pf --config " + cfg.string() + " --output " +
              (dir / "out").string()) == 2);
}

TEST_CASE("allocate writes a feasible allocation artifact") {
    fs::path dir = fresh_dir("alloc");
    fs::path cfg = write_config(dir, small_config(dir,
        R"(, "alpha": 1.0, "flows": [{"x": 0.5, "y": 0.5}, {"x": 1.5, "y": 0.5}])"));
    CHECK(run("allocate --config " + cfg.string() + " --output " +
              (dir / "out").string()) == 0);
    std::string art = slurp(dir / "out" / "allocation.json");
    CHECK(art.find("\"kappa\"") != std::string::npos);
    CHECK(art.find("\"gamma\"") != std::string::npos);
    CHECK(art.find("\"utility\"") != std::string::npos);
    // one flow at each beam of the line: pf gives gamma = (1/2, 1/2)
    CHECK(art.find("0.5") != std::string::npos);
}

TEST_CASE("analyze-streaming emits the loss schema") {
    fs::path dir = fresh_dir("streaming");
    fs::path cfg = write_config(dir, small_config(dir,
        R"(, "streaming": {"xi": 2, "s": [1, 1]}, "sweep": [4.0])"));
    CHECK(run("analyze-streaming --config " + cfg.string() + " --output " +
              (dir / "out").string()) == 0);
    auto lines = lines_of(slurp(dir / "out" / "streaming.csv"));
    REQUIRE(lines.size() == 3);
    CHECK(lines[0] == "load_factor,beam,depth,s_v,rho,blocking_probability,method");
    // rho = (1,1) at factor 4: the hand-worked case with p = (0.4, 0.4)
    CHECK(lines[1] == "4,1,0,1,1,0.4,blocking-dp");
    CHECK(lines[2] == "4,2,1,1,1,0.4,blocking-dp");
}

TEST_CASE("simulate honors the seed override") {
    fs::path dir = fresh_dir("sim");
    fs::path cfg = write_config(dir, small_config(dir,
        R"(, "sim": {"events": 20000, "seed": 3, "policy": "pf"})"));
    CHECK(run("simulate --config " + cfg.string() + " --output " +
              (dir / "a").string() + " --seed 11") == 0);
    CHECK(run("simulate --config " + cfg.string() + " --output " +
              (dir / "b").string() + " --seed 11") == 0);
    CHECK(run("simulate --config " + cfg.string() + " --output " +
              (dir / "c").string() + " --seed 12") == 0);
    std::string a = slurp(dir / "a" / "simulate.csv");
    CHECK(a == slurp(dir / "b" / "simulate.csv"));
    CHECK(a != slurp(dir / "c" / "simulate.csv"));
    auto lines = lines_of(a);
    CHECK(lines[0] ==
          "load_factor,beam,depth,method,lambda,rho,expected_n,se_expected_n,"
          "throughput,se_throughput,normalized_throughput");
}

TEST_CASE("shipped experiment fixture is runnable end to end") {
    fs::path dir = fresh_dir("fixture");
    CHECK(run("analyze-pf --config " + fixtures + "/example_experiment.json" +
              " --output " + (dir / "out").string()) == 0);
    auto lines = lines_of(slurp(dir / "out" / "pf.csv"));
    CHECK(lines.size() == 2 + 5 * 10); // metadata + header + 5 factors x 10 beams
    CHECK(run("analyze-streaming --config " + fixtures +
              "/example_experiment.json --output " + (dir / "out").string()) == 0);
    CHECK(run("analyze-mt --config " + fixtures +
              "/example_experiment.json --output " + (dir / "out").string()) == 0);
}
