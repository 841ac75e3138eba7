#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "qlab/cli.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out, err;
};

Run cli_run(std::vector<std::string> args) {
    std::ostringstream out, err;
    int code = qlab::cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

fs::path scratch() {
    auto d = fs::temp_directory_path() / "qlab_cli_test";
    fs::create_directories(d);
    return d;
}

std::string write(const std::string& name, const std::string& text) {
    auto p = scratch() / name;
    std::ofstream(p, std::ios::binary) << text;
    return p.string();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

const char* kCsp = R"({
  "triple": {
    "phi": {"family": "power_law", "p": 2},
    "l": {"family": "constant", "c": 1},
    "f": {"family": "power", "omega": 0.5}
  },
  "model": {"family": "euclidean", "m": 3},
  "beta": {"mu": 2},
  "beta_bar": {"mu": 2}
})";

}  // namespace

TEST_CASE("ko flags: growth faster than the gradient weight holds at infinity") {
    auto r = cli_run({"ko", "--family", "plaplace", "--p", "2", "--chi", "1", "--omega", "2", "--endpoint", "infinity"});
    CHECK(r.code == 0);
    CHECK(r.out.rfind("ko endpoint=infinity", 0) == 0);
    CHECK(r.out.find("outcome=Holds") != std::string::npos);
    CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 1);

    auto f = cli_run({"ko", "--family", "plaplace", "--p", "2", "--chi", "1", "--omega", "0.5", "--endpoint", "infinity"});
    CHECK(f.code == 1);
    auto z = cli_run({"ko", "--family", "plaplace", "--p", "2", "--chi", "1", "--omega", "0.5", "--endpoint", "zero"});
    CHECK(z.code == 0);
}

TEST_CASE("malformed config reports line and column") {
    auto path = write("bad.json", "{\n  \"triple\": {\n    \"phi\": {\"family\": \"power_law\" \"p\": 2}\n  }\n}\n");
    auto r = cli_run({"construct", "--kind", "cspA", "--config", path});
    CHECK(r.code == 4);
    CHECK(r.err.find("bad.json:3:") != std::string::npos);
    CHECK(r.err.find("malformed config") != std::string::npos);
}

TEST_CASE("unknown keys are rejected with their location") {
    std::string text = kCsp;
    text.replace(text.find("\"p\": 2"), 6, "\"p\": 2, \"pp\": 3");
    auto r = cli_run({"construct", "--kind", "cspA", "--config", write("unknown.json", text)});
    CHECK(r.code == 4);
    CHECK(r.err.find("unknown.json:3:") != std::string::npos);
    CHECK(r.err.find("triple.phi.pp: unknown key") != std::string::npos);
}

TEST_CASE("parameters outside a family's range are config errors") {
    std::string text = kCsp;
    text.replace(text.find("\"p\": 2"), 6, "\"p\": 0.5");
    auto r = cli_run({"construct", "--kind", "cspA", "--config", write("range.json", text)});
    CHECK(r.code == 4);
    CHECK(r.err.find("triple.phi") != std::string::npos);
}

TEST_CASE("usage errors exit 4") {
    CHECK(cli_run({}).code == 4);
    CHECK(cli_run({"frobnicate"}).code == 4);
    CHECK(cli_run({"ko", "--family", "plaplace"}).code == 4);
    CHECK(cli_run({"construct", "--kind", "cspA", "--config", (scratch() / "missing.json").string()}).code == 4);
}

TEST_CASE("construct prints a certificate table and reruns are byte-identical") {
    auto cfg = write("csp.json", kCsp);
    auto a = (scratch() / "a.csv").string(), b = (scratch() / "b.csv").string();
    auto r1 = cli_run({"construct", "--kind", "cspA", "--config", cfg, "--out", a});
    auto r2 = cli_run({"construct", "--kind", "cspA", "--config", cfg, "--out", b});
    CHECK(r1.code == 0);
    CHECK(r1.out == r2.out);
    CHECK(r1.out.find("inequality: pass") != std::string::npos);
    auto csv = slurp(a);
    CHECK(csv.rfind("r,w,wprime,lhs,rhs,residual\n", 0) == 0);
    CHECK(csv == slurp(b));
    // 17 significant digits
    auto second = csv.substr(csv.find('\n') + 1);
    auto cell = second.substr(second.find(',') + 1);
    cell = cell.substr(cell.find(',') + 1);
    cell = cell.substr(0, cell.find(','));
    CHECK(cell.size() >= 18);
}

TEST_CASE("a failing hypothesis of the construction exits 1") {
    std::string text = kCsp;
    text.replace(text.find("\"omega\": 0.5"), 12, "\"omega\": 1.5");
    auto r = cli_run({"construct", "--kind", "cspA", "--config", write("ko.json", text)});
    CHECK(r.code == 1);
    CHECK(r.err.find("KellerOssermanViolated") != std::string::npos);
}

TEST_CASE("normalized config round-trips") {
    auto first = cli_run({"construct", "--kind", "cspA", "--config", write("rt.json", kCsp), "--print-config"});
    REQUIRE(first.code == 0);
    auto second = cli_run({"construct", "--config", write("rt2.json", first.out), "--print-config"});
    CHECK(second.code == 0);
    CHECK(first.out == second.out);
    CHECK(first.out.find("\"kind\": \"cspA\"") != std::string::npos);
}

TEST_CASE("environment overrides the grid flag, the command line overrides both") {
    auto cfg = write("model.json", R"({"model": {"family": "hyperbolic", "m": 3, "kappa": 1},
                                      "grid": {"from": 0.1, "to": 5, "spacing": "linear"}})");
    setenv("QLAB_GRID", "7", 1);
    auto env = cli_run({"model", "--config", cfg});
    auto flag = cli_run({"--grid", "9", "model", "--config", cfg});
    unsetenv("QLAB_GRID");
    CHECK(env.out.find("nodes=7") != std::string::npos);
    CHECK(flag.out.find("nodes=9") != std::string::npos);
}

TEST_CASE("model curves") {
    auto cfg = write("curves.json", R"({"model": {"family": "euclidean", "m": 3},
                                       "grid": {"from": 1, "to": 2, "spacing": "linear", "n": 2}})");
    auto csv = (scratch() / "curves.csv").string();
    auto r = cli_run({"model", "--config", cfg, "--out", csv});
    CHECK(r.code == 0);
    // v = 4π r², Δr = 2/r
    std::istringstream in(slurp(csv));
    std::string line;
    std::getline(in, line);
    CHECK(line == "r,g,gprime,v,laplacian");
    for (double r : {1.0, 2.0}) {
        REQUIRE(std::getline(in, line));
        std::vector<double> cells;
        std::istringstream row(line);
        for (std::string c; std::getline(row, c, ',');) cells.push_back(std::stod(c));
        REQUIRE(cells.size() == 5);
        CHECK(cells[0] == r);
        CHECK(cells[1] == r);
        CHECK(cells[2] == 1);
        CHECK(cells[3] == doctest::Approx(4 * M_PI * r * r).epsilon(1e-14));
        CHECK(cells[4] == doctest::Approx(2 / r).epsilon(1e-14));
    }
}

TEST_CASE("bvp solve writes the solution and maps solver failures to 3") {
    auto cfg = write("bvp.json", R"({"triple": {"phi": {"family": "power_law", "p": 2},
                                                "f": {"family": "power", "omega": 1}}, "T": 1, "eta": 1})");
    auto csv = (scratch() / "bvp.csv").string();
    auto r = cli_run({"bvp", "solve", "--kind", "dirichlet", "--config", cfg, "--out", csv});
    CHECK(r.code == 0);
    CHECK(slurp(csv).rfind("t,w,wprime,residual\n0,0,", 0) == 0);

    auto tight = write("tight.json", R"({"triple": {"phi": {"family": "power_law", "p": 2},
                                                    "f": {"family": "power", "omega": 1}}, "xi": 0.01})");
    CHECK(cli_run({"bvp", "solve", "--config", tight}).code == 3);
}

TEST_CASE("verify subcommands") {
    auto res = write("res.json", R"({"model": {"family": "euclidean", "m": 3},
        "triple": {"phi": {"family": "power_law", "p": 2}, "f": {"family": "power", "omega": 0}},
        "weight": {"mu": 0, "c": 6}, "profile": {"family": "power", "sigma": 2},
        "grid": {"from": 0.5, "to": 10}})");
    auto r = cli_run({"verify", "residual", "--config", res});
    CHECK(r.code == 0);  // Δ r² = 6 in three dimensions
    CHECK(r.out.find("sign==0") != std::string::npos);

    auto in = write("cex.json", R"({"family": "csp-intro", "m": 3, "alpha": 3, "omega": 0.5, "sigma": 2})");
    CHECK(cli_run({"verify", "counterexample", "--config", in}).code == 0);
    auto uncovered = write("cex3.json", R"({"family": "wmp-power", "m": 3, "kappa": 1, "alpha": -2, "p": 2,
                                            "q": 1, "chi": 0.5, "sigma": 1.5, "mu": 0.75})");
    CHECK(cli_run({"verify", "counterexample", "--config", uncovered}).code == 2);

    auto thm = write("thm.json", R"({"kappa": 1, "alpha": 0, "chi": 0, "mu": 0})");
    auto csv = (scratch() / "thm.csv").string();
    auto t = cli_run({"theorems", "--config", thm, "--out", csv});
    CHECK(t.code == 0);
    CHECK(slurp(csv).find("SMP,no,\"α = −2, χ = 0 and κ̄ ≤ (p−1)/(m−1)\"") != std::string::npos);
    CHECK(cli_run({"verify", "theorems", "--config", thm}).out == t.out);
}
