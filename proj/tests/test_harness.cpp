#include <doctest.h>

#include <unistd.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "srec/ensemble.hpp"
#include "srec/harness.hpp"

using namespace srec;

namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

fs::path fresh_dir(const std::string& name) {
    fs::path dir = fs::temp_directory_path() / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

// Byte-compare every regular file in two directories.
void expect_identical_dirs(const fs::path& lhs, const fs::path& rhs) {
    std::map<std::string, std::string> left, right;
    for (const auto& e : fs::directory_iterator(lhs))
        left[e.path().filename().string()] = slurp(e.path());
    for (const auto& e : fs::directory_iterator(rhs))
        right[e.path().filename().string()] = slurp(e.path());
    REQUIRE(left.size() == right.size());
    for (const auto& [name, bytes] : left) {
        REQUIRE(right.count(name) == 1);
        CHECK_MESSAGE(bytes == right.at(name), "file differs: ", name);
    }
}

int run_cli(const std::vector<std::string>& args) {
    std::vector<const char*> argv;
    argv.push_back("srec");
    for (const std::string& a : args) argv.push_back(a.c_str());
    return cli_main(static_cast<int>(argv.size()), argv.data());
}

std::string run_cli_capture(const std::vector<std::string>& args, int& exit_code) {
    fs::path tmp = fs::temp_directory_path() / "srec_cli_capture.txt";
    std::fflush(stdout);
    int saved = dup(fileno(stdout));
    FILE* redirected = std::freopen(tmp.string().c_str(), "w", stdout);
    REQUIRE(redirected != nullptr);
    exit_code = run_cli(args);
    std::fflush(stdout);
    dup2(saved, fileno(stdout));
    close(saved);
    return slurp(tmp);
}

const char* kTinyPhaseConfig = R"({
  "kind": "phase_transition",
  "m": 16,
  "rho_grid": [0.125, 0.25],
  "delta_grid": [0.25, 0.5],
  "trials_per_cell": 4,
  "algorithms": [
    {"name": "ompr", "family": "ompr_l", "l": 1},
    {"name": "omp", "family": "omp"}
  ],
  "base_seed": 12
})";

}  // namespace

TEST_CASE("config parsing accepts the documented keys and rejects others") {
    ExperimentSpec spec = parse_experiment_spec(kTinyPhaseConfig);
    CHECK(spec.kind == ExperimentKind::phase_transition);
    CHECK(spec.m == 16);
    CHECK(spec.rho_grid.size() == 2);
    CHECK(spec.trials_per_cell == 4);
    CHECK(spec.algorithms.size() == 2);
    CHECK(spec.success_threshold == 0.01);

    CHECK_THROWS_AS(parse_experiment_spec(R"({"kind": "phase_transition", "bogus": 1})"),
                    BadArguments);
    CHECK_THROWS_AS(parse_experiment_spec(R"({"kind": "sideways"})"), BadArguments);
    CHECK_THROWS_AS(parse_experiment_spec("{invalid json"), BadArguments);
    CHECK_THROWS_AS(parse_experiment_spec(
                        R"({"algorithms": [{"name": "a", "family": "ompr_l", "l": "3k"}]})"),
                    BadArguments);
    CHECK_THROWS_AS(
        parse_experiment_spec(
            R"({"algorithms": [{"name": "a"}, {"name": "a"}]})"),
        BadArguments);

    ExperimentSpec two_k = parse_experiment_spec(
        R"({"algorithms": [{"name": "csp", "family": "two_stage", "l": "2k"}]})");
    CHECK(two_k.algorithms[0].l.times_k);
    CHECK(two_k.algorithms[0].l.value == 2);
    CHECK(two_k.algorithms[0].config_for(5).l == 10);
}

TEST_CASE("an easy single-cell grid recovers every trial") {
    ExperimentSpec spec;
    spec.kind = ExperimentKind::phase_transition;
    spec.m = 32;
    spec.rho_grid = {0.0625};  // k = 2
    spec.delta_grid = {0.5};   // n = 64
    spec.trials_per_cell = 5;
    spec.algorithms = {algorithm_spec_by_name("ompr")};
    spec.base_seed = 3;
    GridResult grid = run_phase_transition(spec);
    REQUIRE(grid.cells.size() == 1);
    CHECK(grid.cells[0][0].success_prob == 1.0);
    CHECK(grid.cells[0][0].trials == 5);
}

TEST_CASE("grid results are independent of the thread count") {
    ExperimentSpec spec = parse_experiment_spec(kTinyPhaseConfig);
    fs::path d1 = fresh_dir("srec_grid_t1");
    fs::path d4 = fresh_dir("srec_grid_t4");

    spec.threads = 1;
    spec.output_dir = d1.string();
    GridResult g1 = run_phase_transition(spec);
    spec.threads = 4;
    spec.output_dir = d4.string();
    GridResult g4 = run_phase_transition(spec);

    for (std::size_t a = 0; a < g1.cells.size(); ++a)
        for (std::size_t c = 0; c < g1.cells[a].size(); ++c) {
            CHECK(g1.cells[a][c].success_prob == g4.cells[a][c].success_prob);
            CHECK(g1.cells[a][c].mean_rel_err == g4.cells[a][c].mean_rel_err);
        }
    expect_identical_dirs(d1, d4);
}

TEST_CASE("trial rows are attributable: the seed replays the trial") {
    ExperimentSpec spec = parse_experiment_spec(kTinyPhaseConfig);
    GridResult grid = run_phase_transition(spec);
    // replay cell 0, trial 0 of the first algorithm by its recorded seed
    const TrialOutcome& recorded = grid.trials[0][0][0];
    const double rho = grid.rhos[0];
    const double delta = grid.deltas[0];
    const index_t n = static_cast<index_t>(std::lround(spec.m / delta));
    const int k = std::max(1, static_cast<int>(std::lround(rho * spec.m)));
    MeasurementProblem problem = make_problem(spec.m, n, k, recorded.seed);
    AlgorithmConfig cfg = spec.algorithms[0].config_for(k);
    RunResult rr = run_algorithm(problem.A, problem.b, cfg);
    CHECK(std::sqrt(2.0 * rr.state.objective) == recorded.resid);
}

TEST_CASE("noise sweep: noiseless easy cells recover to machine residuals") {
    ExperimentSpec spec;
    spec.kind = ExperimentKind::noise_sweep;
    spec.m = 40;
    spec.n = 120;
    spec.k_values = {2};
    spec.noise_levels = {0.0, 0.1};
    spec.trials_per_cell = 3;
    spec.algorithms = {algorithm_spec_by_name("ompr"), algorithm_spec_by_name("iht_newton")};
    spec.base_seed = 5;
    fs::path dir = fresh_dir("srec_noise_tiny");
    spec.output_dir = dir.string();
    NoiseResult res = run_noise_sweep(spec);

    // cell 0 is (k = 2, level = 0): exact recovery regime
    for (std::size_t a = 0; a < res.cells.size(); ++a)
        CHECK(res.cells[a][0].mean_resid <= 1e-6);
    // noisy cell: residual floor near the noise norm, strictly positive
    CHECK(res.cells[0][1].mean_resid > 0.0);

    CHECK(fs::exists(dir / "noise_ompr.csv"));
    CHECK(fs::exists(dir / "noise_iht_newton.csv"));
    CHECK(fs::exists(dir / "noise_diff_ompr_minus_iht_newton.csv"));
    std::string diff = slurp(dir / "noise_diff_ompr_minus_iht_newton.csv");
    CHECK(diff.find("k,noise_level,mean_diff,stderr_diff,ci95_lo,ci95_hi,trials") == 0);
}

TEST_CASE("lsh benchmark produces the fixed roster and its files") {
    ExperimentSpec spec;
    spec.kind = ExperimentKind::lsh_benchmark;
    spec.m = 40;
    spec.n_values = {200, 400};
    spec.k = 4;
    spec.trials_per_cell = 2;
    spec.base_seed = 8;
    fs::path dir = fresh_dir("srec_lsh_tiny");
    spec.output_dir = dir.string();
    LshBenchResult res = run_lsh_benchmark(spec);
    REQUIRE(res.algo_names.size() == 4);
    CHECK(res.algo_names[0] == "ompr");
    CHECK(res.algo_names[1] == "ompr_hash");
    for (const auto& per_algo : res.cells)
        for (const CellStats& c : per_algo) CHECK(c.trials == 2);
    CHECK(fs::exists(dir / "lsh_benchmark.csv"));
    CHECK(fs::exists(dir / "lsh_error.svg"));
    CHECK(fs::exists(dir / "lsh_time.svg"));
    std::string csv = slurp(dir / "lsh_benchmark.csv");
    CHECK(csv.find("n,algo,mean_resid,mean_time_s,trials") == 0);
}

namespace {

// one "name rel_err=... resid=... f=... iters=... status=..." line
struct RunLine {
    std::string name;
    double rel_err = 0.0;
    double resid = 0.0;
    int iters = -1;
    std::string status;
};

std::vector<RunLine> parse_run_output(const std::string& out) {
    std::vector<RunLine> lines;
    std::istringstream in(out);
    std::string line;
    while (std::getline(in, line)) {
        RunLine r;
        char name[64], status[32];
        double f = 0.0;
        if (std::sscanf(line.c_str(), "%63s rel_err=%lf resid=%lf f=%lf iters=%d status=%31s",
                        name, &r.rel_err, &r.resid, &f, &r.iters, status) == 6) {
            r.name = name;
            r.status = status;
            lines.push_back(r);
        }
    }
    return lines;
}

}  // namespace

TEST_CASE("cli: run on the bundled sample matches the frozen golden values") {
    int code = -1;
    std::string out = run_cli_capture({"run", "--algo", "ompr,omp", "--seed", "5"}, code);
    CHECK(code == 0);
    std::vector<RunLine> lines = parse_run_output(out);
    REQUIRE(lines.size() == 2);
    // golden: both recover the sample exactly; ompr needs 4 swaps, omp 8 picks
    CHECK(lines[0].name == "ompr");
    CHECK(lines[0].rel_err <= 1e-12);
    CHECK(lines[0].iters == 4);
    CHECK(lines[0].status == "converged");
    CHECK(lines[1].name == "omp");
    CHECK(lines[1].rel_err <= 1e-12);
    CHECK(lines[1].iters == 8);
    CHECK(lines[1].status == "converged");

    // golden noisy run: frozen from the reference build
    std::string noisy =
        run_cli_capture({"run", "--algo", "ompr", "--seed", "5", "--noise", "0.1"}, code);
    CHECK(code == 0);
    std::vector<RunLine> nl = parse_run_output(noisy);
    REQUIRE(nl.size() == 1);
    CHECK(nl[0].rel_err == doctest::Approx(0.0355355014816).epsilon(1e-9));
    CHECK(nl[0].resid == doctest::Approx(0.235349030373).epsilon(1e-9));
    CHECK(nl[0].iters == 5);
    CHECK(nl[0].status == "stalled");
}

TEST_CASE("cli: repeated runs are byte identical") {
    int c1 = -1, c2 = -1;
    std::string first = run_cli_capture({"run", "--algo", "ompr,omp,sp", "--seed", "5"}, c1);
    std::string second = run_cli_capture({"run", "--algo", "ompr,omp,sp", "--seed", "5"}, c2);
    CHECK(c1 == 0);
    CHECK(c2 == 0);
    CHECK(first == second);
}

TEST_CASE("cli: missing config file exits 2 and names the path") {
    fs::path missing = fs::temp_directory_path() / "srec_definitely_missing.json";
    fs::remove(missing);
    int code = run_cli({"phase", "--config", missing.string()});
    CHECK(code == 2);
}

TEST_CASE("cli: config errors exit 1") {
    fs::path bad = fs::temp_directory_path() / "srec_bad_config.json";
    {
        std::ofstream out(bad);
        out << R"({"kind": "phase_transition", "unknown_key": true})";
    }
    CHECK(run_cli({"phase", "--config", bad.string()}) == 1);
    {
        std::ofstream out(bad);
        out << "{]";
    }
    CHECK(run_cli({"phase", "--config", bad.string()}) == 1);
    {
        std::ofstream out(bad);
        out << R"({"kind": "noise_sweep"})";  // wrong kind for phase
    }
    CHECK(run_cli({"phase", "--config", bad.string()}) == 1);
    fs::remove(bad);
}

TEST_CASE("cli: phase experiment writes deterministic outputs") {
    fs::path cfg_path = fs::temp_directory_path() / "srec_tiny_phase.json";
    {
        std::ofstream out(cfg_path);
        out << kTinyPhaseConfig;
    }
    fs::path d1 = fresh_dir("srec_cli_phase1");
    fs::path d2 = fresh_dir("srec_cli_phase2");
    CHECK(run_cli({"phase", "--config", cfg_path.string(), "--out", d1.string(), "--threads",
                   "1"}) == 0);
    CHECK(run_cli({"phase", "--config", cfg_path.string(), "--out", d2.string(), "--threads",
                   "3"}) == 0);
    expect_identical_dirs(d1, d2);
    CHECK(fs::exists(d1 / "grid_ompr.csv"));
    CHECK(fs::exists(d1 / "grid_ompr.svg"));
    std::string csv = slurp(d1 / "grid_ompr.csv");
    CHECK(csv.find("rho,delta,success_prob,mean_rel_err,mean_time_s,trials") == 0);
    fs::remove(cfg_path);
}

TEST_CASE("cli: diag writes the per-iteration check table") {
    fs::path dir = fresh_dir("srec_cli_diag");
    int code = run_cli({"diag", "--m", "12", "--n", "16", "--k", "2", "--l", "1", "--eta", "0.9",
                        "--seed", "7", "--init", "random", "--out", dir.string()});
    CHECK(code == 0);
    REQUIRE(fs::exists(dir / "diag.csv"));
    std::string csv = slurp(dir / "diag.csv");
    CHECK(csv.find("trial_seed,iter,check_name,status,slack") == 0);
    CHECK(csv.find("fail") == std::string::npos);
    CHECK(csv.find("decrease_bound") != std::string::npos);  // at least one iteration logged
}

TEST_CASE("cli: unknown subcommand or flags exit nonzero") {
    CHECK(run_cli({"frobnicate"}) != 0);
    CHECK(run_cli({}) != 0);
}
