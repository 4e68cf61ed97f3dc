#include "srec/harness.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <thread>

#include <nlohmann/json.hpp>

#include "srec/ensemble.hpp"
#include "srec/linalg.hpp"
#include "srec/lsh.hpp"
#include "srec/rng.hpp"

namespace srec {

namespace {

using nlohmann::json;

std::string fmt_g(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

const char* status_name(RunStatus s) {
    switch (s) {
        case RunStatus::Converged: return "converged";
        case RunStatus::MaxIters: return "max_iters";
        case RunStatus::Stalled: return "stalled";
    }
    return "unknown";
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory: " + dir);
}

std::ofstream open_out(const std::string& dir, const std::string& name) {
    std::string path = dir + "/" + name;
    std::ofstream out(path, std::ios::binary);  // binary: byte-identical across platforms
    if (!out) throw IoError("cannot open for writing: " + path);
    return out;
}

// Runs fn(0..jobs-1) across up to `threads` workers. Work items claim the
// next index atomically; every result slot is preallocated by the caller, so
// completion order never affects output.
void parallel_for(int jobs, int threads, const std::function<void(int)>& fn) {
    if (threads <= 1 || jobs <= 1) {
        for (int i = 0; i < jobs; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> workers;
    int pool = std::min(threads, jobs);
    workers.reserve(pool);
    for (int w = 0; w < pool; ++w)
        workers.emplace_back([&] {
            for (int i = next.fetch_add(1); i < jobs; i = next.fetch_add(1)) fn(i);
        });
    for (auto& t : workers) t.join();
}

double elapsed_seconds(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

TrialOutcome run_trial_algorithm(const MeasurementProblem& problem, const AlgorithmSpec& algo,
                                 int k, double success_threshold, TimingMode timing) {
    TrialOutcome out;
    out.seed = problem.seed;
    try {
        AlgorithmConfig cfg = algo.config_for(k);
        auto t0 = std::chrono::steady_clock::now();
        RunResult rr = run_algorithm(problem.A, problem.b, cfg);
        if (timing == TimingMode::measured) out.time_s = elapsed_seconds(t0);
        out.status = rr.trace.status;
        out.resid = std::sqrt(2.0 * rr.state.objective);
        if (problem.truth) {
            double num = 0.0;
            for (index_t j = 0; j < problem.A.cols; ++j) {
                double d = rr.state.x[j] - problem.truth->x_star[j];
                num += d * d;
            }
            double den = norm2_squared(problem.truth->x_star);
            out.rel_err = den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
            out.success = out.rel_err <= success_threshold;
        }
    } catch (const std::exception&) {
        out.errored = true;
        out.success = false;
        out.rel_err = 0.0;
        out.resid = 0.0;
    }
    return out;
}

CellStats aggregate(const std::vector<TrialOutcome>& trials) {
    CellStats stats;
    stats.trials = static_cast<int>(trials.size());
    int clean = 0;
    for (const TrialOutcome& t : trials) {
        if (t.success) stats.success_prob += 1.0;
        if (!t.errored) {
            stats.mean_rel_err += t.rel_err;
            stats.mean_resid += t.resid;
            stats.mean_time_s += t.time_s;
            ++clean;
        }
    }
    if (stats.trials > 0) stats.success_prob /= stats.trials;
    if (clean > 0) {
        stats.mean_rel_err /= clean;
        stats.mean_resid /= clean;
        stats.mean_time_s /= clean;
    }
    return stats;
}

// blue (p = 0) to red (p = 1), the phase-diagram convention
std::string heat_color(double p) {
    p = std::min(1.0, std::max(0.0, p));
    int r = static_cast<int>(std::lround(255.0 * p));
    int b = static_cast<int>(std::lround(255.0 * (1.0 - p)));
    char buf[8];
    std::snprintf(buf, sizeof(buf), "#%02x00%02x", r, b);
    return buf;
}

void write_heatmap_svg(std::ofstream& out, const std::string& title,
                       const std::vector<double>& rhos, const std::vector<double>& deltas,
                       const std::vector<CellStats>& cells) {
    const int cell_px = 40;
    const int left = 70, top = 50, bottom = 45, right = 20;
    const int width = left + cell_px * static_cast<int>(deltas.size()) + right;
    const int height = top + cell_px * static_cast<int>(rhos.size()) + bottom;

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\">\n";
    out << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
        << title << "</text>\n";
    // rows: largest rho on top
    for (std::size_t ir = 0; ir < rhos.size(); ++ir) {
        std::size_t row = rhos.size() - 1 - ir;
        for (std::size_t id = 0; id < deltas.size(); ++id) {
            const CellStats& c = cells[row * deltas.size() + id];
            out << "<rect x=\"" << left + cell_px * static_cast<int>(id) << "\" y=\""
                << top + cell_px * static_cast<int>(ir) << "\" width=\"" << cell_px
                << "\" height=\"" << cell_px << "\" fill=\"" << heat_color(c.success_prob)
                << "\"/>\n";
        }
        out << "<text x=\"" << left - 6 << "\" y=\""
            << top + cell_px * static_cast<int>(ir) + cell_px / 2 + 4
            << "\" text-anchor=\"end\" font-size=\"11\">" << fmt_g(rhos[row]) << "</text>\n";
    }
    for (std::size_t id = 0; id < deltas.size(); ++id)
        out << "<text x=\"" << left + cell_px * static_cast<int>(id) + cell_px / 2 << "\" y=\""
            << top + cell_px * static_cast<int>(rhos.size()) + 16
            << "\" text-anchor=\"middle\" font-size=\"11\">" << fmt_g(deltas[id]) << "</text>\n";
    out << "<text x=\"" << left + cell_px * static_cast<int>(deltas.size()) / 2 << "\" y=\""
        << height - 10 << "\" text-anchor=\"middle\" font-size=\"12\">delta = m/n</text>\n";
    out << "<text x=\"16\" y=\"" << top + cell_px * static_cast<int>(rhos.size()) / 2
        << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 "
        << top + cell_px * static_cast<int>(rhos.size()) / 2 << ")\">rho = k/m</text>\n";
    out << "</svg>\n";
}

void write_lineplot_svg(std::ofstream& out, const std::string& title, const std::string& ylabel,
                        const std::vector<index_t>& xs,
                        const std::vector<std::pair<std::string, std::vector<double>>>& series) {
    const int width = 560, height = 360;
    const int left = 70, top = 50, bottom = 50, right = 150;
    const int plot_w = width - left - right, plot_h = height - top - bottom;

    double ymax = 1e-300;
    for (const auto& s : series)
        for (double v : s.second) ymax = std::max(ymax, v);
    if (ymax <= 0.0) ymax = 1.0;

    static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
        << height << "\">\n";
    out << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
        << title << "</text>\n";
    out << "<rect x=\"" << left << "\" y=\"" << top << "\" width=\"" << plot_w << "\" height=\""
        << plot_h << "\" fill=\"none\" stroke=\"#555\"/>\n";

    auto xpos = [&](std::size_t i) {
        return xs.size() < 2 ? left + plot_w / 2
                             : left + static_cast<int>(plot_w * i / (xs.size() - 1));
    };
    auto ypos = [&](double v) {
        return top + plot_h - static_cast<int>(std::lround(plot_h * (v / ymax)));
    };

    for (std::size_t si = 0; si < series.size(); ++si) {
        const auto& [name, vals] = series[si];
        const char* color = palette[si % 5];
        out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
        for (std::size_t i = 0; i < vals.size(); ++i)
            out << xpos(i) << ',' << ypos(vals[i]) << ' ';
        out << "\"/>\n";
        out << "<text x=\"" << left + plot_w + 10 << "\" y=\""
            << top + 16 * static_cast<int>(si) + 12 << "\" font-size=\"11\" fill=\"" << color
            << "\">" << name << "</text>\n";
    }
    for (std::size_t i = 0; i < xs.size(); ++i)
        out << "<text x=\"" << xpos(i) << "\" y=\"" << top + plot_h + 16
            << "\" text-anchor=\"middle\" font-size=\"10\">" << xs[i] << "</text>\n";
    out << "<text x=\"" << width / 2 << "\" y=\"" << height - 8
        << "\" text-anchor=\"middle\" font-size=\"12\">n</text>\n";
    out << "<text x=\"18\" y=\"" << top + plot_h / 2
        << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 18 "
        << top + plot_h / 2 << ")\">" << ylabel << "</text>\n";
    out << "</svg>\n";
}

void write_trials_csv(std::ofstream& out, const std::string& cell_header,
                      const std::vector<std::string>& cell_values_per_cell,
                      const std::vector<std::vector<TrialOutcome>>& per_cell) {
    out << cell_header << ",trial,seed,success,rel_err,resid,time_s,status\n";
    for (std::size_t c = 0; c < per_cell.size(); ++c)
        for (std::size_t t = 0; t < per_cell[c].size(); ++t) {
            const TrialOutcome& o = per_cell[c][t];
            out << cell_values_per_cell[c] << ',' << t << ',' << o.seed << ','
                << (o.success ? 1 : 0) << ',' << fmt_g(o.rel_err) << ',' << fmt_g(o.resid) << ','
                << fmt_g(o.time_s) << ',' << (o.errored ? "error" : status_name(o.status))
                << '\n';
        }
}

}  // namespace

AlgorithmConfig AlgorithmSpec::config_for(int k) const {
    AlgorithmConfig cfg;
    cfg.family = family;
    cfg.k = k;
    int lk = l.resolve(k);
    int cap = family == Family::two_stage ? 2 * k : k;
    cfg.l = std::min(std::max(1, lk), cap);
    cfg.eta = eta;
    cfg.max_iters = max_iters > 0 ? max_iters : 10 * k + 50;
    cfg.tol = tol;
    cfg.init = init;
    return cfg;
}

namespace {

AlgorithmSpec named_algorithm(const std::string& name) {
    AlgorithmSpec a;
    a.name = name;
    if (name == "ompr") {
        a.family = Family::ompr_l;
        a.l = ReplacementSpec{false, 1};
    } else if (name == "omp") {
        a.family = Family::omp;
        a.l = ReplacementSpec{false, 1};
    } else if (name == "iht_newton") {
        a.family = Family::ompr_l;
        a.l = ReplacementSpec{true, 1};
    } else if (name == "iht_newton_half") {
        a.family = Family::ompr_l;
        a.l = ReplacementSpec{true, 1};
        a.eta = 0.5;
    } else if (name == "sp") {
        a.family = Family::two_stage;
        a.l = ReplacementSpec{true, 1};
    } else if (name == "cosamp") {
        a.family = Family::two_stage;
        a.l = ReplacementSpec{true, 2};
    } else {
        throw BadArguments("unknown algorithm name: " + name);
    }
    return a;
}

void check_keys(const json& obj, std::initializer_list<const char*> allowed,
                const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* key : allowed)
            if (it.key() == key) {
                known = true;
                break;
            }
        if (!known) throw BadArguments("unknown config key in " + where + ": " + it.key());
    }
}

AlgorithmSpec parse_algorithm(const json& obj) {
    check_keys(obj, {"name", "family", "l", "eta", "max_iters", "tol", "init"}, "algorithms[]");
    if (!obj.contains("name")) throw BadArguments("algorithm entry needs a name");
    AlgorithmSpec a;
    a.name = obj.at("name").get<std::string>();
    std::string family = obj.value("family", "ompr_l");
    if (family == "ompr_l")
        a.family = Family::ompr_l;
    else if (family == "omp")
        a.family = Family::omp;
    else if (family == "two_stage")
        a.family = Family::two_stage;
    else
        throw BadArguments("unknown family: " + family);
    if (obj.contains("l")) {
        const json& l = obj.at("l");
        if (l.is_number_integer()) {
            a.l = ReplacementSpec{false, l.get<int>()};
        } else if (l.is_string()) {
            std::string s = l.get<std::string>();
            if (s == "k")
                a.l = ReplacementSpec{true, 1};
            else if (s == "2k")
                a.l = ReplacementSpec{true, 2};
            else
                throw BadArguments("l must be an integer, \"k\" or \"2k\"");
        } else {
            throw BadArguments("l must be an integer, \"k\" or \"2k\"");
        }
    }
    a.eta = obj.value("eta", 1.0);
    if (a.eta <= 0.0) throw BadArguments("eta must be positive");
    a.max_iters = obj.value("max_iters", 0);
    a.tol = obj.value("tol", 1e-10);
    std::string init = obj.value("init", "topk_correlation");
    if (init == "topk_correlation")
        a.init = InitMode::topk_correlation;
    else if (init == "random")
        a.init = InitMode::random;
    else
        throw BadArguments("unknown init mode: " + init);
    return a;
}

}  // namespace

void apply_kind_defaults(ExperimentSpec& spec) {
    switch (spec.kind) {
        case ExperimentKind::phase_transition:
            if (spec.rho_grid.empty()) spec.rho_grid = {0.1, 0.2, 0.3, 0.4, 0.5};
            if (spec.delta_grid.empty()) spec.delta_grid = {0.1, 0.2, 0.3, 0.4, 0.5};
            if (spec.trials_per_cell <= 0) spec.trials_per_cell = 50;
            if (spec.algorithms.empty())
                spec.algorithms = {named_algorithm("ompr"), named_algorithm("omp"),
                                   named_algorithm("iht_newton")};
            break;
        case ExperimentKind::noise_sweep:
            if (spec.m <= 0) spec.m = 200;
            if (spec.n <= 0) spec.n = 3000;
            if (spec.k_values.empty()) spec.k_values = {10, 30, 50};
            if (spec.noise_levels.empty())
                spec.noise_levels = {0.0, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5};
            if (spec.trials_per_cell <= 0) spec.trials_per_cell = 10;
            if (spec.algorithms.empty())
                spec.algorithms = {named_algorithm("ompr"), named_algorithm("iht_newton"),
                                   named_algorithm("iht_newton_half")};
            break;
        case ExperimentKind::lsh_benchmark:
            if (spec.m <= 0) spec.m = 500;
            if (spec.n_values.empty()) spec.n_values = {1000, 5000, 20000};
            if (spec.trials_per_cell <= 0) spec.trials_per_cell = 3;
            break;
        case ExperimentKind::single_run:
            if (spec.trials_per_cell <= 0) spec.trials_per_cell = 1;
            if (spec.algorithms.empty())
                spec.algorithms = {named_algorithm("ompr"), named_algorithm("omp")};
            break;
    }
}

ExperimentSpec parse_experiment_spec(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw BadArguments(std::string("config is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw BadArguments("config root must be a JSON object");
    check_keys(doc,
               {"kind", "m", "n", "rho_grid", "delta_grid", "k_values", "noise_levels",
                "n_values", "k", "lsh_bits", "lsh_tables", "algorithms", "trials_per_cell",
                "success_threshold", "base_seed", "output_dir", "threads", "timing"},
               "config");

    ExperimentSpec spec;
    spec.trials_per_cell = 0;  // filled by kind defaults unless set below

    std::string kind = doc.value("kind", "phase_transition");
    if (kind == "phase_transition")
        spec.kind = ExperimentKind::phase_transition;
    else if (kind == "noise_sweep")
        spec.kind = ExperimentKind::noise_sweep;
    else if (kind == "lsh_benchmark")
        spec.kind = ExperimentKind::lsh_benchmark;
    else if (kind == "single_run")
        spec.kind = ExperimentKind::single_run;
    else
        throw BadArguments("unknown experiment kind: " + kind);

    spec.m = doc.value("m", spec.kind == ExperimentKind::noise_sweep    ? 200
                            : spec.kind == ExperimentKind::lsh_benchmark ? 500
                                                                         : 100);
    spec.n = doc.value("n", spec.kind == ExperimentKind::noise_sweep ? 3000 : 400);
    if (spec.m < 1 || spec.n < 1) throw BadArguments("m and n must be positive");

    if (doc.contains("rho_grid")) spec.rho_grid = doc.at("rho_grid").get<std::vector<double>>();
    if (doc.contains("delta_grid"))
        spec.delta_grid = doc.at("delta_grid").get<std::vector<double>>();
    for (double rho : spec.rho_grid)
        if (!(rho > 0.0 && rho <= 1.0)) throw BadArguments("rho grid values must be in (0, 1]");
    for (double delta : spec.delta_grid)
        if (!(delta > 0.0 && delta <= 1.0))
            throw BadArguments("delta grid values must be in (0, 1]");

    if (doc.contains("k_values")) spec.k_values = doc.at("k_values").get<std::vector<int>>();
    for (int k : spec.k_values)
        if (k < 1) throw BadArguments("k_values must be positive");
    if (doc.contains("noise_levels"))
        spec.noise_levels = doc.at("noise_levels").get<std::vector<double>>();
    for (double level : spec.noise_levels)
        if (level < 0.0) throw BadArguments("noise levels must be nonnegative");

    if (doc.contains("n_values")) {
        for (auto& v : doc.at("n_values")) spec.n_values.push_back(v.get<index_t>());
        for (index_t n : spec.n_values)
            if (n < 1) throw BadArguments("n_values must be positive");
    }
    spec.k = doc.value("k", 0);
    spec.lsh_bits = doc.value("lsh_bits", 0);
    spec.lsh_tables = doc.value("lsh_tables", 0);
    if (spec.lsh_bits < 0 || spec.lsh_bits > 63) throw BadArguments("lsh_bits must be in [1, 63]");

    if (doc.contains("algorithms")) {
        for (const json& entry : doc.at("algorithms"))
            spec.algorithms.push_back(parse_algorithm(entry));
        for (std::size_t i = 0; i < spec.algorithms.size(); ++i)
            for (std::size_t j = i + 1; j < spec.algorithms.size(); ++j)
                if (spec.algorithms[i].name == spec.algorithms[j].name)
                    throw BadArguments("duplicate algorithm name: " + spec.algorithms[i].name);
    }

    if (doc.contains("trials_per_cell")) {
        spec.trials_per_cell = doc.at("trials_per_cell").get<int>();
        if (spec.trials_per_cell < 1) throw BadArguments("trials_per_cell must be positive");
    }
    spec.success_threshold = doc.value("success_threshold", 0.01);
    if (spec.success_threshold <= 0.0) throw BadArguments("success_threshold must be positive");
    spec.base_seed = doc.value("base_seed", 1ull);
    spec.output_dir = doc.value("output_dir", "");
    spec.threads = doc.value("threads", 1);
    if (spec.threads < 1) throw BadArguments("threads must be positive");

    std::string timing = doc.value("timing", "zero");
    if (timing == "zero")
        spec.timing = TimingMode::zero;
    else if (timing == "measured")
        spec.timing = TimingMode::measured;
    else
        throw BadArguments("timing must be \"zero\" or \"measured\"");

    apply_kind_defaults(spec);
    return spec;
}

AlgorithmSpec algorithm_spec_by_name(const std::string& name) { return named_algorithm(name); }

ExperimentSpec default_spec(ExperimentKind kind) {
    ExperimentSpec spec;
    spec.kind = kind;
    spec.trials_per_cell = 0;
    if (kind == ExperimentKind::noise_sweep) {
        spec.m = 200;
        spec.n = 3000;
    } else if (kind == ExperimentKind::lsh_benchmark) {
        spec.m = 500;
    }
    apply_kind_defaults(spec);
    return spec;
}

GridResult run_phase_transition(const ExperimentSpec& spec) {
    if (spec.kind != ExperimentKind::phase_transition)
        throw BadArguments("run_phase_transition: wrong spec kind");

    GridResult result;
    result.rhos = spec.rho_grid;
    result.deltas = spec.delta_grid;
    for (const AlgorithmSpec& a : spec.algorithms) result.algo_names.push_back(a.name);

    const int num_cells = static_cast<int>(result.rhos.size() * result.deltas.size());
    const int num_algos = static_cast<int>(spec.algorithms.size());
    const int trials = spec.trials_per_cell;
    result.cells.assign(num_algos, std::vector<CellStats>(num_cells));
    result.trials.assign(num_algos,
                         std::vector<std::vector<TrialOutcome>>(num_cells,
                                                                std::vector<TrialOutcome>(trials)));

    parallel_for(num_cells * trials, spec.threads, [&](int job) {
        const int cell = job / trials;
        const int trial = job % trials;
        const std::size_t ir = cell / result.deltas.size();
        const std::size_t id = cell % result.deltas.size();
        const double rho = result.rhos[ir];
        const double delta = result.deltas[id];
        const index_t n = static_cast<index_t>(std::lround(spec.m / delta));
        const int k = std::max(1, static_cast<int>(std::lround(rho * spec.m)));
        const std::uint64_t seed = derive_stream(derive_stream(spec.base_seed, cell), trial);

        MeasurementProblem problem = make_problem(spec.m, n, k, seed);
        for (int a = 0; a < num_algos; ++a)
            result.trials[a][cell][trial] = run_trial_algorithm(
                problem, spec.algorithms[a], k, spec.success_threshold, spec.timing);
    });

    for (int a = 0; a < num_algos; ++a)
        for (int c = 0; c < num_cells; ++c) result.cells[a][c] = aggregate(result.trials[a][c]);

    if (!spec.output_dir.empty()) {
        ensure_dir(spec.output_dir);
        std::vector<std::string> cell_labels(num_cells);
        for (int c = 0; c < num_cells; ++c) {
            std::size_t ir = c / result.deltas.size();
            std::size_t id = c % result.deltas.size();
            cell_labels[c] = fmt_g(result.rhos[ir]) + "," + fmt_g(result.deltas[id]);
        }
        for (int a = 0; a < num_algos; ++a) {
            const std::string& name = result.algo_names[a];
            auto csv = open_out(spec.output_dir, "grid_" + name + ".csv");
            csv << "rho,delta,success_prob,mean_rel_err,mean_time_s,trials\n";
            for (int c = 0; c < num_cells; ++c) {
                const CellStats& s = result.cells[a][c];
                csv << cell_labels[c] << ',' << fmt_g(s.success_prob) << ','
                    << fmt_g(s.mean_rel_err) << ',' << fmt_g(s.mean_time_s) << ',' << s.trials
                    << '\n';
            }
            auto trials_csv = open_out(spec.output_dir, "trials_" + name + ".csv");
            write_trials_csv(trials_csv, "rho,delta", cell_labels, result.trials[a]);
            auto svg = open_out(spec.output_dir, "grid_" + name + ".svg");
            write_heatmap_svg(svg, "success probability: " + name, result.rhos, result.deltas,
                              result.cells[a]);
        }
    }
    return result;
}

NoiseResult run_noise_sweep(const ExperimentSpec& spec) {
    if (spec.kind != ExperimentKind::noise_sweep)
        throw BadArguments("run_noise_sweep: wrong spec kind");

    NoiseResult result;
    result.k_values = spec.k_values;
    result.noise_levels = spec.noise_levels;
    for (const AlgorithmSpec& a : spec.algorithms) result.algo_names.push_back(a.name);

    const int num_cells = static_cast<int>(result.k_values.size() * result.noise_levels.size());
    const int num_algos = static_cast<int>(spec.algorithms.size());
    const int trials = spec.trials_per_cell;
    result.cells.assign(num_algos, std::vector<NoiseCell>(num_cells));
    result.trials.assign(num_algos,
                         std::vector<std::vector<TrialOutcome>>(num_cells,
                                                                std::vector<TrialOutcome>(trials)));

    parallel_for(num_cells * trials, spec.threads, [&](int job) {
        const int cell = job / trials;
        const int trial = job % trials;
        const std::size_t ik = cell / result.noise_levels.size();
        const std::size_t il = cell % result.noise_levels.size();
        const int k = result.k_values[ik];
        const double level = result.noise_levels[il];
        const std::uint64_t seed = derive_stream(derive_stream(spec.base_seed, cell), trial);

        MeasurementProblem problem = make_problem(spec.m, spec.n, k, seed);
        if (level > 0.0) problem = add_noise(problem, level, derive_stream(seed, 2));
        for (int a = 0; a < num_algos; ++a)
            result.trials[a][cell][trial] = run_trial_algorithm(
                problem, spec.algorithms[a], k, spec.success_threshold, spec.timing);
    });

    for (int a = 0; a < num_algos; ++a)
        for (int c = 0; c < num_cells; ++c) {
            const auto& ts = result.trials[a][c];
            NoiseCell cellstat;
            cellstat.trials = static_cast<int>(ts.size());
            int clean = 0;
            for (const TrialOutcome& t : ts)
                if (!t.errored) {
                    cellstat.mean_resid += t.resid;
                    ++clean;
                }
            if (clean > 0) cellstat.mean_resid /= clean;
            double var = 0.0;
            for (const TrialOutcome& t : ts)
                if (!t.errored) {
                    double d = t.resid - cellstat.mean_resid;
                    var += d * d;
                }
            if (clean > 1) var /= (clean - 1);
            cellstat.stderr_resid = clean > 0 ? std::sqrt(var / clean) : 0.0;
            result.cells[a][c] = cellstat;
        }

    if (!spec.output_dir.empty()) {
        ensure_dir(spec.output_dir);
        std::vector<std::string> cell_labels(num_cells);
        for (int c = 0; c < num_cells; ++c) {
            std::size_t ik = c / result.noise_levels.size();
            std::size_t il = c % result.noise_levels.size();
            cell_labels[c] =
                std::to_string(result.k_values[ik]) + "," + fmt_g(result.noise_levels[il]);
        }
        for (int a = 0; a < num_algos; ++a) {
            const std::string& name = result.algo_names[a];
            auto csv = open_out(spec.output_dir, "noise_" + name + ".csv");
            csv << "k,noise_level,mean_resid,stderr,trials\n";
            for (int c = 0; c < num_cells; ++c) {
                const NoiseCell& s = result.cells[a][c];
                csv << cell_labels[c] << ',' << fmt_g(s.mean_resid) << ','
                    << fmt_g(s.stderr_resid) << ',' << s.trials << '\n';
            }
            auto trials_csv = open_out(spec.output_dir, "trials_noise_" + name + ".csv");
            write_trials_csv(trials_csv, "k,noise_level", cell_labels, result.trials[a]);
        }
        // paired differences per roster pair, first minus second
        for (int a = 0; a < num_algos; ++a)
            for (int b2 = a + 1; b2 < num_algos; ++b2) {
                auto csv = open_out(spec.output_dir, "noise_diff_" + result.algo_names[a] +
                                                         "_minus_" + result.algo_names[b2] +
                                                         ".csv");
                csv << "k,noise_level,mean_diff,stderr_diff,ci95_lo,ci95_hi,trials\n";
                for (int c = 0; c < num_cells; ++c) {
                    double mean = 0.0;
                    int clean = 0;
                    const auto& ta = result.trials[a][c];
                    const auto& tb = result.trials[b2][c];
                    for (std::size_t t = 0; t < ta.size(); ++t)
                        if (!ta[t].errored && !tb[t].errored) {
                            mean += ta[t].resid - tb[t].resid;
                            ++clean;
                        }
                    if (clean > 0) mean /= clean;
                    double var = 0.0;
                    for (std::size_t t = 0; t < ta.size(); ++t)
                        if (!ta[t].errored && !tb[t].errored) {
                            double d = (ta[t].resid - tb[t].resid) - mean;
                            var += d * d;
                        }
                    if (clean > 1) var /= (clean - 1);
                    double se = clean > 0 ? std::sqrt(var / clean) : 0.0;
                    csv << cell_labels[c] << ',' << fmt_g(mean) << ',' << fmt_g(se) << ','
                        << fmt_g(mean - 1.96 * se) << ',' << fmt_g(mean + 1.96 * se) << ','
                        << clean << '\n';
                }
            }
    }
    return result;
}

LshBenchResult run_lsh_benchmark(const ExperimentSpec& spec) {
    if (spec.kind != ExperimentKind::lsh_benchmark)
        throw BadArguments("run_lsh_benchmark: wrong spec kind");

    LshBenchResult result;
    result.n_values = spec.n_values;
    result.algo_names = {"ompr", "ompr_hash", "iht_newton", "iht_newton_half"};

    const int num_algos = static_cast<int>(result.algo_names.size());
    const int trials = spec.trials_per_cell;
    result.cells.assign(num_algos, std::vector<CellStats>(result.n_values.size()));
    result.trials.assign(num_algos, std::vector<std::vector<TrialOutcome>>(
                                        result.n_values.size(), std::vector<TrialOutcome>(trials)));

    const int k = spec.k > 0 ? spec.k : std::max(1, spec.m / 10);

    // Trials run sequentially: each instance owns a large matrix and the
    // index build already parallelizes across tables.
    for (std::size_t in = 0; in < result.n_values.size(); ++in) {
        const index_t n = result.n_values[in];
        const int s_bits = spec.lsh_bits > 0 ? spec.lsh_bits : default_lsh_bits(n);
        const int q_tables = spec.lsh_tables > 0 ? spec.lsh_tables : default_lsh_tables(n);

        for (int trial = 0; trial < trials; ++trial) {
            const std::uint64_t seed =
                derive_stream(derive_stream(spec.base_seed, static_cast<std::uint64_t>(in)), trial);
            MeasurementProblem problem = make_problem(spec.m, n, k, seed);
            // offline pre-processing, excluded from reconstruction timing
            LshIndex index = build_index(problem.A, s_bits, q_tables, derive_stream(seed, 3),
                                         spec.threads);

            for (int a = 0; a < num_algos; ++a) {
                const std::string& name = result.algo_names[a];
                TrialOutcome out;
                out.seed = seed;
                try {
                    auto t0 = std::chrono::steady_clock::now();
                    double objective = 0.0;
                    RunStatus status;
                    if (name == "ompr_hash") {
                        AlgorithmConfig cfg = omprl_config(k, 1);
                        cfg.max_iters = 10 * k + 50;
                        HashRunResult hr =
                            run_ompr_hash(problem.A, problem.b, cfg, index, HashFallback::exact);
                        objective = hr.state.objective;
                        status = hr.trace.status;
                    } else {
                        AlgorithmConfig cfg = name == "ompr" ? omprl_config(k, 1)
                                              : name == "iht_newton"
                                                  ? iht_newton_config(k, 1.0)
                                                  : iht_newton_config(k, 0.5);
                        cfg.max_iters = 10 * k + 50;
                        RunResult rr = run_algorithm(problem.A, problem.b, cfg);
                        objective = rr.state.objective;
                        status = rr.trace.status;
                    }
                    if (spec.timing == TimingMode::measured) out.time_s = elapsed_seconds(t0);
                    out.resid = std::sqrt(2.0 * objective);
                    out.status = status;
                } catch (const Error&) {
                    out.errored = true;
                }
                result.trials[a][in][trial] = out;
            }
        }
        for (int a = 0; a < num_algos; ++a)
            result.cells[a][in] = aggregate(result.trials[a][in]);
    }

    if (!spec.output_dir.empty()) {
        ensure_dir(spec.output_dir);
        auto csv = open_out(spec.output_dir, "lsh_benchmark.csv");
        csv << "n,algo,mean_resid,mean_time_s,trials\n";
        for (std::size_t in = 0; in < result.n_values.size(); ++in)
            for (int a = 0; a < num_algos; ++a) {
                const CellStats& s = result.cells[a][in];
                csv << result.n_values[in] << ',' << result.algo_names[a] << ','
                    << fmt_g(s.mean_resid) << ',' << fmt_g(s.mean_time_s) << ',' << s.trials
                    << '\n';
            }

        std::vector<std::string> labels(result.n_values.size());
        for (std::size_t in = 0; in < result.n_values.size(); ++in)
            labels[in] = std::to_string(result.n_values[in]);
        for (int a = 0; a < num_algos; ++a) {
            auto trials_csv =
                open_out(spec.output_dir, "trials_lsh_" + result.algo_names[a] + ".csv");
            write_trials_csv(trials_csv, "n", labels, result.trials[a]);
        }

        std::vector<std::pair<std::string, std::vector<double>>> err_series, time_series;
        for (int a = 0; a < num_algos; ++a) {
            std::vector<double> errs, times;
            for (std::size_t in = 0; in < result.n_values.size(); ++in) {
                errs.push_back(result.cells[a][in].mean_resid);
                times.push_back(result.cells[a][in].mean_time_s);
            }
            err_series.emplace_back(result.algo_names[a], errs);
            time_series.emplace_back(result.algo_names[a], times);
        }
        auto esvg = open_out(spec.output_dir, "lsh_error.svg");
        write_lineplot_svg(esvg, "reconstruction error", "residual norm", result.n_values,
                           err_series);
        auto tsvg = open_out(spec.output_dir, "lsh_time.svg");
        write_lineplot_svg(tsvg, "reconstruction time", "seconds", result.n_values, time_series);
    }
    return result;
}

}  // namespace srec
