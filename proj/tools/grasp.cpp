// Command-line entry point: run, plot, visualize-affordances,
// switch-analysis, gradcheck. Exit codes: 0 success, 1 config error,
// 2 numerical failure.

#include "grasp/config/config.hpp"
#include "grasp/report/analysis.hpp"
#include "grasp/report/gradcheck_suite.hpp"
#include "grasp/report/metrics.hpp"
#include "grasp/report/svg.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;
using namespace grasp;

namespace {

constexpr int exit_config = 1;
constexpr int exit_numerical = 2;

struct Loaded {
    config::Values values;
    std::vector<std::string> from_env;
    config::ExperimentConfig experiment;
};

// File values, then GRASP_* environment overrides, then --set pairs.
Loaded load_config(const std::string& path, const std::vector<std::string>& sets) {
    Loaded l;
    if (!path.empty()) l.values = config::load_file(path);
    l.from_env = config::apply_env_overrides(l.values);
    for (const auto& kv : sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw config::ConfigError("--set expects key=value, got '" + kv + "'");
        config::Values one{{kv.substr(0, eq), kv.substr(eq + 1)}};
        config::merge(l.values, one);
    }
    l.experiment = config::resolve(l.values);
    return l;
}

void write_file(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

std::string slug(const std::string& s) {
    std::string out;
    for (char c : s) out += std::isalnum(static_cast<unsigned char>(c)) ? c : '_';
    return out;
}

// ---- run ---------------------------------------------------------------

int cmd_run(const std::string& path, const std::vector<std::string>& sets, bool dry_run, bool parallel) {
    Loaded l = load_config(path, sets);
    const auto& ex = l.experiment;
    if (dry_run) {
        std::cout << config::render_table(l.values, l.from_env);
        std::cout << "# agent " << ex.name << ", " << ex.seeds.size() << " seed(s), output " << ex.out_dir.string()
                  << "\n";
        return 0;
    }
    fs::create_directories(ex.out_dir);
    write_file(ex.out_dir / "resolved.cfg", config::to_text(l.values));

    std::mutex log_mutex;
    std::vector<int> status(ex.seeds.size(), 0);
    auto run_seed = [&](std::size_t i) {
        const std::uint64_t seed = ex.seeds[i];
        const fs::path dir = ex.out_dir / ("seed_" + std::to_string(seed));
        fs::create_directories(dir);
        std::ofstream csv(dir / "metrics.csv", std::ios::binary);
        const auto t0 = std::chrono::steady_clock::now();
        const double cpu0 = train::thread_cpu_seconds();
        try {
            train::Trainer trainer(ex.train, seed);
            trainer.run(csv, dir, [&](const train::MetricsRow& row) {
                const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
                std::lock_guard lock(log_mutex);
                std::fprintf(stderr, "[seed %llu] step %zu  eval_success %s  model_loss %s  (%.0fs)\n",
                             static_cast<unsigned long long>(seed), row.step,
                             report::format_number(row.eval_success).c_str(),
                             report::format_number(row.model_loss).c_str(), secs);
            });
            std::ostringstream info;
            info << "steps = " << trainer.step_count() << "\n";
            info << "cpu_seconds = " << report::format_number(train::thread_cpu_seconds() - cpu0) << "\n";
            info << "wall_seconds = "
                 << report::format_number(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count())
                 << "\n";
            write_file(dir / "run.txt", info.str());
        } catch (const ad::NumericalError& e) {
            std::lock_guard lock(log_mutex);
            std::fprintf(stderr, "[seed %llu] numerical failure: %s (checkpoint in %s)\n",
                         static_cast<unsigned long long>(seed), e.what(), dir.string().c_str());
            status[i] = exit_numerical;
        }
    };
    if (parallel && ex.seeds.size() > 1) {
        std::vector<std::thread> threads;
        for (std::size_t i = 0; i < ex.seeds.size(); ++i) threads.emplace_back(run_seed, i);
        for (auto& t : threads) t.join();
    } else {
        for (std::size_t i = 0; i < ex.seeds.size(); ++i) run_seed(i);
    }

    std::vector<report::MetricsTable> tables;
    for (std::size_t i = 0; i < ex.seeds.size(); ++i) {
        if (status[i] == 0) {
            tables.push_back(report::read_metrics(ex.out_dir / ("seed_" + std::to_string(ex.seeds[i])) / "metrics.csv"));
        }
    }
    if (!tables.empty()) write_file(ex.out_dir / "aggregate.csv", report::to_csv(report::aggregate(tables)));
    for (int s : status) {
        if (s != 0) return s;
    }
    return 0;
}

// ---- plot --------------------------------------------------------------

struct Agent {
    std::string label;
    std::vector<report::MetricsTable> seeds;
};

// A run directory contributes every seed_*/metrics.csv; a CSV file is one seed.
Agent load_agent(const std::string& spec) {
    Agent a;
    std::string where = spec;
    if (const auto eq = spec.find('='); eq != std::string::npos) {
        a.label = spec.substr(0, eq);
        where = spec.substr(eq + 1);
    }
    const fs::path p(where);
    if (fs::is_directory(p)) {
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(p)) {
            if (entry.is_directory() && entry.path().filename().string().rfind("seed_", 0) == 0 &&
                fs::exists(entry.path() / "metrics.csv")) {
                files.push_back(entry.path() / "metrics.csv");
            }
        }
        std::sort(files.begin(), files.end());
        if (files.empty()) throw report::SchemaError(where + ": no seed_*/metrics.csv inside");
        for (const auto& f : files) a.seeds.push_back(report::read_metrics(f));
        if (a.label.empty()) {
            a.label = p.filename().string();
            if (fs::exists(p / "resolved.cfg")) {
                try {
                    a.label = config::resolve(config::load_file(p / "resolved.cfg")).name;
                } catch (const std::exception&) {
                }
            }
        }
    } else {
        a.seeds.push_back(report::read_metrics(p));
        if (a.label.empty()) a.label = p.parent_path().filename().string() + "/" + p.stem().string();
    }
    return a;
}

int cmd_plot(const std::vector<std::string>& inputs, const std::string& out_dir, const std::vector<std::string>& only) {
    std::vector<Agent> agents;
    for (const auto& in : inputs) agents.push_back(load_agent(in));
    const auto& columns = agents.front().seeds.front().columns;
    for (const auto& a : agents) {
        for (const auto& t : a.seeds) {
            if (t.columns != columns) throw report::SchemaError("metric schema of " + a.label + " differs from " + agents.front().label);
        }
    }
    std::vector<std::string> metrics;
    for (std::size_t c = 1; c < columns.size(); ++c) {
        if (only.empty() || std::find(only.begin(), only.end(), columns[c]) != only.end()) metrics.push_back(columns[c]);
    }
    for (const auto& m : only) {
        if (std::find(columns.begin(), columns.end(), m) == columns.end()) throw report::SchemaError("no metric '" + m + "'");
    }
    std::vector<report::MetricsTable> aggregates;
    for (const auto& a : agents) aggregates.push_back(report::aggregate(a.seeds));
    for (const auto& m : metrics) {
        std::vector<report::Curve> curves;
        for (std::size_t i = 0; i < agents.size(); ++i) {
            const auto& t = aggregates[i];
            curves.push_back({agents[i].label, t.values("step"), t.values(m + "_mean"), t.values(m + "_stderr")});
        }
        const fs::path file = fs::path(out_dir) / (slug(m) + ".svg");
        write_file(file, report::curve_plot(m, "environment steps", curves));
        std::cout << file.string() << "\n";
    }
    return 0;
}

// ---- checkpoint-based commands -----------------------------------------

std::unique_ptr<train::Trainer> load_trainer(const Loaded& l, const std::string& checkpoint) {
    auto t = std::make_unique<train::Trainer>(l.experiment.train, l.experiment.seeds.front());
    if (!checkpoint.empty()) t->load(checkpoint);
    return t;
}

int cmd_visualize(const std::string& path, const std::vector<std::string>& sets, const std::string& checkpoint,
                  const std::string& grid_spec, const std::string& layout, std::uint64_t seed, double delta,
                  const std::string& out_dir) {
    Loaded l = load_config(path, sets);
    const auto grid = report::parse_grid(grid_spec);
    const auto lay = report::parse_layout(layout);
    auto trainer = load_trainer(l, checkpoint);
    auto r = report::rollout_heads(*trainer, grid, lay, seed, delta);
    const bool velocities = r.env == "point_mass";
    std::string dump = report::trajectory_header(velocities) + "\n";
    for (const auto& rec : r.records) dump += report::format_record(rec) + "\n";
    const fs::path out = out_dir.empty() ? l.experiment.out_dir / "affordances" : fs::path(out_dir);
    write_file(out / ("trajectories_" + layout + ".csv"), dump);

    std::vector<report::Panel> panels;
    const std::vector<std::string> names = velocities ? std::vector<std::string>{"W1", "W2", "W3"}
                                                      : std::vector<std::string>{"A", "B", "C"};
    for (std::size_t i = 0; i < r.starts.size(); ++i) {
        const auto& s = r.starts[i];
        report::Panel p;
        p.title = "start " + std::to_string(i) + (s.injective ? "  (one object per head)" : "");
        p.start = s.start;
        for (std::size_t k = 0; k < s.paths.size(); ++k) p.paths.push_back({s.paths[k], k});
        for (std::size_t j = 0; j < s.landmarks.size(); ++j) p.markers.push_back({s.landmarks[j], names[j % 3]});
        panels.push_back(std::move(p));
    }
    const double lo = velocities ? -1.0 : 0.0, hi = 1.0;
    write_file(out / ("trajectories_" + layout + ".svg"), report::trajectory_grid(panels, grid.columns, lo, hi, r.heads));
    std::printf("starts %zu  heads %zu  injective_fraction %.4f  (delta %.3g)\n", r.starts.size(), r.heads,
                r.injective_fraction, delta);
    std::printf("wrote %s\n", (out / ("trajectories_" + layout + ".{csv,svg}")).string().c_str());
    return 0;
}

int cmd_switch(const std::string& path, const std::vector<std::string>& sets, const std::string& checkpoint,
               std::size_t episodes, std::uint64_t seed, std::size_t bins, const std::string& out_dir) {
    Loaded l = load_config(path, sets);
    if (l.experiment.train.heads < 2) {
        throw config::ConfigError("afford.K: switch-analysis needs at least 2 heads (K = 1 has nothing to compare)");
    }
    auto trainer = load_trainer(l, checkpoint);
    const auto r = report::switch_analysis(*trainer, episodes, seed);
    const fs::path out = out_dir.empty() ? l.experiment.out_dir / "switch" : fs::path(out_dir);

    std::string csv = "config,plan_return";
    for (std::size_t k = 0; k < r.heads; ++k) csv += ",head" + std::to_string(k) + "_return";
    for (std::size_t k = 0; k < r.heads; ++k) csv += ",delta" + std::to_string(k);
    csv += "\n";
    for (std::size_t j = 0; j < r.configs; ++j) {
        csv += std::to_string(j) + "," + report::format_number(r.plan_returns[j]);
        for (std::size_t k = 0; k < r.heads; ++k) csv += "," + report::format_number(r.head_returns[k][j]);
        for (std::size_t k = 0; k < r.heads; ++k) csv += "," + report::format_number(r.deltas[k][j]);
        csv += "\n";
    }
    write_file(out / "switch.csv", csv);

    std::string summary = "policy,mean_return,stderr,delta_mean,delta_skew,delta_frac_positive\n";
    const auto plan = report::mean_stderr(r.plan_returns);
    summary += "plan," + report::format_number(plan.mean) + "," + report::format_number(plan.stderr_) + ",,,\n";
    std::printf("configs %zu\nplan     mean %.4f  stderr %.4f\n", r.configs, plan.mean, plan.stderr_);
    for (std::size_t k = 0; k < r.heads; ++k) {
        const auto h = report::mean_stderr(r.head_returns[k]);
        const auto& s = r.summary[k];
        summary += "head" + std::to_string(k) + "," + report::format_number(h.mean) + "," +
                   report::format_number(h.stderr_) + "," + report::format_number(s.mean) + "," +
                   report::format_number(s.skew) + "," + report::format_number(s.frac_positive) + "\n";
        std::printf("head %zu   mean %.4f  stderr %.4f  delta mean %.4f  skew %.4f  frac>0 %.4f\n", k, h.mean,
                    h.stderr_, s.mean, s.skew, s.frac_positive);
        write_file(out / ("delta_head" + std::to_string(k) + ".svg"),
                   report::histogram("plan - head " + std::to_string(k), r.deltas[k], bins, report::head_color(k)));
    }
    write_file(out / "summary.csv", summary);
    std::printf("wrote %s\n", out.string().c_str());
    return 0;
}

int cmd_gradcheck(std::uint64_t seed) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto entries = report::run_gradcheck_suite(seed);
    bool ok = true;
    double worst_op = 0.0, worst_net = 0.0, worst_plan = 0.0;
    for (const auto& e : entries) {
        std::printf("%-8s %-28s max_rel_error %.3e  (< %.0e)  %s\n", e.group.c_str(), e.name.c_str(), e.max_rel_error,
                    e.tolerance, e.pass() ? "ok" : "FAIL");
        if (!e.pass()) std::printf("         worst entry %s\n", e.worst.c_str());
        ok = ok && e.pass();
        double& w = e.group == "op" ? worst_op : e.group == "network" ? worst_net : worst_plan;
        w = std::max(w, e.max_rel_error);
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("worst: ops %.3e  networks %.3e  planner %.3e  (%zu checks, %.1fs)\n", worst_op, worst_net, worst_plan,
                entries.size(), secs);
    return ok ? 0 : exit_numerical;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Affordance learning through planning: experiments and analysis"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> sets;
    auto add_config = [&](CLI::App* sub, bool required) {
        auto* opt = sub->add_option("config", config_path, "flat key = value config file");
        if (required) opt->required();
        sub->add_option("--set", sets, "override a key, e.g. --set plan.tau=0.5 (repeatable)");
    };

    bool dry_run = false, parallel = false;
    auto* run = app.add_subcommand("run", "train every seed of a config");
    add_config(run, true);
    run->add_flag("--dry-run", dry_run, "validate and print the resolved parameters without training");
    run->add_flag("--parallel-seeds", parallel, "one trainer per thread");

    std::vector<std::string> inputs;
    std::vector<std::string> only;
    std::string out_dir;
    auto* plot = app.add_subcommand("plot", "SVG learning curves (mean +- stderr across seeds)");
    plot->add_option("inputs", inputs, "run directories or metrics CSVs, optionally LABEL=PATH")->required();
    plot->add_option("-o,--out", out_dir, "output directory")->required();
    plot->add_option("--metric", only, "plot only these metrics (repeatable)");

    std::string checkpoint, grid = "3x3", layout = "fixed";
    std::uint64_t seed = 0;
    double delta = 0.1;
    auto* vis = app.add_subcommand("visualize-affordances", "roll out every head's option from a grid of starts");
    add_config(vis, true);
    vis->add_option("--checkpoint", checkpoint, "trained .grsp checkpoint")->required();
    vis->add_option("--grid", grid, "start-state lattice COLSxROWS")->capture_default_str();
    vis->add_option("--layout", layout, "fixed or varied object layout")->capture_default_str();
    vis->add_option("--seed", seed, "layout seed")->capture_default_str();
    vis->add_option("--delta", delta, "endpoint-to-object tolerance")->capture_default_str();
    vis->add_option("-o,--out", out_dir, "output directory (default <run.out_dir>/affordances)");

    std::size_t episodes = 1000, bins = 30;
    auto* sw = app.add_subcommand("switch-analysis", "planning policy versus each head used alone");
    add_config(sw, true);
    sw->add_option("--checkpoint", checkpoint, "trained .grsp checkpoint")->required();
    sw->add_option("--episodes", episodes, "paired start/goal configurations")->capture_default_str();
    sw->add_option("--seed", seed, "configuration seed")->capture_default_str();
    sw->add_option("--bins", bins, "histogram bins")->capture_default_str();
    sw->add_option("-o,--out", out_dir, "output directory (default <run.out_dir>/switch)");

    auto* gc = app.add_subcommand("gradcheck", "finite-difference check of every op, network and the planner");
    gc->add_option("--seed", seed, "suite seed")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : exit_config;
    }

    try {
        if (*run) return cmd_run(config_path, sets, dry_run, parallel);
        if (*plot) return cmd_plot(inputs, out_dir, only);
        if (*vis) return cmd_visualize(config_path, sets, checkpoint, grid, layout, seed, delta, out_dir);
        if (*sw) return cmd_switch(config_path, sets, checkpoint, episodes, seed, bins, out_dir);
        if (*gc) return cmd_gradcheck(seed);
    } catch (const ad::NumericalError& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return exit_numerical;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return exit_config;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return exit_config;
    }
    return 0;
}
