#include "dno/experiments.hpp"

#include "dno/parallel.hpp"
#include "dno/rng.hpp"

#include <json.hpp>

#include <array>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

namespace dno {

namespace {

using nlohmann::json;

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

Stepper parse_stepper(const std::string& name) {
    if (name == "adam") return Stepper::Adam;
    if (name == "ga") return Stepper::GradientAscent;
    throw ConfigError("unknown stepper: " + name);
}

GradientSource parse_source(const std::string& name) {
    if (name == "exact") return GradientSource::Exact;
    if (name == "zo_sgd") return GradientSource::ZoSgd;
    if (name == "hybrid1") return GradientSource::Hybrid1;
    if (name == "hybrid2") return GradientSource::Hybrid2;
    throw ConfigError("unknown gradient estimator: " + name);
}

std::string arm_csv_name(const std::string& arm) {
    return arm.empty() ? "trajectory.csv" : "trajectory_" + arm + ".csv";
}

void write_arm_csv(const std::filesystem::path& dir, const std::string& arm,
                   const std::vector<RunResult>& runs, std::uint64_t base_seed, int dim) {
    emit_csv(trajectory_schema(dim), trajectory_rows(runs, base_seed),
             (dir / arm_csv_name(arm)).string());
}

json summary_block(const std::vector<RunResult>& runs) {
    json block;
    const struct {
        const char* key;
        double (*field)(const TrajectoryPoint&);
    } fields[] = {
        {"reward", [](const TrajectoryPoint& p) { return p.reward; }},
        {"reg_value", [](const TrajectoryPoint& p) { return p.reg_value; }},
        {"p_z", [](const TrajectoryPoint& p) { return p.p_z; }},
        {"grad_norm", [](const TrajectoryPoint& p) { return p.grad_norm; }},
    };
    for (const auto& f : fields) {
        const auto stat = summarize(runs, f.field);
        block[f.key]["mean"] = stat.mean;
        block[f.key]["std"] = stat.std_dev;
    }
    return block;
}

// Plot script consuming the emitted CSVs; rendering stays out of the CLI.
void write_plot_script(const std::filesystem::path& dir,
                       const std::vector<std::string>& arms) {
    std::ofstream out(dir / "plot.py");
    out << "#!/usr/bin/env python3\n"
        << "import csv, collections\n"
        << "import matplotlib\n"
        << "matplotlib.use('Agg')\n"
        << "import matplotlib.pyplot as plt\n\n"
        << "arms = [";
    for (std::size_t i = 0; i < arms.size(); ++i)
        out << (i ? ", " : "") << '"' << arms[i] << '"';
    out << "]\n\n"
        << "def load(arm):\n"
        << "    name = 'trajectory_%s.csv' % arm if arm else 'trajectory.csv'\n"
        << "    steps = collections.defaultdict(list)\n"
        << "    with open(name) as f:\n"
        << "        for row in csv.DictReader(f):\n"
        << "            steps[int(float(row['step']))].append(float(row['reward']))\n"
        << "    xs = sorted(steps)\n"
        << "    return xs, [sum(steps[s]) / len(steps[s]) for s in xs]\n\n"
        << "fig, ax = plt.subplots(figsize=(6, 4))\n"
        << "for arm in arms:\n"
        << "    xs, ys = load(arm)\n"
        << "    ax.plot(xs, ys, label=arm or 'run')\n"
        << "ax.set_xlabel('gradient steps')\n"
        << "ax.set_ylabel('mean reward')\n"
        << "ax.legend()\n"
        << "fig.tight_layout()\n"
        << "fig.savefig('reward.png', dpi=150)\n"
        << "print('wrote reward.png')\n";
}

} // namespace

std::vector<RunResult> run_seed_batch(const DnoConfig& base, int seed_count,
                                      std::uint64_t base_seed, int jobs) {
    std::vector<RunResult> out(seed_count);
    parallel_for(seed_count, jobs, [&](int i) {
        DnoConfig config = base;
        config.seed = base_seed + static_cast<std::uint64_t>(i);
        out[i] = dno_run(config);
    });
    return out;
}

CsvSchema trajectory_schema(int dim) {
    CsvSchema schema;
    schema.columns = {"step", "seed", "reward", "reg_value", "p_z"};
    for (int i = 1; i <= dim; ++i) schema.columns.push_back("x0_" + std::to_string(i));
    schema.columns.insert(schema.columns.end(),
                          {"grad_norm", "reward_queries", "sampler_passes"});
    return schema;
}

void emit_csv(const CsvSchema& schema, const std::vector<std::vector<double>>& rows,
              const std::string& path) {
    std::ofstream out(path, std::ios::binary); // binary: LF endings everywhere
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    for (std::size_t i = 0; i < schema.columns.size(); ++i)
        out << (i ? "," : "") << schema.columns[i];
    out << '\n';
    for (const auto& row : rows) {
        if (row.size() != schema.columns.size())
            throw std::invalid_argument("csv row does not match schema");
        for (std::size_t i = 0; i < row.size(); ++i)
            out << (i ? "," : "") << format_double(row[i]);
        out << '\n';
    }
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::pair<CsvSchema, std::vector<std::vector<double>>> parse_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open for reading: " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("empty csv: " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();

    CsvSchema schema;
    std::stringstream header(line);
    std::string cell;
    while (std::getline(header, cell, ',')) schema.columns.push_back(cell);

    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
        rows.push_back(std::move(row));
    }
    return {std::move(schema), std::move(rows)};
}

std::vector<std::vector<double>> trajectory_rows(const std::vector<RunResult>& runs,
                                                 std::uint64_t base_seed) {
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        for (const auto& p : runs[i].trajectory) {
            std::vector<double> row;
            row.push_back(p.step);
            row.push_back(static_cast<double>(base_seed + i));
            row.push_back(p.reward);
            row.push_back(p.reg_value);
            row.push_back(p.p_z);
            for (Eigen::Index c = 0; c < p.sample.size(); ++c) row.push_back(p.sample[c]);
            row.push_back(p.grad_norm);
            row.push_back(static_cast<double>(p.reward_queries));
            row.push_back(static_cast<double>(p.sampler_passes));
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

SummaryStat summarize(const std::vector<RunResult>& runs,
                      double (*field)(const TrajectoryPoint&)) {
    std::size_t points = 0;
    for (const auto& run : runs) points = std::max(points, run.trajectory.size());
    SummaryStat stat;
    stat.mean.assign(points, 0.0);
    stat.std_dev.assign(points, 0.0);
    for (std::size_t s = 0; s < points; ++s) {
        double sum = 0.0;
        int count = 0;
        for (const auto& run : runs) {
            if (s < run.trajectory.size()) {
                sum += field(run.trajectory[s]);
                ++count;
            }
        }
        const double mean = sum / count;
        double sq = 0.0;
        for (const auto& run : runs) {
            if (s < run.trajectory.size()) {
                const double d = field(run.trajectory[s]) - mean;
                sq += d * d;
            }
        }
        stat.mean[s] = mean;
        stat.std_dev[s] = count > 1 ? std::sqrt(sq / (count - 1)) : 0.0;
    }
    return stat;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }

    try {
        ExperimentConfig cfg;
        cfg.experiment = j.at("experiment").get<std::string>();
        cfg.model = j.value("model", cfg.model);
        if (j.contains("sampler")) {
            cfg.sampler_steps = j["sampler"].value("T", cfg.sampler_steps);
            cfg.eta = j["sampler"].value("eta", cfg.eta);
        }
        if (j.contains("reward")) {
            cfg.reward_name = j["reward"].at("name").get<std::string>();
            if (j["reward"].contains("params"))
                for (const auto& [key, value] : j["reward"]["params"].items())
                    cfg.reward_params[key] = value.get<double>();
        }
        if (j.contains("optimizer")) {
            const auto& o = j["optimizer"];
            cfg.stepper = o.value("stepper", cfg.stepper);
            cfg.learning_rate = o.value("lr", cfg.learning_rate);
            cfg.opt_steps = o.value("steps", cfg.opt_steps);
            cfg.gamma = o.value("gamma", cfg.gamma);
        }
        if (j.contains("probreg")) {
            const auto& p = j["probreg"];
            cfg.reg_k = p.value("k", cfg.reg_k);
            cfg.indicator_q = p.value("q", cfg.indicator_q);
            cfg.reg_batch = p.value("b", cfg.reg_batch);
        }
        if (j.contains("zo")) {
            const auto& z = j["zo"];
            cfg.estimator = z.value("estimator", cfg.estimator);
            cfg.zo_mu = z.value("mu", cfg.zo_mu);
            cfg.zo_q = z.value("q", cfg.zo_q);
            cfg.budget_passes = z.value("budget_passes", cfg.budget_passes);
        }
        if (j.contains("seeds")) {
            cfg.seed_count = j["seeds"].value("count", cfg.seed_count);
            cfg.base_seed = j["seeds"].value("base", cfg.base_seed);
        }
        cfg.out_dir = j.value("out", cfg.out_dir);
        if (j.contains("sweep")) {
            const auto& s = j["sweep"];
            if (s.contains("k")) cfg.sweep_k = s["k"].get<std::vector<int>>();
            if (s.contains("b")) cfg.sweep_b = s["b"].get<std::vector<int>>();
            if (s.contains("gamma")) cfg.sweep_gamma = s["gamma"].get<std::vector<double>>();
        }

        // Validate references eagerly so bad configs exit before any work.
        make_model(cfg.model);
        make_reward(cfg.reward_name, cfg.reward_params);
        parse_stepper(cfg.stepper);
        parse_source(cfg.estimator);
        if (cfg.seed_count < 1) throw ConfigError("seeds.count must be positive");
        return cfg;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config field error: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config invalid: ") + e.what());
    }
}

DnoConfig make_dno_config(const ExperimentConfig& config) {
    DnoConfig dc;
    dc.sampler.model = make_model(config.model);
    dc.sampler.schedule = build_schedule(config.sampler_steps, 1000, 1e-4, 0.02);
    dc.sampler.eta = config.eta;
    dc.reward = make_reward(config.reward_name, config.reward_params);
    dc.steps = config.opt_steps;
    dc.stepper = parse_stepper(config.stepper);
    dc.learning_rate = config.learning_rate;
    dc.gamma = config.gamma;
    dc.reg_k = config.reg_k;
    dc.reg_batch = config.reg_batch;
    dc.indicator_q = config.indicator_q;
    dc.gradient_source = parse_source(config.estimator);
    dc.zo.mu = config.zo_mu;
    dc.zo.q_samples = config.zo_q;
    return dc;
}

int run_experiment(const ExperimentConfig& config, std::ostream& log) {
    std::filesystem::path dir = config.out_dir;
    if (dir.empty()) {
        const char* root = std::getenv("DNO_LAB_OUT");
        dir = std::filesystem::path(root ? root : "out") / config.experiment;
    }
    std::filesystem::create_directories(dir);

    const DnoConfig base = make_dno_config(config);
    const int dim = base.sampler.model.dim;
    json summary;
    summary["experiment"] = config.experiment;
    summary["seeds"] = config.seed_count;
    summary["base_seed"] = config.base_seed;

    std::vector<std::string> arms;
    auto run_arm = [&](const std::string& arm, const DnoConfig& dc) {
        log << "running arm '" << (arm.empty() ? "run" : arm) << "' over "
            << config.seed_count << " seeds\n";
        const auto runs = run_seed_batch(dc, config.seed_count, config.base_seed,
                                         config.jobs);
        for (const auto& r : runs)
            if (r.termination != "completed")
                log << "  note: a run terminated early: " << r.termination << "\n";
        write_arm_csv(dir, arm, runs, config.base_seed, dim);
        summary["arms"][arm.empty() ? "run" : arm] = summary_block(runs);
        arms.push_back(arm);
    };

    if (config.experiment == "example1") {
        run_arm("", base);
    } else if (config.experiment == "ode_vs_sde") {
        DnoConfig ode = base;
        ode.sampler.eta = 0.0;
        DnoConfig sde = base;
        sde.sampler.eta = 1.0;
        run_arm("ode", ode);
        run_arm("sde", sde);
    } else if (config.experiment == "ood_reghack") {
        DnoConfig plain = base;
        plain.reg_enabled = false;
        DnoConfig reg = base;
        reg.reg_enabled = true;
        run_arm("noreg", plain);
        run_arm("reg", reg);
    } else if (config.experiment == "estimators") {
        // Equalized sampler passes per step: every forward-pass-bound method
        // gets budget-1 perturbations; hybrid1 spends the budget on reward
        // queries instead since it needs a single pass.
        const int q = std::max(1, config.budget_passes - 1);
        const std::array<std::pair<std::string, GradientSource>, 3> methods = {{
            {"zo_sgd", GradientSource::ZoSgd},
            {"hybrid1", GradientSource::Hybrid1},
            {"hybrid2", GradientSource::Hybrid2},
        }};
        for (const auto& [arm, source] : methods) {
            DnoConfig dc = base;
            dc.gradient_source = source;
            dc.zo.q_samples = q;
            dc.zo.mu = source == GradientSource::Hybrid2 ? 0.02 : 0.01;
            run_arm(arm, dc);
        }
    } else {
        throw ConfigError("unknown experiment: " + config.experiment);
    }

    std::ofstream sum_out(dir / "summary.json");
    sum_out << summary.dump(2) << '\n';
    write_plot_script(dir, arms);
    log << "wrote " << (dir / "summary.json").string() << "\n";
    return 0;
}

} // namespace dno
