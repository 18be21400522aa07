#pragma once

#include "dno/optimizer.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace dno {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Runs one DNO configuration per seed (seed i uses base_seed + i). Results
// come back in seed order, so output is independent of scheduling; jobs == 1
// is the serial reference path.
std::vector<RunResult> run_seed_batch(const DnoConfig& base, int seed_count,
                                      std::uint64_t base_seed, int jobs);

struct CsvSchema {
    std::vector<std::string> columns;
};

// Fixed trajectory schema: step, seed, reward, reg_value, p_z, x0_1..x0_d,
// grad_norm, reward_queries, sampler_passes.
CsvSchema trajectory_schema(int dim);

// UTF-8, comma separated, '.' decimal, %.17g doubles (exact round-trip),
// header first, LF endings.
void emit_csv(const CsvSchema& schema, const std::vector<std::vector<double>>& rows,
              const std::string& path);

std::pair<CsvSchema, std::vector<std::vector<double>>> parse_csv(const std::string& path);

std::vector<std::vector<double>> trajectory_rows(const std::vector<RunResult>& runs,
                                                 std::uint64_t base_seed);

// One experiment fully determined by a JSON config file plus CLI overrides.
struct ExperimentConfig {
    std::string experiment; // example1 | ode_vs_sde | ood_reghack | estimators
    std::string model = "ring";
    int sampler_steps = 50;
    double eta = 1.0;
    std::string reward_name = "example1";
    RewardParams reward_params;
    std::string stepper = "adam";
    double learning_rate = 0.01;
    int opt_steps = 100;
    double gamma = 1.0;
    int reg_k = 2;
    int indicator_q = 100;
    int reg_batch = 100;
    std::string estimator = "exact";
    double zo_mu = 0.01;
    int zo_q = 16;
    int budget_passes = 17; // estimators experiment: sampler passes per step and arm
    int seed_count = 8;
    std::uint64_t base_seed = 0;
    std::string out_dir;
    int jobs = 0;
    // sweep grids (Appendix-style hyperparameter analysis)
    std::vector<int> sweep_k;
    std::vector<int> sweep_b;
    std::vector<double> sweep_gamma;
};

ExperimentConfig load_experiment_config(const std::string& path);

// Executes the named experiment over all seeds; writes one trajectory CSV per
// arm, summary.json and plot.py into the output directory. Returns 0 on
// success, 1 on runtime failure.
int run_experiment(const ExperimentConfig& config, std::ostream& log);

// Assembles the DnoConfig for one arm of an experiment; exposed for tests.
DnoConfig make_dno_config(const ExperimentConfig& config);

struct SummaryStat {
    std::vector<double> mean;
    std::vector<double> std_dev;
};

// Per-step mean and sample std across seeds, accumulated in seed order.
SummaryStat summarize(const std::vector<RunResult>& runs,
                      double (*field)(const TrajectoryPoint&));

} // namespace dno
