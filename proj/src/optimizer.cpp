#include "dno/optimizer.hpp"

#include "dno/parallel.hpp"
#include "dno/rng.hpp"

#include <cmath>
#include <stdexcept>

namespace dno {

namespace {

// Seed roles for deriving per-run substreams.
enum Stream : std::uint64_t {
    kInitialNoise = 0,
    kRegBatch = 1,
    kZoEstimate = 2,
};

struct GradientParts {
    Eigen::VectorXd reward_part; // grad_z r(M(z))
    long reward_queries = 0;
    long sampler_passes = 0;
};

GradientParts reward_gradient(const DnoConfig& config, const SamplerMap& map,
                              const Eigen::VectorXd& z, const ForwardTape& tape,
                              const Eigen::VectorXd& sample, int step) {
    GradientParts parts;
    switch (config.gradient_source) {
    case GradientSource::Exact: {
        const Eigen::VectorXd cot = grad_reward(config.reward, sample);
        parts.reward_part = sampler_vjp(config.sampler, tape, cot).flat();
        return parts;
    }
    case GradientSource::ZoSgd:
    case GradientSource::Hybrid1:
    case GradientSource::Hybrid2: {
        ZoConfig zo = config.zo;
        zo.seed = substream(config.seed, kZoEstimate, static_cast<std::uint64_t>(step));
        GradientEstimate est;
        if (config.gradient_source == GradientSource::ZoSgd)
            est = zo_sgd_grad(map, config.reward, zo, z);
        else if (config.gradient_source == GradientSource::Hybrid1)
            est = hybrid1_grad(map, config.reward, zo, z);
        else
            est = hybrid2_grad(map, config.reward, zo, z);
        parts.reward_part = std::move(est.gradient);
        parts.reward_queries = est.reward_queries;
        parts.sampler_passes = est.sampler_passes;
        return parts;
    }
    }
    throw std::logic_error("unknown gradient source");
}

} // namespace

AdamState AdamState::create(int dim, double beta1, double beta2, double epsilon) {
    AdamState s;
    s.first_moment = Eigen::VectorXd::Zero(dim);
    s.second_moment = Eigen::VectorXd::Zero(dim);
    s.beta1 = beta1;
    s.beta2 = beta2;
    s.epsilon = epsilon;
    return s;
}

Eigen::VectorXd adam_step(AdamState& state, const Eigen::VectorXd& z,
                          const Eigen::VectorXd& gradient, double learning_rate) {
    if (z.size() != gradient.size() || z.size() != state.first_moment.size())
        throw std::invalid_argument("adam_step: dimension mismatch");
    ++state.step_count;
    state.first_moment = state.beta1 * state.first_moment + (1.0 - state.beta1) * gradient;
    state.second_moment = state.beta2 * state.second_moment
                          + (1.0 - state.beta2) * gradient.cwiseProduct(gradient);
    const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step_count));
    const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step_count));
    const Eigen::VectorXd m_hat = state.first_moment / c1;
    const Eigen::VectorXd v_hat = state.second_moment / c2;
    return z + learning_rate
               * (m_hat.array() / (v_hat.array().sqrt() + state.epsilon)).matrix();
}

RunResult dno_run(const DnoConfig& config) {
    if (!(config.learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
    if (config.steps < 0) throw std::invalid_argument("step count must be non-negative");
    if (config.gamma < 0.0) throw std::invalid_argument("gamma must be non-negative");

    const int n = config.noise_dim();
    const auto fac = FactorizationConfig::create(n, config.reg_k);
    const auto indicator_perms = PermutationSet::create(n, config.indicator_q,
                                                        config.indicator_seed);
    const SamplerMap map(config.sampler);

    Rng init_rng(substream(config.seed, kInitialNoise));
    NoiseBundle z(config.sampler.schedule.steps, config.sampler.model.dim,
                  init_rng.gaussian_vector(n));

    AdamState adam = AdamState::create(n);
    RunResult result;
    result.trajectory.reserve(config.steps + 1);
    result.termination = "completed";

    long total_queries = 0;
    long total_passes = 0;

    for (int step = 0; step <= config.steps; ++step) {
        auto [sample, tape] = run_sampler(config.sampler, z);
        ++total_passes;
        const double reward = eval_reward(config.reward, sample);
        ++total_queries;

        if (!std::isfinite(reward) || !sample.allFinite()) {
            result.termination = "numeric failure at step " + std::to_string(step);
            break;
        }

        auto parts = reward_gradient(config, map, z.flat(), tape, sample, step);
        total_queries += parts.reward_queries;
        total_passes += parts.sampler_passes;

        TrajectoryPoint point;
        point.step = step;
        point.reward = reward;
        point.sample = sample;
        point.grad_norm = parts.reward_part.norm();
        point.p_z = indicator_P(z.flat(), fac, indicator_perms);

        Eigen::VectorXd total_gradient = parts.reward_part;
        if (config.reg_enabled) {
            const auto batch = PermutationSet::random(
                n, config.reg_batch, substream(config.seed, kRegBatch,
                                               static_cast<std::uint64_t>(step)));
            point.reg_value = reg_value(z.flat(), fac, batch);
            total_gradient += config.gamma * reg_grad(z.flat(), fac, batch);
        }

        point.reward_queries = total_queries;
        point.sampler_passes = total_passes;
        result.trajectory.push_back(std::move(point));

        if (!total_gradient.allFinite()) {
            result.termination = "numeric failure at step " + std::to_string(step);
            break;
        }
        if (step == config.steps) break;

        if (config.stepper == Stepper::Adam)
            z.flat() = adam_step(adam, z.flat(), total_gradient, config.learning_rate);
        else
            z.flat() += config.learning_rate * total_gradient;
    }

    auto [final_sample, tape] = run_sampler(config.sampler, z);
    result.final_noise = std::move(z);
    result.final_sample = std::move(final_sample);
    return result;
}

double estimate_lipschitz(const DnoConfig& config, int probes, double probe_scale,
                          std::uint64_t seed) {
    if (probes < 1) throw std::invalid_argument("estimate_lipschitz: probes must be positive");
    const int n = config.noise_dim();
    const int d = config.sampler.model.dim;
    const bool ode_mode = config.sampler.eta == 0.0;

    auto gradient_at = [&](const Eigen::VectorXd& flat) {
        NoiseBundle bundle(config.sampler.schedule.steps, d, flat);
        auto [sample, tape] = run_sampler(config.sampler, bundle);
        const Eigen::VectorXd cot = grad_reward(config.reward, sample);
        return sampler_vjp(config.sampler, tape, cot).flat().eval();
    };

    double worst = 0.0;
    for (int i = 0; i < probes; ++i) {
        Rng rng(substream(seed, static_cast<std::uint64_t>(i)));
        const Eigen::VectorXd z = rng.gaussian_vector(n);
        // For eta=0 only xT influences the output; probe that block alone so
        // the ratio is not diluted by inert coordinates.
        Eigen::VectorXd direction = Eigen::VectorXd::Zero(n);
        if (ode_mode)
            direction.head(d) = rng.gaussian_vector(d);
        else
            direction = rng.gaussian_vector(n);
        direction *= probe_scale / direction.norm();

        const double ratio = (gradient_at(z + direction) - gradient_at(z)).norm()
                             / probe_scale;
        worst = std::max(worst, ratio);
    }
    return worst;
}

MonotonicityReport theorem1_harness(DnoConfig config, int seeds, double tolerance,
                                    double violation_fraction, int lipschitz_probes,
                                    int jobs) {
    // The theorem's setting: plain ascent, exact gradients, no regularization.
    config.stepper = Stepper::GradientAscent;
    config.gradient_source = GradientSource::Exact;
    config.reg_enabled = false;

    MonotonicityReport report;
    report.seeds = seeds;
    report.lipschitz_bound = estimate_lipschitz(config, lipschitz_probes);
    double ell = 1.0 / report.lipschitz_bound;

    constexpr int kMaxAttempts = 5;
    std::vector<std::vector<double>> rewards(seeds);
    for (int attempt = 1; attempt <= kMaxAttempts; ++attempt) {
        report.attempts = attempt;
        report.step_size = ell;

        std::vector<char> violates(seeds, 0);
        std::vector<double> worst(seeds, 0.0);
        parallel_for(seeds, jobs, [&](int i) {
            DnoConfig run_config = config;
            run_config.learning_rate = ell;
            run_config.seed = config.seed + static_cast<std::uint64_t>(i);
            const RunResult run = dno_run(run_config);
            std::vector<double> r;
            r.reserve(run.trajectory.size());
            for (const auto& p : run.trajectory) r.push_back(p.reward);
            double w = 0.0;
            for (std::size_t s = 1; s < r.size(); ++s)
                w = std::min(w, r[s] - r[s - 1]);
            rewards[i] = std::move(r);
            worst[i] = w;
            violates[i] = w < -tolerance ? 1 : 0;
        });

        report.violating_seeds = 0;
        report.worst_delta = 0.0;
        for (int i = 0; i < seeds; ++i) {
            report.violating_seeds += violates[i];
            report.worst_delta = std::min(report.worst_delta, worst[i]);
        }
        if (report.violating_seeds <= violation_fraction * seeds) break;
        ell *= 0.5;
    }

    std::size_t points = rewards.front().size();
    for (const auto& r : rewards) points = std::min(points, r.size());
    report.mean_reward.assign(points, 0.0);
    for (const auto& r : rewards)
        for (std::size_t s = 0; s < points; ++s) report.mean_reward[s] += r[s];
    for (auto& v : report.mean_reward) v /= seeds;
    report.mean_curve_monotone = true;
    for (std::size_t s = 1; s < points; ++s)
        if (report.mean_reward[s] - report.mean_reward[s - 1] < -tolerance)
            report.mean_curve_monotone = false;
    return report;
}

const char* to_string(Stationarity s) {
    switch (s) {
    case Stationarity::TypeI: return "type1";
    case Stationarity::TypeII: return "type2";
    case Stationarity::TypeIII: return "type3";
    case Stationarity::NotStationary: return "not_stationary";
    }
    return "unknown";
}

Stationarity classify_stationarity(const DnoConfig& config, const NoiseBundle& z,
                                   double tolerance) {
    const int d = config.sampler.model.dim;
    auto [sample, tape] = run_sampler(config.sampler, z);
    const Eigen::VectorXd reward_grad = grad_reward(config.reward, sample);

    // Assemble the full Jacobian row by row from basis-cotangent pullbacks.
    Eigen::MatrixXd jacobian(d, config.noise_dim());
    for (int i = 0; i < d; ++i) {
        Eigen::VectorXd basis = Eigen::VectorXd::Zero(d);
        basis[i] = 1.0;
        jacobian.row(i) = sampler_vjp(config.sampler, tape, basis).flat();
    }

    const double g1 = reward_grad.norm();
    const double g2 = jacobian.norm(); // Frobenius
    if (g1 <= tolerance) return Stationarity::TypeI;
    if (g2 <= tolerance) return Stationarity::TypeII;
    const double pullback = (reward_grad.transpose() * jacobian).norm();
    if (pullback <= tolerance * g1 * g2) return Stationarity::TypeIII;
    return Stationarity::NotStationary;
}

} // namespace dno
