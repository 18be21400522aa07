#include "dno/sampler.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>

namespace dno {

namespace {

constexpr double kClampTolerance = 1e-12;

double clamped_sqrt_arg(double arg) {
    if (arg < 0.0) {
        if (arg < -kClampTolerance)
            throw NumericDomainError("ddim_step: 1 - alpha_bar_{t-1} - sigma_t^2 negative");
        static std::atomic<bool> warned{false};
        if (!warned.exchange(true))
            std::fprintf(stderr, "warning: clamping sqrt argument %g to 0\n", arg);
        return 0.0;
    }
    return arg;
}

struct StepCoefficients {
    double a;
    double b;
    double sigma;
};

StepCoefficients step_coefficients(const NoiseSchedule& schedule, int t, double eta) {
    const double ab_prev = schedule.alpha_bar[t - 1];
    const double ab_cur = schedule.alpha_bar[t];
    const double sg = sigma_t(schedule, t, eta);
    const double arg = clamped_sqrt_arg(1.0 - ab_prev - sg * sg);
    StepCoefficients c;
    c.a = std::sqrt(ab_prev / ab_cur);
    c.b = -(std::sqrt(ab_prev * (1.0 - ab_cur) / ab_cur) - std::sqrt(arg));
    c.sigma = sg;
    return c;
}

void check_bundle(const SamplerConfig& config, const NoiseBundle& noise) {
    if (noise.steps() != config.schedule.steps || noise.dim() != config.model.dim)
        throw std::invalid_argument("noise bundle inconsistent with sampler config");
}

} // namespace

double sigma_t(const NoiseSchedule& schedule, int t, double eta) {
    if (t < 1 || t > schedule.steps) throw std::out_of_range("sigma_t: t out of range");
    const double ab_prev = schedule.alpha_bar[t - 1];
    const double ab_cur = schedule.alpha_bar[t];
    return eta * std::sqrt((1.0 - ab_prev) / (1.0 - ab_cur))
               * std::sqrt(1.0 - ab_cur / ab_prev);
}

Eigen::VectorXd ddim_step(const SamplerConfig& config, const Eigen::VectorXd& x_t, int t,
                          const Eigen::VectorXd& z_t) {
    const auto c = step_coefficients(config.schedule, t, config.eta);
    const Eigen::VectorXd eps = epsilon_pred(config.model, config.schedule, x_t, t);
    return c.a * x_t + c.b * eps + c.sigma * z_t;
}

std::pair<Eigen::VectorXd, ForwardTape> run_sampler(const SamplerConfig& config,
                                                    const NoiseBundle& noise) {
    check_bundle(config, noise);
    const int steps = config.schedule.steps;

    ForwardTape tape;
    tape.steps = steps;
    tape.dim = config.model.dim;
    tape.eta = config.eta;
    tape.states.reserve(steps + 1);
    tape.eps.reserve(steps);
    tape.a.reserve(steps);
    tape.b.reserve(steps);
    tape.sigma.reserve(steps);

    Eigen::VectorXd x = noise.initial_noise();
    tape.states.push_back(x);
    for (int t = steps; t >= 1; --t) {
        const auto c = step_coefficients(config.schedule, t, config.eta);
        Eigen::VectorXd eps = epsilon_pred(config.model, config.schedule, x, t);
        x = c.a * x + c.b * eps + c.sigma * noise.step_noise(t);
        tape.states.push_back(x);
        tape.eps.push_back(std::move(eps));
        tape.a.push_back(c.a);
        tape.b.push_back(c.b);
        tape.sigma.push_back(c.sigma);
    }
    return {x, std::move(tape)};
}

NoiseBundle ode_equivalent_noise(const SamplerConfig& config, const Eigen::VectorXd& x_init) {
    if (x_init.size() != config.model.dim)
        throw std::invalid_argument("ode_equivalent_noise: dimension mismatch");
    const int steps = config.schedule.steps;
    NoiseBundle bundle(steps, config.model.dim);
    bundle.initial_noise() = x_init;

    Eigen::VectorXd x = x_init;
    for (int t = steps; t >= 1; --t) {
        const double ab_prev = config.schedule.alpha_bar[t - 1];
        const double sg = sigma_t(config.schedule, t, 1.0);
        const Eigen::VectorXd eps = epsilon_pred(config.model, config.schedule, x, t);
        const double arg = clamped_sqrt_arg(1.0 - ab_prev - sg * sg);
        const double numer = std::sqrt(1.0 - ab_prev) - std::sqrt(arg);
        if (sg == 0.0) {
            // sigma_t multiplies z_t in the update, so z_t is inert here. The
            // numerator vanishes with sigma_t (ab_prev == 1), making 0 the
            // only consistent value; a nonzero numerator is a real error.
            if (numer != 0.0)
                throw NumericDomainError("ode_equivalent_noise: sigma_t = 0 with nonzero numerator");
            bundle.step_noise(t).setZero();
        } else {
            bundle.step_noise(t) = (numer / sg) * eps;
        }
        // Advance along the eta=0 trajectory.
        const auto c = step_coefficients(config.schedule, t, 0.0);
        x = c.a * x + c.b * eps;
    }
    return bundle;
}

NoiseBundle sampler_vjp(const SamplerConfig& config, const ForwardTape& tape,
                        const Eigen::VectorXd& cotangent) {
    if (tape.steps != config.schedule.steps || tape.dim != config.model.dim
        || tape.eta != config.eta)
        throw std::invalid_argument("sampler_vjp: tape does not match config");
    if (cotangent.size() != config.model.dim)
        throw std::invalid_argument("sampler_vjp: cotangent dimension mismatch");

    const int steps = tape.steps;
    NoiseBundle grad(steps, config.model.dim);

    // Walk the recorded steps backwards; tape index s applied DDIM step t = T - s.
    Eigen::VectorXd v = cotangent;
    for (int s = steps - 1; s >= 0; --s) {
        const int t = steps - s;
        grad.step_noise(t) = tape.sigma[s] * v;
        const Eigen::VectorXd eps_pull =
            -std::sqrt(1.0 - config.schedule.alpha_bar[t])
            * score_vjp(config.model, config.schedule, tape.states[s], t, v);
        v = tape.a[s] * v + tape.b[s] * eps_pull;
    }
    grad.initial_noise() = v;
    return grad;
}

Eigen::VectorXd SamplerMap::forward(const Eigen::VectorXd& noise) const {
    NoiseBundle bundle(config_->schedule.steps, config_->model.dim, noise);
    return run_sampler(*config_, bundle).first;
}

NoiseToSampleMap::Taped SamplerMap::forward_taped(const Eigen::VectorXd& noise) const {
    NoiseBundle bundle(config_->schedule.steps, config_->model.dim, noise);
    auto [sample, tape] = run_sampler(*config_, bundle);
    auto shared_tape = std::make_shared<ForwardTape>(std::move(tape));
    return {std::move(sample), [cfg = config_, shared_tape](const Eigen::VectorXd& cot) {
                return sampler_vjp(*cfg, *shared_tape, cot).flat();
            }};
}

} // namespace dno
