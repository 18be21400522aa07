#pragma once

#include "dno/rng.hpp"
#include "dno/sampler.hpp"
#include "dno/toy_models.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <functional>

namespace dno::test {

// Central finite difference of a scalar field; the independent oracle used
// against every analytic gradient in the library.
inline Eigen::VectorXd central_diff(const std::function<double(const Eigen::VectorXd&)>& f,
                                    const Eigen::VectorXd& x, double h = 1e-5) {
    Eigen::VectorXd g(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        Eigen::VectorXd xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        g[i] = (f(xp) - f(xm)) / (2.0 * h);
    }
    return g;
}

// Directional central difference of a vector field.
inline Eigen::VectorXd directional_diff(
    const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& f,
    const Eigen::VectorXd& x, const Eigen::VectorXd& direction, double h = 1e-5) {
    return (f(x + h * direction) - f(x - h * direction)) / (2.0 * h);
}

inline bool close_rel_abs(double a, double b, double rel, double abs_floor) {
    return std::abs(a - b) <= std::max(abs_floor, rel * std::max(std::abs(a), std::abs(b)));
}

inline bool close_rel_abs(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double rel,
                          double abs_floor) {
    return (a - b).norm() <= std::max(abs_floor, rel * std::max(a.norm(), b.norm()));
}

// Affine stub map built from schedule coefficients with epsilon == 0: every
// DDIM step is a pure rescaling plus injected noise.
class ZeroEpsilonMap final : public NoiseToSampleMap {
public:
    ZeroEpsilonMap(NoiseSchedule schedule, int dim, double eta)
        : schedule_(std::move(schedule)), dim_(dim), eta_(eta) {}

    int noise_dim() const override { return (schedule_.steps + 1) * dim_; }
    int sample_dim() const override { return dim_; }

    Eigen::VectorXd forward(const Eigen::VectorXd& noise) const override {
        NoiseBundle bundle(schedule_.steps, dim_, noise);
        Eigen::VectorXd x = bundle.initial_noise();
        for (int t = schedule_.steps; t >= 1; --t) {
            const double a = std::sqrt(schedule_.alpha_bar[t - 1] / schedule_.alpha_bar[t]);
            x = a * x + sigma_t(schedule_, t, eta_) * bundle.step_noise(t);
        }
        return x;
    }

    Taped forward_taped(const Eigen::VectorXd& noise) const override {
        Eigen::VectorXd sample = forward(noise);
        const NoiseSchedule schedule = schedule_;
        const int dim = dim_;
        const double eta = eta_;
        return {std::move(sample), [schedule, dim, eta](const Eigen::VectorXd& cot) {
                    NoiseBundle grad(schedule.steps, dim);
                    Eigen::VectorXd v = cot;
                    for (int t = 1; t <= schedule.steps; ++t) {
                        grad.step_noise(t) = sigma_t(schedule, t, eta) * v;
                        v *= std::sqrt(schedule.alpha_bar[t - 1] / schedule.alpha_bar[t]);
                    }
                    grad.initial_noise() = v;
                    return grad.flat().eval();
                }};
    }

private:
    NoiseSchedule schedule_;
    int dim_;
    double eta_;
};

// M(z) = z; lets estimator math be checked against closed forms.
class IdentityMap final : public NoiseToSampleMap {
public:
    explicit IdentityMap(int dim) : dim_(dim) {}
    int noise_dim() const override { return dim_; }
    int sample_dim() const override { return dim_; }
    Eigen::VectorXd forward(const Eigen::VectorXd& noise) const override { return noise; }
    Taped forward_taped(const Eigen::VectorXd& noise) const override {
        return {noise, [](const Eigen::VectorXd& cot) { return cot; }};
    }

private:
    int dim_;
};

inline NoiseBundle gaussian_bundle(int steps, int dim, std::uint64_t seed) {
    Rng rng(seed);
    return NoiseBundle(steps, dim, rng.gaussian_vector((steps + 1) * dim));
}

} // namespace dno::test
