#pragma once

#include "dno/toy_models.hpp"

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <stdexcept>
#include <utility>
#include <vector>

namespace dno {

struct NumericDomainError : std::domain_error {
    using std::domain_error::domain_error;
};

struct SamplerConfig {
    MixtureModel model;
    NoiseSchedule schedule;
    double eta = 1.0; // 0 = ODE, 1 = SDE
};

// The optimization variable z: initial noise x_T plus per-step noises
// z_T..z_1, exposed as one flat vector of dimension n = (T+1)*d in the
// fixed order [xT, z_T, z_{T-1}, ..., z_1].
class NoiseBundle {
public:
    NoiseBundle() = default;
    NoiseBundle(int steps, int dim)
        : steps_(steps), dim_(dim), flat_(Eigen::VectorXd::Zero((steps + 1) * dim)) {}
    NoiseBundle(int steps, int dim, Eigen::VectorXd flat)
        : steps_(steps), dim_(dim), flat_(std::move(flat)) {
        if (flat_.size() != static_cast<Eigen::Index>((steps_ + 1) * dim_))
            throw std::invalid_argument("NoiseBundle: flat size mismatch");
    }

    int steps() const { return steps_; }
    int dim() const { return dim_; }
    int flat_dim() const { return static_cast<int>(flat_.size()); }

    Eigen::VectorXd& flat() { return flat_; }
    const Eigen::VectorXd& flat() const { return flat_; }

    auto initial_noise() { return flat_.segment(0, dim_); }
    auto initial_noise() const { return flat_.segment(0, dim_); }

    // z_t for t in [1, T]; stored so that z_T comes right after xT.
    auto step_noise(int t) { return flat_.segment(offset(t), dim_); }
    auto step_noise(int t) const { return flat_.segment(offset(t), dim_); }

private:
    int offset(int t) const {
        if (t < 1 || t > steps_) throw std::out_of_range("NoiseBundle: step out of range");
        return (1 + steps_ - t) * dim_;
    }

    int steps_ = 0;
    int dim_ = 0;
    Eigen::VectorXd flat_;
};

// Recorded states and coefficients of one sampling pass. Index s walks the
// pass in execution order: step s applies DDIM step t = T - s.
struct ForwardTape {
    int steps = 0;
    int dim = 0;
    double eta = 0.0;
    std::vector<Eigen::VectorXd> states; // x_T .. x_0, size T+1
    std::vector<Eigen::VectorXd> eps;    // epsilon_pred per step, size T
    std::vector<double> a;               // sqrt(ab_{t-1}/ab_t)
    std::vector<double> b;               // epsilon coefficient
    std::vector<double> sigma;           // noise coefficient

    const Eigen::VectorXd& sample() const { return states.back(); }
};

double sigma_t(const NoiseSchedule& schedule, int t, double eta);

Eigen::VectorXd ddim_step(const SamplerConfig& config, const Eigen::VectorXd& x_t, int t,
                          const Eigen::VectorXd& z_t);

std::pair<Eigen::VectorXd, ForwardTape> run_sampler(const SamplerConfig& config,
                                                    const NoiseBundle& noise);

// Deterministic per-step noises that make the eta=1 sampler reproduce the
// eta=0 trajectory from the same xT.
NoiseBundle ode_equivalent_noise(const SamplerConfig& config, const Eigen::VectorXd& x_init);

// Pullback of a sample-space cotangent through the full sampling pass.
NoiseBundle sampler_vjp(const SamplerConfig& config, const ForwardTape& tape,
                        const Eigen::VectorXd& cotangent);

// Differentiable noise-to-sample mapping. The estimators in zo_grad are
// written against this so tests can substitute stub maps.
class NoiseToSampleMap {
public:
    virtual ~NoiseToSampleMap() = default;
    virtual int noise_dim() const = 0;
    virtual int sample_dim() const = 0;
    virtual Eigen::VectorXd forward(const Eigen::VectorXd& noise) const = 0;

    struct Taped {
        Eigen::VectorXd sample;
        std::function<Eigen::VectorXd(const Eigen::VectorXd&)> pullback;
    };
    virtual Taped forward_taped(const Eigen::VectorXd& noise) const = 0;
};

class SamplerMap final : public NoiseToSampleMap {
public:
    explicit SamplerMap(SamplerConfig config)
        : config_(std::make_shared<const SamplerConfig>(std::move(config))) {}

    int noise_dim() const override {
        return (config_->schedule.steps + 1) * config_->model.dim;
    }
    int sample_dim() const override { return config_->model.dim; }

    Eigen::VectorXd forward(const Eigen::VectorXd& noise) const override;
    Taped forward_taped(const Eigen::VectorXd& noise) const override;

    const SamplerConfig& config() const { return *config_; }

private:
    std::shared_ptr<const SamplerConfig> config_;
};

} // namespace dno
