#include "dno/rewards.hpp"

#include <cmath>
#include <numbers>

namespace dno {

namespace {

double param_or(const RewardParams& params, const std::string& key, double fallback) {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
}

void check_arity(const RewardSpec& spec, const Eigen::VectorXd& x) {
    if (x.size() != spec.arity)
        throw std::invalid_argument("reward '" + spec.name + "' expects dimension "
                                    + std::to_string(spec.arity));
}

// sin(4 pi x1) + sin(4 pi x2) - ((x1 - 1)^2 - x2^2) / 5. The second penalty
// term enters with the sign the source formula gives it; params["penalty_plus"]
// switches to the (x1-1)^2 + x2^2 variant.
RewardSpec make_example1(const RewardParams& params) {
    const double s = param_or(params, "penalty_plus", 0.0) != 0.0 ? 1.0 : -1.0;
    RewardSpec spec;
    spec.name = "example1";
    spec.arity = 2;
    spec.differentiable = true;
    spec.parameters = params;
    spec.value = [s](const Eigen::VectorXd& x) {
        constexpr double w = 4.0 * std::numbers::pi;
        return std::sin(w * x[0]) + std::sin(w * x[1])
               - ((x[0] - 1.0) * (x[0] - 1.0) + s * x[1] * x[1]) / 5.0;
    };
    spec.gradient = [s](const Eigen::VectorXd& x) {
        constexpr double w = 4.0 * std::numbers::pi;
        Eigen::VectorXd g(2);
        g[0] = w * std::cos(w * x[0]) - 2.0 * (x[0] - 1.0) / 5.0;
        g[1] = w * std::cos(w * x[1]) - s * 2.0 * x[1] / 5.0;
        return g;
    };
    return spec;
}

RewardSpec make_quad_ood(const RewardParams& params) {
    const double cx = param_or(params, "center_x", 1.4);
    const double cy = param_or(params, "center_y", 1.4);
    RewardSpec spec;
    spec.name = "quad_ood";
    spec.arity = 2;
    spec.differentiable = true;
    spec.parameters = params;
    spec.value = [cx, cy](const Eigen::VectorXd& x) {
        return -(x[0] - cx) * (x[0] - cx) - (x[1] - cy) * (x[1] - cy);
    };
    spec.gradient = [cx, cy](const Eigen::VectorXd& x) {
        Eigen::VectorXd g(2);
        g[0] = -2.0 * (x[0] - cx);
        g[1] = -2.0 * (x[1] - cy);
        return g;
    };
    return spec;
}

RewardSpec make_brightness(const RewardParams& params, double sign) {
    const int d = static_cast<int>(param_or(params, "d", 2.0));
    if (d < 1) throw std::invalid_argument("brightness: d must be positive");
    RewardSpec spec;
    spec.name = sign > 0 ? "brightness" : "darkness";
    spec.arity = d;
    spec.differentiable = true;
    spec.parameters = params;
    spec.value = [sign](const Eigen::VectorXd& x) { return sign * x.mean(); };
    spec.gradient = [sign, d](const Eigen::VectorXd&) {
        return Eigen::VectorXd::Constant(d, sign / d).eval();
    };
    return spec;
}

RewardSpec make_line_height(const RewardParams& params) {
    RewardSpec spec;
    spec.name = "line_height";
    spec.arity = 2;
    spec.differentiable = true;
    spec.parameters = params;
    spec.value = [](const Eigen::VectorXd& x) { return x[1]; };
    spec.gradient = [](const Eigen::VectorXd&) {
        Eigen::VectorXd g(2);
        g << 0.0, 1.0;
        return g;
    };
    return spec;
}

} // namespace

double eval_reward(const RewardSpec& spec, const Eigen::VectorXd& x) {
    check_arity(spec, x);
    return spec.value(x);
}

Eigen::VectorXd grad_reward(const RewardSpec& spec, const Eigen::VectorXd& x) {
    check_arity(spec, x);
    if (!spec.differentiable || !spec.gradient)
        throw GradientUnavailable("reward '" + spec.name + "' exposes no gradient");
    return spec.gradient(x);
}

RewardSpec hide_gradient(RewardSpec spec) {
    spec.differentiable = false;
    spec.gradient = nullptr;
    return spec;
}

RewardSpec make_reward(const std::string& name, const RewardParams& params) {
    RewardSpec spec;
    if (name == "example1") {
        spec = make_example1(params);
    } else if (name == "quad_ood") {
        spec = make_quad_ood(params);
    } else if (name == "brightness") {
        spec = make_brightness(params, 1.0);
    } else if (name == "darkness") {
        spec = make_brightness(params, -1.0);
    } else if (name == "line_height") {
        spec = make_line_height(params);
    } else {
        throw std::invalid_argument("unknown reward: " + name);
    }
    if (param_or(params, "hidden", 0.0) != 0.0) spec = hide_gradient(std::move(spec));
    return spec;
}

} // namespace dno
