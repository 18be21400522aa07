#include "dno/rewards.hpp"

#include "support.hpp"

#include <doctest.h>

using namespace dno;
using namespace dno::test;

TEST_SUITE_BEGIN("rewards");

TEST_CASE("built-in values") {
    SUBCASE("quad_ood peaks at its center") {
        const auto spec = make_reward("quad_ood");
        CHECK(eval_reward(spec, Eigen::Vector2d(1.4, 1.4)) == 0.0);
        CHECK(eval_reward(spec, Eigen::Vector2d(0.0, 0.0)) == doctest::Approx(-3.92));
    }

    SUBCASE("example1 at (0.25, 0.25)") {
        const auto spec = make_reward("example1");
        // 0 + 0 - (0.5625 - 0.0625)/5
        CHECK(eval_reward(spec, Eigen::Vector2d(0.25, 0.25)) == doctest::Approx(-0.1));
    }

    SUBCASE("brightness is the coordinate mean; darkness its negation") {
        CHECK(eval_reward(make_reward("brightness"), Eigen::Vector2d(1.0, 3.0)) == 2.0);
        CHECK(eval_reward(make_reward("darkness"), Eigen::Vector2d(1.0, 3.0)) == -2.0);
    }

    SUBCASE("line_height reads the second coordinate") {
        CHECK(eval_reward(make_reward("line_height"), Eigen::Vector2d(5.0, -0.25)) == -0.25);
    }

    SUBCASE("dimension mismatch") {
        CHECK_THROWS_AS(eval_reward(make_reward("example1"), Eigen::VectorXd::Zero(3)),
                        std::invalid_argument);
    }
}

TEST_CASE("analytic gradients") {
    SUBCASE("line_height gradient is (0, 1)") {
        const auto g = grad_reward(make_reward("line_height"), Eigen::Vector2d(2.0, 2.0));
        CHECK(g[0] == 0.0);
        CHECK(g[1] == 1.0);
    }

    SUBCASE("quad_ood is stationary at its center") {
        CHECK(grad_reward(make_reward("quad_ood"), Eigen::Vector2d(1.4, 1.4)).norm() == 0.0);
    }

    SUBCASE("every differentiable built-in matches finite differences") {
        Rng rng(23);
        for (const char* name : {"example1", "quad_ood", "brightness", "darkness",
                                 "line_height"}) {
            const auto spec = make_reward(name);
            for (int c = 0; c < 100; ++c) {
                const Eigen::VectorXd x = 2.0 * rng.gaussian_vector(spec.arity);
                const Eigen::VectorXd fd = central_diff(
                    [&](const Eigen::VectorXd& p) { return eval_reward(spec, p); }, x);
                CHECK(close_rel_abs(grad_reward(spec, x), fd, 1e-6, 1e-9));
            }
        }
    }

    SUBCASE("penalty_plus variant flips the x2 penalty sign") {
        const auto literal = make_reward("example1");
        const auto variant = make_reward("example1", {{"penalty_plus", 1.0}});
        const Eigen::Vector2d x(0.25, 0.25);
        CHECK(eval_reward(variant, x) == doctest::Approx(-0.125));
        CHECK(grad_reward(literal, x)[1] != grad_reward(variant, x)[1]);
    }
}

TEST_CASE("gradient-hidden wrapper") {
    const auto plain = make_reward("example1");
    const auto hidden = make_reward("example1", {{"hidden", 1.0}});

    SUBCASE("grad_reward throws a capability error") {
        CHECK_THROWS_AS(grad_reward(hidden, Eigen::Vector2d(0.1, 0.2)), GradientUnavailable);
        CHECK_FALSE(hidden.differentiable);
    }

    SUBCASE("eval values stay bit-identical") {
        Rng rng(2);
        for (int c = 0; c < 50; ++c) {
            const Eigen::VectorXd x = 3.0 * rng.gaussian_vector(2);
            CHECK(eval_reward(plain, x) == eval_reward(hidden, x));
        }
    }
}

TEST_CASE("unknown reward name") {
    CHECK_THROWS_AS(make_reward("sharpness"), std::invalid_argument);
}

TEST_SUITE_END();
