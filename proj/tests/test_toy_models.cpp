#include "dno/toy_models.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>

using namespace dno;
using namespace dno::test;

TEST_SUITE_BEGIN("toy_models");

TEST_CASE("linear base schedule matches the direct product") {
    const auto s = build_schedule(50, 1000, 1e-4, 0.02);
    REQUIRE(s.steps == 50);
    CHECK(s.alpha_bar[0] == 1.0);
    // Independent evaluation of the 1000-term product gives 4.0358e-5.
    CHECK(s.alpha_bar[50] == doctest::Approx(4.0358297653756754e-05).epsilon(1e-10));
    CHECK(s.timestep_indices.back() == 1000);
    for (int t = 1; t <= 50; ++t) CHECK(s.alpha_bar[t] < s.alpha_bar[t - 1]);
}

TEST_CASE("single-step schedule") {
    const auto s = build_schedule(1, 1, 0.5, 0.5);
    CHECK(s.alpha_bar[0] == 1.0);
    CHECK(s.alpha_bar[1] == doctest::Approx(0.5));
}

TEST_CASE("schedule rejects bad configuration") {
    CHECK_THROWS_AS(build_schedule(0, 1000, 1e-4, 0.02), std::invalid_argument);
    CHECK_THROWS_AS(build_schedule(50, 10, 1e-4, 0.02), std::invalid_argument);
    CHECK_THROWS_AS(build_schedule(50, 1000, 0.02, 1e-4), std::invalid_argument);
    CHECK_THROWS_AS(build_schedule(50, 1000, 0.0, 0.02), std::invalid_argument);
    CHECK_THROWS_AS(build_schedule(50, 1000, 1e-4, 1.0), std::invalid_argument);
}

TEST_CASE("marginal parameters") {
    const auto schedule = build_schedule(50, 1000, 1e-4, 0.02);

    SUBCASE("t = 0 leaves the mixture unchanged") {
        const auto ring = make_ring();
        const auto params = marginal_params(ring, schedule, 0);
        for (std::size_t j = 0; j < params.size(); ++j) {
            CHECK(params[j].mean == ring.components[j].mean);
            CHECK(params[j].variance == doctest::Approx(ring.components[j].variance));
        }
    }

    SUBCASE("unit-variance component is a fixed point") {
        const auto model = make_cluster();
        for (int t = 0; t <= 50; ++t)
            CHECK(marginal_params(model, schedule, t)[0].variance == doctest::Approx(1.0));
    }

    SUBCASE("direct formula at alpha_bar = 0.25") {
        // Single component mu=(2,0), var=0.01: mean_t=(1,0), var_t=0.7525.
        ClusterParams p;
        p.mean = Eigen::Vector2d(2.0, 0.0);
        p.variance = 0.01;
        const auto model = make_cluster(p);
        NoiseSchedule s;
        s.steps = 1;
        s.alpha_bar.resize(2);
        s.alpha_bar << 1.0, 0.25;
        const auto params = marginal_params(model, s, 1);
        CHECK(params[0].mean[0] == doctest::Approx(1.0));
        CHECK(params[0].mean[1] == doctest::Approx(0.0));
        CHECK(params[0].variance == doctest::Approx(0.7525));
    }

    SUBCASE("t out of range") {
        CHECK_THROWS_AS(marginal_params(make_ring(), schedule, 51), std::out_of_range);
        CHECK_THROWS_AS(marginal_params(make_ring(), schedule, -1), std::out_of_range);
    }
}

TEST_CASE("score of a standard normal cluster is -x at every t") {
    const auto schedule = build_schedule(20, 1000, 1e-4, 0.02);
    const auto model = make_cluster();
    Rng rng(1);
    for (int t : {0, 1, 10, 20}) {
        const Eigen::VectorXd x = rng.gaussian_vector(2);
        CHECK((score(model, schedule, x, t) + x).norm() < 1e-12);
    }
}

TEST_CASE("score is zero along a symmetry axis") {
    const auto schedule = build_schedule(10, 1000, 1e-4, 0.02);
    MixtureComponent a{0.5, Eigen::Vector2d(-1.0, 0.0), 0.2};
    MixtureComponent b{0.5, Eigen::Vector2d(1.0, 0.0), 0.2};
    const auto model = make_custom({a, b});
    Eigen::VectorXd x(2);
    x << 0.0, 0.7;
    for (int t : {0, 5, 10})
        CHECK(std::abs(score(model, schedule, x, t)[0]) < 1e-14);
}

TEST_CASE("score matches finite differences of the log density") {
    const auto schedule = build_schedule(50, 1000, 1e-4, 0.02);
    const auto ring = make_ring();
    Rng rng(7);
    for (int c = 0; c < 20; ++c) {
        const Eigen::VectorXd x = 1.5 * rng.gaussian_vector(2);
        const int t = c % (schedule.steps + 1);
        const Eigen::VectorXd analytic = score(ring, schedule, x, t);
        const Eigen::VectorXd fd = central_diff(
            [&](const Eigen::VectorXd& p) { return log_density(ring, schedule, p, t); }, x);
        CHECK(close_rel_abs(analytic, fd, 1e-6, 1e-9));
    }
}

TEST_CASE("epsilon prediction") {
    const auto schedule = build_schedule(50, 1000, 1e-4, 0.02);
    const auto model = make_cluster();
    Rng rng(3);
    const Eigen::VectorXd x = rng.gaussian_vector(2);

    SUBCASE("standard normal: eps = sqrt(1-ab)*x") {
        for (int t : {1, 25, 50}) {
            const Eigen::VectorXd expected = std::sqrt(1.0 - schedule.alpha_bar[t]) * x;
            CHECK((epsilon_pred(model, schedule, x, t) - expected).norm() < 1e-12);
        }
    }

    SUBCASE("definition composes bit-identically") {
        const auto ring = make_ring();
        for (int t : {1, 17, 50}) {
            const Eigen::VectorXd via_score =
                -std::sqrt(1.0 - schedule.alpha_bar[t]) * score(ring, schedule, x, t);
            CHECK(epsilon_pred(ring, schedule, x, t) == via_score);
        }
    }

    SUBCASE("t = 0 is rejected") {
        CHECK_THROWS_AS(epsilon_pred(model, schedule, x, 0), std::out_of_range);
    }
}

TEST_CASE("score_vjp") {
    const auto schedule = build_schedule(50, 1000, 1e-4, 0.02);

    SUBCASE("standard normal: H = -I") {
        const auto model = make_cluster();
        Rng rng(5);
        const Eigen::VectorXd x = rng.gaussian_vector(2);
        const Eigen::VectorXd cot = rng.gaussian_vector(2);
        CHECK((score_vjp(model, schedule, x, 10, cot) + cot).norm() < 1e-12);
    }

    SUBCASE("zero cotangent gives zero") {
        const auto ring = make_ring();
        const Eigen::VectorXd x = Eigen::Vector2d(0.3, -0.4);
        CHECK(score_vjp(ring, schedule, x, 5, Eigen::Vector2d::Zero()).norm() == 0.0);
    }

    SUBCASE("matches finite differences of the score") {
        const auto ring = make_ring();
        Rng rng(11);
        for (int c = 0; c < 20; ++c) {
            const Eigen::VectorXd x = 1.5 * rng.gaussian_vector(2);
            Eigen::VectorXd cot = rng.gaussian_vector(2);
            const int t = c % (schedule.steps + 1);
            const Eigen::VectorXd analytic = score_vjp(ring, schedule, x, t, cot);
            const Eigen::VectorXd fd = directional_diff(
                [&](const Eigen::VectorXd& p) { return score(ring, schedule, p, t).eval(); },
                x, cot);
            CHECK(close_rel_abs(analytic, fd, 1e-5, 1e-8));
        }
    }
}

TEST_CASE("model presets") {
    SUBCASE("ring parameterization") {
        const auto ring = make_ring();
        REQUIRE(ring.components.size() == 16);
        CHECK((ring.components[0].mean - Eigen::Vector2d(1.0, 0.0)).norm() < 1e-15);
        CHECK((ring.components[4].mean - Eigen::Vector2d(0.0, 1.0)).norm() < 1e-15);
    }

    SUBCASE("segment lies on the x axis") {
        const auto segment = make_segment();
        REQUIRE(segment.components.size() == 21);
        for (const auto& c : segment.components) CHECK(c.mean[1] == 0.0);
        CHECK(segment.components.front().mean[0] == doctest::Approx(-1.0));
        CHECK(segment.components.back().mean[0] == doctest::Approx(1.0));
    }

    SUBCASE("weights sum to one") {
        for (const char* kind : {"ring", "segment", "cluster"}) {
            const auto model = make_model(kind);
            double sum = 0.0;
            for (const auto& c : model.components) sum += c.weight;
            CHECK(sum == doctest::Approx(1.0).epsilon(1e-13));
        }
    }

    SUBCASE("unknown preset") {
        CHECK_THROWS_AS(make_model("donut"), std::invalid_argument);
    }
}

TEST_CASE("sample_data") {
    SUBCASE("deterministic given seed") {
        const auto ring = make_ring();
        const auto a = sample_data(ring, 50, 99);
        const auto b = sample_data(ring, 50, 99);
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
    }

    SUBCASE("tight cluster collapses to its mean") {
        ClusterParams p;
        p.mean = Eigen::Vector2d(0.5, -2.0);
        p.variance = 1e-30;
        const auto model = make_cluster(p);
        for (const auto& x : sample_data(model, 10, 1))
            CHECK((x - p.mean).norm() < 1e-12);
    }

    SUBCASE("ring empirical mean is near zero") {
        const auto ring = make_ring();
        const auto draws = sample_data(ring, 100000, 12345);
        Eigen::Vector2d mean = Eigen::Vector2d::Zero();
        for (const auto& x : draws) mean += x;
        mean /= static_cast<double>(draws.size());
        // Per-coordinate std is about sqrt(0.5)/sqrt(N); allow 3 SE.
        const double se = std::sqrt(0.51) / std::sqrt(100000.0);
        CHECK(std::abs(mean[0]) < 3 * se);
        CHECK(std::abs(mean[1]) < 3 * se);
    }
}

TEST_SUITE_END();
