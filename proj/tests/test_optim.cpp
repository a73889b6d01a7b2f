#include <doctest.h>

#include <cmath>
#include <vector>

#include "osmargin/optim.hpp"

using namespace osm;

TEST_CASE("cosine schedule: warmup ramp, peak, restart, and exact periodicity") {
    LrSchedule schedule;
    schedule.kind = LrSchedule::Kind::cosine_warm_restart;
    schedule.period_epochs = 100;
    schedule.warmup_epochs = 5;

    CHECK(lr_at(schedule, 0.01, 4) == doctest::Approx(0.01).epsilon(1e-15));  // peak at end of warmup
    CHECK(lr_at(schedule, 0.01, 0) == doctest::Approx(0.01 / 5.0).epsilon(1e-15));
    CHECK(lr_at(schedule, 0.01, 100) == lr_at(schedule, 0.01, 0));  // restart boundary
    for (int e = 0; e < 100; ++e) CHECK(lr_at(schedule, 0.01, e) == lr_at(schedule, 0.01, e + 100));

    // non-increasing after warmup within a cycle
    double prev = lr_at(schedule, 0.01, schedule.warmup_epochs);
    for (int e = schedule.warmup_epochs + 1; e < schedule.period_epochs; ++e) {
        const double lr = lr_at(schedule, 0.01, e);
        CHECK(lr <= prev);
        prev = lr;
    }
    CHECK(lr_at(schedule, 0.01, 99) == doctest::Approx(0.0).epsilon(1e-4));
}

TEST_CASE("cosine schedule respects a configured floor") {
    LrSchedule schedule;
    schedule.period_epochs = 10;
    schedule.warmup_epochs = 0;
    schedule.min_lr = 0.002;
    for (int e = 0; e < 10; ++e) CHECK(lr_at(schedule, 0.01, e) >= 0.002 - 1e-15);
    CHECK(lr_at(schedule, 0.01, 0) == doctest::Approx(0.01));
}

TEST_CASE("exponential schedule") {
    LrSchedule schedule;
    schedule.kind = LrSchedule::Kind::exponential_decay;
    schedule.decay_rate = 0.97;
    CHECK(lr_at(schedule, 0.5, 0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(lr_at(schedule, 0.5, 10) == doctest::Approx(0.5 * std::pow(0.97, 10)).epsilon(1e-12));
}

TEST_CASE("schedule validation") {
    LrSchedule bad;
    bad.warmup_epochs = 100;
    bad.period_epochs = 100;
    CHECK_THROWS_AS(bad.validate(), ContractViolation);
    LrSchedule bad_decay;
    bad_decay.kind = LrSchedule::Kind::exponential_decay;
    bad_decay.decay_rate = 0.0;
    CHECK_THROWS_AS(bad_decay.validate(), ContractViolation);
}

TEST_CASE("plain gradient step when momentum and decay are off") {
    std::vector<double> params{1.0, -2.0};
    std::vector<double> velocity{0.0, 0.0};
    const std::vector<double> grads{0.5, -0.25};
    SgdConfig config{0.0, 0.0};
    sgd_step(params, grads, velocity, config, 0.1);
    CHECK(params[0] == doctest::Approx(1.0 - 0.1 * 0.5).epsilon(1e-15));
    CHECK(params[1] == doctest::Approx(-2.0 + 0.1 * 0.25).epsilon(1e-15));

    const std::vector<double> zero{0.0, 0.0};
    std::vector<double> unchanged{3.0, 4.0};
    std::vector<double> v2{0.0, 0.0};
    sgd_step(unchanged, zero, v2, config, 0.1);
    CHECK(unchanged[0] == 3.0);
    CHECK(unchanged[1] == 4.0);
}

TEST_CASE("momentum accumulates: two steps with constant gradient") {
    // v1 = -g, v2 = -0.9g - g = -1.9g, total displacement -2.9g.
    std::vector<double> params{0.0};
    std::vector<double> velocity{0.0};
    const std::vector<double> grads{1.0};
    SgdConfig config{0.9, 0.0};
    sgd_step(params, grads, velocity, config, 1.0);
    CHECK(params[0] == doctest::Approx(-1.0).epsilon(1e-15));
    sgd_step(params, grads, velocity, config, 1.0);
    CHECK(params[0] == doctest::Approx(-2.9).epsilon(1e-15));
    CHECK(velocity[0] == doctest::Approx(-1.9).epsilon(1e-15));
}

TEST_CASE("sgd_step rejects shape mismatches") {
    std::vector<double> params{0.0};
    std::vector<double> velocity{0.0, 0.0};
    const std::vector<double> grads{1.0};
    CHECK_THROWS_AS(sgd_step(params, grads, velocity, SgdConfig{}, 0.1), ContractViolation);
}

TEST_CASE("weight decay equals an explicit L2 term in the loss") {
    // d/dp [L + wd/2 p^2] = g + wd p, which is exactly the coupled form.
    const double wd = 0.01;
    std::vector<double> a{2.0, -3.0};
    std::vector<double> va{0.0, 0.0};
    const std::vector<double> grads{0.5, 1.5};
    sgd_step(a, grads, va, SgdConfig{0.9, wd}, 0.1);

    std::vector<double> b{2.0, -3.0};
    std::vector<double> vb{0.0, 0.0};
    std::vector<double> augmented{grads[0] + wd * b[0], grads[1] + wd * b[1]};
    sgd_step(b, augmented, vb, SgdConfig{0.9, 0.0}, 0.1);
    CHECK(std::abs(a[0] - b[0]) <= 1e-12);
    CHECK(std::abs(a[1] - b[1]) <= 1e-12);
}

TEST_CASE("sgd monotonically descends a parabola") {
    // loss = 0.5 p^2, gradient p.
    std::vector<double> params{5.0};
    std::vector<double> velocity{0.0};
    const SgdConfig config{0.0, 0.0};
    double prev_loss = 0.5 * params[0] * params[0];
    for (int step = 0; step < 100; ++step) {
        const std::vector<double> grads{params[0]};
        sgd_step(params, grads, velocity, config, 0.1);
        const double loss = 0.5 * params[0] * params[0];
        CHECK(loss < prev_loss);
        prev_loss = loss;
    }
    CHECK(prev_loss < 1e-6);
}

TEST_CASE("adam first step moves by roughly lr in the gradient direction") {
    OptimizerConfig config;
    config.kind = OptimizerConfig::Kind::adam;
    config.initial_lr = 0.001;
    Optimizer optimizer(config, 2);
    std::vector<double> params{1.0, -1.0};
    const std::vector<double> grads{0.3, -0.7};
    optimizer.step(params, grads, config.initial_lr);
    CHECK(params[0] == doctest::Approx(1.0 - 0.001).epsilon(1e-4));
    CHECK(params[1] == doctest::Approx(-1.0 + 0.001).epsilon(1e-4));
}

TEST_CASE("adam converges on a parabola") {
    OptimizerConfig config;
    config.kind = OptimizerConfig::Kind::adam;
    Optimizer optimizer(config, 1);
    std::vector<double> params{3.0};
    for (int step = 0; step < 3000; ++step) {
        const std::vector<double> grads{params[0]};
        optimizer.step(params, grads, 0.01);
    }
    CHECK(std::abs(params[0]) < 1e-3);
}
