#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "osmargin/gradcheck.hpp"
#include "osmargin/losses.hpp"
#include "osmargin/model.hpp"
#include "test_util.hpp"

using namespace osm;
using test::Mat2;

TEST_CASE("forward: bias-only and identity maps") {
    Model zero = Model::linear(2, 3);
    auto bias = zero.out_bias();
    bias[0] = 1.0;
    bias[1] = -2.0;
    bias[2] = 0.5;
    const std::vector<double> x{3.0, -1.0};
    const auto scores = zero.forward(x);
    CHECK(scores[0] == 1.0);
    CHECK(scores[1] == -2.0);
    CHECK(scores[2] == 0.5);

    Model identity = Model::linear(2, 2);
    auto w = identity.out_weights();
    w[0] = 1.0;  // W = I
    w[3] = 1.0;
    const auto id_scores = identity.forward(x);
    CHECK(id_scores[0] == 3.0);
    CHECK(id_scores[1] == -1.0);
}

TEST_CASE("mlp with all-negative hidden preactivations yields the output bias") {
    Model model = Model::mlp(2, 4, 2);
    auto w1 = model.hidden_weights();
    auto b1 = model.hidden_bias();
    for (auto& v : w1) v = 0.0;
    for (auto& v : b1) v = -1.0;  // relu kills the hidden layer
    auto b2 = model.out_bias();
    b2[0] = 0.25;
    b2[1] = -0.75;
    const std::vector<double> x{1.0, 2.0};
    const auto scores = model.forward(x);
    CHECK(scores[0] == 0.25);
    CHECK(scores[1] == -0.75);
}

TEST_CASE("forward rejects dimension mismatches") {
    Model model = Model::linear(3, 2);
    const std::vector<double> short_x{1.0, 2.0};
    const std::vector<double> good_x{1.0, 2.0, 3.0};
    const std::vector<double> upstream{1.0, 0.0};
    const std::vector<double> short_upstream{1.0};
    CHECK_THROWS_AS(model.forward(short_x), ContractViolation);
    std::vector<double> grads(model.param_count(), 0.0);
    CHECK_THROWS_AS(model.backward(short_x, upstream, grads), ContractViolation);
    CHECK_THROWS_AS(model.backward(good_x, short_upstream, grads), ContractViolation);
}

TEST_CASE("linear backward closed form: outer product and bias copy") {
    Model model = Model::linear(2, 2);
    model.init(9);
    const std::vector<double> x{1.5, -2.0};
    const std::vector<double> upstream{0.3, -0.7};
    std::vector<double> grads(model.param_count(), 0.0);
    model.backward(x, upstream, grads);
    CHECK(grads[0] == doctest::Approx(0.3 * 1.5));
    CHECK(grads[1] == doctest::Approx(0.3 * -2.0));
    CHECK(grads[2] == doctest::Approx(-0.7 * 1.5));
    CHECK(grads[3] == doctest::Approx(-0.7 * -2.0));
    CHECK(grads[4] == doctest::Approx(0.3));
    CHECK(grads[5] == doctest::Approx(-0.7));
}

TEST_CASE("zero upstream produces zero gradients") {
    Model model = Model::mlp(3, 5, 2);
    model.init(11);
    std::vector<double> grads(model.param_count(), 0.0);
    const std::vector<double> x{0.1, 0.2, 0.3};
    const std::vector<double> upstream{0.0, 0.0};
    model.backward(x, upstream, grads);
    for (double g : grads) CHECK(g == 0.0);
}

TEST_CASE("init: determinism, seed sensitivity, He scale") {
    CHECK(he_std(2) == doctest::Approx(1.0));
    Model a = Model::mlp(4, 8, 3);
    Model b = Model::mlp(4, 8, 3);
    a.init(123);
    b.init(123);
    CHECK(a == b);
    b.init(124);
    CHECK(a != b);
    // biases zero after init
    Model c = Model::mlp(4, 8, 3);
    c.init(5);
    for (double v : c.hidden_bias()) CHECK(v == 0.0);
    for (double v : c.out_bias()) CHECK(v == 0.0);
}

TEST_CASE("composite loss gradients through both model kinds match finite differences") {
    Rng rng(1618);
    const HyperParams hp;
    for (int trial = 0; trial < 50; ++trial) {
        const bool mlp = trial % 2 == 0;
        Model model = mlp ? Model::mlp(3, 4, 3) : Model::linear(3, 3);
        model.init(rng.next());
        const auto x = test::random_scores(rng, 3, 1.0);
        const int label = static_cast<int>(rng.below(3));
        const int which = trial % 3;

        const auto scores = model.forward(x);
        std::vector<double> upstream;
        if (which == 0) upstream = soft_osm_grad(scores, label, hp);
        if (which == 1) upstream = cross_entropy_grad(scores, label);
        if (which == 2) {
            bool near_kink = false;
            for (int j = 0; j < 3; ++j)
                if (j != label && std::abs(1.0 + scores[j] - scores[label]) < 1e-2) near_kink = true;
            if (near_kink) continue;
            upstream = hinge_multiclass_grad(scores, label, 1.0);
        }
        std::vector<double> grads(model.param_count(), 0.0);
        model.backward(x, upstream, grads);

        Model probe = model;
        const auto f = [&](std::span<const double>) {
            const auto s = probe.forward(x);
            if (which == 0) return soft_osm(s, label, hp);
            if (which == 1) return cross_entropy(s, label);
            return hinge_multiclass(s, label, 1.0);
        };
        CHECK(fd_max_error(f, probe.params(), grads, 1e-4) <= 1e-6);
    }
}

TEST_CASE("input gradient agrees with finite differences") {
    Rng rng(2718);
    Model model = Model::mlp(4, 6, 3);
    model.init(rng.next());
    auto x = test::random_scores(rng, 4, 1.0);
    const std::vector<double> upstream{0.2, -0.4, 0.9};
    std::vector<double> grads(model.param_count(), 0.0);
    std::vector<double> dx(4, 0.0);
    model.backward(x, upstream, grads, dx);
    const auto f = [&](std::span<const double> v) {
        const auto s = model.forward(v);
        return upstream[0] * s[0] + upstream[1] * s[1] + upstream[2] * s[2];
    };
    CHECK(fd_max_error(f, x, dx, 1e-5) <= 1e-6);
}

TEST_CASE("linear scale equivariance of forward") {
    Rng rng(555);
    const Mat2 a{1.4, -0.6, 0.2, 2.2};
    const Mat2 inv = a.inverse();
    Model model = Model::linear(2, 4);
    model.init(rng.next());
    Model transformed = model;
    auto w = transformed.out_weights();
    for (int c = 0; c < 4; ++c) {
        const double w0 = w[2 * c];
        const double w1 = w[2 * c + 1];
        w[2 * c] = w0 * inv.a + w1 * inv.c;
        w[2 * c + 1] = w0 * inv.b + w1 * inv.d;
    }
    for (int i = 0; i < 20; ++i) {
        std::vector<double> x{rng.gaussian() * 3.0, rng.gaussian() * 3.0};
        std::vector<double> ax = x;
        a.apply(ax[0], ax[1]);
        const auto s = model.forward(x);
        const auto st = transformed.forward(ax);
        for (int c = 0; c < 4; ++c) CHECK(st[c] == doctest::Approx(s[c]).epsilon(1e-9));
    }
}

TEST_CASE("checkpoint round trip is lossless") {
    namespace fs = std::filesystem;
    const fs::path path = fs::temp_directory_path() / "osmargin_test_model.ckpt";
    Model model = Model::mlp(3, 7, 4);
    model.init(20240607);
    model.save(path.string());
    const Model loaded = Model::load(path.string());
    CHECK(loaded == model);

    Model linear = Model::linear(5, 2);
    linear.init(99);
    linear.save(path.string());
    CHECK(Model::load(path.string()) == linear);
    fs::remove(path);

    CHECK_THROWS_AS(Model::load("/nonexistent/model.ckpt"), ParseError);
}
