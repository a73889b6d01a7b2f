#include <doctest.h>

#include <cmath>

#include "osmargin/ctc.hpp"
#include "osmargin/gradcheck.hpp"
#include "osmargin/math_util.hpp"
#include "test_util.hpp"

using namespace osm;
using namespace osm::ctc;

namespace {

Matrix uniform_log_probs(int frames, int symbols) {
    return Matrix(frames, symbols, -std::log(static_cast<double>(symbols)));
}

Matrix random_log_probs(Rng& rng, int frames, int symbols) {
    Matrix out(frames, symbols);
    for (int t = 0; t < frames; ++t) {
        std::vector<double> w(symbols);
        double sum = 0.0;
        for (int k = 0; k < symbols; ++k) {
            w[k] = 1e-6 + rng.uniform();
            sum += w[k];
        }
        for (int k = 0; k < symbols; ++k) out(t, k) = std::log(w[k] / sum);
    }
    return out;
}

std::string random_target(Rng& rng, int frames, int alphabet) {
    while (true) {
        const int len = static_cast<int>(rng.below(static_cast<uint64_t>(frames) + 1));
        std::string target;
        for (int i = 0; i < len; ++i) target.push_back(symbol_char(static_cast<int>(rng.below(alphabet))));
        if (required_frames(target) <= frames) return target;
    }
}

}  // namespace

TEST_CASE("required_frames counts duplicate separators") {
    CHECK(required_frames("") == 0);
    CHECK(required_frames("abc") == 3);
    CHECK(required_frames("aa") == 3);
    CHECK(required_frames("aabb") == 6);
}

TEST_CASE("single-frame target is the plain log probability") {
    Matrix log_probs(1, 3);
    log_probs(0, 0) = std::log(0.6);  // 'a'
    log_probs(0, 1) = std::log(0.3);  // 'b'
    log_probs(0, 2) = std::log(0.1);  // blank
    CHECK(ctc_loss(log_probs, "a") == doctest::Approx(-std::log(0.6)).epsilon(1e-12));
}

TEST_CASE("two uniform frames over {a,b,blank}: paths aa, a-, -a") {
    const Matrix log_probs = uniform_log_probs(2, 3);
    CHECK(ctc_loss(log_probs, "a") == doctest::Approx(std::log(3.0)).epsilon(1e-12));
}

TEST_CASE("infeasible targets raise a dedicated error") {
    const Matrix log_probs = uniform_log_probs(1, 3);
    CHECK_THROWS_AS(ctc_loss(log_probs, "aa"), InfeasibleTarget);
    CHECK_THROWS_AS(ctc_loss_with_grad(log_probs, "ab"), InfeasibleTarget);
    CHECK_THROWS_AS(ctc_brute_force(log_probs, "aa"), InfeasibleTarget);
}

TEST_CASE("empty target sums the all-blank path") {
    Matrix log_probs(3, 3, std::log(0.05));
    for (int t = 0; t < 3; ++t) log_probs(t, 2) = std::log(0.9);
    CHECK(ctc_loss(log_probs, "") == doctest::Approx(-3.0 * std::log(0.9)).epsilon(1e-12));
}

TEST_CASE("forward recursion agrees with brute-force enumeration") {
    Rng rng(20240601);
    for (int i = 0; i < 200; ++i) {
        const int frames = 1 + static_cast<int>(rng.below(6));
        const int alphabet = 2 + static_cast<int>(rng.below(2));
        const Matrix log_probs = random_log_probs(rng, frames, alphabet + 1);
        const std::string target = random_target(rng, frames, alphabet);
        const double dp = ctc_loss(log_probs, target);
        const double brute = ctc_brute_force(log_probs, target);
        CHECK(dp == doctest::Approx(brute).epsilon(1e-9));
    }
}

TEST_CASE("brute force rejects oversized search spaces without running them") {
    const Matrix log_probs = uniform_log_probs(13, 4);  // 4^13 > 1e7
    CHECK_THROWS_AS(ctc_brute_force(log_probs, "a"), SizeLimitExceeded);
}

TEST_CASE("single feasible path instances match the direct product") {
    // Deterministic frames: 'a' then blank then 'b'; only path for "ab" with
    // per-frame certainty ~1 on that path.
    Matrix log_probs(3, 3, std::log(1e-9));
    log_probs(0, 0) = std::log(1.0 - 2e-9);
    log_probs(1, 2) = std::log(1.0 - 2e-9);
    log_probs(2, 1) = std::log(1.0 - 2e-9);
    const double direct = -(log_probs(0, 0) + log_probs(1, 2) + log_probs(2, 1));
    // Paths a,-,b / a,a,b / a,b,b all collapse to "ab"; the dominant one is a,-,b.
    CHECK(ctc_loss(log_probs, "ab") == doctest::Approx(direct).epsilon(1e-6));
    CHECK(ctc_loss(log_probs, "ab") == doctest::Approx(ctc_brute_force(log_probs, "ab")).epsilon(1e-12));
}

TEST_CASE("ctc gradient matches finite differences on the log-prob matrix") {
    Rng rng(31415);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        const int frames = 2 + static_cast<int>(rng.below(4));
        const int alphabet = 2 + static_cast<int>(rng.below(2));
        Matrix log_probs = random_log_probs(rng, frames, alphabet + 1);
        const std::string target = random_target(rng, frames, alphabet);
        const auto result = ctc_loss_with_grad(log_probs, target);
        CHECK(result.loss == doctest::Approx(ctc_loss(log_probs, target)).epsilon(1e-12));
        const auto f = [&](std::span<const double>) { return ctc_loss(log_probs, target); };
        worst = std::max(worst, fd_max_error(f, log_probs.flat(), result.grad.flat(), 1e-4));
    }
    CHECK(worst <= 1e-5);
}

TEST_CASE("appending a near-certain blank frame shifts the loss by its log probability") {
    Rng rng(777);
    for (int i = 0; i < 50; ++i) {
        const int frames = 2 + static_cast<int>(rng.below(3));
        const int alphabet = 2;
        const Matrix log_probs = random_log_probs(rng, frames, alphabet + 1);
        const std::string target = random_target(rng, frames, alphabet);

        Matrix extended(frames + 1, alphabet + 1);
        for (int t = 0; t < frames; ++t)
            for (int k = 0; k <= alphabet; ++k) extended(t, k) = log_probs(t, k);
        const double eps = 1e-9;
        extended(frames, 0) = std::log(eps);
        extended(frames, 1) = std::log(eps);
        extended(frames, 2) = std::log(1.0 - 2.0 * eps);

        const double before = ctc_loss(log_probs, target);
        const double after = ctc_loss(extended, target);
        CHECK(after == doctest::Approx(before - extended(frames, 2)).epsilon(1e-5));
        CHECK(after == doctest::Approx(ctc_brute_force(extended, target)).epsilon(1e-9));
    }
}

TEST_CASE("greedy decoding collapses repeats and drops blanks") {
    // frame argmaxes: a a blank b b  -> "ab"
    Matrix log_probs(5, 3, std::log(0.1));
    log_probs(0, 0) = std::log(0.8);
    log_probs(1, 0) = std::log(0.8);
    log_probs(2, 2) = std::log(0.8);
    log_probs(3, 1) = std::log(0.8);
    log_probs(4, 1) = std::log(0.8);
    CHECK(greedy_decode(log_probs) == "ab");

    Matrix blanks(4, 3, std::log(0.2));
    for (int t = 0; t < 4; ++t) blanks(t, 2) = std::log(0.6);
    CHECK(greedy_decode(blanks) == "");

    // a blank a -> "aa"
    Matrix separated(3, 3, std::log(0.1));
    separated(0, 0) = std::log(0.8);
    separated(1, 2) = std::log(0.8);
    separated(2, 0) = std::log(0.8);
    CHECK(greedy_decode(separated) == "aa");

    // ties resolve to the lowest index
    const Matrix tied(2, 3, std::log(1.0 / 3.0));
    CHECK(greedy_decode(tied) == "a");
}

TEST_CASE("ocr accuracy") {
    CHECK(ocr_accuracy({"ab", "cd", "ee"}, {"ab", "cd", "ef"}) == doctest::Approx(2.0 / 3.0).epsilon(1e-6));
    CHECK(ocr_accuracy({"x"}, {"x"}) == 1.0);
    CHECK_THROWS_AS(ocr_accuracy({}, {}), ContractViolation);
    CHECK_THROWS_AS(ocr_accuracy({"a"}, {"a", "b"}), ContractViolation);
}

TEST_CASE("osm frame log probs: rows normalize and match a direct oracle") {
    const HyperParams hp;
    Matrix scores(2, 2);
    scores(0, 0) = 600.0;
    scores(0, 1) = 600.0;
    scores(1, 0) = 0.0;
    scores(1, 1) = 300.0;
    const Matrix logp = osm_frame_log_probs(scores, hp);
    CHECK(logp.rows() == 2);
    CHECK(logp.cols() == 3);
    for (int t = 0; t < 2; ++t) {
        double sum = 0.0;
        for (int k = 0; k < 3; ++k) sum += std::exp(logp(t, k));
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
    // Oracle for the s = [600, 600] frame, direct term evaluation:
    // class k: -(sp(500) + 0.1 sp(-600) + sp(0)); rejection: -(sp(0) + sp(0)).
    const double u_class = -(stable_softplus(500.0) + 0.1 * stable_softplus(-600.0) + stable_softplus(0.0));
    const double u_rej = -2.0 * stable_softplus(0.0);
    const std::vector<double> unnorm{u_class, u_class, u_rej};
    const double lse = log_sum_exp(unnorm);
    for (int k = 0; k < 3; ++k) CHECK(logp(0, k) == doctest::Approx(unnorm[k] - lse).epsilon(1e-9));
    // At scores on the outer plane, the rejection class dominates the frame.
    CHECK(std::exp(logp(0, 2)) > 0.99);

    // identical scores -> equal non-blank probabilities
    CHECK(logp(0, 0) == doctest::Approx(logp(0, 1)).epsilon(1e-12));
}

TEST_CASE("osm frame backward agrees with finite differences") {
    const HyperParams hp;
    Rng rng(8086);
    Matrix scores(3, 3);
    for (double& v : scores.flat()) v = 300.0 * rng.gaussian();
    Matrix upstream(3, 4);
    for (double& v : upstream.flat()) v = rng.gaussian();
    const Matrix grad = osm_frame_log_probs_backward(scores, hp, upstream);
    const auto f = [&](std::span<const double>) {
        const Matrix logp = osm_frame_log_probs(scores, hp);
        double acc = 0.0;
        for (int t = 0; t < logp.rows(); ++t)
            for (int k = 0; k < logp.cols(); ++k) acc += upstream(t, k) * logp(t, k);
        return acc;
    };
    // f reads `scores`, so perturb that same storage
    CHECK(fd_max_error(f, scores.flat(), grad.flat(), 1e-4) <= 1e-6);
}
