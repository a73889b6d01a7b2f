#include "osmargin/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "osmargin/math_util.hpp"

namespace osm {

namespace {

void check_label(std::span<const double> scores, int y, const char* where) {
    if (scores.empty()) throw ContractViolation(std::string(where) + ": empty score vector");
    if (y < 0 || static_cast<size_t>(y) >= scores.size())
        throw ContractViolation(std::string(where) + ": label " + std::to_string(y) + " out of range [0, " +
                                std::to_string(scores.size()) + ")");
}

void check_binary_label(int y, const char* where) {
    if (y != 0 && y != 1) throw ContractViolation(std::string(where) + ": label must be 0 or 1");
}

}  // namespace

void HyperParams::validate() const {
    if (!(lambda_max > lambda_min) || !(lambda_min >= 0.0))
        throw ContractViolation("HyperParams: need lambda_max > lambda_min >= 0");
    if (!(lambda > 0.0)) throw ContractViolation("HyperParams: need lambda > 0");
    if (!(alpha >= 0.0)) throw ContractViolation("HyperParams: need alpha >= 0");
}

double hard_osm_binary(double s, int y, const HyperParams& hp) {
    check_binary_label(y, "hard_osm_binary");
    return y * std::max(s - hp.lambda_min, 0.0) + hp.lambda * std::max(hp.lambda_max - s, 0.0) * (1 - y) +
           hp.alpha * std::max(-s, 0.0) * y;
}

double hard_osm_multiclass(std::span<const double> scores, int y, const HyperParams& hp) {
    check_label(scores, y, "hard_osm_multiclass");
    const double sy = scores[y];
    double loss = std::max(sy - hp.lambda_min, 0.0) + hp.alpha * std::max(-sy, 0.0);
    for (size_t j = 0; j < scores.size(); ++j) {
        if (static_cast<int>(j) == y) continue;
        loss += hp.lambda * std::max(hp.lambda_max - scores[j], 0.0);
    }
    return loss;
}

std::vector<double> hard_osm_multiclass_grad(std::span<const double> scores, int y, const HyperParams& hp) {
    check_label(scores, y, "hard_osm_multiclass_grad");
    std::vector<double> grad(scores.size(), 0.0);
    const double sy = scores[y];
    grad[y] = (sy > hp.lambda_min ? 1.0 : 0.0) - hp.alpha * (sy < 0.0 ? 1.0 : 0.0);
    for (size_t j = 0; j < scores.size(); ++j) {
        if (static_cast<int>(j) == y) continue;
        grad[j] = scores[j] < hp.lambda_max ? -hp.lambda : 0.0;
    }
    return grad;
}

double soft_osm(std::span<const double> scores, int y, const HyperParams& hp) {
    check_label(scores, y, "soft_osm");
    const double sy = scores[y];
    double loss = stable_softplus(sy - hp.lambda_min) + hp.alpha * stable_softplus(-sy);
    for (size_t j = 0; j < scores.size(); ++j) {
        if (static_cast<int>(j) == y) continue;
        loss += hp.lambda * stable_softplus(hp.lambda_max - scores[j]);
    }
    return loss;
}

std::vector<double> soft_osm_grad(std::span<const double> scores, int y, const HyperParams& hp) {
    check_label(scores, y, "soft_osm_grad");
    std::vector<double> grad(scores.size());
    for (size_t j = 0; j < scores.size(); ++j) {
        if (static_cast<int>(j) == y) {
            grad[j] = logistic(scores[j] - hp.lambda_min) - hp.alpha * logistic(-scores[j]);
        } else {
            grad[j] = -hp.lambda * logistic(hp.lambda_max - scores[j]);
        }
    }
    return grad;
}

std::vector<double> osm_log_probs(std::span<const double> scores, const HyperParams& hp) {
    if (scores.empty()) throw ContractViolation("osm_log_probs: empty score vector");
    const int classes = static_cast<int>(scores.size());
    std::vector<double> unnorm(classes + 1);
    double rejection = 0.0;
    for (double s : scores) rejection += stable_softplus(hp.lambda_max - s);
    unnorm[classes] = -hp.lambda * rejection;
    for (int k = 0; k < classes; ++k) unnorm[k] = -soft_osm(scores, k, hp);
    const double lse = log_sum_exp(unnorm);
    for (double& u : unnorm) u -= lse;
    return unnorm;
}

std::vector<double> osm_log_probs_backward(std::span<const double> scores, const HyperParams& hp,
                                           std::span<const double> upstream) {
    if (upstream.size() != scores.size() + 1)
        throw ContractViolation("osm_log_probs_backward: upstream must have C+1 entries");
    const auto logp = osm_log_probs(scores, hp);
    double upstream_sum = 0.0;
    for (double g : upstream) upstream_sum += g;
    std::vector<double> grad(scores.size());
    for (size_t i = 0; i < scores.size(); ++i) {
        const double h = upstream[i] - std::exp(logp[i]) * upstream_sum;
        const double diag = hp.alpha * logistic(-scores[i]) - logistic(scores[i] - hp.lambda_min) -
                            hp.lambda * logistic(hp.lambda_max - scores[i]);
        grad[i] = h * diag;
    }
    return grad;
}

double cross_entropy(std::span<const double> logits, int y) {
    check_label(logits, y, "cross_entropy");
    return -log_softmax(logits)[y];
}

std::vector<double> cross_entropy_grad(std::span<const double> logits, int y) {
    check_label(logits, y, "cross_entropy_grad");
    auto grad = log_softmax(logits);
    for (double& g : grad) g = std::exp(g);
    grad[y] -= 1.0;
    return grad;
}

double hinge_multiclass(std::span<const double> scores, int y, double margin) {
    check_label(scores, y, "hinge_multiclass");
    if (!(margin > 0.0)) throw ContractViolation("hinge_multiclass: margin must be positive");
    double loss = 0.0;
    for (size_t j = 0; j < scores.size(); ++j) {
        if (static_cast<int>(j) == y) continue;
        loss += std::max(0.0, margin + scores[j] - scores[y]);
    }
    return loss;
}

std::vector<double> hinge_multiclass_grad(std::span<const double> scores, int y, double margin) {
    check_label(scores, y, "hinge_multiclass_grad");
    if (!(margin > 0.0)) throw ContractViolation("hinge_multiclass_grad: margin must be positive");
    std::vector<double> grad(scores.size(), 0.0);
    for (size_t j = 0; j < scores.size(); ++j) {
        if (static_cast<int>(j) == y) continue;
        if (margin + scores[j] - scores[y] > 0.0) {
            grad[j] += 1.0;
            grad[y] -= 1.0;
        }
    }
    return grad;
}

double binary_cross_entropy(double s, int y) {
    check_binary_label(y, "binary_cross_entropy");
    return stable_softplus(-s) * y + stable_softplus(s) * (1 - y);
}

double binary_cross_entropy_grad(double s, int y) {
    check_binary_label(y, "binary_cross_entropy_grad");
    return logistic(s) - y;
}

int predict_osm(std::span<const double> scores) {
    if (scores.empty()) throw ContractViolation("predict_osm: empty score vector");
    int best = 0;
    for (size_t j = 1; j < scores.size(); ++j) {
        if (scores[j] < scores[best]) best = static_cast<int>(j);
    }
    return best;
}

int predict_osm_binary(double s, const HyperParams& hp) {
    return s < 0.5 * (hp.lambda_min + hp.lambda_max) ? 1 : 0;
}

std::vector<double> log_softmax(std::span<const double> logits) {
    if (logits.empty()) throw ContractViolation("log_softmax: empty input");
    std::vector<double> out(logits.begin(), logits.end());
    const double lse = log_sum_exp(out);
    for (double& v : out) v -= lse;
    return out;
}

std::vector<double> log_softmax_backward(std::span<const double> logits, std::span<const double> upstream) {
    if (upstream.size() != logits.size())
        throw ContractViolation("log_softmax_backward: upstream size mismatch");
    const auto logp = log_softmax(logits);
    double upstream_sum = 0.0;
    for (double g : upstream) upstream_sum += g;
    std::vector<double> grad(logits.size());
    for (size_t j = 0; j < logits.size(); ++j) grad[j] = upstream[j] - std::exp(logp[j]) * upstream_sum;
    return grad;
}

}  // namespace osm
