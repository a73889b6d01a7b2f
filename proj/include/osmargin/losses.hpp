#ifndef OSMARGIN_LOSSES_HPP
#define OSMARGIN_LOSSES_HPP

#include <span>
#include <vector>

#include "osmargin/error.hpp"

namespace osm {

// Hyperparameters of the one-sided margin loss family. The margin band for
// the true class is [0, lambda_min]; every other class score is pushed beyond
// lambda_max; alpha weighs the penalty for a negative true-class score and
// lambda weighs the off-class terms.
struct HyperParams {
    double alpha = 0.1;
    double lambda = 1.0;
    double lambda_min = 100.0;
    double lambda_max = 600.0;

    // Enforces lambda_max > lambda_min >= 0, lambda > 0, alpha >= 0.
    void validate() const;
};

// --- One-sided margin losses -------------------------------------------------

// Binary form on a single score: y*max(s - lambda_min, 0)
//   + lambda*max(lambda_max - s, 0)*(1 - y) + alpha*max(-s, 0)*y.
double hard_osm_binary(double s, int y, const HyperParams& hp);

// Multiclass form: max(s_y - lambda_min, 0) + alpha*max(-s_y, 0)
//   + lambda * sum_{j != y} max(lambda_max - s_j, 0).
// Zero exactly when 0 <= s_y <= lambda_min and s_j >= lambda_max for all j != y.
double hard_osm_multiclass(std::span<const double> scores, int y, const HyperParams& hp);

// Subgradient of the hard multiclass loss; 0 on every kink (the flat side).
std::vector<double> hard_osm_multiclass_grad(std::span<const double> scores, int y, const HyperParams& hp);

// Smooth surrogate with every max(.,0) replaced by log(1 + e^(.)); strictly
// positive for finite scores.
double soft_osm(std::span<const double> scores, int y, const HyperParams& hp);

// Exact gradient of soft_osm:
//   d/ds_y = sigma(s_y - lambda_min) - alpha*sigma(-s_y)
//   d/ds_j = -lambda*sigma(lambda_max - s_j)   for j != y.
std::vector<double> soft_osm_grad(std::span<const double> scores, int y, const HyperParams& hp);

// --- OSM probabilities -------------------------------------------------------

// Normalized log-probabilities over C classes plus a rejection class at index
// C. Unnormalized values are -soft_osm(s, k) per class and
// -lambda * sum_j softplus(lambda_max - s_j) for rejection; the log-sum-exp
// subtraction supplies the normalization constant.
std::vector<double> osm_log_probs(std::span<const double> scores, const HyperParams& hp);

// Pullback of a gradient on the C+1 log-probabilities to the C scores.
// With u the unnormalized values and p = softmax(u), rows of the Jacobian
// d u_m / d s_i differ from lambda*sigma(lambda_max - s_i) only on the
// diagonal, so the centered upstream h = g - p * sum(g) collapses the sum:
//   dL/ds_i = h_i * (alpha*sigma(-s_i) - sigma(s_i - lambda_min)
//                    - lambda*sigma(lambda_max - s_i)).
std::vector<double> osm_log_probs_backward(std::span<const double> scores, const HyperParams& hp,
                                           std::span<const double> upstream);

// --- Baseline losses ----------------------------------------------------------

// Softmax cross-entropy, -log softmax(logits)_y, with max subtraction.
double cross_entropy(std::span<const double> logits, int y);
std::vector<double> cross_entropy_grad(std::span<const double> logits, int y);

// Weston-Watkins hinge: sum_{j != y} max(0, margin + s_j - s_y).
double hinge_multiclass(std::span<const double> scores, int y, double margin);
std::vector<double> hinge_multiclass_grad(std::span<const double> scores, int y, double margin);

// Sigmoid binary cross-entropy on one score, y in {0,1}:
//   softplus(-s)*y + softplus(s)*(1-y); gradient sigma(s) - y.
double binary_cross_entropy(double s, int y);
double binary_cross_entropy_grad(double s, int y);

// --- Decision rules ------------------------------------------------------------

// OSM predicts the class whose score is minimal (low score = inside the
// positive band); ties go to the lowest index.
int predict_osm(std::span<const double> scores);

// Binary OSM decision at the midpoint between the margin planes.
int predict_osm_binary(double s, const HyperParams& hp);

// --- Shared helpers -------------------------------------------------------------

std::vector<double> log_softmax(std::span<const double> logits);
std::vector<double> log_softmax_backward(std::span<const double> logits, std::span<const double> upstream);

}  // namespace osm

#endif
