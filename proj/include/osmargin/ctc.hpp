#ifndef OSMARGIN_CTC_HPP
#define OSMARGIN_CTC_HPP

#include <string>
#include <string_view>
#include <vector>

#include "osmargin/losses.hpp"
#include "osmargin/matrix.hpp"

namespace osm::ctc {

// Log-domain zero. A large negative sentinel rather than -inf so that
// differences of "impossible" entries stay finite and NaN-free; any value
// at or below kLogZero/2 is treated as log(0).
inline constexpr double kLogZero = -1e30;

double log_add(double a, double b);

// Targets are strings over the first K lowercase letters ('a' = class 0);
// the blank takes the last column, index K, matching the rejection class of
// osm_log_probs. K is always inferred as cols - 1 of the log-prob matrix.
inline constexpr int kMaxAlphabet = 26;

int symbol_index(char c, int alphabet_size);
char symbol_char(int index);

// Frames needed for any valid alignment: |target| plus one separating blank
// per adjacent duplicate pair.
int required_frames(std::string_view target);

struct CtcResult {
    double loss = 0.0;
    Matrix grad;  // d loss / d log_probs, same shape as the input
};

// Negative log-probability that a frame-label path drawn from log_probs
// collapses (remove adjacent repeats, then blanks) to target. Standard
// forward recursion over the blank-augmented target, entirely in log space.
// Throws InfeasibleTarget when T < required_frames(target).
double ctc_loss(const Matrix& log_probs, std::string_view target);

// Same, plus the exact gradient via the forward-backward identities.
CtcResult ctc_loss_with_grad(const Matrix& log_probs, std::string_view target);

// Exhaustive oracle: enumerates all (K+1)^T label sequences and sums the
// probability of those collapsing to target. Throws SizeLimitExceeded when
// (K+1)^T > 1e7.
double ctc_brute_force(const Matrix& log_probs, std::string_view target);

// Per-frame argmax (ties to the lowest index), collapse adjacent repeats,
// drop blanks.
std::string greedy_decode(const Matrix& log_probs);

// Fraction of exact full-string matches.
double ocr_accuracy(const std::vector<std::string>& predictions, const std::vector<std::string>& targets);

// Applies osm_log_probs row by row: T x K scores -> T x (K+1) log-probs with
// the rejection class as the blank.
Matrix osm_frame_log_probs(const Matrix& scores, const HyperParams& hp);

// Pullback of a T x (K+1) gradient on the log-probs to the T x K scores.
Matrix osm_frame_log_probs_backward(const Matrix& scores, const HyperParams& hp, const Matrix& upstream);

}  // namespace osm::ctc

#endif
