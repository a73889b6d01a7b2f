#include "osmargin/ctc.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace osm::ctc {

namespace {

constexpr double kLogZeroThreshold = kLogZero * 0.5;

bool is_log_zero(double x) { return x <= kLogZeroThreshold; }

// States of the blank-augmented target: even indices are blanks, odd index s
// is target character s/2. Total 2*|target|+1 states.
struct Augmented {
    std::vector<int> labels;  // per state: symbol index, blank = alphabet_size

    Augmented(std::string_view target, int alphabet_size) {
        labels.reserve(2 * target.size() + 1);
        labels.push_back(alphabet_size);
        for (char c : target) {
            labels.push_back(symbol_index(c, alphabet_size));
            labels.push_back(alphabet_size);
        }
    }

    int size() const { return static_cast<int>(labels.size()); }

    // A skip from s-2 to s is allowed only into a label state whose symbol
    // differs from the one two states back.
    bool skip_allowed(int s) const { return s >= 2 && (s & 1) && labels[s] != labels[s - 2]; }
};

void check_feasible(const Matrix& log_probs, std::string_view target) {
    if (log_probs.rows() < 1 || log_probs.cols() < 2)
        throw ContractViolation("ctc: log_probs must be T x (K+1) with T >= 1, K >= 1");
    const int needed = required_frames(target);
    if (log_probs.rows() < needed)
        throw InfeasibleTarget("ctc: target '" + std::string(target) + "' needs at least " + std::to_string(needed) +
                               " frames, got " + std::to_string(log_probs.rows()));
}

Matrix forward_alphas(const Matrix& log_probs, const Augmented& aug) {
    const int frames = log_probs.rows();
    const int states = aug.size();
    Matrix alpha(frames, states, kLogZero);
    alpha(0, 0) = log_probs(0, aug.labels[0]);
    if (states > 1) alpha(0, 1) = log_probs(0, aug.labels[1]);
    for (int t = 1; t < frames; ++t) {
        for (int s = 0; s < states; ++s) {
            double acc = alpha(t - 1, s);
            if (s >= 1) acc = log_add(acc, alpha(t - 1, s - 1));
            if (aug.skip_allowed(s)) acc = log_add(acc, alpha(t - 1, s - 2));
            if (is_log_zero(acc)) continue;
            alpha(t, s) = acc + log_probs(t, aug.labels[s]);
        }
    }
    return alpha;
}

}  // namespace

double log_add(double a, double b) {
    if (is_log_zero(a)) return b;
    if (is_log_zero(b)) return a;
    const double m = std::max(a, b);
    return m + std::log1p(std::exp(std::min(a, b) - m));
}

int symbol_index(char c, int alphabet_size) {
    const int idx = c - 'a';
    if (idx < 0 || idx >= alphabet_size)
        throw ContractViolation(std::string("ctc: character '") + c + "' outside alphabet of size " +
                                std::to_string(alphabet_size));
    return idx;
}

char symbol_char(int index) {
    if (index < 0 || index >= kMaxAlphabet) throw ContractViolation("ctc: symbol index out of range");
    return static_cast<char>('a' + index);
}

int required_frames(std::string_view target) {
    int needed = static_cast<int>(target.size());
    for (size_t i = 1; i < target.size(); ++i)
        if (target[i] == target[i - 1]) ++needed;
    return needed;
}

double ctc_loss(const Matrix& log_probs, std::string_view target) {
    check_feasible(log_probs, target);
    const Augmented aug(target, log_probs.cols() - 1);
    const Matrix alpha = forward_alphas(log_probs, aug);
    const int last = log_probs.rows() - 1;
    double total = alpha(last, aug.size() - 1);
    if (aug.size() > 1) total = log_add(total, alpha(last, aug.size() - 2));
    return -total;
}

CtcResult ctc_loss_with_grad(const Matrix& log_probs, std::string_view target) {
    check_feasible(log_probs, target);
    const int frames = log_probs.rows();
    const int symbols = log_probs.cols();
    const Augmented aug(target, symbols - 1);
    const int states = aug.size();

    const Matrix alpha = forward_alphas(log_probs, aug);
    double log_total = alpha(frames - 1, states - 1);
    if (states > 1) log_total = log_add(log_total, alpha(frames - 1, states - 2));

    // beta(t, s): log-probability of completing the target from state s after
    // the emission at frame t, so sum_s alpha(t,s) + beta(t,s) == log_total
    // at every t.
    Matrix beta(frames, states, kLogZero);
    beta(frames - 1, states - 1) = 0.0;
    if (states > 1) beta(frames - 1, states - 2) = 0.0;
    for (int t = frames - 2; t >= 0; --t) {
        for (int s = 0; s < states; ++s) {
            double acc = beta(t + 1, s) + log_probs(t + 1, aug.labels[s]);
            if (s + 1 < states) acc = log_add(acc, beta(t + 1, s + 1) + log_probs(t + 1, aug.labels[s + 1]));
            if (s + 2 < states && aug.skip_allowed(s + 2))
                acc = log_add(acc, beta(t + 1, s + 2) + log_probs(t + 1, aug.labels[s + 2]));
            beta(t, s) = acc;
        }
    }

    // d loss / d log p_t(k) = -sum_{s: label(s)=k} exp(alpha + beta - log_total).
    CtcResult result;
    result.loss = -log_total;
    result.grad = Matrix(frames, symbols, 0.0);
    for (int t = 0; t < frames; ++t) {
        std::vector<double> occupancy(symbols, kLogZero);
        for (int s = 0; s < states; ++s) {
            const double ab = alpha(t, s) + beta(t, s);
            if (is_log_zero(ab)) continue;
            occupancy[aug.labels[s]] = log_add(occupancy[aug.labels[s]], ab);
        }
        for (int k = 0; k < symbols; ++k) {
            if (is_log_zero(occupancy[k])) continue;
            result.grad(t, k) = -std::exp(occupancy[k] - log_total);
        }
    }
    return result;
}

double ctc_brute_force(const Matrix& log_probs, std::string_view target) {
    check_feasible(log_probs, target);
    const int frames = log_probs.rows();
    const int symbols = log_probs.cols();
    const int blank = symbols - 1;

    double space = 1.0;
    for (int t = 0; t < frames; ++t) {
        space *= symbols;
        if (space > 1e7)
            throw SizeLimitExceeded("ctc_brute_force: (K+1)^T exceeds 1e7 paths");
    }

    std::vector<int> path(frames, 0);
    std::string collapsed;
    double total = kLogZero;
    while (true) {
        collapsed.clear();
        double log_p = 0.0;
        int prev = -1;
        for (int t = 0; t < frames; ++t) {
            log_p += log_probs(t, path[t]);
            if (path[t] != prev && path[t] != blank) collapsed.push_back(symbol_char(path[t]));
            prev = path[t];
        }
        if (collapsed == target) total = log_add(total, log_p);

        int t = frames - 1;
        while (t >= 0 && path[t] == symbols - 1) path[t--] = 0;
        if (t < 0) break;
        ++path[t];
    }
    return -total;
}

std::string greedy_decode(const Matrix& log_probs) {
    const int blank = log_probs.cols() - 1;
    std::string out;
    int prev = -1;
    for (int t = 0; t < log_probs.rows(); ++t) {
        int best = 0;
        for (int k = 1; k < log_probs.cols(); ++k)
            if (log_probs(t, k) > log_probs(t, best)) best = k;
        if (best != prev && best != blank) out.push_back(symbol_char(best));
        prev = best;
    }
    return out;
}

double ocr_accuracy(const std::vector<std::string>& predictions, const std::vector<std::string>& targets) {
    if (predictions.size() != targets.size()) throw ContractViolation("ocr_accuracy: list lengths differ");
    if (predictions.empty()) throw ContractViolation("ocr_accuracy: empty input");
    size_t correct = 0;
    for (size_t i = 0; i < predictions.size(); ++i)
        if (predictions[i] == targets[i]) ++correct;
    return static_cast<double>(correct) / predictions.size();
}

Matrix osm_frame_log_probs(const Matrix& scores, const HyperParams& hp) {
    Matrix out(scores.rows(), scores.cols() + 1);
    for (int t = 0; t < scores.rows(); ++t) {
        const auto row = osm_log_probs(scores.row(t), hp);
        for (int k = 0; k < out.cols(); ++k) out(t, k) = row[k];
    }
    return out;
}

Matrix osm_frame_log_probs_backward(const Matrix& scores, const HyperParams& hp, const Matrix& upstream) {
    if (upstream.rows() != scores.rows() || upstream.cols() != scores.cols() + 1)
        throw ContractViolation("osm_frame_log_probs_backward: upstream must be T x (K+1)");
    Matrix out(scores.rows(), scores.cols());
    for (int t = 0; t < scores.rows(); ++t) {
        const auto row = osm_log_probs_backward(scores.row(t), hp, upstream.row(t));
        for (int k = 0; k < scores.cols(); ++k) out(t, k) = row[k];
    }
    return out;
}

}  // namespace osm::ctc
