#include "osmargin/train.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <numeric>

#include "osmargin/ctc.hpp"
#include "osmargin/rng.hpp"

namespace osm {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

// Fisher-Yates with the epoch-derived stream; identical configs shuffle
// identically.
std::vector<int> epoch_permutation(int n, uint64_t base_seed, int epoch) {
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(base_seed + static_cast<uint64_t>(epoch));
    for (int i = n - 1; i > 0; --i) {
        const int j = static_cast<int>(rng.below(static_cast<uint64_t>(i) + 1));
        std::swap(perm[i], perm[j]);
    }
    return perm;
}

// Loss value and gradient w.r.t. the score vector for one example.
double classification_loss_grad(const TrainConfig& config, std::span<const double> scores, int label,
                                std::span<double> grad_out) {
    switch (config.loss) {
        case LossKind::soft_osm: {
            const auto g = soft_osm_grad(scores, label, config.hp);
            std::copy(g.begin(), g.end(), grad_out.begin());
            return soft_osm(scores, label, config.hp);
        }
        case LossKind::hard_osm: {
            const auto g = hard_osm_multiclass_grad(scores, label, config.hp);
            std::copy(g.begin(), g.end(), grad_out.begin());
            return hard_osm_multiclass(scores, label, config.hp);
        }
        case LossKind::ce: {
            const auto g = cross_entropy_grad(scores, label);
            std::copy(g.begin(), g.end(), grad_out.begin());
            return cross_entropy(scores, label);
        }
        case LossKind::hinge: {
            const auto g = hinge_multiclass_grad(scores, label, config.hinge_margin);
            std::copy(g.begin(), g.end(), grad_out.begin());
            return hinge_multiclass(scores, label, config.hinge_margin);
        }
        case LossKind::binary_ce:
            grad_out[0] = binary_cross_entropy_grad(scores[0], label);
            return binary_cross_entropy(scores[0], label);
        default:
            throw ContractViolation("classification_loss_grad: sequence loss passed to classifier");
    }
}

double dataset_accuracy(const TrainConfig& config, const Model& model, const LabeledDataset& data) {
    if (data.size() == 0) return 0.0;
    int correct = 0;
    for (int i = 0; i < data.size(); ++i) {
        const auto scores = model.forward(data.features.row(i));
        if (predict_label(config.loss, scores) == data.labels[i]) ++correct;
    }
    return static_cast<double>(correct) / data.size();
}

int model_output_dim(const TrainConfig& config, int class_count, int alphabet_size) {
    switch (config.loss) {
        case LossKind::binary_ce:
            return 1;
        case LossKind::osm_ctc:
            return alphabet_size;
        case LossKind::ctc:
            return alphabet_size + 1;  // the blank gets its own output
        default:
            return class_count;
    }
}

Model build_model(const ModelSpec& spec, int input_dim, int output_dim, uint64_t seed) {
    Model model = spec.kind == Model::Kind::linear ? Model::linear(input_dim, output_dim)
                                                   : Model::mlp(input_dim, spec.hidden_dim, output_dim);
    model.init(seed);
    return model;
}

// Loss and parameter gradient for one sequence; grad_out accumulates.
double sequence_loss_grad(const TrainConfig& config, const Model& model, const SequenceExample& example,
                          std::span<double> grad_out) {
    const int frames = example.features.rows();
    Matrix scores(frames, model.class_count());
    for (int t = 0; t < frames; ++t) {
        const auto s = model.forward(example.features.row(t));
        std::copy(s.begin(), s.end(), scores.row(t).begin());
    }

    Matrix log_probs;
    if (config.loss == LossKind::osm_ctc) {
        log_probs = ctc::osm_frame_log_probs(scores, config.hp);
    } else {
        log_probs = Matrix(frames, scores.cols());
        for (int t = 0; t < frames; ++t) {
            const auto row = log_softmax(scores.row(t));
            std::copy(row.begin(), row.end(), log_probs.row(t).begin());
        }
    }

    const auto result = ctc::ctc_loss_with_grad(log_probs, example.target);

    Matrix dscores(frames, scores.cols());
    if (config.loss == LossKind::osm_ctc) {
        dscores = ctc::osm_frame_log_probs_backward(scores, config.hp, result.grad);
    } else {
        for (int t = 0; t < frames; ++t) {
            const auto row = log_softmax_backward(scores.row(t), result.grad.row(t));
            std::copy(row.begin(), row.end(), dscores.row(t).begin());
        }
    }
    for (int t = 0; t < frames; ++t) model.backward(example.features.row(t), dscores.row(t), grad_out);
    return result.loss;
}

std::string decode_sequence(const TrainConfig& config, const Model& model, const SequenceExample& example) {
    Matrix log_probs(example.features.rows(),
                     config.loss == LossKind::osm_ctc ? model.class_count() + 1 : model.class_count());
    for (int t = 0; t < example.features.rows(); ++t) {
        const auto scores = model.forward(example.features.row(t));
        if (config.loss == LossKind::osm_ctc) {
            const auto row = osm_log_probs(scores, config.hp);
            std::copy(row.begin(), row.end(), log_probs.row(t).begin());
        } else {
            const auto row = log_softmax(scores);
            std::copy(row.begin(), row.end(), log_probs.row(t).begin());
        }
    }
    return ctc::greedy_decode(log_probs);
}

double sequence_accuracy(const TrainConfig& config, const Model& model, const SequenceDataset& data) {
    if (data.examples.empty()) return 0.0;
    std::vector<std::string> predictions;
    std::vector<std::string> targets;
    predictions.reserve(data.examples.size());
    targets.reserve(data.examples.size());
    for (const auto& example : data.examples) {
        predictions.push_back(decode_sequence(config, model, example));
        targets.push_back(example.target);
    }
    return ctc::ocr_accuracy(predictions, targets);
}

void validate_common(const TrainConfig& config) {
    if (config.epochs < 0) throw ContractViolation("train: epochs must be >= 0");
    if (config.batch_size < 1) throw ContractViolation("train: batch_size must be >= 1");
    config.hp.validate();
    config.schedule.validate();
}

}  // namespace

const char* loss_kind_name(LossKind kind) {
    switch (kind) {
        case LossKind::soft_osm: return "soft-osm";
        case LossKind::hard_osm: return "hard-osm";
        case LossKind::ce: return "ce";
        case LossKind::binary_ce: return "binary-ce";
        case LossKind::hinge: return "hinge";
        case LossKind::osm_ctc: return "osm-ctc";
        case LossKind::ctc: return "ctc";
    }
    throw ContractViolation("loss_kind_name: unknown kind");
}

LossKind parse_loss_kind(const std::string& name) {
    for (LossKind kind : {LossKind::soft_osm, LossKind::hard_osm, LossKind::ce, LossKind::binary_ce, LossKind::hinge,
                          LossKind::osm_ctc, LossKind::ctc}) {
        if (name == loss_kind_name(kind)) return kind;
    }
    throw ConfigError("unknown loss kind '" + name +
                      "' (expected soft-osm|hard-osm|ce|binary-ce|hinge|osm-ctc|ctc)");
}

bool is_osm_loss(LossKind kind) {
    return kind == LossKind::soft_osm || kind == LossKind::hard_osm || kind == LossKind::osm_ctc;
}

bool is_sequence_loss(LossKind kind) { return kind == LossKind::osm_ctc || kind == LossKind::ctc; }

double accuracy(std::span<const int> predictions, std::span<const int> truth) {
    if (predictions.size() != truth.size()) throw ContractViolation("accuracy: list lengths differ");
    if (predictions.empty()) throw ContractViolation("accuracy: empty input");
    size_t correct = 0;
    for (size_t i = 0; i < predictions.size(); ++i)
        if (predictions[i] == truth[i]) ++correct;
    return static_cast<double>(correct) / predictions.size();
}

int predict_label(LossKind kind, std::span<const double> scores) {
    if (scores.empty()) throw ContractViolation("predict_label: empty score vector");
    switch (kind) {
        case LossKind::soft_osm:
        case LossKind::hard_osm:
        case LossKind::osm_ctc:
            return predict_osm(scores);
        case LossKind::binary_ce:
            return scores[0] > 0.0 ? 1 : 0;
        case LossKind::ce:
        case LossKind::hinge:
        case LossKind::ctc: {
            int best = 0;
            for (size_t j = 1; j < scores.size(); ++j)
                if (scores[j] > scores[best]) best = static_cast<int>(j);
            return best;
        }
    }
    throw ContractViolation("predict_label: unknown loss kind");
}

TrainReport train_classifier(const TrainConfig& config, const ModelSpec& spec, const LabeledDataset& train,
                             const LabeledDataset& eval) {
    validate_common(config);
    if (is_sequence_loss(config.loss)) throw ContractViolation("train_classifier: got a sequence loss");
    if (train.size() == 0) throw ContractViolation("train_classifier: empty training set");
    if (eval.size() > 0 && eval.dim() != train.dim())
        throw ContractViolation("train_classifier: train/eval feature dims differ");
    if (config.loss == LossKind::binary_ce && train.class_count != 2)
        throw ContractViolation("train_classifier: binary-ce requires exactly 2 classes");

    const int output_dim = model_output_dim(config, train.class_count, 0);
    TrainReport report;
    report.final_model = build_model(spec, train.dim(), output_dim, config.seed);
    Model& model = report.final_model;

    Optimizer optimizer(config.optimizer, model.param_count());
    std::vector<double> grads(model.param_count());
    std::vector<double> score_grad(output_dim);

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const auto start = Clock::now();
        const double lr = lr_at(config.schedule, config.optimizer.initial_lr, epoch);
        const auto perm = epoch_permutation(train.size(), config.seed, epoch);

        double loss_sum = 0.0;
        for (int begin = 0; begin < train.size(); begin += config.batch_size) {
            const int end = std::min(begin + config.batch_size, train.size());
            std::fill(grads.begin(), grads.end(), 0.0);
            for (int i = begin; i < end; ++i) {
                const int row = perm[i];
                const auto scores = model.forward(train.features.row(row));
                loss_sum += classification_loss_grad(config, scores, train.labels[row], score_grad);
                model.backward(train.features.row(row), score_grad, grads);
            }
            const double scale = 1.0 / (end - begin);
            for (double& g : grads) g *= scale;
            optimizer.step(model.params(), grads, lr);
        }

        EpochRecord record;
        record.epoch = epoch;
        record.lr = lr;
        record.train_loss = loss_sum / train.size();
        record.train_accuracy = dataset_accuracy(config, model, train);
        record.eval_accuracy = dataset_accuracy(config, model, eval);
        record.seconds = seconds_since(start);
        report.epochs.push_back(record);
    }
    return report;
}

TrainReport train_ctc(const TrainConfig& config, const ModelSpec& spec, const SequenceDataset& train,
                      const SequenceDataset& eval) {
    validate_common(config);
    if (!is_sequence_loss(config.loss)) throw ContractViolation("train_ctc: loss must be osm-ctc or ctc");
    if (train.examples.empty()) throw ContractViolation("train_ctc: empty training set");

    // Surface every infeasible target up front, with indices.
    std::string bad;
    for (size_t i = 0; i < train.examples.size(); ++i) {
        const auto& example = train.examples[i];
        if (example.features.rows() < ctc::required_frames(example.target))
            bad += (bad.empty() ? "" : ", ") + std::to_string(i);
    }
    if (!bad.empty()) throw InfeasibleTarget("train_ctc: targets infeasible at example indices " + bad);

    const int output_dim = model_output_dim(config, 0, train.alphabet_size);
    TrainReport report;
    report.final_model = build_model(spec, train.dim(), output_dim, config.seed);
    Model& model = report.final_model;

    Optimizer optimizer(config.optimizer, model.param_count());
    std::vector<double> grads(model.param_count());
    const int n = static_cast<int>(train.examples.size());

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        const auto start = Clock::now();
        const double lr = lr_at(config.schedule, config.optimizer.initial_lr, epoch);
        const auto perm = epoch_permutation(n, config.seed, epoch);

        double loss_sum = 0.0;
        for (int begin = 0; begin < n; begin += config.batch_size) {
            const int end = std::min(begin + config.batch_size, n);
            std::fill(grads.begin(), grads.end(), 0.0);
            for (int i = begin; i < end; ++i)
                loss_sum += sequence_loss_grad(config, model, train.examples[perm[i]], grads);
            const double scale = 1.0 / (end - begin);
            for (double& g : grads) g *= scale;
            optimizer.step(model.params(), grads, lr);
        }

        EpochRecord record;
        record.epoch = epoch;
        record.lr = lr;
        record.train_loss = loss_sum / n;
        record.train_accuracy = sequence_accuracy(config, model, train);
        record.eval_accuracy = sequence_accuracy(config, model, eval);
        record.seconds = seconds_since(start);
        report.epochs.push_back(record);
    }
    return report;
}

MarginStats margin_stats(const Model& model, const LabeledDataset& dataset, const HyperParams& hp) {
    if (dataset.size() == 0) throw ContractViolation("margin_stats: empty dataset");
    std::vector<double> true_scores;
    std::vector<double> off_scores;
    true_scores.reserve(dataset.size());
    int in_band = 0;
    int beyond = 0;
    for (int i = 0; i < dataset.size(); ++i) {
        const auto scores = model.forward(dataset.features.row(i));
        for (int c = 0; c < static_cast<int>(scores.size()); ++c) {
            if (c == dataset.labels[i]) {
                true_scores.push_back(scores[c]);
                if (scores[c] >= 0.0 && scores[c] <= hp.lambda_min) ++in_band;
            } else {
                off_scores.push_back(scores[c]);
                if (scores[c] >= hp.lambda_max) ++beyond;
            }
        }
    }
    auto quantiles = [](std::vector<double>& values) {
        std::array<double, 5> out{};
        if (values.empty()) return out;
        std::sort(values.begin(), values.end());
        const std::array<double, 5> qs{0.05, 0.25, 0.5, 0.75, 0.95};
        for (size_t i = 0; i < qs.size(); ++i) {
            const double pos = qs[i] * (values.size() - 1);
            const size_t lo = static_cast<size_t>(pos);
            const double frac = pos - lo;
            out[i] = lo + 1 < values.size() ? values[lo] * (1.0 - frac) + values[lo + 1] * frac : values[lo];
        }
        return out;
    };
    MarginStats stats;
    stats.true_class = quantiles(true_scores);
    stats.off_class = quantiles(off_scores);
    stats.true_in_band = static_cast<double>(in_band) / dataset.size();
    stats.off_beyond_max = off_scores.empty() ? 0.0 : static_cast<double>(beyond) / off_scores.size();
    return stats;
}

std::string report_to_csv(const TrainReport& report) {
    std::string out = "# epoch,lr,train_loss,train_acc,eval_acc\n";
    for (const auto& r : report.epochs) {
        out += std::to_string(r.epoch);
        out += ',';
        out += format_double(r.lr);
        out += ',';
        out += format_double(r.train_loss);
        out += ',';
        out += format_double(r.train_accuracy);
        out += ',';
        out += format_double(r.eval_accuracy);
        out += '\n';
    }
    return out;
}

}  // namespace osm
