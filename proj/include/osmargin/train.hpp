#ifndef OSMARGIN_TRAIN_HPP
#define OSMARGIN_TRAIN_HPP

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "osmargin/data.hpp"
#include "osmargin/losses.hpp"
#include "osmargin/model.hpp"
#include "osmargin/optim.hpp"

namespace osm {

enum class LossKind { soft_osm, hard_osm, ce, binary_ce, hinge, osm_ctc, ctc };

const char* loss_kind_name(LossKind kind);
LossKind parse_loss_kind(const std::string& name);
bool is_osm_loss(LossKind kind);
bool is_sequence_loss(LossKind kind);

struct ModelSpec {
    Model::Kind kind = Model::Kind::linear;
    int hidden_dim = 32;
};

struct TrainConfig {
    LossKind loss = LossKind::soft_osm;
    int epochs = 300;
    int batch_size = 32;
    uint64_t seed = 0;
    OptimizerConfig optimizer;
    LrSchedule schedule;
    HyperParams hp;
    double hinge_margin = 1.0;
};

struct EpochRecord {
    int epoch = 0;
    double lr = 0.0;
    double train_loss = 0.0;
    double train_accuracy = 0.0;
    double eval_accuracy = 0.0;
    double seconds = 0.0;  // wall clock; not part of the deterministic report
};

struct TrainReport {
    std::vector<EpochRecord> epochs;
    Model final_model;
};

// Exact-match fraction over paired label vectors.
double accuracy(std::span<const int> predictions, std::span<const int> truth);

// Decision rule per loss: argmin of scores for the OSM family, argmax for
// cross-entropy and hinge, sign threshold for the single-score binary CE.
int predict_label(LossKind kind, std::span<const double> scores);

// Mini-batch training for the classification losses. Shuffles with a
// seed-derived permutation per epoch, averages the loss gradient over each
// batch, and records loss/accuracy per epoch. Deterministic given config.
TrainReport train_classifier(const TrainConfig& config, const ModelSpec& spec, const LabeledDataset& train,
                             const LabeledDataset& eval);

// CTC training: per-frame scores map to log-probabilities (through the OSM
// rejection-class probabilities for osm_ctc, a plain log-softmax over K+1
// outputs for ctc) and feed the CTC objective; accuracy is exact-match of
// greedy decodes.
TrainReport train_ctc(const TrainConfig& config, const ModelSpec& spec, const SequenceDataset& train,
                      const SequenceDataset& eval);

// Score geometry of a trained model: quantiles (5/25/50/75/95%) of the
// true-class scores and of all off-class scores pooled, plus the fraction of
// examples realizing the margin bands.
struct MarginStats {
    std::array<double, 5> true_class{};
    std::array<double, 5> off_class{};
    double true_in_band = 0.0;    // fraction with 0 <= s_y <= lambda_min
    double off_beyond_max = 0.0;  // fraction of off-class scores >= lambda_max
};

MarginStats margin_stats(const Model& model, const LabeledDataset& dataset, const HyperParams& hp);

// Per-epoch rows "epoch,lr,train_loss,train_acc,eval_acc" after a comment
// header; doubles in shortest round-trip form so reruns are byte-identical.
std::string report_to_csv(const TrainReport& report);

}  // namespace osm

#endif
