#ifndef OSMARGIN_CONFIG_HPP
#define OSMARGIN_CONFIG_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "osmargin/train.hpp"

namespace osm {

// Flat "key = value" file with [section] headers; '#' starts a comment.
// Entry order is preserved so sweep grids run in the order they are written.
class ConfigFile {
public:
    struct Entry {
        std::string section;
        std::string key;
        std::string value;
        int line = 0;
    };

    static ConfigFile parse_file(const std::string& path);
    static ConfigFile parse_text(const std::string& text, const std::string& origin);

    const std::vector<Entry>& entries() const { return entries_; }
    std::optional<std::string> get(const std::string& section, const std::string& key) const;

    std::string get_string(const std::string& section, const std::string& key, const std::string& fallback) const;
    double get_double(const std::string& section, const std::string& key, double fallback) const;
    int get_int(const std::string& section, const std::string& key, int fallback) const;
    uint64_t get_u64(const std::string& section, const std::string& key, uint64_t fallback) const;

    // Comma-separated list of doubles; empty when the key is absent.
    std::vector<double> get_double_list(const std::string& section, const std::string& key) const;
    std::vector<std::string> get_string_list(const std::string& section, const std::string& key) const;

private:
    std::vector<Entry> entries_;
};

enum class TaskKind { classify, ocr };

enum class DataSource { blobs, rings, ocr_seq, csv };

struct DataSpec {
    DataSource source = DataSource::blobs;
    uint64_t seed = 1;
    // blobs / rings
    int n_per_class = 200;
    int eval_n_per_class = 200;
    int classes = 2;
    int dims = 2;
    double spread = 1.0;
    // ocr-seq
    int count = 150;
    int eval_count = 75;
    int alphabet = 5;
    int len_min = 3;
    int len_max = 5;
    int repeats = 2;
    double noise = 0.3;
    // csv
    std::string train_path;
    std::string eval_path;
};

struct SweepSpec {
    // One-factor-at-a-time grids in file order; factor is one of
    // alpha | lambda | lambda_max | lambda_min.
    std::vector<std::pair<std::string, std::vector<double>>> grids;
};

struct CompareSpec {
    std::vector<LossKind> losses;
    std::vector<DataSource> datasets;
    int repeats = 3;
};

struct OcrCompareSpec {
    int hidden_full = 16;
    int hidden_scaled = 4;
    int repeats = 3;
};

struct RunConfig {
    TaskKind task = TaskKind::classify;
    std::string out_dir = "out";
    DataSpec data;
    ModelSpec model;
    TrainConfig train;
    SweepSpec sweep;
    CompareSpec compare;
    OcrCompareSpec ocr;
    bool schedule_pinned = false;  // [schedule] kind given explicitly
};

// Command-line values that win over the config file.
struct Overrides {
    std::optional<std::string> loss;
    std::optional<uint64_t> seed;
    std::optional<int> epochs;
    std::optional<std::string> out_dir;
};

// Resolves file values over Table-style defaults (classification: SGD
// momentum 0.9, weight decay 5e-4, lr 0.01, batch 32, cosine restarts;
// OCR: Adam lr 1e-3, batch 60, alpha 1) and validates; throws ConfigError
// naming the offending [section] key.
RunConfig build_run_config(const ConfigFile& file, const Overrides& overrides);

// Materializes train/eval splits for a classification source; eval uses
// data.seed + 1.
std::pair<LabeledDataset, LabeledDataset> build_datasets(const DataSpec& data, DataSource source);
std::pair<SequenceDataset, SequenceDataset> build_sequence_datasets(const DataSpec& data);

}  // namespace osm

#endif
