#ifndef OSMARGIN_DATA_HPP
#define OSMARGIN_DATA_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "osmargin/matrix.hpp"

namespace osm {

struct LabeledDataset {
    Matrix features;          // N x D
    std::vector<int> labels;  // values in [0, class_count)
    int class_count = 0;

    int size() const { return features.rows(); }
    int dim() const { return features.cols(); }
};

struct SequenceExample {
    Matrix features;     // T x D
    std::string target;  // over the first K lowercase letters
};

struct SequenceDataset {
    std::vector<SequenceExample> examples;
    int alphabet_size = 0;
    int dim() const { return examples.empty() ? 0 : examples.front().features.cols(); }
};

// Gaussian blobs with class means on a circle of radius 10 in the first two
// dimensions (zeros elsewhere). Labels come out class-major, n_per_class each.
LabeledDataset gen_blobs(int n_per_class, int classes, int dims, double spread, uint64_t seed);

// Two concentric 2-D annuli, radii 4 +/- 0.5 (class 0) and 8 +/- 0.5 (class 1).
// Not linearly separable; a small MLP handles it.
LabeledDataset gen_rings(int n_per_class, uint64_t seed);

// Synthetic OCR corpus: each target character emits `repeats` frames of its
// one-hot template (D = alphabet) plus Gaussian noise; a clean all-zeros
// frame separates adjacent duplicate characters so every target stays
// CTC-feasible.
SequenceDataset gen_ocr_sequences(int count, int alphabet, int len_min, int len_max, int repeats, double noise,
                                  uint64_t seed);

struct CsvLoadResult {
    LabeledDataset dataset;
    std::vector<long long> label_map;  // label_map[k] = original label for class k
};

// Rows are "label,f1,f2,..." with a constant feature count. Labels remap to
// 0..C-1 in first-occurrence order; the mapping is returned.
CsvLoadResult load_csv(const std::string& path);

// Inverse of load_csv up to decimal round-trip; labels written through
// label_map when provided.
void save_csv(const LabeledDataset& dataset, const std::string& path,
              const std::vector<long long>* label_map = nullptr);

}  // namespace osm

#endif
