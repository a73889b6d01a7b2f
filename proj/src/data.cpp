#include "osmargin/data.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <string>

#include "osmargin/ctc.hpp"
#include "osmargin/rng.hpp"

namespace osm {

namespace {

constexpr double kTau = 2.0 * 3.141592653589793238462643383279502884;

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

}  // namespace

LabeledDataset gen_blobs(int n_per_class, int classes, int dims, double spread, uint64_t seed) {
    if (n_per_class < 1 || classes < 2 || dims < 2) throw ContractViolation("gen_blobs: need n>=1, C>=2, D>=2");
    if (spread < 0.0) throw ContractViolation("gen_blobs: spread must be >= 0");
    LabeledDataset out;
    out.class_count = classes;
    out.features = Matrix(n_per_class * classes, dims);
    out.labels.resize(static_cast<size_t>(n_per_class) * classes);
    const Rng base(seed);
    for (int k = 0; k < classes; ++k) {
        const double angle = kTau * k / classes;
        const double mean_x = 10.0 * std::cos(angle);
        const double mean_y = 10.0 * std::sin(angle);
        const Rng class_rng = base.split(k);
        for (int i = 0; i < n_per_class; ++i) {
            Rng rng = class_rng.split(i);
            const int row = k * n_per_class + i;
            out.labels[row] = k;
            for (int d = 0; d < dims; ++d) {
                const double mean = d == 0 ? mean_x : (d == 1 ? mean_y : 0.0);
                out.features(row, d) = mean + spread * rng.gaussian();
            }
        }
    }
    return out;
}

LabeledDataset gen_rings(int n_per_class, uint64_t seed) {
    if (n_per_class < 1) throw ContractViolation("gen_rings: need n_per_class >= 1");
    LabeledDataset out;
    out.class_count = 2;
    out.features = Matrix(2 * n_per_class, 2);
    out.labels.resize(static_cast<size_t>(2) * n_per_class);
    const Rng base(seed);
    for (int k = 0; k < 2; ++k) {
        const double base_radius = k == 0 ? 4.0 : 8.0;
        const Rng class_rng = base.split(k);
        for (int i = 0; i < n_per_class; ++i) {
            Rng rng = class_rng.split(i);
            const int row = k * n_per_class + i;
            const double radius = base_radius + rng.uniform(-0.5, 0.5);
            const double angle = rng.uniform(0.0, kTau);
            out.labels[row] = k;
            out.features(row, 0) = radius * std::cos(angle);
            out.features(row, 1) = radius * std::sin(angle);
        }
    }
    return out;
}

SequenceDataset gen_ocr_sequences(int count, int alphabet, int len_min, int len_max, int repeats, double noise,
                                  uint64_t seed) {
    if (count < 1 || alphabet < 2 || alphabet > ctc::kMaxAlphabet)
        throw ContractViolation("gen_ocr_sequences: need count >= 1 and 2 <= alphabet <= 26");
    if (len_min < 1 || len_max < len_min) throw ContractViolation("gen_ocr_sequences: bad target length range");
    if (repeats < 1) throw ContractViolation("gen_ocr_sequences: repeats must be >= 1");
    if (noise < 0.0) throw ContractViolation("gen_ocr_sequences: noise must be >= 0");

    SequenceDataset out;
    out.alphabet_size = alphabet;
    out.examples.reserve(count);
    const Rng base(seed);
    for (int i = 0; i < count; ++i) {
        Rng rng = base.split(i);
        const int len = len_min + static_cast<int>(rng.below(static_cast<uint64_t>(len_max - len_min + 1)));
        std::string target;
        target.reserve(len);
        for (int c = 0; c < len; ++c) target.push_back(ctc::symbol_char(static_cast<int>(rng.below(alphabet))));

        int frames = len * repeats;
        for (int c = 1; c < len; ++c)
            if (target[c] == target[c - 1]) ++frames;

        SequenceExample example;
        example.target = target;
        example.features = Matrix(frames, alphabet);
        int t = 0;
        for (int c = 0; c < len; ++c) {
            if (c > 0 && target[c] == target[c - 1]) ++t;  // separator row stays all zeros
            const int symbol = ctc::symbol_index(target[c], alphabet);
            for (int r = 0; r < repeats; ++r, ++t) {
                for (int d = 0; d < alphabet; ++d)
                    example.features(t, d) = (d == symbol ? 1.0 : 0.0) + noise * rng.gaussian();
            }
        }
        out.examples.push_back(std::move(example));
    }
    return out;
}

CsvLoadResult load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("load_csv: cannot open " + path);

    CsvLoadResult result;
    std::vector<double> values;
    int dims = -1;
    int line_no = 0;
    std::string line;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;

        std::vector<std::string_view> cells;
        std::string_view view = line;
        size_t start = 0;
        while (true) {
            const size_t comma = view.find(',', start);
            cells.push_back(view.substr(start, comma - start));
            if (comma == std::string_view::npos) break;
            start = comma + 1;
        }
        if (cells.size() < 2)
            throw ParseError("load_csv: " + path + ":" + std::to_string(line_no) + ": need a label and features");
        if (dims == -1) {
            dims = static_cast<int>(cells.size()) - 1;
        } else if (static_cast<int>(cells.size()) - 1 != dims) {
            throw ParseError("load_csv: " + path + ":" + std::to_string(line_no) + ": ragged row, expected " +
                             std::to_string(dims) + " features, got " + std::to_string(cells.size() - 1));
        }

        long long raw_label = 0;
        {
            const auto cell = cells[0];
            auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), raw_label);
            if (ec != std::errc{} || ptr != cell.data() + cell.size())
                throw ParseError("load_csv: " + path + ":" + std::to_string(line_no) + ": non-integer label '" +
                                 std::string(cell) + "'");
        }
        int label = -1;
        for (size_t k = 0; k < result.label_map.size(); ++k)
            if (result.label_map[k] == raw_label) label = static_cast<int>(k);
        if (label == -1) {
            label = static_cast<int>(result.label_map.size());
            result.label_map.push_back(raw_label);
        }
        result.dataset.labels.push_back(label);

        for (size_t c = 1; c < cells.size(); ++c) {
            const auto cell = cells[c];
            double v = 0.0;
            auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (ec != std::errc{} || ptr != cell.data() + cell.size() || !std::isfinite(v))
                throw ParseError("load_csv: " + path + ":" + std::to_string(line_no) + ": non-numeric field '" +
                                 std::string(cell) + "'");
            values.push_back(v);
        }
    }
    if (result.dataset.labels.empty()) throw ParseError("load_csv: " + path + " contains no data rows");

    const int rows = static_cast<int>(result.dataset.labels.size());
    result.dataset.features = Matrix(rows, dims);
    std::copy(values.begin(), values.end(), result.dataset.features.flat().begin());
    result.dataset.class_count = static_cast<int>(result.label_map.size());
    return result;
}

void save_csv(const LabeledDataset& dataset, const std::string& path, const std::vector<long long>* label_map) {
    std::ofstream out(path);
    if (!out) throw ParseError("save_csv: cannot open " + path + " for writing");
    for (int i = 0; i < dataset.size(); ++i) {
        const long long label =
            label_map != nullptr ? (*label_map)[dataset.labels[i]] : static_cast<long long>(dataset.labels[i]);
        out << label;
        for (int d = 0; d < dataset.dim(); ++d) out << ',' << format_double(dataset.features(i, d));
        out << '\n';
    }
    if (!out) throw ParseError("save_csv: failed writing " + path);
}

}  // namespace osm
