#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "osmargin/ctc.hpp"
#include "osmargin/data.hpp"
#include "test_util.hpp"

using namespace osm;
namespace fs = std::filesystem;

namespace {

// Perceptron oracle: returns true when it finds a separating hyperplane.
bool perceptron_separable(const LabeledDataset& data, int max_passes) {
    std::vector<double> w(data.dim() + 1, 0.0);  // last entry is the bias
    for (int pass = 0; pass < max_passes; ++pass) {
        int mistakes = 0;
        for (int i = 0; i < data.size(); ++i) {
            double activation = w[data.dim()];
            for (int d = 0; d < data.dim(); ++d) activation += w[d] * data.features(i, d);
            const int y = data.labels[i] == 1 ? 1 : -1;
            if (y * activation <= 0.0) {
                ++mistakes;
                for (int d = 0; d < data.dim(); ++d) w[d] += y * data.features(i, d);
                w[data.dim()] += y;
            }
        }
        if (mistakes == 0) return true;
    }
    return false;
}

fs::path temp_file(const char* name) { return fs::temp_directory_path() / name; }

}  // namespace

TEST_CASE("gen_blobs: determinism, balance, geometry") {
    const auto a = gen_blobs(50, 3, 4, 1.0, 7);
    const auto b = gen_blobs(50, 3, 4, 1.0, 7);
    CHECK(a.features == b.features);
    CHECK(a.labels == b.labels);
    const auto c = gen_blobs(50, 3, 4, 1.0, 8);
    CHECK(a.features != c.features);

    std::vector<int> counts(3, 0);
    for (int label : a.labels) ++counts[label];
    for (int count : counts) CHECK(count == 50);

    // spread 0 puts every point exactly on its class mean
    const auto exact = gen_blobs(5, 4, 3, 0.0, 1);
    for (int i = 0; i < exact.size(); ++i) {
        const int k = exact.labels[i];
        const double angle = 2.0 * 3.14159265358979323846 * k / 4;
        CHECK(exact.features(i, 0) == doctest::Approx(10.0 * std::cos(angle)).epsilon(1e-12));
        CHECK(exact.features(i, 1) == doctest::Approx(10.0 * std::sin(angle)).epsilon(1e-12));
        CHECK(exact.features(i, 2) == 0.0);
    }

    CHECK_THROWS_AS(gen_blobs(10, 1, 2, 1.0, 0), ContractViolation);
    CHECK_THROWS_AS(gen_blobs(10, 2, 1, 1.0, 0), ContractViolation);
}

TEST_CASE("gen_blobs with C=2 and unit spread is linearly separable") {
    for (uint64_t seed : {1ull, 2ull, 3ull}) {
        const auto data = gen_blobs(200, 2, 2, 1.0, seed);
        CHECK(perceptron_separable(data, 500));
    }
}

TEST_CASE("gen_rings: determinism and annulus geometry") {
    const auto a = gen_rings(100, 11);
    const auto b = gen_rings(100, 11);
    CHECK(a.features == b.features);
    CHECK(a.class_count == 2);
    for (int i = 0; i < a.size(); ++i) {
        const double r = std::hypot(a.features(i, 0), a.features(i, 1));
        if (a.labels[i] == 0) {
            CHECK(r >= 3.5);
            CHECK(r <= 4.5);
        } else {
            CHECK(r >= 7.5);
            CHECK(r <= 8.5);
        }
    }
}

TEST_CASE("gen_ocr_sequences: determinism, feasibility, noiseless decode") {
    const auto a = gen_ocr_sequences(20, 4, 2, 5, 2, 0.3, 99);
    const auto b = gen_ocr_sequences(20, 4, 2, 5, 2, 0.3, 99);
    CHECK(a.examples.size() == 20);
    for (size_t i = 0; i < a.examples.size(); ++i) {
        CHECK(a.examples[i].features == b.examples[i].features);
        CHECK(a.examples[i].target == b.examples[i].target);
        CHECK(a.examples[i].features.rows() >= ctc::required_frames(a.examples[i].target));
        const int len = static_cast<int>(a.examples[i].target.size());
        CHECK(len >= 2);
        CHECK(len <= 5);
    }

    // noise 0, repeats 1: interpreting each frame as evidence over the
    // alphabet with a 0.5 blank threshold recovers the target exactly.
    const auto clean = gen_ocr_sequences(40, 5, 1, 6, 1, 0.0, 123);
    for (const auto& example : clean.examples) {
        Matrix pseudo_logp(example.features.rows(), clean.alphabet_size + 1);
        for (int t = 0; t < example.features.rows(); ++t) {
            for (int k = 0; k < clean.alphabet_size; ++k) pseudo_logp(t, k) = example.features(t, k);
            pseudo_logp(t, clean.alphabet_size) = 0.5;
        }
        CHECK(ctc::greedy_decode(pseudo_logp) == example.target);
    }
}

TEST_CASE("load_csv parses, remaps labels, and reports distinct errors") {
    const fs::path path = temp_file("osmargin_test_data.csv");
    {
        std::ofstream out(path);
        out << "1,0.5,0.25\n0,1.0,2.0\n";
    }
    const auto loaded = load_csv(path.string());
    CHECK(loaded.dataset.size() == 2);
    CHECK(loaded.dataset.dim() == 2);
    CHECK(loaded.dataset.class_count == 2);
    // first-occurrence order: csv label 1 -> class 0, csv label 0 -> class 1
    CHECK(loaded.label_map == std::vector<long long>{1, 0});
    CHECK(loaded.dataset.labels == std::vector<int>{0, 1});
    CHECK(loaded.dataset.features(0, 1) == 0.25);

    {
        std::ofstream out(path);
        out << "3,1.0\n7,2.0\n3,3.0\n";
    }
    const auto remapped = load_csv(path.string());
    CHECK(remapped.label_map == std::vector<long long>{3, 7});
    CHECK(remapped.dataset.labels == std::vector<int>{0, 1, 0});

    {
        std::ofstream out(path);
        out << "1,0.5,0.25\n0,1.0\n";
    }
    CHECK_THROWS_WITH_AS(load_csv(path.string()), doctest::Contains(":2"), ParseError);

    {
        std::ofstream out(path);
        out << "1,0.5,zebra\n";
    }
    CHECK_THROWS_AS(load_csv(path.string()), ParseError);

    {
        std::ofstream out(path);
        out << "\n\n";
    }
    CHECK_THROWS_AS(load_csv(path.string()), ParseError);

    CHECK_THROWS_AS(load_csv("/nonexistent/file.csv"), ParseError);
    fs::remove(path);
}

TEST_CASE("save_csv / load_csv round trip") {
    const fs::path path = temp_file("osmargin_test_roundtrip.csv");
    const auto data = gen_blobs(20, 3, 5, 2.0, 31);
    save_csv(data, path.string());
    const auto loaded = load_csv(path.string());
    CHECK(loaded.dataset.features == data.features);
    CHECK(loaded.dataset.labels == data.labels);
    CHECK(loaded.dataset.class_count == data.class_count);
    fs::remove(path);
}
