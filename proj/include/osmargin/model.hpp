#ifndef OSMARGIN_MODEL_HPP
#define OSMARGIN_MODEL_HPP

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "osmargin/error.hpp"

namespace osm {

// He initialization standard deviation for a rectifier layer.
inline double he_std(int fan_in) { return std::sqrt(2.0 / fan_in); }

// Trainable score function: either a linear classifier (scores = W x + b) or
// a one-hidden-layer rectifier MLP (scores = W2 relu(W1 x + b1) + b2).
//
// Parameters live in one flat vector so the optimizer can treat every model
// uniformly. Layout, row-major throughout:
//   linear: [W (C*D), b (C)]
//   mlp:    [W1 (H*D), b1 (H), W2 (C*H), b2 (C)]
// The checkpoint file (save/load) stores the dims followed by this flat
// vector, one value per line, in shortest round-trip decimal form.
class Model {
public:
    enum class Kind { linear, mlp };

    Model() = default;
    static Model linear(int input_dim, int class_count);
    static Model mlp(int input_dim, int hidden_dim, int class_count);

    Kind kind() const { return kind_; }
    int input_dim() const { return input_dim_; }
    int hidden_dim() const { return hidden_dim_; }
    int class_count() const { return class_count_; }

    std::span<double> params() { return params_; }
    std::span<const double> params() const { return params_; }
    size_t param_count() const { return params_.size(); }

    // Layer views into the flat parameter vector.
    std::span<double> hidden_weights();
    std::span<double> hidden_bias();
    std::span<double> out_weights();
    std::span<double> out_bias();
    std::span<const double> out_weights() const;

    // Weights ~ N(0, 2/fan_in), biases zero; deterministic in seed.
    void init(uint64_t seed);

    std::vector<double> forward(std::span<const double> x) const;

    // Accumulates d(upstream . scores)/d(params) into grad_out (same layout
    // as params) and, when dx is non-null, writes the input gradient.
    // The rectifier derivative at 0 is taken as 0.
    void backward(std::span<const double> x, std::span<const double> upstream, std::span<double> grad_out,
                  std::span<double> dx = {}) const;

    void save(const std::string& path) const;
    static Model load(const std::string& path);

    friend bool operator==(const Model&, const Model&) = default;

private:
    Model(Kind kind, int input_dim, int hidden_dim, int class_count);

    size_t w1_size() const { return static_cast<size_t>(hidden_dim_) * input_dim_; }
    size_t w2_offset() const { return w1_size() + hidden_dim_; }

    Kind kind_ = Kind::linear;
    int input_dim_ = 0;
    int hidden_dim_ = 0;  // 0 for linear
    int class_count_ = 0;
    std::vector<double> params_;
};

}  // namespace osm

#endif
