#include "osmargin/model.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <string>

#include "osmargin/rng.hpp"

namespace osm {

namespace {

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
}

double parse_double(const std::string& text, const std::string& path) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc{} || ptr != text.data() + text.size())
        throw ParseError(path + ": bad numeric value '" + text + "'");
    return v;
}

}  // namespace

Model::Model(Kind kind, int input_dim, int hidden_dim, int class_count)
    : kind_(kind), input_dim_(input_dim), hidden_dim_(hidden_dim), class_count_(class_count) {
    if (input_dim < 1 || class_count < 1) throw ContractViolation("Model: dims must be >= 1");
    if (kind == Kind::mlp && hidden_dim < 1) throw ContractViolation("Model: mlp hidden_dim must be >= 1");
    const size_t count = kind == Kind::linear
                             ? static_cast<size_t>(class_count) * input_dim + class_count
                             : static_cast<size_t>(hidden_dim) * input_dim + hidden_dim +
                               static_cast<size_t>(class_count) * hidden_dim + class_count;
    params_.assign(count, 0.0);
}

Model Model::linear(int input_dim, int class_count) { return Model(Kind::linear, input_dim, 0, class_count); }

Model Model::mlp(int input_dim, int hidden_dim, int class_count) {
    return Model(Kind::mlp, input_dim, hidden_dim, class_count);
}

std::span<double> Model::hidden_weights() {
    return kind_ == Kind::mlp ? std::span<double>(params_.data(), w1_size()) : std::span<double>{};
}

std::span<double> Model::hidden_bias() {
    return kind_ == Kind::mlp ? std::span<double>(params_.data() + w1_size(), hidden_dim_) : std::span<double>{};
}

std::span<double> Model::out_weights() {
    if (kind_ == Kind::linear) return {params_.data(), static_cast<size_t>(class_count_) * input_dim_};
    return {params_.data() + w2_offset(), static_cast<size_t>(class_count_) * hidden_dim_};
}

std::span<const double> Model::out_weights() const {
    if (kind_ == Kind::linear) return {params_.data(), static_cast<size_t>(class_count_) * input_dim_};
    return {params_.data() + w2_offset(), static_cast<size_t>(class_count_) * hidden_dim_};
}

std::span<double> Model::out_bias() {
    return {params_.data() + params_.size() - class_count_, static_cast<size_t>(class_count_)};
}

void Model::init(uint64_t seed) {
    Rng rng(seed);
    std::fill(params_.begin(), params_.end(), 0.0);
    if (kind_ == Kind::linear) {
        const double std_dev = he_std(input_dim_);
        for (size_t i = 0; i < static_cast<size_t>(class_count_) * input_dim_; ++i)
            params_[i] = std_dev * rng.gaussian();
    } else {
        const double std1 = he_std(input_dim_);
        for (size_t i = 0; i < w1_size(); ++i) params_[i] = std1 * rng.gaussian();
        const double std2 = he_std(hidden_dim_);
        for (size_t i = 0; i < static_cast<size_t>(class_count_) * hidden_dim_; ++i)
            params_[w2_offset() + i] = std2 * rng.gaussian();
    }
}

std::vector<double> Model::forward(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != input_dim_)
        throw ContractViolation("Model::forward: input dim " + std::to_string(x.size()) + " != " +
                                std::to_string(input_dim_));
    std::vector<double> scores(class_count_, 0.0);
    if (kind_ == Kind::linear) {
        const double* w = params_.data();
        for (int c = 0; c < class_count_; ++c) {
            double acc = params_[static_cast<size_t>(class_count_) * input_dim_ + c];  // bias
            for (int d = 0; d < input_dim_; ++d) acc += w[static_cast<size_t>(c) * input_dim_ + d] * x[d];
            scores[c] = acc;
        }
        return scores;
    }
    std::vector<double> hidden(hidden_dim_);
    const double* w1 = params_.data();
    const double* b1 = params_.data() + w1_size();
    for (int h = 0; h < hidden_dim_; ++h) {
        double acc = b1[h];
        for (int d = 0; d < input_dim_; ++d) acc += w1[static_cast<size_t>(h) * input_dim_ + d] * x[d];
        hidden[h] = acc > 0.0 ? acc : 0.0;
    }
    const double* w2 = params_.data() + w2_offset();
    const double* b2 = params_.data() + params_.size() - class_count_;
    for (int c = 0; c < class_count_; ++c) {
        double acc = b2[c];
        for (int h = 0; h < hidden_dim_; ++h) acc += w2[static_cast<size_t>(c) * hidden_dim_ + h] * hidden[h];
        scores[c] = acc;
    }
    return scores;
}

void Model::backward(std::span<const double> x, std::span<const double> upstream, std::span<double> grad_out,
                     std::span<double> dx) const {
    if (static_cast<int>(x.size()) != input_dim_) throw ContractViolation("Model::backward: input dim mismatch");
    if (static_cast<int>(upstream.size()) != class_count_)
        throw ContractViolation("Model::backward: upstream must have one entry per class");
    if (grad_out.size() != params_.size()) throw ContractViolation("Model::backward: grad_out size mismatch");
    if (!dx.empty() && static_cast<int>(dx.size()) != input_dim_)
        throw ContractViolation("Model::backward: dx size mismatch");

    if (kind_ == Kind::linear) {
        double* gw = grad_out.data();
        double* gb = grad_out.data() + static_cast<size_t>(class_count_) * input_dim_;
        const double* w = params_.data();
        for (int c = 0; c < class_count_; ++c) {
            const double u = upstream[c];
            gb[c] += u;
            for (int d = 0; d < input_dim_; ++d) {
                gw[static_cast<size_t>(c) * input_dim_ + d] += u * x[d];
                if (!dx.empty()) dx[d] += u * w[static_cast<size_t>(c) * input_dim_ + d];
            }
        }
        return;
    }

    // Recompute the hidden layer; models are small enough that caching
    // activations is not worth the interface complexity.
    std::vector<double> pre(hidden_dim_);
    std::vector<double> hidden(hidden_dim_);
    const double* w1 = params_.data();
    const double* b1 = params_.data() + w1_size();
    for (int h = 0; h < hidden_dim_; ++h) {
        double acc = b1[h];
        for (int d = 0; d < input_dim_; ++d) acc += w1[static_cast<size_t>(h) * input_dim_ + d] * x[d];
        pre[h] = acc;
        hidden[h] = acc > 0.0 ? acc : 0.0;
    }

    const double* w2 = params_.data() + w2_offset();
    double* gw1 = grad_out.data();
    double* gb1 = grad_out.data() + w1_size();
    double* gw2 = grad_out.data() + w2_offset();
    double* gb2 = grad_out.data() + params_.size() - class_count_;

    std::vector<double> dhidden(hidden_dim_, 0.0);
    for (int c = 0; c < class_count_; ++c) {
        const double u = upstream[c];
        gb2[c] += u;
        for (int h = 0; h < hidden_dim_; ++h) {
            gw2[static_cast<size_t>(c) * hidden_dim_ + h] += u * hidden[h];
            dhidden[h] += u * w2[static_cast<size_t>(c) * hidden_dim_ + h];
        }
    }
    for (int h = 0; h < hidden_dim_; ++h) {
        if (pre[h] <= 0.0) continue;  // relu'(0) = 0
        const double dh = dhidden[h];
        gb1[h] += dh;
        for (int d = 0; d < input_dim_; ++d) {
            gw1[static_cast<size_t>(h) * input_dim_ + d] += dh * x[d];
            if (!dx.empty()) dx[d] += dh * w1[static_cast<size_t>(h) * input_dim_ + d];
        }
    }
}

void Model::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open checkpoint for writing: " + path);
    out << "osmargin-model v1\n";
    out << "kind " << (kind_ == Kind::linear ? "linear" : "mlp") << "\n";
    out << "input_dim " << input_dim_ << "\n";
    out << "hidden_dim " << hidden_dim_ << "\n";
    out << "class_count " << class_count_ << "\n";
    out << "params " << params_.size() << "\n";
    for (double p : params_) out << format_double(p) << "\n";
    if (!out) throw ParseError("failed writing checkpoint: " + path);
}

Model Model::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open checkpoint: " + path);
    std::string line;
    auto expect_line = [&](const std::string& what) {
        if (!std::getline(in, line)) throw ParseError(path + ": truncated checkpoint (expected " + what + ")");
        return line;
    };
    if (expect_line("header") != "osmargin-model v1") throw ParseError(path + ": not an osmargin checkpoint");
    auto field = [&](const std::string& name) {
        expect_line(name);
        if (line.rfind(name + " ", 0) != 0) throw ParseError(path + ": expected '" + name + "' line");
        return line.substr(name.size() + 1);
    };
    const std::string kind_text = field("kind");
    if (kind_text != "linear" && kind_text != "mlp") throw ParseError(path + ": unknown model kind " + kind_text);
    const int input_dim = static_cast<int>(parse_double(field("input_dim"), path));
    const int hidden_dim = static_cast<int>(parse_double(field("hidden_dim"), path));
    const int class_count = static_cast<int>(parse_double(field("class_count"), path));
    const size_t count = static_cast<size_t>(parse_double(field("params"), path));

    Model model = kind_text == "linear" ? Model::linear(input_dim, class_count)
                                        : Model::mlp(input_dim, hidden_dim, class_count);
    if (model.params_.size() != count) throw ParseError(path + ": parameter count does not match dims");
    for (size_t i = 0; i < count; ++i) model.params_[i] = parse_double(expect_line("parameter"), path);
    return model;
}

}  // namespace osm
