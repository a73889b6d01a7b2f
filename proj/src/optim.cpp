#include "osmargin/optim.hpp"

#include <cmath>

namespace osm {

namespace {
constexpr double kPi = 3.141592653589793238462643383279502884;
}

void LrSchedule::validate() const {
    if (kind == Kind::cosine_warm_restart) {
        if (period_epochs < 1) throw ContractViolation("LrSchedule: period_epochs must be >= 1");
        if (warmup_epochs < 0 || warmup_epochs >= period_epochs)
            throw ContractViolation("LrSchedule: need 0 <= warmup_epochs < period_epochs");
        if (min_lr < 0.0) throw ContractViolation("LrSchedule: min_lr must be >= 0");
    } else {
        if (!(decay_rate > 0.0) || decay_rate > 1.0)
            throw ContractViolation("LrSchedule: decay_rate must be in (0, 1]");
    }
}

double lr_at(const LrSchedule& schedule, double base_lr, int epoch) {
    schedule.validate();
    if (epoch < 0) throw ContractViolation("lr_at: epoch must be >= 0");
    if (schedule.kind == LrSchedule::Kind::exponential_decay) return base_lr * std::pow(schedule.decay_rate, epoch);

    const int t = epoch % schedule.period_epochs;
    if (t < schedule.warmup_epochs) return base_lr * (t + 1) / schedule.warmup_epochs;
    const double progress =
        static_cast<double>(t - schedule.warmup_epochs) / (schedule.period_epochs - schedule.warmup_epochs);
    return schedule.min_lr + (base_lr - schedule.min_lr) * 0.5 * (1.0 + std::cos(kPi * progress));
}

void sgd_step(std::span<double> params, std::span<const double> grads, std::span<double> velocity,
              const SgdConfig& config, double lr) {
    if (grads.size() != params.size() || velocity.size() != params.size())
        throw ContractViolation("sgd_step: params/grads/velocity shapes differ");
    for (size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i] + config.weight_decay * params[i];
        velocity[i] = config.momentum * velocity[i] - lr * g;
        params[i] += velocity[i];
    }
}

Optimizer::Optimizer(const OptimizerConfig& config, size_t param_count) : config_(config) {
    if (config.kind == OptimizerConfig::Kind::sgd) {
        velocity_.assign(param_count, 0.0);
    } else {
        moment1_.assign(param_count, 0.0);
        moment2_.assign(param_count, 0.0);
    }
}

void Optimizer::step(std::span<double> params, std::span<const double> grads, double lr) {
    if (config_.kind == OptimizerConfig::Kind::sgd) {
        sgd_step(params, grads, velocity_, config_.sgd, lr);
        return;
    }
    if (grads.size() != params.size() || moment1_.size() != params.size())
        throw ContractViolation("Optimizer::step: shape mismatch");
    const AdamConfig& adam = config_.adam;
    ++step_count_;
    const double bias1 = 1.0 - std::pow(adam.beta1, step_count_);
    const double bias2 = 1.0 - std::pow(adam.beta2, step_count_);
    for (size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i] + adam.weight_decay * params[i];
        moment1_[i] = adam.beta1 * moment1_[i] + (1.0 - adam.beta1) * g;
        moment2_[i] = adam.beta2 * moment2_[i] + (1.0 - adam.beta2) * g * g;
        const double m_hat = moment1_[i] / bias1;
        const double v_hat = moment2_[i] / bias2;
        params[i] -= lr * m_hat / (std::sqrt(v_hat) + adam.eps);
    }
}

}  // namespace osm
