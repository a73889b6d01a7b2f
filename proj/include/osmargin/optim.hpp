#ifndef OSMARGIN_OPTIM_HPP
#define OSMARGIN_OPTIM_HPP

#include <span>
#include <vector>

#include "osmargin/error.hpp"

namespace osm {

struct SgdConfig {
    double momentum = 0.9;
    double weight_decay = 0.0005;
};

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.0;
};

struct OptimizerConfig {
    enum class Kind { sgd, adam };
    Kind kind = Kind::sgd;
    double initial_lr = 0.01;
    SgdConfig sgd;
    AdamConfig adam;
};

// Learning rate as a function of epoch. Cosine annealing ramps linearly for
// warmup_epochs, then decays by half-cosine to min_lr, restarting every
// period_epochs; exponential decay multiplies by decay_rate each epoch.
struct LrSchedule {
    enum class Kind { cosine_warm_restart, exponential_decay };
    Kind kind = Kind::cosine_warm_restart;
    int period_epochs = 100;
    int warmup_epochs = 5;
    double min_lr = 0.0;
    double decay_rate = 0.97;

    void validate() const;
};

double lr_at(const LrSchedule& schedule, double base_lr, int epoch);

// One SGD+momentum step with L2 decay coupled into the gradient:
//   g' = grad + weight_decay * param;  v <- momentum*v - lr*g';  param <- param + v.
void sgd_step(std::span<double> params, std::span<const double> grads, std::span<double> velocity,
              const SgdConfig& config, double lr);

// Stateful wrapper owning velocity (SGD) or first/second moments (Adam).
class Optimizer {
public:
    Optimizer(const OptimizerConfig& config, size_t param_count);

    void step(std::span<double> params, std::span<const double> grads, double lr);

    const OptimizerConfig& config() const { return config_; }

private:
    OptimizerConfig config_;
    std::vector<double> velocity_;
    std::vector<double> moment1_;
    std::vector<double> moment2_;
    long step_count_ = 0;
};

}  // namespace osm

#endif
