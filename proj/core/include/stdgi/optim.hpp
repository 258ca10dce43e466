#pragma once

#include <cstdint>
#include <vector>

#include "stdgi/rng.hpp"
#include "stdgi/tensor.hpp"

namespace stdgi {

// Adam with bias correction. Moment buffers are keyed by position in the
// parameter list, so the same list must be passed to every step.
struct AdamState {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    long step_count = 0;
    std::vector<std::vector<double>> first_moment;
    std::vector<std::vector<double>> second_moment;

    static AdamState init(const std::vector<Tensor>& params);
};

// One Adam update from the gradients currently held in `params`. Gradients
// are left untouched; callers zero them before the next forward pass.
void adam_step(std::vector<Tensor>& params, AdamState& state, double lr);

// Step-decay schedule: the learning rate drops by `factor` at epochs
// warm_epochs + period, warm_epochs + 2*period, ...
struct LrSchedule {
    double base_lr = 1e-3;
    int warm_epochs = 20;
    int period = 30;
    double factor = 0.1;

    void validate() const;
};

double lr_at_epoch(const LrSchedule& sched, int epoch);

// Uniform Glorot initialization in +-sqrt(6 / (fan_in + fan_out)).
Tensor glorot_init(int fan_in, int fan_out, Rng& rng);

}  // namespace stdgi
