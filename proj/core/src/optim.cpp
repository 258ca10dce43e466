#include "stdgi/optim.hpp"

#include <cmath>
#include <string>

namespace stdgi {

AdamState AdamState::init(const std::vector<Tensor>& params) {
    AdamState s;
    s.first_moment.reserve(params.size());
    s.second_moment.reserve(params.size());
    for (const Tensor& p : params) {
        s.first_moment.emplace_back(p.numel(), 0.0);
        s.second_moment.emplace_back(p.numel(), 0.0);
    }
    return s;
}

void adam_step(std::vector<Tensor>& params, AdamState& state, double lr) {
    if (lr <= 0.0) throw ConfigError("adam_step: learning rate must be positive");
    if (params.size() != state.first_moment.size()) {
        throw DimensionError("adam_step: state tracks " + std::to_string(state.first_moment.size()) +
                             " parameters, got " + std::to_string(params.size()));
    }
    state.step_count += 1;
    const double b1 = state.beta1, b2 = state.beta2;
    const double bias1 = 1.0 - std::pow(b1, static_cast<double>(state.step_count));
    const double bias2 = 1.0 - std::pow(b2, static_cast<double>(state.step_count));
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Tensor& p = params[pi];
        std::vector<double>& m = state.first_moment[pi];
        std::vector<double>& v = state.second_moment[pi];
        if (m.size() != p.numel()) {
            throw DimensionError("adam_step: moment buffer size " + std::to_string(m.size()) +
                                 " does not match parameter " + shape_str(p));
        }
        const double* g = p.grad();
        double* pv = p.data();
        for (std::size_t i = 0; i < m.size(); ++i) {
            m[i] = b1 * m[i] + (1.0 - b1) * g[i];
            v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
            const double mhat = m[i] / bias1;
            const double vhat = v[i] / bias2;
            pv[i] -= lr * mhat / (std::sqrt(vhat) + state.epsilon);
        }
    }
}

void LrSchedule::validate() const {
    if (base_lr <= 0.0) throw ConfigError("lr schedule: base_lr must be positive");
    if (factor <= 0.0 || factor >= 1.0) throw ConfigError("lr schedule: factor must be in (0,1)");
    if (warm_epochs < 1 || period < 1) {
        throw ConfigError("lr schedule: warm_epochs and period must be >= 1");
    }
}

double lr_at_epoch(const LrSchedule& sched, int epoch) {
    sched.validate();
    if (epoch < 0) throw ContractError("lr_at_epoch: epoch must be >= 0");
    int decays = 0;
    // Decay milestones at warm_epochs + period*i for i = 1, 2, ...
    if (epoch >= sched.warm_epochs + sched.period) {
        decays = (epoch - sched.warm_epochs) / sched.period;
    }
    return sched.base_lr * std::pow(sched.factor, static_cast<double>(decays));
}

Tensor glorot_init(int fan_in, int fan_out, Rng& rng) {
    if (fan_in < 1 || fan_out < 1) throw ContractError("glorot_init: fans must be >= 1");
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Tensor t = Tensor::zeros({fan_in, fan_out});
    double* v = t.data();
    for (std::size_t i = 0; i < t.numel(); ++i) v[i] = rng.uniform(-bound, bound);
    return t;
}

}  // namespace stdgi
