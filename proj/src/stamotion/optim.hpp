#pragma once

#include <cmath>
#include <vector>

#include "stamotion/tensor.hpp"

namespace stamotion {

// Per-parameter Adam state (Kingma & Ba), bias-corrected moments.
template <typename T>
struct AdamStateT {
    long step = 0;
    TensorT<T> m;
    TensorT<T> v;
    T learning_rate;
    T beta1 = T(0.9);
    T beta2 = T(0.999);
    T epsilon = T(1e-8);

    explicit AdamStateT(const std::vector<int>& shape, T lr = T(1e-3))
        : m(TensorT<T>::zeros(shape)), v(TensorT<T>::zeros(shape)), learning_rate(lr) {}
    AdamStateT() : learning_rate(T(1e-3)) {}
};

template <typename T>
void adam_step(AdamStateT<T>& state, ParameterT<T>& param) {
    check_contract(param.grad.shape == param.value.shape,
                   "adam_step: gradient shape mismatch for " + param.name);
    if (!param.grad.all_finite())
        throw NumericError("adam_step: non-finite gradient in parameter '" + param.name + "'");
    state.step += 1;
    const T b1 = state.beta1, b2 = state.beta2;
    const T bc1 = T(1) - std::pow(b1, static_cast<T>(state.step));
    const T bc2 = T(1) - std::pow(b2, static_cast<T>(state.step));
    for (std::size_t k = 0; k < param.value.data.size(); ++k) {
        const T gk = param.grad.data[k];
        state.m.data[k] = b1 * state.m.data[k] + (T(1) - b1) * gk;
        state.v.data[k] = b2 * state.v.data[k] + (T(1) - b2) * gk * gk;
        const T mhat = state.m.data[k] / bc1;
        const T vhat = state.v.data[k] / bc2;
        param.value.data[k] -= state.learning_rate * mhat / (std::sqrt(vhat) + state.epsilon);
    }
}

// Optimizer over a parameter list; states created lazily on first step.
template <typename T>
class AdamT {
  public:
    explicit AdamT(T lr) : lr_(lr) {}

    void set_learning_rate(T lr) {
        lr_ = lr;
        for (auto& s : states_) s.learning_rate = lr;
    }
    T learning_rate() const { return lr_; }

    void step(std::vector<ParameterT<T>*>& params) {
        if (states_.empty()) {
            states_.reserve(params.size());
            for (auto* p : params) states_.emplace_back(p->value.shape, lr_);
        }
        check_contract(states_.size() == params.size(), "adam: parameter list changed size");
        for (std::size_t i = 0; i < params.size(); ++i) adam_step(states_[i], *params[i]);
    }

  private:
    T lr_;
    std::vector<AdamStateT<T>> states_;
};

// Learning-rate plateau rule: divide by `factor` whenever the monitored
// validation value fails to improve for `patience` consecutive epochs.
struct PlateauScheduler {
    double lr;
    double factor;
    int patience;
    double best = std::numeric_limits<double>::infinity();
    int stale_epochs = 0;

    PlateauScheduler(double initial_lr, double decay_factor, int patience_epochs)
        : lr(initial_lr), factor(decay_factor), patience(patience_epochs) {}

    // Returns true if the learning rate was decayed this epoch.
    bool observe(double validation_value) {
        if (validation_value < best) {
            best = validation_value;
            stale_epochs = 0;
            return false;
        }
        stale_epochs += 1;
        if (stale_epochs >= patience) {
            lr /= factor;
            stale_epochs = 0;
            return true;
        }
        return false;
    }
};

}  // namespace stamotion
