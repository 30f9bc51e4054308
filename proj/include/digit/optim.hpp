#pragma once

#include <cmath>
#include <vector>

#include "digit/matrix.hpp"

namespace digit {

/// Adam over a flat list of parameter tensors.
template <typename T>
class Adam {
public:
    Adam(double beta1 = 0.9, double beta2 = 0.98, double eps = 1e-8)
        : beta1_(beta1), beta2_(beta2), eps_(eps) {}

    void step(std::vector<MatT<T>*> params, const std::vector<const MatT<T>*>& grads, double lr) {
        if (m_.empty()) {
            for (auto* p : params) {
                m_.emplace_back(p->rows, p->cols);
                v_.emplace_back(p->rows, p->cols);
            }
        }
        ++t_;
        const double bc1 = 1.0 - std::pow(beta1_, t_);
        const double bc2 = 1.0 - std::pow(beta2_, t_);
        for (size_t i = 0; i < params.size(); ++i) {
            MatT<T>& p = *params[i];
            const MatT<T>& g = *grads[i];
            MatT<T>& m = m_[i];
            MatT<T>& v = v_[i];
            for (size_t k = 0; k < p.v.size(); ++k) {
                const double gk = g.v[k];
                m.v[k] = static_cast<T>(beta1_ * m.v[k] + (1.0 - beta1_) * gk);
                v.v[k] = static_cast<T>(beta2_ * v.v[k] + (1.0 - beta2_) * gk * gk);
                const double mhat = m.v[k] / bc1;
                const double vhat = v.v[k] / bc2;
                p.v[k] -= static_cast<T>(lr * mhat / (std::sqrt(vhat) + eps_));
            }
        }
    }

    long steps() const { return t_; }

private:
    double beta1_, beta2_, eps_;
    long t_ = 0;
    std::vector<MatT<T>> m_, v_;
};

/// Linear warmup to peak, then inverse square-root decay. 1-based step.
inline double inverse_sqrt_lr(long step, double peak, long warmup_steps) {
    if (warmup_steps < 1) warmup_steps = 1;
    if (step <= warmup_steps) return peak * static_cast<double>(step) / warmup_steps;
    return peak * std::sqrt(static_cast<double>(warmup_steps) / static_cast<double>(step));
}

}  // namespace digit
