#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "hgib/errors.hpp"
#include "hgib/matrix.hpp"

namespace hgib {

// Adam with bias correction. One state instance drives a fixed group of
// parameter matrices; moments are allocated on the first step.
class AdamState {
public:
    explicit AdamState(double learning_rate = 0.01, double beta1 = 0.9, double beta2 = 0.999,
                       double eps = 1e-8)
        : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    std::int64_t step_count() const { return step_; }
    double learning_rate() const { return lr_; }

    // params[i] is updated in place from grads[i].
    void step(const std::vector<Matrix*>& params, const std::vector<const Matrix*>& grads) {
        if (params.size() != grads.size()) throw ShapeError("adam_step: params/grads count mismatch");
        if (m_.empty()) {
            for (const Matrix* p : params) {
                m_.emplace_back(Matrix::zeros(p->rows, p->cols));
                v_.emplace_back(Matrix::zeros(p->rows, p->cols));
            }
        }
        if (m_.size() != params.size()) throw ShapeError("adam_step: parameter group changed size");
        ++step_;
        const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(step_));
        const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(step_));
        for (std::size_t i = 0; i < params.size(); ++i) {
            Matrix& p = *params[i];
            const Matrix& g = *grads[i];
            if (!p.same_shape(g) || !p.same_shape(m_[i]))
                throw ShapeError("adam_step: shape mismatch in parameter group");
            for (std::size_t j = 0; j < p.v.size(); ++j) {
                m_[i].v[j] = beta1_ * m_[i].v[j] + (1.0 - beta1_) * g.v[j];
                v_[i].v[j] = beta2_ * v_[i].v[j] + (1.0 - beta2_) * g.v[j] * g.v[j];
                const double mhat = m_[i].v[j] / bc1;
                const double vhat = v_[i].v[j] / bc2;
                p.v[j] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
            }
        }
    }

private:
    double lr_, beta1_, beta2_, eps_;
    std::int64_t step_ = 0;
    std::vector<Matrix> m_, v_;
};

}  // namespace hgib
