#pragma once

#include <memory>
#include <vector>

#include "hgib/hib.hpp"
#include "hgib/tensor.hpp"

namespace hgib {

struct LossOnTape {
    Value total;  // scalar, mean over layers of (ce + beta * kl)
    HIBLossBreakdown breakdown;
};

// Differentiable HIB loss over the unrolled flows: per layer l,
// loss_l = CE(yhat^(l)) + beta * meanKL(H^(l)); total = (1/L) sum_l loss_l.
inline LossOnTape hib_loss_t(const std::vector<Value>& structure_flow,
                             const std::vector<Value>& output_flow,
                             std::shared_ptr<const std::vector<int>> labels,
                             std::shared_ptr<const std::vector<std::uint8_t>> train_mask,
                             double beta) {
    if (structure_flow.empty() || structure_flow.size() != output_flow.size())
        throw ShapeError("hib_loss: structure/output flows must be nonempty and aligned");
    if (beta < 0.0) throw DomainError("hib_loss: beta must be >= 0");
    LossOnTape out;
    out.breakdown.beta = beta;
    Value acc;
    std::vector<double> ces, kls;
    for (std::size_t l = 0; l < structure_flow.size(); ++l) {
        Value ce = softmax_cross_entropy(output_flow[l], labels, train_mask);
        Value kl = kl_structure_term_t(structure_flow[l]);
        Value layer_loss = beta == 0.0 ? ce : add(ce, scalar_mul(kl, beta));
        ces.push_back(ce.val().v[0]);
        kls.push_back(kl.val().v[0]);
        acc = l == 0 ? layer_loss : add(acc, layer_loss);
    }
    out.total = scalar_mul(acc, 1.0 / static_cast<double>(structure_flow.size()));
    out.breakdown = combine_layer_losses(ces, kls, beta);
    return out;
}

}  // namespace hgib
