#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <vector>

#include "hgib/hypergraph.hpp"
#include "hgib/tensor.hpp"

namespace hgib {

// KL(Bernoulli(p) || Bernoulli(0.5)) in nats. The p in {0,1} limits evaluate
// exactly to ln 2.
inline double bernoulli_kl(double p) {
    if (!(p >= 0.0 && p <= 1.0)) throw DomainError("bernoulli_kl: p outside [0,1]");
    constexpr double kLn2 = 0.69314718055994530941723212145818;
    if (p == 0.0 || p == 1.0) return kLn2;
    return p * std::log(2.0 * p) + (1.0 - p) * std::log(2.0 * (1.0 - p));
}

namespace detail {

// d/dp KL(Bernoulli(p)||Bernoulli(0.5)) = ln p - ln(1-p), with logs clamped
// at ln(1e-12) so entries that reached exactly 0 or 1 keep a finite pull.
inline double bernoulli_kl_grad(double p) {
    constexpr double kFloor = 1e-12;
    return std::log(std::max(p, kFloor)) - std::log(std::max(1.0 - p, kFloor));
}

}  // namespace detail

// Mean Bernoulli-KL over all entries of a structure matrix (differentiable).
// Vectorized: the log(0) cases are floored and then multiplied by an exact
// zero coefficient, which reproduces the ln 2 endpoint limits.
inline Value kl_structure_term_t(Value h) {
    const Matrix& hv = h.val();
    using CArr = Eigen::Map<const Eigen::ArrayXd>;
    double total = 0.0;
    if (!hv.v.empty()) {
        CArr p(hv.v.data(), static_cast<Eigen::Index>(hv.v.size()));
        const double mn = p.minCoeff(), mx = p.maxCoeff();
        if (!(mn >= 0.0 && mx <= 1.0)) throw DomainError("kl_structure_term: entry outside [0,1]");
        constexpr double kGuard = 1e-300;
        total = (p * (2.0 * p).max(kGuard).log() + (1.0 - p) * (2.0 * (1.0 - p)).max(kGuard).log())
                    .sum();
    }
    const double inv = hv.v.empty() ? 0.0 : 1.0 / static_cast<double>(hv.v.size());
    const int hid = h.id();
    return h.tape()->record(
        Matrix::scalar(total * inv), h.requires_grad(),
        [hid, inv](Tape& t, int out_id) {
            const double g = t.grad_of(out_id).v[0] * inv;
            const Matrix& hv = t.value_of(hid);
            if (Matrix* gh = t.grad_buffer(hid)) {
                CArr p(hv.v.data(), static_cast<Eigen::Index>(hv.v.size()));
                Eigen::Map<Eigen::ArrayXd> out(gh->v.data(), static_cast<Eigen::Index>(gh->v.size()));
                constexpr double kFloor = 1e-12;  // clamped-log gradient
                out += g * (p.max(kFloor).log() - (1.0 - p).max(kFloor).log());
            }
        },
        "kl_structure_term");
}

inline double kl_structure_term(const Matrix& h) {
    double total = 0.0;
    for (double p : h.v) total += bernoulli_kl(p);
    return h.v.empty() ? 0.0 : total / static_cast<double>(h.v.size());
}

// Implicit zeros of the sparse form each contribute KL(0||0.5) = ln 2.
inline double kl_structure_term(const Hypergraph& h) {
    const double nm = static_cast<double>(h.n_vertices()) * h.n_hyperedges();
    if (nm == 0.0) return 0.0;
    constexpr double kLn2 = 0.69314718055994530941723212145818;
    double total = (nm - static_cast<double>(h.entries().size())) * kLn2;
    for (const auto& t : h.entries()) total += bernoulli_kl(t.w);
    return total / nm;
}

// Cross-entropy of softmax(y_hat) against labels, summed over masked nodes.
inline Value cross_entropy_term_t(Value y_hat, std::shared_ptr<const std::vector<int>> labels,
                                  std::shared_ptr<const std::vector<std::uint8_t>> train_mask) {
    return softmax_cross_entropy(y_hat, std::move(labels), std::move(train_mask));
}

inline double cross_entropy_term(const Matrix& y_hat, const std::vector<int>& labels,
                                 const std::vector<std::uint8_t>& train_mask) {
    Tape tape;
    Value v = softmax_cross_entropy(tape.constant(y_hat),
                                    std::make_shared<const std::vector<int>>(labels),
                                    std::make_shared<const std::vector<std::uint8_t>>(train_mask));
    return v.val().v[0];
}

// ---------------------------------------------------------------------------
// Loss assembly
// ---------------------------------------------------------------------------

struct HIBLayerLoss {
    double ce = 0.0;
    double kl = 0.0;
    double loss = 0.0;  // ce + beta * kl
};

struct HIBLossBreakdown {
    std::vector<HIBLayerLoss> per_layer;
    double total = 0.0;  // mean of layer losses
    double beta = 0.0;
};

// Pure arithmetic: per-layer loss = ce + beta*kl; total = mean over layers.
inline HIBLossBreakdown combine_layer_losses(const std::vector<double>& ce,
                                             const std::vector<double>& kl, double beta) {
    if (ce.size() != kl.size() || ce.empty())
        throw ShapeError("combine_layer_losses: need matching, nonempty ce/kl lists");
    HIBLossBreakdown b;
    b.beta = beta;
    double sum = 0.0;
    for (std::size_t l = 0; l < ce.size(); ++l) {
        HIBLayerLoss ll{ce[l], kl[l], ce[l] + beta * kl[l]};
        sum += ll.loss;
        b.per_layer.push_back(ll);
    }
    b.total = sum / static_cast<double>(ce.size());
    return b;
}

// Per-layer state of the unrolled network, as plain data.
struct LayerState {
    Hypergraph h;
    Matrix z;
    Matrix y_hat;
};

// Eager HIB loss over materialized layer states.
inline HIBLossBreakdown hib_loss(const std::vector<LayerState>& layer_states,
                                 const std::vector<int>& labels,
                                 const std::vector<std::uint8_t>& train_mask, double beta) {
    if (layer_states.empty()) throw ShapeError("hib_loss: need at least one layer");
    if (beta < 0.0) throw DomainError("hib_loss: beta must be >= 0");
    std::vector<double> ce, kl;
    for (const auto& s : layer_states) {
        ce.push_back(cross_entropy_term(s.y_hat, labels, train_mask));
        kl.push_back(kl_structure_term(s.h));
    }
    return combine_layer_losses(ce, kl, beta);
}

// ---------------------------------------------------------------------------
// Entrywise plug-in mutual information diagnostic
// ---------------------------------------------------------------------------

// Treats paired entries (h0_ij, hl_ij) as i.i.d. samples, quantizes each into
// `bins` uniform bins over [0,1] and returns the plug-in discrete mutual
// information in nats (>= 0). A coarse trend diagnostic, not an estimator of
// the matrix-level quantity.
inline double empirical_mi(const Matrix& h0, const Matrix& hl, int bins = 10) {
    if (!h0.same_shape(hl)) throw ShapeError("empirical_mi: dimension mismatch");
    if (bins < 2) throw DomainError("empirical_mi: bins must be >= 2");
    if (h0.v.empty()) return 0.0;
    const auto bin_of = [bins](double p) {
        int b = static_cast<int>(p * bins);
        if (b < 0) b = 0;
        if (b >= bins) b = bins - 1;
        return b;
    };
    std::vector<std::int64_t> joint(static_cast<std::size_t>(bins) * bins, 0);
    for (std::size_t i = 0; i < h0.v.size(); ++i)
        ++joint[static_cast<std::size_t>(bin_of(h0.v[i])) * bins + bin_of(hl.v[i])];
    std::vector<std::int64_t> pa(bins, 0), pb(bins, 0);
    for (int a = 0; a < bins; ++a)
        for (int b = 0; b < bins; ++b) {
            pa[a] += joint[static_cast<std::size_t>(a) * bins + b];
            pb[b] += joint[static_cast<std::size_t>(a) * bins + b];
        }
    const double total = static_cast<double>(h0.v.size());
    double mi = 0.0;
    for (int a = 0; a < bins; ++a)
        for (int b = 0; b < bins; ++b) {
            const std::int64_t c = joint[static_cast<std::size_t>(a) * bins + b];
            if (c == 0) continue;
            const double pj = c / total;
            mi += pj * std::log(pj * total * total / (static_cast<double>(pa[a]) * pb[b]));
        }
    return mi < 0.0 ? 0.0 : mi;
}

inline double empirical_mi(const Hypergraph& h0, const Hypergraph& hl, int bins = 10) {
    if (h0.n_vertices() != hl.n_vertices() || h0.n_hyperedges() != hl.n_hyperedges())
        throw ShapeError("empirical_mi: dimension mismatch");
    return empirical_mi(h0.dense(), hl.dense(), bins);
}

}  // namespace hgib
