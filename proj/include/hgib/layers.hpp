#pragma once

#include <memory>
#include <vector>

#include "hgib/cosine.hpp"
#include "hgib/hypergraph.hpp"
#include "hgib/tensor.hpp"

namespace hgib {

// Trainable weight matrix of one hypergraph convolution, d_in x d_out.
struct ConvWeights {
    Matrix theta;
};

// K elementwise attention head weight vectors, stored as a K x d matrix.
struct AttentionHeads {
    Matrix heads;

    int n_heads() const { return heads.rows; }
    int dim() const { return heads.cols; }
};

// ---------------------------------------------------------------------------
// Tape-level operators (differentiable)
// ---------------------------------------------------------------------------

// Dv^{-1} H De^{-1} H^T X Theta: two-stage vertex->hyperedge->vertex message
// passing. Differentiable w.r.t. H, X and Theta. Zero degrees propagate zeros.
inline Value spatial_conv_t(Value h, Value x, Value theta) {
    Value p = matmul(x, theta);
    Value q = row_scale_inv(matmul_ta(h, p), col_sum(h));
    return row_scale_inv(matmul(h, q), row_sum(h));
}

// Dv^{-1/2} H De^{-1} H^T Dv^{-1/2} X Theta (symmetric normalization).
inline Value spectral_conv_t(Value h, Value x, Value theta) {
    Value dv = row_sum(h);
    Value p = row_scale_inv_sqrt(matmul(x, theta), dv);
    Value q = row_scale_inv(matmul_ta(h, p), col_sum(h));
    return row_scale_inv_sqrt(matmul(h, q), dv);
}

// Hyperedge embeddings z_e = sum_u H(u,e) z_u / d(e); empty hyperedges embed
// to zero.
inline Value hyperedge_embed_t(Value h, Value z) {
    return row_scale_inv(matmul_ta(h, z), col_sum(h));
}

// Multi-head attention scores of Eq.-style hyperedge-vertex similarity;
// entries lie in [-1, 1].
inline Value attention_scores_t(Value z_v, Value z_e, Value phi) {
    return multihead_cosine(z_v, z_e, phi);
}

// Threshold-mask the attention matrix and convexly combine with the initial
// structure:
//   Htilde(v,e) = clamp(A(v,e), 0, 1) if A(v,e) >= epsilon else 0
//   H = alpha * H0 + (1 - alpha) * Htilde
// Gradients flow through retained, unclamped entries of A only (the hard
// threshold is a stop-gradient selection). alpha = 1 returns H0 bit-exactly.
inline Value mask_and_combine_t(Value a, std::shared_ptr<const Matrix> h0, double alpha,
                                double epsilon) {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw DomainError("mask_and_combine: alpha outside [0,1]");
    if (!(epsilon >= 0.0)) throw DomainError("mask_and_combine: epsilon must be >= 0");
    const Matrix& av = a.val();
    if (!av.same_shape(*h0))
        throw ShapeError("mask_and_combine: attention is " + shape_string(av) + ", H0 is " +
                         shape_string(*h0));
    Matrix out(av.rows, av.cols);
    auto keep = std::make_shared<std::vector<std::uint8_t>>(av.v.size(), 0);
    if (alpha == 1.0) {
        out = *h0;
    } else {
        for (std::size_t i = 0; i < av.v.size(); ++i) {
            double r = 0.0;
            if (av.v[i] >= epsilon) {
                if (av.v[i] <= 1.0) {
                    r = av.v[i] < 0.0 ? 0.0 : av.v[i];
                    (*keep)[i] = 1;
                } else {
                    r = 1.0;
                }
            }
            out.v[i] = alpha * h0->v[i] + (1.0 - alpha) * r;
        }
    }
    const int aid = a.id();
    const double pass = 1.0 - alpha;
    return a.tape()->record(
        std::move(out), a.requires_grad(),
        [aid, keep, pass](Tape& t, int out_id) {
            if (pass == 0.0) return;
            const Matrix& g = t.grad_of(out_id);
            if (Matrix* ga = t.grad_buffer(aid))
                for (std::size_t i = 0; i < g.v.size(); ++i)
                    if ((*keep)[i]) ga->v[i] += pass * g.v[i];
        },
        "mask_and_combine");
}

// ---------------------------------------------------------------------------
// Eager wrappers over the module's domain types
// ---------------------------------------------------------------------------

namespace detail {

template <typename Fn>
inline Matrix eval_on_scratch_tape(Fn&& fn) {
    Tape tape;
    return fn(tape).val();
}

}  // namespace detail

inline Matrix spatial_conv(const Hypergraph& h, const Matrix& x, const ConvWeights& w) {
    return detail::eval_on_scratch_tape([&](Tape& t) {
        return spatial_conv_t(t.constant(h.dense()), t.constant(x), t.constant(w.theta));
    });
}

inline Matrix spectral_conv(const Hypergraph& h, const Matrix& x, const ConvWeights& w) {
    return detail::eval_on_scratch_tape([&](Tape& t) {
        return spectral_conv_t(t.constant(h.dense()), t.constant(x), t.constant(w.theta));
    });
}

inline Matrix hyperedge_embed(const Hypergraph& h, const Matrix& z) {
    return detail::eval_on_scratch_tape(
        [&](Tape& t) { return hyperedge_embed_t(t.constant(h.dense()), t.constant(z)); });
}

inline Matrix attention_scores(const Matrix& z_v, const Matrix& z_e, const AttentionHeads& heads) {
    return detail::eval_on_scratch_tape([&](Tape& t) {
        return attention_scores_t(t.constant(z_v), t.constant(z_e), t.constant(heads.heads));
    });
}

inline Hypergraph mask_and_combine(const Matrix& a, const Hypergraph& h0, double alpha,
                                   double epsilon) {
    if (alpha == 1.0) {
        if (a.rows != h0.n_vertices() || a.cols != h0.n_hyperedges())
            throw ShapeError("mask_and_combine: attention shape mismatch");
        if (!(epsilon >= 0.0)) throw DomainError("mask_and_combine: epsilon must be >= 0");
        return h0;
    }
    auto h0d = std::make_shared<const Matrix>(h0.dense());
    Matrix out = detail::eval_on_scratch_tape(
        [&](Tape& t) { return mask_and_combine_t(t.constant(a), h0d, alpha, epsilon); });
    return Hypergraph::from_dense(out);
}

}  // namespace hgib
