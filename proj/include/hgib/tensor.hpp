#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "hgib/errors.hpp"
#include "hgib/matrix.hpp"
#include "hgib/rng.hpp"

namespace hgib {

using EigenRowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using EMap = Eigen::Map<EigenRowMajor>;
using CEMap = Eigen::Map<const EigenRowMajor>;

inline EMap emap(Matrix& m) { return EMap(m.v.data(), m.rows, m.cols); }
inline CEMap emap(const Matrix& m) { return CEMap(m.v.data(), m.rows, m.cols); }

class Tape;

// Handle to a node on a tape. Cheap to copy; valid as long as the tape lives.
class Value {
public:
    Value() = default;
    Value(Tape* tape, int id) : tape_(tape), id_(id) {}

    const Matrix& val() const;
    const Matrix& grad() const;
    bool requires_grad() const;
    int rows() const { return val().rows; }
    int cols() const { return val().cols; }
    Tape* tape() const { return tape_; }
    int id() const { return id_; }
    bool valid() const { return tape_ != nullptr; }

private:
    Tape* tape_ = nullptr;
    int id_ = -1;
};

// Backward rule of one recorded operation: receives the tape and the id of
// the operation's own output node (whose adjoint is fully accumulated).
using BackwardFn = std::function<void(Tape&, int out_id)>;

// Reverse-mode tape. Rebuilt every forward pass (define-by-run); nodes are
// recorded in topological order, so one reverse sweep propagates all adjoints.
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Value input(Matrix m, bool requires_grad) {
        if (!m.all_finite()) throw NonFiniteError("tape input contains NaN/Inf");
        nodes_.emplace_back();
        TapeNode& n = nodes_.back();
        n.val = std::move(m);
        n.requires_grad = requires_grad;
        n.keep_grad = requires_grad;
        return Value(this, static_cast<int>(nodes_.size()) - 1);
    }

    Value constant(Matrix m) { return input(std::move(m), false); }
    Value param(Matrix m) { return input(std::move(m), true); }

    // Records a computed node. `backward` is dropped when no input needs
    // gradients (forward-only inference costs nothing extra).
    Value record(Matrix out, bool requires_grad, BackwardFn backward, const char* op) {
        for (double x : out.v)
            if (!std::isfinite(x)) throw NonFiniteError(std::string("non-finite value in op ") + op);
        nodes_.emplace_back();
        TapeNode& n = nodes_.back();
        n.val = std::move(out);
        n.requires_grad = requires_grad;
        if (requires_grad) n.backward = std::move(backward);
        n.op = op;
        return Value(this, static_cast<int>(nodes_.size()) - 1);
    }

    const Matrix& value_of(int id) const { return nodes_[id].val; }
    const Matrix& grad_of(int id) const { return nodes_[id].grad; }
    bool requires_grad(int id) const { return nodes_[id].requires_grad; }

    void accumulate_grad(int id, const Matrix& g) {
        TapeNode& n = nodes_[id];
        if (!n.requires_grad) return;
        touch_grad(n);
        for (std::size_t i = 0; i < g.v.size(); ++i) n.grad.v[i] += g.v[i];
    }

    // Adjoint buffer for in-place accumulation; nullptr when the node does
    // not participate in differentiation.
    Matrix* grad_buffer(int id) {
        TapeNode& n = nodes_[id];
        if (!n.requires_grad) return nullptr;
        touch_grad(n);
        return &n.grad;
    }

    // Reverse sweep from a scalar loss. Visits every node at most once;
    // adjoints of intermediates are released right after consumption.
    void backward(Value loss) {
        if (loss.tape() != this) throw ShapeError("backward: loss from another tape");
        TapeNode& ln = nodes_[loss.id()];
        if (ln.val.size() != 1) throw ShapeError("backward: loss must be scalar");
        if (!ln.requires_grad) return;
        touch_grad(ln);
        ln.grad.v[0] = 1.0;
        for (int id = loss.id(); id >= 0; --id) {
            TapeNode& n = nodes_[id];
            if (!n.requires_grad || n.grad.rows == 0) continue;
            ++backward_visits_;
            if (n.backward) n.backward(*this, id);
            if (!n.keep_grad) n.grad = Matrix();
        }
    }

    std::size_t num_nodes() const { return nodes_.size(); }
    std::size_t backward_visits() const { return backward_visits_; }

private:
    struct TapeNode {
        Matrix val;
        Matrix grad;
        bool requires_grad = false;
        bool keep_grad = false;
        BackwardFn backward;
        const char* op = "";
    };

    static void touch_grad(TapeNode& n) {
        if (n.grad.rows == 0) n.grad = Matrix::zeros(n.val.rows, n.val.cols);
    }

    std::deque<TapeNode> nodes_;
    std::size_t backward_visits_ = 0;
};

inline const Matrix& Value::val() const { return tape_->value_of(id_); }
inline const Matrix& Value::grad() const { return tape_->grad_of(id_); }
inline bool Value::requires_grad() const { return tape_->requires_grad(id_); }

namespace detail {

inline void require_same_tape(Value a, Value b, const char* op) {
    if (a.tape() != b.tape()) throw ShapeError(std::string(op) + ": operands on different tapes");
}

inline void require_same_shape(Value a, Value b, const char* op) {
    if (!a.val().same_shape(b.val()))
        throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a.val()) + " vs " +
                         shape_string(b.val()));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Linear algebra
// ---------------------------------------------------------------------------

inline Value matmul(Value a, Value b) {
    detail::require_same_tape(a, b, "matmul");
    const Matrix& av = a.val();
    const Matrix& bv = b.val();
    if (av.cols != bv.rows)
        throw ShapeError("matmul: inner dimensions " + shape_string(av) + " * " + shape_string(bv));
    Matrix out(av.rows, bv.cols);
    emap(out).noalias() = emap(av) * emap(bv);
    const int aid = a.id(), bid = b.id();
    return a.tape()->record(
        std::move(out), a.requires_grad() || b.requires_grad(),
        [aid, bid](Tape& t, int out_id) {
            const Matrix& g = t.grad_of(out_id);
            if (Matrix* ga = t.grad_buffer(aid))
                emap(*ga).noalias() += emap(g) * emap(t.value_of(bid)).transpose();
            if (Matrix* gb = t.grad_buffer(bid))
                emap(*gb).noalias() += emap(t.value_of(aid)).transpose() * emap(g);
        },
        "matmul");
}

// C = A^T B without materializing the transpose.
inline Value matmul_ta(Value a, Value b) {
    detail::require_same_tape(a, b, "matmul_ta");
    const Matrix& av = a.val();
    const Matrix& bv = b.val();
    if (av.rows != bv.rows)
        throw ShapeError("matmul_ta: inner dimensions " + shape_string(av) + "^T * " + shape_string(bv));
    Matrix out(av.cols, bv.cols);
    emap(out).noalias() = emap(av).transpose() * emap(bv);
    const int aid = a.id(), bid = b.id();
    return a.tape()->record(
        std::move(out), a.requires_grad() || b.requires_grad(),
        [aid, bid](Tape& t, int out_id) {
            const Matrix& g = t.grad_of(out_id);
            if (Matrix* ga = t.grad_buffer(aid))
                emap(*ga).noalias() += emap(t.value_of(bid)) * emap(g).transpose();
            if (Matrix* gb = t.grad_buffer(bid))
                emap(*gb).noalias() += emap(t.value_of(aid)) * emap(g);
        },
        "matmul_ta");
}

inline Value transpose(Value a) {
    const Matrix& av = a.val();
    Matrix out(av.cols, av.rows);
    for (int i = 0; i < av.rows; ++i)
        for (int j = 0; j < av.cols; ++j) out(j, i) = av(i, j);
    const int aid = a.id();
    return a.tape()->record(
        std::move(out), a.requires_grad(),
        [aid](Tape& t, int out_id) {
            const Matrix& g = t.grad_of(out_id);
            if (Matrix* ga = t.grad_buffer(aid))
                for (int i = 0; i < g.rows; ++i)
                    for (int j = 0; j < g.cols; ++j) (*ga)(j, i) += g(i, j);
        },
        "transpose");
}

// ---------------------------------------------------------------------------
// Elementwise
// ---------------------------------------------------------------------------

namespace detail {

template <typename Fwd, typename Bwd>
inline Value binary_elementwise(Value a, Value b, Fwd fwd, Bwd bwd, const char* op) {
    require_same_tape(a, b, op);
    require_same_shape(a, b, op);
    const Matrix& av = a.val();
    const Matrix& bv = b.val();
    Matrix out(av.rows, av.cols);
    for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] = fwd(av.v[i], bv.v[i]);
    const int aid = a.id(), bid = b.id();
    return a.tape()->record(
        std::move(out), a.requires_grad() || b.requires_grad(),
        [aid, bid, bwd](Tape& t, int out_id) {
            const Matrix& g = t.grad_of(out_id);
            const Matrix& av = t.value_of(aid);
            const Matrix& bv = t.value_of(bid);
            Matrix* ga = t.grad_buffer(aid);
            Matrix* gb = t.grad_buffer(bid);
            for (std::size_t i = 0; i < g.v.size(); ++i) {
                double da, db;
                bwd(av.v[i], bv.v[i], da, db);
                if (ga) ga->v[i] += g.v[i] * da;
                if (gb) gb->v[i] += g.v[i] * db;
            }
        },
        op);
}

}  // namespace detail

inline Value add(Value a, Value b) {
    return detail::binary_elementwise(
        a, b, [](double x, double y) { return x + y; },
        [](double, double, double& da, double& db) { da = 1.0; db = 1.0; }, "add");
}

inline Value sub(Value a, Value b) {
    return detail::binary_elementwise(
        a, b, [](double x, double y) { return x - y; },
        [](double, double, double& da, double& db) { da = 1.0; db = -1.0; }, "sub");
}

inline Value mul(Value a, Value b) {
    return detail::binary_elementwise(
        a, b, [](double x, double y) { return x * y; },
        [](double x, double y, double& da, double& db) { da = y; db = x; }, "mul");
}

inline Value scalar_mul(Value a, double c) {
    const Matrix& av = a.val();
    Matrix out = av;
    for (double& x : out.v) x *= c;
    const int aid = a.id();
    return a.tape()->record(
        std::move(out), a.requires_grad(),
        [aid, c](Tape& t, int out_id) {
            const Matrix& g = t.grad_of(out_id);
            if (Matrix* ga = t.grad_buffer(aid))
                for (std::size_t i = 0; i < g.v.size(); ++i) ga->v[i] += c * g.v[i];
        },
        "scalar_mul");
}

inline Value relu(Value a) {
    const Matrix& av = a.val();
    Matrix out = av;
    for (double& x : out.v) x = x > 0.0 ? x : 0.0;
    const int aid = a.id();
    return a.tape()->record(
        std::move(out), a.requires_grad(),
        [aid](Tape& t, int out_id) {
            const Matrix& g = t.grad_of(out_id);
            const Matrix& av = t.value_of(aid);
            if (Matrix* ga = t.grad_buffer(aid))
                for (std::size_t i = 0; i < g.v.size(); ++i)
                    if (av.v[i] > 0.0) ga->v[i] += g.v[i];
        },
        "relu");
}

inline Value log_elem(Value a) {
    const Matrix& av = a.val();
    Matrix out(av.rows, av.cols);
    for (std::size_t i = 0; i < out.v.size(); ++i) {
        if (av.v[i] <= 0.0) throw NonFiniteError("log_elem: non-positive input");
        out.v[i] = std::log(av.v[i]);
    }
    const int aid = a.id();
    return a.tape()->record(
        std::move(out), a.requires_grad(),
        [aid](Tape& t, int out_id) {
            const Matrix& g = t.grad_of(out_id);
            const Matrix& av = t.value_of(aid);
            if (Matrix* ga = t.grad_buffer(aid))
                for (std::size_t i = 0; i < g.v.size(); ++i) ga->v[i] += g.v[i] / av.v[i];
        },
        "log_elem");
}

inline Value exp_elem(Value a) {
    const Matrix& av = a.val();
    Matrix out(av.rows, av.cols);
    for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] = std::exp(av.v[i]);
    const int aid = a.id();
    return a.tape()->record(
        std::move(out), a.requires_grad(),
        [aid](Tape& t, int out_id) {
            const Matrix& g = t.grad_of(out_id);
            const Matrix& ov = t.value_of(out_id);
            if (Matrix* ga = t.grad_buffer(aid))
                for (std::size_t i = 0; i < g.v.size(); ++i) ga->v[i] += g.v[i] * ov.v[i];
        },
        "exp_elem");
}

// Zeroes entries where the fixed pattern is false; gradients are zeroed the
// same way.
inline Value apply_mask(Value a, std::shared_ptr<const std::vector<std::uint8_t>> pattern) {
    const Matrix& av = a.val();
    if (pattern->size() != av.v.size()) throw ShapeError("apply_mask: pattern size mismatch");
    Matrix out = av;
    for (std::size_t i = 0; i < out.v.size(); ++i)
        if (!(*pattern)[i]) out.v[i] = 0.0;
    const int aid = a.id();
    return a.tape()->record(
        std::move(out), a.requires_grad(),
        [aid, pattern](Tape& t, int out_id) {
            const Matrix& g = t.grad_of(out_id);
            if (Matrix* ga = t.grad_buffer(aid))
                for (std::size_t i = 0; i < g.v.size(); ++i)
                    if ((*pattern)[i]) ga->v[i] += g.v[i];
        },
        "apply_mask");
}

// ---------------------------------------------------------------------------
// Reductions
// ---------------------------------------------------------------------------

inline Value row_sum(Value a) {
    const Matrix& av = a.val();
    Matrix out(av.rows, 1);
    for (int i = 0; i < av.rows; ++i) {
        double s = 0.0;
        for (int j = 0; j < av.cols; ++j) s += av(i, j);
        out(i, 0) = s;
    }
    const int aid = a.id();
    return a.tape()->record(
        std::move(out), a.requires_grad(),
        [aid](Tape& t, int out_id) {
            const Matrix& g = t.grad_of(out_id);
            if (Matrix* ga = t.grad_buffer(aid))
                for (int i = 0; i < ga->rows; ++i)
                    for (int j = 0; j < ga->cols; ++j) (*ga)(i, j) += g(i, 0);
        },
        "row_sum");
}

inline Value col_sum(Value a) {
    const Matrix& av = a.val();
    Matrix out(av.cols, 1);
    for (int i = 0; i < av.rows; ++i)
        for (int j = 0; j < av.cols; ++j) out(j, 0) += av(i, j);
    const int aid = a.id();
    return a.tape()->record(
        std::move(out), a.requires_grad(),
        [aid](Tape& t, int out_id) {
            const Matrix& g = t.grad_of(out_id);
            if (Matrix* ga = t.grad_buffer(aid))
                for (int i = 0; i < ga->rows; ++i)
                    for (int j = 0; j < ga->cols; ++j) (*ga)(i, j) += g(j, 0);
        },
        "col_sum");
}

inline Value sum_all(Value a) {
    const Matrix& av = a.val();
    double s = 0.0;
    for (double x : av.v) s += x;
    const int aid = a.id();
    return a.tape()->record(
        Matrix::scalar(s), a.requires_grad(),
        [aid](Tape& t, int out_id) {
            const double g = t.grad_of(out_id).v[0];
            if (Matrix* ga = t.grad_buffer(aid))
                for (double& x : ga->v) x += g;
        },
        "sum_all");
}

inline Value mean_all(Value a) {
    const Matrix& av = a.val();
    double s = 0.0;
    for (double x : av.v) s += x;
    const double inv = 1.0 / static_cast<double>(av.v.size());
    const int aid = a.id();
    return a.tape()->record(
        Matrix::scalar(s * inv), a.requires_grad(),
        [aid, inv](Tape& t, int out_id) {
            const double g = t.grad_of(out_id).v[0] * inv;
            if (Matrix* ga = t.grad_buffer(aid))
                for (double& x : ga->v) x += g;
        },
        "mean_all");
}

// ---------------------------------------------------------------------------
// Row scaling (degree normalizations). Zero scale maps to zero output.
// ---------------------------------------------------------------------------

namespace detail {

// mode 0: divide rows by v_i; mode 1: divide rows by sqrt(v_i).
inline Value row_scale_impl(Value a, Value v, int mode, const char* op) {
    require_same_tape(a, v, op);
    const Matrix& av = a.val();
    const Matrix& vv = v.val();
    if (vv.rows != av.rows || vv.cols != 1)
        throw ShapeError(std::string(op) + ": scale vector must be " + std::to_string(av.rows) + "x1");
    Matrix out(av.rows, av.cols);
    std::vector<double> inv(av.rows, 0.0);
    for (int i = 0; i < av.rows; ++i) {
        const double d = vv(i, 0);
        if (mode == 0)
            inv[i] = d != 0.0 ? 1.0 / d : 0.0;
        else
            inv[i] = d > 0.0 ? 1.0 / std::sqrt(d) : 0.0;
        for (int j = 0; j < av.cols; ++j) out(i, j) = av(i, j) * inv[i];
    }
    const int aid = a.id(), vid = v.id();
    return a.tape()->record(
        std::move(out), a.requires_grad() || v.requires_grad(),
        [aid, vid, mode](Tape& t, int out_id) {
            const Matrix& g = t.grad_of(out_id);
            const Matrix& ov = t.value_of(out_id);
            const Matrix& vv = t.value_of(vid);
            Matrix* ga = t.grad_buffer(aid);
            Matrix* gv = t.grad_buffer(vid);
            for (int i = 0; i < g.rows; ++i) {
                const double d = vv(i, 0);
                double inv;
                if (mode == 0)
                    inv = d != 0.0 ? 1.0 / d : 0.0;
                else
                    inv = d > 0.0 ? 1.0 / std::sqrt(d) : 0.0;
                if (inv == 0.0) continue;
                double dot = 0.0;
                for (int j = 0; j < g.cols; ++j) {
                    if (ga) (*ga)(i, j) += g(i, j) * inv;
                    dot += g(i, j) * ov(i, j);
                }
                if (gv) {
                    // out = a / d            -> d(out)/dd = -out / d
                    // out = a / sqrt(d)      -> d(out)/dd = -out / (2d)
                    const double f = mode == 0 ? -1.0 / d : -0.5 / d;
                    (*gv)(i, 0) += dot * f;
                }
            }
        },
        op);
}

}  // namespace detail

inline Value row_scale_inv(Value a, Value v) { return detail::row_scale_impl(a, v, 0, "row_scale_inv"); }
inline Value row_scale_inv_sqrt(Value a, Value v) {
    return detail::row_scale_impl(a, v, 1, "row_scale_inv_sqrt");
}

// Each row divided by its own sum (rows summing to zero stay zero).
inline Value row_normalize(Value a) { return row_scale_inv(a, row_sum(a)); }

// out(i,j) = a(i,j) * w(j): one weight per column, broadcast down rows.
inline Value mul_rows_by_vec(Value a, Value w) {
    detail::require_same_tape(a, w, "mul_rows_by_vec");
    const Matrix& av = a.val();
    const Matrix& wv = w.val();
    if (wv.rows != av.cols || wv.cols != 1)
        throw ShapeError("mul_rows_by_vec: weight vector must be " + std::to_string(av.cols) + "x1");
    Matrix out(av.rows, av.cols);
    for (int i = 0; i < av.rows; ++i)
        for (int j = 0; j < av.cols; ++j) out(i, j) = av(i, j) * wv(j, 0);
    const int aid = a.id(), wid = w.id();
    return a.tape()->record(
        std::move(out), a.requires_grad() || w.requires_grad(),
        [aid, wid](Tape& t, int out_id) {
            const Matrix& g = t.grad_of(out_id);
            const Matrix& av = t.value_of(aid);
            const Matrix& wv = t.value_of(wid);
            Matrix* ga = t.grad_buffer(aid);
            Matrix* gw = t.grad_buffer(wid);
            for (int i = 0; i < g.rows; ++i)
                for (int j = 0; j < g.cols; ++j) {
                    if (ga) (*ga)(i, j) += g(i, j) * wv(j, 0);
                    if (gw) (*gw)(j, 0) += g(i, j) * av(i, j);
                }
        },
        "mul_rows_by_vec");
}

// ---------------------------------------------------------------------------
// Dropout
// ---------------------------------------------------------------------------

// Training: zero each entry with probability `rate`, scale survivors by
// 1/(1-rate). Inference (or rate 0): exact identity.
inline Value dropout(Value a, double rate, Rng& rng, bool training) {
    if (!(rate >= 0.0 && rate < 1.0)) throw DomainError("dropout: rate must be in [0,1)");
    if (!training || rate == 0.0) return a;
    const Matrix& av = a.val();
    const double scale = 1.0 / (1.0 - rate);
    auto mask = std::make_shared<std::vector<std::uint8_t>>(av.v.size());
    Matrix out(av.rows, av.cols);
    for (std::size_t i = 0; i < av.v.size(); ++i) {
        const bool keep = rng.uniform() >= rate;
        (*mask)[i] = keep;
        out.v[i] = keep ? av.v[i] * scale : 0.0;
    }
    const int aid = a.id();
    return a.tape()->record(
        std::move(out), a.requires_grad(),
        [aid, mask, scale](Tape& t, int out_id) {
            const Matrix& g = t.grad_of(out_id);
            if (Matrix* ga = t.grad_buffer(aid))
                for (std::size_t i = 0; i < g.v.size(); ++i)
                    if ((*mask)[i]) ga->v[i] += g.v[i] * scale;
        },
        "dropout");
}

// ---------------------------------------------------------------------------
// Softmax cross-entropy, summed over a fixed set of rows
// ---------------------------------------------------------------------------

inline Value softmax_cross_entropy(Value logits, std::shared_ptr<const std::vector<int>> labels,
                                   std::shared_ptr<const std::vector<std::uint8_t>> node_mask) {
    const Matrix& lv = logits.val();
    const int n = lv.rows, c = lv.cols;
    if (static_cast<int>(labels->size()) != n || static_cast<int>(node_mask->size()) != n)
        throw ShapeError("softmax_cross_entropy: labels/mask length != rows");
    double total = 0.0;
    int n_masked = 0;
    for (int i = 0; i < n; ++i) {
        if (!(*node_mask)[i]) continue;
        const int y = (*labels)[i];
        if (y < 0 || y >= c) throw ValidationError("softmax_cross_entropy: label out of range");
        ++n_masked;
        double mx = lv(i, 0);
        for (int j = 1; j < c; ++j) mx = std::max(mx, lv(i, j));
        double se = 0.0;
        for (int j = 0; j < c; ++j) se += std::exp(lv(i, j) - mx);
        total += mx + std::log(se) - lv(i, y);
    }
    if (n_masked == 0) throw ValidationError("softmax_cross_entropy: empty node mask");
    const int lid = logits.id();
    return logits.tape()->record(
        Matrix::scalar(total), logits.requires_grad(),
        [lid, labels, node_mask](Tape& t, int out_id) {
            const double g = t.grad_of(out_id).v[0];
            const Matrix& lv = t.value_of(lid);
            Matrix* gl = t.grad_buffer(lid);
            if (!gl) return;
            const int c = lv.cols;
            for (int i = 0; i < lv.rows; ++i) {
                if (!(*node_mask)[i]) continue;
                double mx = lv(i, 0);
                for (int j = 1; j < c; ++j) mx = std::max(mx, lv(i, j));
                double se = 0.0;
                for (int j = 0; j < c; ++j) se += std::exp(lv(i, j) - mx);
                for (int j = 0; j < c; ++j) {
                    const double p = std::exp(lv(i, j) - mx) / se;
                    (*gl)(i, j) += g * (p - (j == (*labels)[i] ? 1.0 : 0.0));
                }
            }
        },
        "softmax_cross_entropy");
}

}  // namespace hgib
