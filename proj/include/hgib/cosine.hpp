#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <vector>

#include "hgib/tensor.hpp"

namespace hgib {

namespace detail {

// CSR + CSC view of the nonzero pattern of a row-major matrix. The pattern
// of z is unchanged by per-head reweighting, so one pattern serves all heads.
struct SparseView {
    int rows = 0, cols = 0;
    std::vector<int> row_ptr, row_col;   // CSR pattern
    std::vector<double> row_val;         // raw values, CSR order
    std::vector<int> col_ptr, col_row;   // CSC pattern
    std::vector<int> csc_to_csr;         // CSC position -> CSR position

    explicit SparseView(const Matrix& m) : rows(m.rows), cols(m.cols) {
        row_ptr.assign(rows + 1, 0);
        std::vector<int> col_count(cols, 0);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j)
                if (m(i, j) != 0.0) {
                    ++row_ptr[i + 1];
                    ++col_count[j];
                }
        for (int i = 0; i < rows; ++i) row_ptr[i + 1] += row_ptr[i];
        const int nnz = row_ptr[rows];
        row_col.resize(nnz);
        row_val.resize(nnz);
        col_ptr.assign(cols + 1, 0);
        for (int j = 0; j < cols; ++j) col_ptr[j + 1] = col_ptr[j] + col_count[j];
        col_row.resize(nnz);
        csc_to_csr.resize(nnz);
        std::vector<int> cur(col_ptr.begin(), col_ptr.end() - 1);
        int pos = 0;
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j)
                if (m(i, j) != 0.0) {
                    row_col[pos] = j;
                    row_val[pos] = m(i, j);
                    col_row[cur[j]] = i;
                    csc_to_csr[cur[j]] = pos;
                    ++cur[j];
                    ++pos;
                }
    }

    int nnz() const { return row_ptr[rows]; }
    double density() const {
        return rows && cols ? static_cast<double>(nnz()) / (static_cast<double>(rows) * cols) : 0.0;
    }
};

// Per-head row norms of z with rows reweighted by phi(head,:).
inline void head_row_norms(const Matrix& z, const Matrix& phi, std::vector<double>& norms) {
    const int n = z.rows, d = z.cols, k = phi.rows;
    norms.assign(static_cast<std::size_t>(n) * k, 0.0);
    for (int i = 0; i < n; ++i)
        for (int h = 0; h < k; ++h) {
            double s = 0.0;
            for (int j = 0; j < d; ++j) {
                const double w = z(i, j) * phi(h, j);
                s += w * w;
            }
            norms[static_cast<std::size_t>(i) * k + h] = std::sqrt(s);
        }
}

// Stacked normalized blocks: out(i, h*d + j) = z(i,j)*phi(h,j) / norm(i,h);
// zero-norm rows stay zero.
inline Matrix stack_normalized(const Matrix& z, const Matrix& phi, const std::vector<double>& norms) {
    const int n = z.rows, d = z.cols, k = phi.rows;
    Matrix out(n, k * d);
    for (int i = 0; i < n; ++i)
        for (int h = 0; h < k; ++h) {
            const double r = norms[static_cast<std::size_t>(i) * k + h];
            if (r == 0.0) continue;
            const double inv = 1.0 / r;
            for (int j = 0; j < d; ++j) out(i, h * d + j) = z(i, j) * phi(h, j) * inv;
        }
    return out;
}

struct MulticosContext {
    Matrix u, v;                  // stacked normalized blocks
    std::vector<double> ru, rv;   // per-head row norms
};

// Work threshold below which the support-aware path is not worth taking.
// Mutable so tests can force either path on small instances.
inline double& sparse_attention_min_flops() {
    static double v = 5e7;
    return v;
}

// Normalized per-head values in CSR order (out[p*k + h]) and, for streaming
// column traversals, the same values permuted into CSC order.
inline void fill_normalized_csr(const SparseView& s, const Matrix& phi,
                                const std::vector<double>& norms, std::vector<double>& out) {
    const int k = phi.rows;
    out.assign(static_cast<std::size_t>(s.nnz()) * k, 0.0);
    for (int i = 0; i < s.rows; ++i)
        for (int p = s.row_ptr[i]; p < s.row_ptr[i + 1]; ++p) {
            const int j = s.row_col[p];
            for (int h = 0; h < k; ++h) {
                const double r = norms[static_cast<std::size_t>(i) * k + h];
                out[static_cast<std::size_t>(p) * k + h] =
                    r > 0.0 ? s.row_val[p] * phi(h, j) / r : 0.0;
            }
        }
}

inline void permute_csr_to_csc(const SparseView& s, const std::vector<double>& csr_vals, int k,
                               std::vector<double>& csc_vals) {
    csc_vals.resize(csr_vals.size());
    for (int q = 0; q < s.nnz(); ++q) {
        const double* src = &csr_vals[static_cast<std::size_t>(s.csc_to_csr[q]) * k];
        double* dst = &csc_vals[static_cast<std::size_t>(q) * k];
        for (int h = 0; h < k; ++h) dst[h] = src[h];
    }
}

// One side of the sparse backward: for every stored nonzero (i,j) of `s`,
// a(j) = (1/K) <g_line(i,:), other_hat(:,j)>, then the normalization is
// unwound and the result lands in dphi. `g_line(i,:)` is row i of `g`;
// `oval_csc` holds the other side's normalized values in CSC order.
inline void sparse_phi_backward(const SparseView& s, const std::vector<double>& sval,
                                const std::vector<double>& snorms, const SparseView& other,
                                const std::vector<double>& oval_csc, const Matrix& z,
                                const Matrix& g, int k, Matrix& gphi) {
    const double invk = 1.0 / k;
    std::vector<double> a(static_cast<std::size_t>(s.cols) * k);
    std::vector<double> adotu(k);
    for (int i = 0; i < s.rows; ++i) {
        const int pb = s.row_ptr[i], pe = s.row_ptr[i + 1];
        if (pb == pe) continue;
        const double* grow = &g.v[static_cast<std::size_t>(i) * g.cols];
        std::fill(adotu.begin(), adotu.end(), 0.0);
        for (int p = pb; p < pe; ++p) {
            const int j = s.row_col[p];
            double* ap = &a[static_cast<std::size_t>(p - pb) * k];
            for (int h = 0; h < k; ++h) ap[h] = 0.0;
            const double* vh = &oval_csc[static_cast<std::size_t>(other.col_ptr[j]) * k];
            for (int q = other.col_ptr[j]; q < other.col_ptr[j + 1]; ++q, vh += k) {
                const double ge = grow[other.col_row[q]];
                if (ge == 0.0) continue;
                for (int h = 0; h < k; ++h) ap[h] += ge * vh[h];
            }
            const double* up = &sval[static_cast<std::size_t>(p) * k];
            for (int h = 0; h < k; ++h) adotu[h] += ap[h] * invk * up[h];
        }
        for (int p = pb; p < pe; ++p) {
            const int j = s.row_col[p];
            const double* ap = &a[static_cast<std::size_t>(p - pb) * k];
            const double* up = &sval[static_cast<std::size_t>(p) * k];
            for (int h = 0; h < k; ++h) {
                const double r = snorms[static_cast<std::size_t>(i) * k + h];
                if (r == 0.0) continue;
                const double dw = (ap[h] * invk - adotu[h] * up[h]) / r;
                gphi(h, j) += dw * z(i, j);
            }
        }
    }
}

}  // namespace detail

// Multi-head cosine similarity between rows of zv (n x d) and rows of
// ze (m x d): out(v,e) = (1/K) sum_i cos(zv_v * phi_i, ze_e * phi_i),
// phi is K x d. Rows whose reweighted norm is zero contribute 0.
//
// Dense inputs go through one stacked GEMM covering all heads. When both
// embedding sides are constants and sparse (the first structure-learning
// layer on bag-of-words features), a support-aware path computes the same
// quantities touching only stored nonzeros, with gradients for phi alone.
inline Value multihead_cosine(Value zv, Value ze, Value phi) {
    detail::require_same_tape(zv, ze, "multihead_cosine");
    detail::require_same_tape(zv, phi, "multihead_cosine");
    const Matrix& zvv = zv.val();
    const Matrix& zev = ze.val();
    const Matrix& phv = phi.val();
    if (zvv.cols != zev.cols || phv.cols != zvv.cols)
        throw ShapeError("multihead_cosine: embedding/head dimension mismatch");
    if (phv.rows < 1) throw ShapeError("multihead_cosine: need at least one head");
    const int n = zvv.rows, m = zev.rows, d = zvv.cols, k = phv.rows;

    const bool inputs_fixed = !zv.requires_grad() && !ze.requires_grad();
    bool use_sparse = false;
    std::shared_ptr<detail::SparseView> sv, se;
    if (inputs_fixed && 2.0 * n * m * d * k > detail::sparse_attention_min_flops()) {
        sv = std::make_shared<detail::SparseView>(zvv);
        se = std::make_shared<detail::SparseView>(zev);
        use_sparse = sv->density() < 0.3 && se->density() < 0.3;
    }

    if (!use_sparse) {
        auto ctx = std::make_shared<detail::MulticosContext>();
        detail::head_row_norms(zvv, phv, ctx->ru);
        detail::head_row_norms(zev, phv, ctx->rv);
        ctx->u = detail::stack_normalized(zvv, phv, ctx->ru);
        ctx->v = detail::stack_normalized(zev, phv, ctx->rv);
        Matrix out(n, m);
        emap(out).noalias() = emap(ctx->u) * emap(ctx->v).transpose() * (1.0 / k);
        const int zvid = zv.id(), zeid = ze.id(), phid = phi.id();
        return zv.tape()->record(
            std::move(out), zv.requires_grad() || ze.requires_grad() || phi.requires_grad(),
            [zvid, zeid, phid, ctx, n, m, d, k](Tape& t, int out_id) {
                const Matrix& g = t.grad_of(out_id);
                const Matrix& zvv = t.value_of(zvid);
                const Matrix& zev = t.value_of(zeid);
                const Matrix& phv = t.value_of(phid);
                Matrix* gzv = t.grad_buffer(zvid);
                Matrix* gze = t.grad_buffer(zeid);
                Matrix* gph = t.grad_buffer(phid);
                const double invk = 1.0 / k;
                Matrix gu(n, k * d), gv(m, k * d);
                emap(gu).noalias() = emap(g) * emap(ctx->v) * invk;
                emap(gv).noalias() = emap(g).transpose() * emap(ctx->u) * invk;
                // Unwind the per-row normalization: for w = z (.) phi_h,
                // u = w/|w| and dw = (du - (du.u)u)/|w| with du the gu block.
                auto unwind = [&](const Matrix& gstack, const Matrix& stack,
                                  const std::vector<double>& norms, const Matrix& zval, Matrix* gz) {
                    for (int i = 0; i < stack.rows; ++i)
                        for (int h = 0; h < k; ++h) {
                            const double r = norms[static_cast<std::size_t>(i) * k + h];
                            if (r == 0.0) continue;
                            double adotu = 0.0;
                            for (int j = 0; j < d; ++j)
                                adotu += gstack(i, h * d + j) * stack(i, h * d + j);
                            for (int j = 0; j < d; ++j) {
                                const double dw =
                                    (gstack(i, h * d + j) - adotu * stack(i, h * d + j)) / r;
                                if (gz) (*gz)(i, j) += dw * phv(h, j);
                                if (gph) (*gph)(h, j) += dw * zval(i, j);
                            }
                        }
                };
                unwind(gu, ctx->u, ctx->ru, zvv, gzv);
                unwind(gv, ctx->v, ctx->rv, zev, gze);
            },
            "multihead_cosine");
    }

    auto norms_u = std::make_shared<std::vector<double>>();
    auto norms_v = std::make_shared<std::vector<double>>();
    detail::head_row_norms(zvv, phv, *norms_u);
    detail::head_row_norms(zev, phv, *norms_v);
    auto uval = std::make_shared<std::vector<double>>();
    auto vval = std::make_shared<std::vector<double>>();
    detail::fill_normalized_csr(*sv, phv, *norms_u, *uval);
    detail::fill_normalized_csr(*se, phv, *norms_v, *vval);
    auto uval_csc = std::make_shared<std::vector<double>>();
    auto vval_csc = std::make_shared<std::vector<double>>();
    detail::permute_csr_to_csc(*sv, *uval, k, *uval_csc);
    detail::permute_csr_to_csc(*se, *vval, k, *vval_csc);

    Matrix out(n, m);
    for (int i = 0; i < n; ++i) {
        double* arow = &out.v[static_cast<std::size_t>(i) * m];
        for (int p = sv->row_ptr[i]; p < sv->row_ptr[i + 1]; ++p) {
            const int j = sv->row_col[p];
            const double* uh = &(*uval)[static_cast<std::size_t>(p) * k];
            const double* vh = &(*vval_csc)[static_cast<std::size_t>(se->col_ptr[j]) * k];
            for (int q = se->col_ptr[j]; q < se->col_ptr[j + 1]; ++q, vh += k) {
                double s = 0.0;
                for (int h = 0; h < k; ++h) s += uh[h] * vh[h];
                arow[se->col_row[q]] += s;
            }
        }
    }
    const double invk = 1.0 / k;
    for (double& x : out.v) x *= invk;

    const int zvid = zv.id(), zeid = ze.id(), phid = phi.id();
    return zv.tape()->record(
        std::move(out), phi.requires_grad(),
        [zvid, zeid, phid, sv, se, uval, vval, uval_csc, vval_csc, norms_u, norms_v, n, m,
         k](Tape& t, int out_id) {
            const Matrix& g = t.grad_of(out_id);
            Matrix* gph = t.grad_buffer(phid);
            if (!gph) return;
            detail::sparse_phi_backward(*sv, *uval, *norms_u, *se, *vval_csc, t.value_of(zvid), g,
                                        k, *gph);
            Matrix gt(m, n);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < m; ++j) gt(j, i) = g(i, j);
            detail::sparse_phi_backward(*se, *vval, *norms_v, *sv, *uval_csc, t.value_of(zeid), gt,
                                        k, *gph);
        },
        "multihead_cosine_sparse");
}

// Plain cosine similarity between all row pairs: single head, unit weights.
inline Value cosine_rows(Value a, Value b) {
    Value ones = a.tape()->constant(Matrix::full(1, a.cols(), 1.0));
    return multihead_cosine(a, b, ones);
}

}  // namespace hgib
