#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "hgib/adam.hpp"
#include "hgib/data_io.hpp"
#include "hgib/hib.hpp"
#include "hgib/layers.hpp"
#include "hgib/model_loss.hpp"
#include "hgib/tensor.hpp"

namespace hgib {

struct TrainConfig {
    double alpha = 0.7;
    double beta = 0.01;
    double epsilon = 0.0;
    int num_layers = 5;
    int heads = 6;
    int hidden_dim = 16;
    double dropout = 0.5;
    double lr = 0.01;
    int max_epochs = 10000;
    int patience = 500;
    std::uint64_t seed = 0;
    int mi_every = 50;  // per-layer MI diagnostic cadence; 0 disables
    int mi_bins = 10;

    void validate() const {
        if (!(alpha >= 0.0 && alpha <= 1.0)) throw DomainError("config: alpha outside [0,1]");
        if (!(beta >= 0.0)) throw DomainError("config: beta must be >= 0");
        if (!(epsilon >= 0.0)) throw DomainError("config: epsilon must be >= 0");
        if (num_layers < 1) throw DomainError("config: num_layers must be >= 1");
        if (heads < 1) throw DomainError("config: heads must be >= 1");
        if (hidden_dim < 1) throw DomainError("config: hidden_dim must be >= 1");
        if (!(dropout >= 0.0 && dropout < 1.0)) throw DomainError("config: dropout outside [0,1)");
        if (max_epochs < 1) throw DomainError("config: max_epochs must be >= 1");
        if (patience < 1) throw DomainError("config: patience must be >= 1");
    }
};

// phi1 scores raw features (first structure-learning block, independent
// parameters); phi2 is shared by all later blocks on hidden embeddings.
// theta1/theta2 are the shared hidden and output convolution weights.
struct ModelParams {
    Matrix phi1;    // heads x d_feat
    Matrix phi2;    // heads x hidden
    Matrix theta1;  // d_feat x hidden
    Matrix theta2;  // hidden x n_classes

    // Glorot-uniform convolution weights; all-ones attention heads, which
    // makes the initial scores plain cosine similarity.
    static ModelParams init(int d_feat, int hidden, int n_classes, int heads, Rng& rng) {
        ModelParams p;
        p.phi1 = Matrix::full(heads, d_feat, 1.0);
        p.phi2 = Matrix::full(heads, hidden, 1.0);
        p.theta1 = glorot(d_feat, hidden, rng);
        p.theta2 = glorot(hidden, n_classes, rng);
        return p;
    }

    std::size_t parameter_count() const {
        return phi1.size() + phi2.size() + theta1.size() + theta2.size();
    }

private:
    static Matrix glorot(int fan_in, int fan_out, Rng& rng) {
        Matrix w(fan_in, fan_out);
        const double s = std::sqrt(6.0 / (fan_in + fan_out));
        for (double& x : w.v) x = rng.uniform(-s, s);
        return w;
    }
};

// Constant per-(structure, features) inputs reused across epochs: the dense
// initial incidence and the initial hyperedge embeddings of the raw features.
struct StructureCache {
    std::shared_ptr<const Matrix> h0_dense;
    Matrix x;
    Matrix e0;  // De^{-1} H0^T X

    StructureCache(const Hypergraph& h0, Matrix features) : x(std::move(features)) {
        if (h0.n_vertices() != x.rows)
            throw ShapeError("StructureCache: features rows != hypergraph vertices");
        auto dense = std::make_shared<Matrix>(h0.dense());
        Tape t;
        e0 = hyperedge_embed_t(t.constant(*dense), t.constant(x)).val();
        h0_dense = std::move(dense);
    }
};

struct LayerStateValues {
    Value h;
    Value z;
    Value y_hat;
};

struct ForwardResult {
    std::unique_ptr<Tape> tape;
    std::vector<LayerStateValues> layers;
    Value phi1, phi2, theta1, theta2;

    std::vector<Value> structure_flow() const {
        std::vector<Value> out;
        for (const auto& l : layers) out.push_back(l.h);
        return out;
    }
    std::vector<Value> output_flow() const {
        std::vector<Value> out;
        for (const auto& l : layers) out.push_back(l.y_hat);
        return out;
    }
};

// One unrolled pass of the L-layer network over caller-provided tape values:
//   layer 1 scores raw features against initial hyperedge embeddings (phi1);
//   layer l >= 2 scores Z^{(l-1)} against hyperedge embeddings under H^{(l-1)}
//   (phi2); each layer masks + combines into H^{(l)}, then
//   Z^{(l)} = dropout(relu(conv(H^{(l)}, X) Theta1)) and
//   yhat^{(l)} = conv(H^{(l)}, Z^{(l)}) Theta2 (raw logits).
// With alpha = 1 the structure is pinned to H0 and the attention path is
// skipped entirely (it would receive zero gradient).
inline std::vector<LayerStateValues> forward_on_tape(Tape& t, Value x, Value e0,
                                                     std::shared_ptr<const Matrix> h0_dense,
                                                     Value phi1, Value phi2, Value theta1,
                                                     Value theta2, const TrainConfig& cfg, Rng& rng,
                                                     bool training) {
    cfg.validate();
    std::vector<LayerStateValues> layers;
    const bool pinned = cfg.alpha == 1.0;
    Value h_pinned;
    if (pinned) h_pinned = t.constant(*h0_dense);

    Value z_prev = x;
    Value h_prev;
    for (int l = 1; l <= cfg.num_layers; ++l) {
        Value h;
        if (pinned) {
            h = h_pinned;
        } else {
            Value a;
            if (l == 1)
                a = attention_scores_t(x, e0, phi1);
            else
                a = attention_scores_t(z_prev, hyperedge_embed_t(h_prev, z_prev), phi2);
            h = mask_and_combine_t(a, h0_dense, cfg.alpha, cfg.epsilon);
        }
        Value z = dropout(relu(spatial_conv_t(h, x, theta1)), cfg.dropout, rng, training);
        Value y_hat = spatial_conv_t(h, z, theta2);
        layers.push_back({h, z, y_hat});
        z_prev = z;
        h_prev = h;
    }
    return layers;
}

inline ForwardResult forward(const ModelParams& params, const StructureCache& cache,
                             const TrainConfig& cfg, Rng& rng, bool training,
                             bool with_grad) {
    ForwardResult fr;
    fr.tape = std::make_unique<Tape>();
    Tape& t = *fr.tape;
    Value x = t.constant(cache.x);
    Value e0 = t.constant(cache.e0);
    fr.phi1 = t.input(params.phi1, with_grad);
    fr.phi2 = t.input(params.phi2, with_grad);
    fr.theta1 = t.input(params.theta1, with_grad);
    fr.theta2 = t.input(params.theta2, with_grad);
    fr.layers = forward_on_tape(t, x, e0, cache.h0_dense, fr.phi1, fr.phi2, fr.theta1, fr.theta2,
                                cfg, rng, training);
    return fr;
}

inline ForwardResult forward(const ModelParams& params, const Hypergraph& h0, const Matrix& x,
                             const TrainConfig& cfg, Rng& rng, bool training) {
    StructureCache cache(h0, x);
    return forward(params, cache, cfg, rng, training, training);
}

// ---------------------------------------------------------------------------
// Accuracy
// ---------------------------------------------------------------------------

inline double accuracy_of(const Matrix& logits, const std::vector<int>& labels,
                          const std::vector<std::uint8_t>& mask) {
    int total = 0, correct = 0;
    for (int i = 0; i < logits.rows; ++i) {
        if (!mask[i]) continue;
        int arg = 0;
        for (int j = 1; j < logits.cols; ++j)
            if (logits(i, j) > logits(i, arg)) arg = j;
        ++total;
        if (arg == labels[i]) ++correct;
    }
    if (total == 0) throw ValidationError("accuracy: empty mask");
    return static_cast<double>(correct) / total;
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

struct EpochRecord {
    int epoch = 0;
    double loss = 0.0, ce = 0.0, kl = 0.0;
    double train_acc = 0.0, val_acc = 0.0;
};

struct TrainingLog {
    std::vector<EpochRecord> epochs;
    std::vector<std::vector<HIBLayerLoss>> layer_losses;          // aligned with epochs
    std::vector<std::pair<int, std::vector<double>>> mi_diagnostic;  // (epoch, MI per layer)
    int best_epoch = 0;
    double best_val_acc = 0.0;
    double test_acc = 0.0;
    double wall_seconds = 0.0;
    std::size_t parameter_count = 0;
};

struct TrainResult {
    ModelParams params;  // checkpoint with the best validation accuracy
    TrainingLog log;
};

namespace detail {

inline Matrix grad_or_zero(const Value& v) {
    const Matrix& g = v.grad();
    if (g.rows == 0) return Matrix::zeros(v.rows(), v.cols());
    return g;
}

}  // namespace detail

// Full-batch training under the information-bottleneck loss with validation
// early stopping: stops when validation accuracy has not strictly improved
// for `patience` consecutive epochs, and returns the checkpoint taken at the
// last improvement.
inline TrainResult train(const LabeledDataset& ds, const TrainConfig& cfg) {
    cfg.validate();
    ds.validate();
    const auto t0 = std::chrono::steady_clock::now();
    bool any_train = false, any_val = false, any_test = false;
    for (int i = 0; i < ds.n(); ++i) {
        any_train |= ds.train_mask[i] != 0;
        any_val |= ds.val_mask[i] != 0;
        any_test |= ds.test_mask[i] != 0;
    }
    if (!any_train || !any_val || !any_test)
        throw ValidationError("train: dataset needs nonempty train/val/test masks");

    const Hypergraph h0 = ds.to_hypergraph();
    StructureCache cache(h0, ds.features);
    auto labels = std::make_shared<const std::vector<int>>(ds.labels);
    auto train_mask = std::make_shared<const std::vector<std::uint8_t>>(ds.train_mask);

    Rng rng(cfg.seed);
    ModelParams params = ModelParams::init(ds.d_feat(), cfg.hidden_dim, ds.n_classes, cfg.heads, rng);
    AdamState adam(cfg.lr);

    TrainResult result;
    result.log.parameter_count = params.parameter_count();
    ModelParams best = params;
    double best_val = -1.0;
    int best_epoch = 0;
    int since_improvement = 0;

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        ForwardResult fr = forward(params, cache, cfg, rng, true, true);
        LossOnTape loss = hib_loss_t(fr.structure_flow(), fr.output_flow(), labels, train_mask, cfg.beta);
        fr.tape->backward(loss.total);
        {
            const Matrix g1 = detail::grad_or_zero(fr.phi1);
            const Matrix g2 = detail::grad_or_zero(fr.phi2);
            const Matrix g3 = detail::grad_or_zero(fr.theta1);
            const Matrix g4 = detail::grad_or_zero(fr.theta2);
            adam.step({&params.phi1, &params.phi2, &params.theta1, &params.theta2},
                      {&g1, &g2, &g3, &g4});
        }

        ForwardResult ev = forward(params, cache, cfg, rng, false, false);
        const Matrix& y_last = ev.layers.back().y_hat.val();
        EpochRecord rec;
        rec.epoch = epoch;
        rec.loss = loss.breakdown.total;
        rec.ce = 0.0;
        rec.kl = 0.0;
        for (const auto& ll : loss.breakdown.per_layer) {
            rec.ce += ll.ce;
            rec.kl += ll.kl;
        }
        rec.ce /= static_cast<double>(loss.breakdown.per_layer.size());
        rec.kl /= static_cast<double>(loss.breakdown.per_layer.size());
        rec.train_acc = accuracy_of(y_last, ds.labels, ds.train_mask);
        rec.val_acc = accuracy_of(y_last, ds.labels, ds.val_mask);
        result.log.epochs.push_back(rec);
        result.log.layer_losses.push_back(loss.breakdown.per_layer);

        if (cfg.mi_every > 0 && (epoch == 1 || epoch % cfg.mi_every == 0)) {
            std::vector<double> mi;
            for (const auto& layer : ev.layers)
                mi.push_back(empirical_mi(*cache.h0_dense, layer.h.val(), cfg.mi_bins));
            result.log.mi_diagnostic.emplace_back(epoch, std::move(mi));
        }

        if (rec.val_acc > best_val) {
            best_val = rec.val_acc;
            best = params;
            best_epoch = epoch;
            since_improvement = 0;
        } else {
            ++since_improvement;
            if (since_improvement >= cfg.patience) break;
        }
    }

    result.params = std::move(best);
    result.log.best_epoch = best_epoch;
    result.log.best_val_acc = best_val;
    {
        Rng eval_rng(cfg.seed + 0x9e3779b97f4a7c15ull);
        ForwardResult ev = forward(result.params, cache, cfg, eval_rng, false, false);
        result.log.test_acc = accuracy_of(ev.layers.back().y_hat.val(), ds.labels, ds.test_mask);
    }
    result.log.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

// Accuracy of the checkpointed model on one of the named masks.
inline double evaluate(const ModelParams& params, const LabeledDataset& ds, const TrainConfig& cfg,
                       const std::string& mask_name) {
    const std::vector<std::uint8_t>* mask = nullptr;
    if (mask_name == "train")
        mask = &ds.train_mask;
    else if (mask_name == "val")
        mask = &ds.val_mask;
    else if (mask_name == "test")
        mask = &ds.test_mask;
    else
        throw ValidationError("evaluate: unknown mask '" + mask_name + "'");
    StructureCache cache(ds.to_hypergraph(), ds.features);
    Rng rng(cfg.seed);
    ForwardResult ev = forward(params, cache, cfg, rng, false, false);
    return accuracy_of(ev.layers.back().y_hat.val(), ds.labels, *mask);
}

// ---------------------------------------------------------------------------
// Multi-seed runs
// ---------------------------------------------------------------------------

struct SeedSweepResult {
    std::vector<double> accuracies;  // test accuracy per seed
    std::vector<TrainingLog> logs;
    std::vector<ModelParams> params;  // checkpoint per seed
    double mean = 0.0;
    double stddev = 0.0;  // sample standard deviation; 0 for a single seed
};

// Trains n_seeds models with seeds seed+0..seed+n-1. `dataset_for_seed` lets
// callers vary the structure perturbation together with the initialization.
inline SeedSweepResult run_seeds(const std::function<LabeledDataset(int)>& dataset_for_seed,
                                 const TrainConfig& cfg, int n_seeds, int jobs = 1) {
    if (n_seeds < 1) throw DomainError("run_seeds: n_seeds must be >= 1");
    SeedSweepResult out;
    out.accuracies.assign(n_seeds, 0.0);
    out.logs.resize(n_seeds);
    out.params.resize(n_seeds);
    const auto run_one = [&](int i) {
        LabeledDataset ds = dataset_for_seed(i);
        TrainConfig c = cfg;
        c.seed = cfg.seed + static_cast<std::uint64_t>(i);
        TrainResult r = train(ds, c);
        out.accuracies[i] = r.log.test_acc;
        out.logs[i] = std::move(r.log);
        out.params[i] = std::move(r.params);
    };
    jobs = std::max(1, std::min(jobs, n_seeds));
    if (jobs == 1) {
        for (int i = 0; i < n_seeds; ++i) run_one(i);
    } else {
        std::vector<std::thread> pool;
        std::atomic<int> next{0};
        for (int t = 0; t < jobs; ++t)
            pool.emplace_back([&]() {
                for (int i = next.fetch_add(1); i < n_seeds; i = next.fetch_add(1)) run_one(i);
            });
        for (auto& th : pool) th.join();
    }
    double sum = 0.0;
    for (double a : out.accuracies) sum += a;
    out.mean = sum / n_seeds;
    double ss = 0.0;
    for (double a : out.accuracies) ss += (a - out.mean) * (a - out.mean);
    out.stddev = n_seeds > 1 ? std::sqrt(ss / (n_seeds - 1)) : 0.0;
    return out;
}

inline SeedSweepResult run_seeds(const LabeledDataset& ds, const TrainConfig& cfg, int n_seeds,
                                 int jobs = 1) {
    return run_seeds([&](int) { return ds; }, cfg, n_seeds, jobs);
}

// ---------------------------------------------------------------------------
// Log serialization
// ---------------------------------------------------------------------------

namespace detail {

inline std::string fmt_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

}  // namespace detail

inline std::string training_log_csv(const TrainingLog& log) {
    std::string out = "epoch,loss,ce,kl,train_acc,val_acc\n";
    for (const auto& r : log.epochs) {
        out += std::to_string(r.epoch);
        out += ',';
        out += detail::fmt_double(r.loss);
        out += ',';
        out += detail::fmt_double(r.ce);
        out += ',';
        out += detail::fmt_double(r.kl);
        out += ',';
        out += detail::fmt_double(r.train_acc);
        out += ',';
        out += detail::fmt_double(r.val_acc);
        out += '\n';
    }
    return out;
}

inline std::string layer_loss_csv(const TrainingLog& log) {
    std::string out = "epoch,layer,ce,kl,loss\n";
    for (std::size_t e = 0; e < log.layer_losses.size(); ++e)
        for (std::size_t l = 0; l < log.layer_losses[e].size(); ++l) {
            const auto& ll = log.layer_losses[e][l];
            out += std::to_string(log.epochs[e].epoch);
            out += ',';
            out += std::to_string(l + 1);
            out += ',';
            out += detail::fmt_double(ll.ce);
            out += ',';
            out += detail::fmt_double(ll.kl);
            out += ',';
            out += detail::fmt_double(ll.loss);
            out += '\n';
        }
    return out;
}

inline std::string mi_csv(const TrainingLog& log) {
    std::string out = "epoch,layer,mi\n";
    for (const auto& [epoch, mis] : log.mi_diagnostic)
        for (std::size_t l = 0; l < mis.size(); ++l) {
            out += std::to_string(epoch);
            out += ',';
            out += std::to_string(l + 1);
            out += ',';
            out += detail::fmt_double(mis[l]);
            out += '\n';
        }
    return out;
}

}  // namespace hgib
