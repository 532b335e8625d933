#pragma once

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "hgib/model.hpp"
#include "hgib/perturb.hpp"

namespace hgib {

inline constexpr const char* kVersion = "0.1.0";

// Hyperparameter presets; the default TrainConfig equals the "cora" row.
inline TrainConfig preset_config(const std::string& name) {
    TrainConfig cfg;
    if (name.empty() || name == "cora") {
        cfg.alpha = 0.7;
        cfg.beta = 0.01;
        cfg.epsilon = 0.0;
        cfg.num_layers = 5;
    } else if (name == "citeseer") {
        cfg.alpha = 0.8;
        cfg.beta = 0.01;
        cfg.epsilon = 0.1;
        cfg.num_layers = 5;
    } else if (name == "yummly10k") {
        cfg.alpha = 0.5;
        cfg.beta = 0.1;
        cfg.epsilon = 0.1;
        cfg.num_layers = 10;
    } else if (name == "dblp") {
        cfg.alpha = 0.5;
        cfg.beta = 1.0;
        cfg.epsilon = 0.1;
        cfg.num_layers = 7;
    } else {
        throw ValidationError("unknown preset '" + name + "'");
    }
    return cfg;
}

struct RunOptions {
    std::string dataset_path;
    std::string preset;
    TrainConfig cfg;
    std::string perturb;  // "kind:ratio" (train/ablate) or "kind[,kind...]" (sweep)
    std::uint64_t perturb_seed = 0;
    int n_seeds = 1;
    int jobs = 1;
    std::string out_dir;
    bool gnuplot = false;
    std::vector<double> ratios;  // sweep/ablate grid
    std::string vary;            // sweep: hyperparameter name
    std::string range;           // sweep: "lo:hi:step"
};

namespace detail {

inline std::string default_out_root() {
    if (const char* env = std::getenv("HGIB_OUT_DIR")) return env;
    return "hgib_out";
}

inline std::filesystem::path resolve_out_dir(const RunOptions& opt, const std::string& command) {
    std::filesystem::path dir =
        opt.out_dir.empty() ? std::filesystem::path(default_out_root()) / command
                            : std::filesystem::path(opt.out_dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline void write_file(const std::filesystem::path& path, const std::string& contents) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw ValidationError("cannot write " + path.string());
    f << contents;
}

inline nlohmann::json config_json(const TrainConfig& cfg) {
    return {{"alpha", cfg.alpha},         {"beta", cfg.beta},
            {"epsilon", cfg.epsilon},     {"layers", cfg.num_layers},
            {"heads", cfg.heads},         {"hidden", cfg.hidden_dim},
            {"dropout", cfg.dropout},     {"lr", cfg.lr},
            {"max_epochs", cfg.max_epochs}, {"patience", cfg.patience},
            {"seed", cfg.seed},           {"mi_every", cfg.mi_every},
            {"mi_bins", cfg.mi_bins}};
}

inline nlohmann::json params_json(const ModelParams& p) {
    auto mat = [](const Matrix& m) {
        return nlohmann::json{{"rows", m.rows}, {"cols", m.cols}, {"data", m.v}};
    };
    return {{"phi1", mat(p.phi1)}, {"phi2", mat(p.phi2)}, {"theta1", mat(p.theta1)},
            {"theta2", mat(p.theta2)}};
}

inline std::string fmt_mean_std(double mean, double std) {
    std::ostringstream ss;
    ss.precision(10);
    ss << mean << "," << std;
    return ss.str();
}

// Runs indexed jobs in parallel, results joined deterministically by index.
template <typename Fn>
inline void parallel_cells(int n_cells, int jobs, Fn&& run_cell) {
    jobs = std::max(1, std::min(jobs, n_cells));
    if (jobs == 1) {
        for (int i = 0; i < n_cells; ++i) run_cell(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t)
        pool.emplace_back([&]() {
            for (int i = next.fetch_add(1); i < n_cells; i = next.fetch_add(1)) run_cell(i);
        });
    for (auto& th : pool) th.join();
}

inline SeedSweepResult run_cell(const LabeledDataset& ds, const TrainConfig& cfg,
                                const std::optional<PerturbSpec>& spec, std::uint64_t perturb_seed,
                                int n_seeds) {
    return run_seeds(
        [&](int i) {
            if (!spec || spec->kind == PerturbKind::clean) return ds;
            PerturbSpec s = *spec;
            s.seed = perturb_seed + static_cast<std::uint64_t>(i);
            return apply_perturbation(ds, s);
        },
        cfg, n_seeds, 1);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

inline int cmd_train(const RunOptions& opt) {
    try {
        if (opt.n_seeds < 1) throw ValidationError("--seeds must be >= 1");
        LabeledDataset ds = load_dataset(opt.dataset_path);
        std::optional<PerturbSpec> spec;
        if (!opt.perturb.empty()) spec = parse_perturb_spec(opt.perturb, opt.perturb_seed);

        SeedSweepResult sweep = run_seeds(
            [&](int i) {
                if (!spec || spec->kind == PerturbKind::clean) return ds;
                PerturbSpec s = *spec;
                s.seed = opt.perturb_seed + static_cast<std::uint64_t>(i);
                return apply_perturbation(ds, s);
            },
            opt.cfg, opt.n_seeds, opt.jobs);

        const std::filesystem::path dir = detail::resolve_out_dir(opt, "train");
        nlohmann::json outputs = nlohmann::json::array();
        double total_wall = 0.0;
        for (int i = 0; i < opt.n_seeds; ++i) {
            const std::uint64_t seed = opt.cfg.seed + static_cast<std::uint64_t>(i);
            const std::filesystem::path sd = dir / ("seed_" + std::to_string(seed));
            std::filesystem::create_directories(sd);
            const TrainingLog& log = sweep.logs[i];
            detail::write_file(sd / "training_log.csv", training_log_csv(log));
            detail::write_file(sd / "layer_losses.csv", layer_loss_csv(log));
            detail::write_file(sd / "mi.csv", mi_csv(log));
            detail::write_file(sd / "checkpoint.json", detail::params_json(sweep.params[i]).dump());
            nlohmann::json summary = {{"config", detail::config_json(opt.cfg)},
                                      {"seed", seed},
                                      {"best_epoch", log.best_epoch},
                                      {"best_val_acc", log.best_val_acc},
                                      {"test_accuracy", log.test_acc},
                                      {"epochs_run", log.epochs.size()},
                                      {"wall_seconds", log.wall_seconds},
                                      {"parameter_count", log.parameter_count}};
            detail::write_file(sd / "summary.json", summary.dump(2));
            outputs.push_back((sd / "training_log.csv").string());
            total_wall += log.wall_seconds;
        }

        nlohmann::json manifest = {
            {"version", kVersion},
            {"command", "train"},
            {"dataset", {{"path", opt.dataset_path}, {"name", ds.name}}},
            {"preset", opt.preset},
            {"config", detail::config_json(opt.cfg)},
            {"perturb",
             spec ? nlohmann::json{{"kind", to_string(spec->kind)},
                                   {"ratio", spec->ratio},
                                   {"seed", opt.perturb_seed}}
                  : nlohmann::json{{"kind", "clean"}}},
            {"seeds", opt.n_seeds},
            {"jobs", opt.jobs},
            {"results",
             {{"per_seed", sweep.accuracies}, {"mean", sweep.mean}, {"std", sweep.stddev}}},
            {"environment",
             {{"wall_seconds", total_wall},
              {"parameter_count", sweep.logs.empty() ? 0 : sweep.logs[0].parameter_count}}},
            {"outputs", outputs}};
        detail::write_file(dir / "manifest.json", manifest.dump(2));

        std::cout << "test_accuracy mean=" << sweep.mean << " std=" << sweep.stddev
                  << " seeds=" << opt.n_seeds << "\n";
        return 0;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

inline int cmd_sweep(const RunOptions& opt) {
    try {
        LabeledDataset ds = load_dataset(opt.dataset_path);
        const std::filesystem::path dir = detail::resolve_out_dir(opt, "sweep");
        std::string csv;

        if (!opt.vary.empty()) {
            // Hyperparameter curve: --vary alpha --range 0.1:0.9:0.1
            double lo, hi, step;
            char c1, c2;
            std::istringstream ss(opt.range);
            if (!(ss >> lo >> c1 >> hi >> c2 >> step) || c1 != ':' || c2 != ':' || step <= 0)
                throw ValidationError("--range must be lo:hi:step with step > 0");
            std::vector<double> values;
            for (double x = lo; x <= hi + 1e-12; x += step) values.push_back(x);
            if (values.empty()) throw ValidationError("--range produced no values");
            std::vector<SeedSweepResult> results(values.size());
            detail::parallel_cells(static_cast<int>(values.size()), opt.jobs, [&](int i) {
                TrainConfig cfg = opt.cfg;
                if (opt.vary == "alpha")
                    cfg.alpha = values[i];
                else if (opt.vary == "beta")
                    cfg.beta = values[i];
                else if (opt.vary == "epsilon")
                    cfg.epsilon = values[i];
                else if (opt.vary == "layers")
                    cfg.num_layers = static_cast<int>(values[i] + 0.5);
                else if (opt.vary == "lr")
                    cfg.lr = values[i];
                else if (opt.vary == "dropout")
                    cfg.dropout = values[i];
                else if (opt.vary == "hidden")
                    cfg.hidden_dim = static_cast<int>(values[i] + 0.5);
                else if (opt.vary == "heads")
                    cfg.heads = static_cast<int>(values[i] + 0.5);
                else
                    throw ValidationError("--vary: unknown hyperparameter '" + opt.vary + "'");
                std::optional<PerturbSpec> spec;
                if (!opt.perturb.empty()) spec = parse_perturb_spec(opt.perturb, opt.perturb_seed);
                results[i] = detail::run_cell(ds, cfg, spec, opt.perturb_seed, opt.n_seeds);
            });
            csv = opt.vary + ",mean,std\n";
            for (std::size_t i = 0; i < values.size(); ++i) {
                std::ostringstream row;
                row.precision(10);
                row << values[i] << "," << detail::fmt_mean_std(results[i].mean, results[i].stddev)
                    << "\n";
                csv += row.str();
            }
        } else {
            // Perturbation grid: clean + each kind x ratio.
            if (opt.perturb.empty()) throw ValidationError("sweep needs --perturb or --vary");
            if (opt.ratios.empty()) throw ValidationError("sweep needs a nonempty --ratios list");
            std::vector<PerturbKind> kinds;
            std::stringstream ks(opt.perturb);
            std::string item;
            while (std::getline(ks, item, ',')) kinds.push_back(perturb_kind_from_string(item));
            for (double r : opt.ratios)
                if (!(r > 0.0 && r < 1.0)) throw DomainError("--ratios entries must be in (0,1)");

            struct Cell {
                std::optional<PerturbSpec> spec;
                std::string label;
            };
            std::vector<Cell> cells;
            cells.push_back({std::nullopt, "clean"});
            for (PerturbKind k : kinds)
                for (double r : opt.ratios) {
                    PerturbSpec s;
                    s.kind = k;
                    s.ratio = r;
                    std::ostringstream label;
                    label << to_string(k) << "_" << r;
                    cells.push_back({s, label.str()});
                }
            std::vector<SeedSweepResult> results(cells.size());
            detail::parallel_cells(static_cast<int>(cells.size()), opt.jobs, [&](int i) {
                results[i] = detail::run_cell(ds, opt.cfg, cells[i].spec, opt.perturb_seed, opt.n_seeds);
            });
            csv = "model";
            for (const auto& c : cells) csv += "," + c.label + "_mean," + c.label + "_std";
            csv += "\nhib";
            for (const auto& r : results) csv += "," + detail::fmt_mean_std(r.mean, r.stddev);
            csv += "\n";
        }

        detail::write_file(dir / "sweep.csv", csv);
        if (opt.gnuplot) {
            std::string gp = "set datafile separator ','\nset key autotitle columnhead\n";
            gp += opt.vary.empty()
                      ? "set style data histogram\nplot 'sweep.csv' using 2:xtic(1)\n"
                      : "plot 'sweep.csv' using 1:2 with linespoints\n";
            detail::write_file(dir / "plot.gp", gp);
        }
        nlohmann::json manifest = {{"version", kVersion},
                                   {"command", "sweep"},
                                   {"dataset", {{"path", opt.dataset_path}, {"name", ds.name}}},
                                   {"config", detail::config_json(opt.cfg)},
                                   {"vary", opt.vary},
                                   {"range", opt.range},
                                   {"perturb", opt.perturb},
                                   {"ratios", opt.ratios},
                                   {"perturb_seed", opt.perturb_seed},
                                   {"seeds", opt.n_seeds},
                                   {"outputs", {(dir / "sweep.csv").string()}}};
        detail::write_file(dir / "manifest.json", manifest.dump(2));
        std::cout << csv;
        return 0;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

// ---------------------------------------------------------------------------
// ablate: HIB vs HIB-CE (beta=0) vs fixed structure (alpha=1, beta=0)
// ---------------------------------------------------------------------------

inline int cmd_ablate(const RunOptions& opt) {
    try {
        LabeledDataset ds = load_dataset(opt.dataset_path);
        const std::filesystem::path dir = detail::resolve_out_dir(opt, "ablate");

        struct Variant {
            std::string name;
            TrainConfig cfg;
        };
        std::vector<Variant> variants;
        variants.push_back({"hib", opt.cfg});
        {
            TrainConfig ce = opt.cfg;
            ce.beta = 0.0;
            variants.push_back({"hib_ce", ce});
            TrainConfig fixed = opt.cfg;
            fixed.alpha = 1.0;
            fixed.beta = 0.0;
            variants.push_back({"fixed_structure", fixed});
        }

        struct Cell {
            std::optional<PerturbSpec> spec;
            std::string label;
        };
        std::vector<Cell> cells;
        cells.push_back({std::nullopt, "clean"});
        if (!opt.perturb.empty()) {
            std::vector<PerturbKind> kinds;
            std::stringstream ks(opt.perturb);
            std::string item;
            while (std::getline(ks, item, ',')) kinds.push_back(perturb_kind_from_string(item));
            for (PerturbKind k : kinds)
                for (double r : opt.ratios) {
                    if (!(r > 0.0 && r < 1.0)) throw DomainError("--ratios entries must be in (0,1)");
                    PerturbSpec s;
                    s.kind = k;
                    s.ratio = r;
                    std::ostringstream label;
                    label << to_string(k) << "_" << r;
                    cells.push_back({s, label.str()});
                }
        }

        const int n_cells = static_cast<int>(variants.size() * cells.size());
        std::vector<SeedSweepResult> results(n_cells);
        detail::parallel_cells(n_cells, opt.jobs, [&](int i) {
            const auto& variant = variants[i / cells.size()];
            const auto& cell = cells[i % cells.size()];
            results[i] = detail::run_cell(ds, variant.cfg, cell.spec, opt.perturb_seed, opt.n_seeds);
        });

        std::string csv = "model";
        for (const auto& c : cells) csv += "," + c.label + "_mean," + c.label + "_std";
        csv += "\n";
        for (std::size_t v = 0; v < variants.size(); ++v) {
            csv += variants[v].name;
            for (std::size_t c = 0; c < cells.size(); ++c) {
                const auto& r = results[v * cells.size() + c];
                csv += "," + detail::fmt_mean_std(r.mean, r.stddev);
            }
            csv += "\n";
        }
        detail::write_file(dir / "ablation.csv", csv);
        nlohmann::json manifest = {{"version", kVersion},
                                   {"command", "ablate"},
                                   {"dataset", {{"path", opt.dataset_path}, {"name", ds.name}}},
                                   {"config", detail::config_json(opt.cfg)},
                                   {"perturb", opt.perturb},
                                   {"ratios", opt.ratios},
                                   {"perturb_seed", opt.perturb_seed},
                                   {"seeds", opt.n_seeds},
                                   {"outputs", {(dir / "ablation.csv").string()}}};
        detail::write_file(dir / "manifest.json", manifest.dump(2));
        std::cout << csv;
        return 0;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace hgib
