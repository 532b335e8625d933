#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "hgib/cli.hpp"

namespace {

void add_common_flags(CLI::App* cmd, hgib::RunOptions& opt) {
    cmd->add_option("--dataset", opt.dataset_path, "Dataset JSON file")->required();
    cmd->add_option("--preset", opt.preset,
                    "Hyperparameter preset: cora (default), citeseer, yummly10k, dblp");
    cmd->add_option("--alpha", opt.cfg.alpha, "Initial-structure weight in [0,1]");
    cmd->add_option("--beta", opt.cfg.beta, "Structure-KL weight (>= 0)");
    cmd->add_option("--epsilon", opt.cfg.epsilon, "Attention mask threshold (>= 0)");
    cmd->add_option("--layers", opt.cfg.num_layers, "Number of unrolled layers");
    cmd->add_option("--heads", opt.cfg.heads, "Attention heads");
    cmd->add_option("--hidden", opt.cfg.hidden_dim, "Hidden width");
    cmd->add_option("--dropout", opt.cfg.dropout, "Dropout rate in [0,1)");
    cmd->add_option("--lr", opt.cfg.lr, "Adam learning rate");
    cmd->add_option("--max-epochs", opt.cfg.max_epochs, "Epoch cap");
    cmd->add_option("--patience", opt.cfg.patience, "Early-stopping patience (epochs)");
    cmd->add_option("--seed", opt.cfg.seed, "Base RNG seed");
    cmd->add_option("--seeds", opt.n_seeds, "Number of runs with seeds seed..seed+n-1");
    cmd->add_option("--perturb-seed", opt.perturb_seed, "Base seed for structure perturbations");
    cmd->add_option("--jobs", opt.jobs, "Parallel cells/runs");
    cmd->add_option("--out", opt.out_dir, "Output directory (default $HGIB_OUT_DIR or ./hgib_out)");
    cmd->add_option("--mi-every", opt.cfg.mi_every, "Layer MI diagnostic cadence (0 = off)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hypergraph structure learning under an information-bottleneck objective"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string("hgib ") + hgib::kVersion);

    hgib::RunOptions train_opt, sweep_opt, ablate_opt;
    std::string train_preset, sweep_preset, ablate_preset;

    CLI::App* train = app.add_subcommand("train", "Train and evaluate on one dataset");
    add_common_flags(train, train_opt);
    train->add_option("--perturb", train_opt.perturb, "Structure perturbation KIND:RATIO");

    CLI::App* sweep = app.add_subcommand("sweep", "Perturbation grid or hyperparameter curve");
    add_common_flags(sweep, sweep_opt);
    sweep->add_option("--perturb", sweep_opt.perturb, "Perturbation kind(s), comma separated");
    sweep->add_option("--ratios", sweep_opt.ratios, "Perturbation ratios in (0,1)")->delimiter(',');
    sweep->add_option("--vary", sweep_opt.vary, "Hyperparameter to vary instead of perturbing");
    sweep->add_option("--range", sweep_opt.range, "lo:hi:step for --vary");
    sweep->add_flag("--gnuplot-script", sweep_opt.gnuplot, "Emit plot.gp next to the CSV");

    CLI::App* ablate = app.add_subcommand("ablate", "Full loss vs CE-only vs fixed structure");
    add_common_flags(ablate, ablate_opt);
    ablate->add_option("--perturb", ablate_opt.perturb, "Perturbation kind(s), comma separated");
    ablate->add_option("--ratios", ablate_opt.ratios, "Perturbation ratios in (0,1)")->delimiter(',');

    // Synthetic planted-partition generator (testing/benchmark substrate).
    struct {
        std::string out = "synth.json";
        int per_class = 40, classes = 3, d_feat = 16, edges_per_class = 8;
        double sigma = 1.0;
        std::uint64_t seed = 0;
    } synth_opt;
    CLI::App* synth = app.add_subcommand("synth", "Generate a planted-partition dataset JSON");
    synth->add_option("--out", synth_opt.out, "Output file");
    synth->add_option("--per-class", synth_opt.per_class, "Nodes per class");
    synth->add_option("--classes", synth_opt.classes, "Number of classes");
    synth->add_option("--features", synth_opt.d_feat, "Feature dimension");
    synth->add_option("--edges-per-class", synth_opt.edges_per_class, "Clean hyperedges per class");
    synth->add_option("--sigma", synth_opt.sigma, "Feature noise level");
    synth->add_option("--seed", synth_opt.seed, "Generator seed");

    // Presets must apply before explicit flags override them; CLI11 parses in
    // order, so run a prepass for --preset.
    auto apply_preset = [](CLI::App* cmd, hgib::RunOptions& opt) {
        if (auto* o = cmd->get_option("--preset"); o->count() > 0) {
            hgib::TrainConfig preset = hgib::preset_config(opt.preset);
            hgib::TrainConfig& cfg = opt.cfg;
            if (cmd->get_option("--alpha")->count() == 0) cfg.alpha = preset.alpha;
            if (cmd->get_option("--beta")->count() == 0) cfg.beta = preset.beta;
            if (cmd->get_option("--epsilon")->count() == 0) cfg.epsilon = preset.epsilon;
            if (cmd->get_option("--layers")->count() == 0) cfg.num_layers = preset.num_layers;
        }
    };

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed()) {
            apply_preset(train, train_opt);
            return hgib::cmd_train(train_opt);
        }
        if (sweep->parsed()) {
            apply_preset(sweep, sweep_opt);
            return hgib::cmd_sweep(sweep_opt);
        }
        if (ablate->parsed()) {
            apply_preset(ablate, ablate_opt);
            return hgib::cmd_ablate(ablate_opt);
        }
        if (synth->parsed()) {
            hgib::Rng rng(synth_opt.seed);
            hgib::LabeledDataset ds =
                hgib::synth_planted(synth_opt.per_class, synth_opt.classes, synth_opt.d_feat,
                                    synth_opt.edges_per_class, synth_opt.sigma, rng);
            hgib::save_dataset(ds, synth_opt.out);
            std::cout << "wrote " << synth_opt.out << " (n=" << ds.n() << ", m="
                      << ds.hypergraph->n_hyperedges() << ", C=" << ds.n_classes << ")\n";
            return 0;
        }
    } catch (const hgib::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
