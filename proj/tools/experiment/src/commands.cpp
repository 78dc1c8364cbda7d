#include "lfs/experiment/commands.hpp"

#include "lfs/experiment/config.hpp"
#include "lfs/experiment/metrics.hpp"
#include "lfs/experiment/pipeline.hpp"

#include <lfs/checkpoint.hpp>
#include <lfs/error.hpp>

#include <CLI11.hpp>

#include <fstream>
#include <functional>
#include <optional>
#include <ostream>

namespace lfs::experiment {

namespace fs = std::filesystem;

namespace {

struct Overrides {
    std::optional<fs::path> config;
    std::optional<std::uint64_t> seed;
    std::optional<fs::path> out;
    std::optional<std::size_t> threads;
    std::optional<fs::path> dataset;

    std::optional<std::string> loss;
    std::optional<int> m1;
    std::optional<double> m2;
    std::optional<double> m3;
    std::optional<double> a;
    std::optional<std::size_t> epochs;
    std::optional<double> lr;
    std::optional<std::size_t> batch_size;

    std::optional<std::size_t> population;
    std::optional<double> mu0;
    std::optional<double> sigma;
    std::optional<double> eta;
    std::optional<std::string> score_grad;
    std::optional<std::string> optimizer;
    std::optional<std::string> sample_space;
    std::optional<std::string> reward;

    std::optional<double> a_min;
    std::vector<double> factors;
};

void add_common(CLI::App* cmd, Overrides& o)
{
    cmd->add_option("--config", o.config, "JSON config file; flags override it");
    cmd->add_option("--seed", o.seed, "Run seed");
    cmd->add_option("--out", o.out, "Output directory");
    cmd->add_option("--threads", o.threads, "Worker threads for candidate training (0 = all cores)");
}

void add_training(CLI::App* cmd, Overrides& o)
{
    add_common(cmd, o);
    cmd->add_option("--dataset", o.dataset, "CSV dataset (features..., label); default is synthetic");
    cmd->add_option("--epochs", o.epochs);
    cmd->add_option("--lr", o.lr, "Initial SGD learning rate");
    cmd->add_option("--batch-size", o.batch_size);
    cmd->add_option("--reward", o.reward, "verification | identification");
}

template <class T, class U>
void apply(const std::optional<T>& value, U& target)
{
    if (value) {
        target = *value;
    }
}

ExperimentConfig resolve(const Overrides& o, ExperimentConfig base = {})
{
    ExperimentConfig c = o.config ? load_config(*o.config, std::move(base)) : std::move(base);
    apply(o.seed, c.seed);
    apply(o.out, c.out);
    apply(o.threads, c.threads);
    if (o.dataset) {
        c.dataset.source = "csv";
        c.dataset.path = *o.dataset;
    }
    apply(o.loss, c.loss.type);
    apply(o.m1, c.loss.m1);
    apply(o.m2, c.loss.m2);
    apply(o.m3, c.loss.m3);
    apply(o.a, c.loss.a);
    apply(o.epochs, c.epochs);
    apply(o.lr, c.sgd.learning_rate);
    apply(o.batch_size, c.sgd.batch_size);
    apply(o.population, c.search.population);
    apply(o.mu0, c.search.mu0);
    apply(o.sigma, c.search.sigma);
    apply(o.eta, c.search.eta);
    apply(o.score_grad, c.search.score_grad);
    apply(o.optimizer, c.search.optimizer);
    apply(o.sample_space, c.search.sample_space);
    apply(o.reward, c.eval.reward);
    apply(o.a_min, c.random.a_min);
    if (!o.factors.empty()) {
        c.ablation_factors = o.factors;
    }
    validate(c);
    return c;
}

void print_outcome(std::ostream& out, const fs::path& dir, const RunOutcome& r, std::ostream* err = nullptr)
{
    if (err && r.positive_factor_rows > 0) {
        *err << "warning: " << r.positive_factor_rows
             << " training rows had a positive modulating factor (angular margin past pi/m1)\n";
    }
    out << "run " << r.run_id << " -> " << dir.string() << "\n"
        << "  final reward (val):      " << format_number(r.final_reward) << "\n"
        << "  verification acc (test): " << format_number(r.test_report.verification.accuracy) << "\n"
        << "  rank-1 (test):           " << format_number(r.test_report.identification.rank1) << "\n";
}

int eval_command(const Overrides& o, const fs::path& checkpoint, const std::string& split, std::ostream& out)
{
    ExperimentConfig base;
    const auto snapshot = checkpoint.parent_path() / "config.json";
    if (!o.config && fs::exists(snapshot)) {
        base = load_config(snapshot);
    }
    auto config = resolve(o, base);
    const fs::path dir = o.out ? *o.out : (checkpoint.parent_path().empty() ? fs::path(".") : checkpoint.parent_path());

    const auto net = read_checkpoint(checkpoint);
    const auto data = prepare_data(config);
    require(net.backbone.layer_dims.front() == data.train.dim(),
            "checkpoint input dimension does not match the dataset");

    std::vector<EvaluationReport> reports;
    if (split == "val" || split == "all") {
        reports.push_back(evaluate_model(net, data.val, data.val_pairs, config.eval, "val"));
    }
    if (split == "test" || split == "all") {
        reports.push_back(evaluate_model(net, data.test, data.test_pairs, config.eval, "test"));
    }
    fs::create_directories(dir);
    for (const auto& r : reports) {
        const bool single = reports.size() == 1;
        write_report(dir, r, single ? "eval_report" : "eval_report_" + r.split,
                     single ? "eval_" : "eval_" + r.split + "_");
        out << report_json(r);
    }
    return kExitOk;
}

int export_curves(const std::vector<double>& factors, const fs::path& output, std::ostream& out)
{
    for (double a : factors) {
        if (!(a <= 0.0)) {
            throw ConfigError("--a", "factor " + format_number(a) + " is positive");
        }
    }
    if (output.has_parent_path()) {
        fs::create_directories(output.parent_path());
    }
    std::ofstream file(output, std::ios::binary | std::ios::trunc);
    if (!file) {
        throw DataError("cannot open " + output.string() + " for writing");
    }
    write_modulating_curves(file, factors);
    if (!file) {
        throw DataError("write failed: " + output.string());
    }
    out << "wrote " << output.string() << "\n";
    return kExitOk;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Loss function search for margin-based softmax", "lfs"};
    app.require_subcommand(1);

    Overrides o;
    std::function<int()> action;

    auto* fixed = app.add_subcommand("train-fixed", "Train with one fixed loss");
    add_training(fixed, o);
    fixed->add_option("--loss", o.loss, "plain | sphere | arc | am | combined | unified");
    fixed->add_option("--m1", o.m1);
    fixed->add_option("--m2", o.m2);
    fixed->add_option("--m3", o.m3);
    fixed->add_option("--a", o.a, "Modulating factor for --loss unified");
    fixed->callback([&] {
        action = [&] {
            const auto c = resolve(o);
            const auto data = prepare_data(c);
            print_outcome(out, c.out, run_train_fixed(c, data, c.out), &err);
            return kExitOk;
        };
    });

    auto* search = app.add_subcommand("search", "Reward-guided search over the modulating factor");
    add_training(search, o);
    search->add_option("--population", o.population, "Candidates per epoch (B)");
    search->add_option("--mu0", o.mu0);
    search->add_option("--sigma", o.sigma);
    search->add_option("--eta", o.eta);
    search->add_option("--score-grad", o.score_grad, "mu | a");
    search->add_option("--optimizer", o.optimizer, "plain | adam");
    search->add_option("--sample-space", o.sample_space, "direct | negexp");
    search->callback([&] {
        action = [&] {
            const auto c = resolve(o);
            const auto data = prepare_data(c);
            print_outcome(out, c.out, run_search_mode(c, data, c.out));
            return kExitOk;
        };
    });

    auto* random = app.add_subcommand("random-schedule", "Resample the factor every epoch without reward");
    add_training(random, o);
    random->add_option("--a-min", o.a_min, "Most negative factor");
    random->callback([&] {
        action = [&] {
            const auto c = resolve(o);
            const auto data = prepare_data(c);
            print_outcome(out, c.out, run_random_mode(c, data, c.out));
            return kExitOk;
        };
    });

    auto* ablate = app.add_subcommand("ablate-a", "One fixed-factor run per factor");
    add_training(ablate, o);
    ablate->add_option("--factors", o.factors, "Factors to train with (all <= 0)")->delimiter(',');
    ablate->callback([&] {
        action = [&] {
            const auto c = resolve(o);
            const auto data = prepare_data(c);
            const auto rows = run_ablation(c, data, c.out);
            out << "a,final_reward,test_verification_accuracy,test_rank1\n";
            for (const auto& r : rows) {
                out << format_number(r.factor) << ',' << format_number(r.outcome.final_reward) << ','
                    << format_number(r.outcome.test_report.verification.accuracy) << ','
                    << format_number(r.outcome.test_report.identification.rank1) << '\n';
            }
            return kExitOk;
        };
    });

    fs::path checkpoint;
    std::string split = "test";
    auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
    add_common(eval, o);
    eval->add_option("--dataset", o.dataset, "CSV dataset; default is the run's config");
    eval->add_option("--checkpoint", checkpoint, "Checkpoint file")->required();
    eval->add_option("--split", split, "test | val | all")->check(CLI::IsMember({"test", "val", "all"}));
    eval->callback([&] { action = [&] { return eval_command(o, checkpoint, split, out); }; });

    std::vector<double> curve_factors{0.0, -1.0, -10.0, -100.0, -1000.0, -10000.0};
    fs::path output = "modulating_curves.csv";
    auto* curves = app.add_subcommand("export-curves", "CSV of h(a,p) and p_m over p in [0,1]");
    curves->add_option("--a", curve_factors, "Factors (all <= 0)")->delimiter(',');
    curves->add_option("--output", output, "CSV path");
    curves->callback([&] { action = [&] { return export_curves(curve_factors, output, out); }; });

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitConfig;
    }

    try {
        return action();
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ContractError& e) {
        err << "invalid argument: " << e.what() << "\n";
        return kExitConfig;
    } catch (const FormatError& e) {
        err << "format error: " << e.what() << "\n";
        return kExitData;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const fs::filesystem_error& e) {
        err << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
}

} // namespace lfs::experiment
