#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bon/report.hpp"

namespace {

struct Options {
    std::string config;
    std::string out;
    std::string checkpoint;
    std::string runs_dir;
    std::vector<std::string> tasks;
    uint64_t seed = 0;
    bool seed_set = false;
    unsigned jobs = 1;
};

bon::ExperimentConfig load_config(const Options& opt) {
    bon::ExperimentConfig cfg = bon::ExperimentConfig::load(opt.config);
    if (opt.seed_set) cfg.model.seed = opt.seed;
    if (!opt.out.empty()) cfg.out = opt.out;
    cfg.validate();
    return cfg;
}

std::vector<bon::ProbeTask> parse_tasks(const std::vector<std::string>& names) {
    if (names.empty()) return bon::all_probe_tasks();
    std::vector<bon::ProbeTask> tasks;
    tasks.reserve(names.size());
    for (const std::string& name : names) tasks.push_back(bon::probe_task_from_string(name));
    return tasks;
}

void add_run_flags(CLI::App* sub, Options& opt, bool with_checkpoint) {
    sub->add_option("--config", opt.config, "experiment config JSON")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--seed", opt.seed, "override the model seed")
        ->each([&opt](const std::string&) { opt.seed_set = true; });
    sub->add_option("--out", opt.out, "override the run output directory");
    sub->add_option("--jobs", opt.jobs, "max concurrent jobs")->check(CLI::PositiveNumber);
    if (with_checkpoint) {
        sub->add_option("--checkpoint", opt.checkpoint, "checkpoint path (default: run's own)")
            ->check(CLI::ExistingFile);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"bag-of-n-grams sentence representations: prepare, train, evaluate, probe"};
    app.require_subcommand(1);
    Options opt;

    CLI::App* prepare = app.add_subcommand("prepare", "tokenize, split, and build the vocabulary");
    add_run_flags(prepare, opt, false);
    CLI::App* train = app.add_subcommand("train", "train the reconstruction model");
    add_run_flags(train, opt, false);
    CLI::App* eval = app.add_subcommand("eval", "reconstruction BLEU and representation norms");
    add_run_flags(eval, opt, true);
    CLI::App* probe = app.add_subcommand("probe", "train and evaluate probing classifiers");
    add_run_flags(probe, opt, true);
    probe->add_option("--task", opt.tasks,
                      "probe task (repeatable): length, word_content, phrase_content, word_order");
    CLI::App* report = app.add_subcommand("report", "merge run directories into summary tables");
    report->add_option("runs", opt.runs_dir, "directory holding run subdirectories")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (prepare->parsed()) {
            bon::run_prepare(load_config(opt));
        } else if (train->parsed()) {
            bon::run_train(load_config(opt));
        } else if (eval->parsed()) {
            bon::run_eval(load_config(opt), opt.checkpoint);
        } else if (probe->parsed()) {
            bon::run_probe(load_config(opt), parse_tasks(opt.tasks), opt.checkpoint, opt.jobs);
        } else if (report->parsed()) {
            bon::run_report(opt.runs_dir);
        }
    } catch (const bon::config_error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
