// End-to-end pipeline stages: artifact layout, determinism, manifest
// bookkeeping, and the merged report.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "bon/config.hpp"
#include "bon/demo_corpus.hpp"
#include "bon/pipeline.hpp"
#include "bon/report.hpp"

using namespace bon;

namespace {

std::filesystem::path fresh_dir(const std::string& name) {
    const std::filesystem::path dir = std::filesystem::path("test_tmp") / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

// Small but complete experiment over the synthetic pair corpus.
ExperimentConfig tiny_config(const std::filesystem::path& dir, const std::string& out) {
    const std::string pairs = (dir / "pairs.tsv").string();
    if (!std::filesystem::exists(pairs)) write_demo_pairs(pairs, 260, 7, true);

    ExperimentConfig cfg;
    cfg.data.path = pairs;
    cfg.data.seed = 42;
    cfg.data.train_cap = 120;
    cfg.data.test_cap = 40;
    cfg.vocab.capacity = 400;
    cfg.model.n = 1;
    cfg.model.hidden = 8;
    cfg.model.epochs = 3;
    cfg.model.seed = 5;
    cfg.probes.epochs = 2;
    cfg.probes.phrase_capacity = 400;
    cfg.out = (dir / out).string();
    cfg.validate();
    return cfg;
}

void run_all_stages(const ExperimentConfig& cfg) {
    run_prepare(cfg);
    run_train(cfg);
    run_eval(cfg);
    run_probe(cfg, all_probe_tasks());
}

std::vector<std::string> lines_of(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    return lines;
}

}  // namespace

TEST_CASE("prepare writes byte-identical artifacts on re-run") {
    const auto dir = fresh_dir("pipe_prepare");
    const ExperimentConfig a = tiny_config(dir, "run_a");
    const ExperimentConfig b = tiny_config(dir, "run_b");
    run_prepare(a);
    run_prepare(b);

    const RunPaths pa(a.out), pb(b.out);
    for (const auto& [pick_a, pick_b] :
         {std::pair{pa.train_corpus(), pb.train_corpus()},
          std::pair{pa.test_corpus(), pb.test_corpus()},
          std::pair{pa.vocab(), pb.vocab()},
          std::pair{pa.phrases(), pb.phrases()},
          std::pair{pa.diagnostics(), pb.diagnostics()}}) {
        INFO(pick_a);
        REQUIRE(read_file(pick_a) == read_file(pick_b));
    }
}

TEST_CASE("prepare reports ingestion diagnostics") {
    const auto dir = fresh_dir("pipe_diag");
    const ExperimentConfig cfg = tiny_config(dir, "run");
    run_prepare(cfg);

    const ordered_json diag = ordered_json::parse(read_file(RunPaths(cfg.out).diagnostics()));
    for (const char* key : {"skipped_lines", "dropped_degenerate", "dropped_overlong",
                            "duplicates_removed", "train_sentences", "test_sentences"}) {
        INFO(key);
        REQUIRE(diag.contains(key));
        REQUIRE(diag.at(key).get<long>() >= 0);
    }
    // The synthetic corpus plants noise of every kind.
    REQUIRE(diag.at("skipped_lines").get<long>() > 0);
    REQUIRE(diag.at("duplicates_removed").get<long>() > 0);
    REQUIRE(diag.at("train_sentences").get<long>() == 120);
    REQUIRE(diag.at("test_sentences").get<long>() == 40);
}

TEST_CASE("prepare fails loudly when the input file is missing") {
    const auto dir = fresh_dir("pipe_missing");
    ExperimentConfig cfg = tiny_config(dir, "run");
    cfg.data.path = (dir / "absent.tsv").string();
    REQUIRE_THROWS_AS(run_prepare(cfg), config_error);
}

TEST_CASE("manifest accumulates resolved config and stage records") {
    const auto dir = fresh_dir("pipe_manifest");
    const ExperimentConfig cfg = tiny_config(dir, "run");
    const RunPaths paths(cfg.out);

    run_prepare(cfg);
    ordered_json manifest = ordered_json::parse(read_file(paths.manifest()));
    REQUIRE(manifest.at("version") == kToolVersion);
    // The embedded config is fully resolved: every section and field present.
    const auto& mc = manifest.at("config");
    REQUIRE(mc.at("data").at("path") == cfg.data.path);
    REQUIRE(mc.at("data").at("train_fraction") == 0.8);
    REQUIRE(mc.at("model").at("lr") == 0.01);
    REQUIRE(mc.at("model").at("tf_prob") == 0.5);
    REQUIRE(mc.at("probes").at("length_bin_width") == 2);
    REQUIRE(mc.at("metrics").at("bleu_max_order") == 4);
    REQUIRE(mc.at("vocab").at("capacity") == 400);
    const auto& prep = manifest.at("stages").at("prepare");
    REQUIRE(prep.at("vocab_hash").is_string());
    REQUIRE_FALSE(prep.at("vocab_hash").get<std::string>().empty());
    REQUIRE(prep.at("wallclock_s").get<double>() >= 0.0);

    run_train(cfg);
    run_eval(cfg);
    run_probe(cfg, all_probe_tasks());
    manifest = ordered_json::parse(read_file(paths.manifest()));
    for (const char* stage : {"prepare", "train", "eval", "probe"}) {
        INFO(stage);
        REQUIRE(manifest.at("stages").contains(stage));
        REQUIRE(manifest.at("stages").at(stage).at("wallclock_s").get<double>() >= 0.0);
    }
}

TEST_CASE("train log holds exactly one json line per epoch") {
    const auto dir = fresh_dir("pipe_trainlog");
    const ExperimentConfig cfg = tiny_config(dir, "run");
    run_prepare(cfg);
    run_train(cfg);

    const auto lines = lines_of(read_file(RunPaths(cfg.out).train_log()));
    REQUIRE(lines.size() == static_cast<size_t>(cfg.model.epochs));
    for (size_t i = 0; i < lines.size(); ++i) {
        const ordered_json entry = ordered_json::parse(lines[i]);
        REQUIRE(entry.at("epoch") == static_cast<int>(i) + 1);
        REQUIRE(std::isfinite(entry.at("mean_loss").get<double>()));
        REQUIRE(entry.at("wallclock_s").get<double>() >= 0.0);
    }
}

TEST_CASE("eval writes bleu and norm artifacts in the documented shapes") {
    const auto dir = fresh_dir("pipe_eval");
    const ExperimentConfig cfg = tiny_config(dir, "run");
    run_prepare(cfg);
    run_train(cfg);
    run_eval(cfg);

    const RunPaths paths(cfg.out);
    const ordered_json bleu = ordered_json::parse(read_file(paths.bleu_json()));
    for (const char* group : {"overall", "short", "long"}) {
        INFO(group);
        REQUIRE(bleu.at(group).at("count").get<int>() >= 0);
        const double mean = bleu.at(group).at("mean").get<double>();
        REQUIRE(mean >= 0.0);
        REQUIRE(mean <= 1.0);
    }
    REQUIRE(bleu.at("overall").at("count").get<int>() == 40);
    REQUIRE(bleu.at("max_order") == 4);

    const auto bleu_lines = lines_of(read_file(paths.bleu_csv()));
    REQUIRE(bleu_lines.size() == 4);
    REQUIRE(bleu_lines[0] == "group,count,mean_bleu");
    REQUIRE(bleu_lines[1].rfind("overall,40,", 0) == 0);

    const ordered_json norms = ordered_json::parse(read_file(paths.norms_json()));
    REQUIRE(norms.at("bins").size() == static_cast<size_t>(kNormBins));
    int covered = 0;
    for (const auto& b : norms.at("bins")) {
        covered += b.at("count").get<int>();
        REQUIRE(b.at("mean_norm").get<double>() >= 0.0);
    }
    REQUIRE(covered > 0);
    const auto norm_lines = lines_of(read_file(paths.norms_csv()));
    REQUIRE(norm_lines.size() == 1 + kNormBins);
    REQUIRE(norm_lines[0] == "bin,count,mean_norm");
}

TEST_CASE("probe stage writes one report pair per task") {
    const auto dir = fresh_dir("pipe_probe");
    const ExperimentConfig cfg = tiny_config(dir, "run");
    run_all_stages(cfg);

    const RunPaths paths(cfg.out);
    for (const ProbeTask task : all_probe_tasks()) {
        INFO(probe_task_name(task));
        const ordered_json j = ordered_json::parse(read_file(paths.probe_json(task)));
        REQUIRE(j.at("task") == probe_task_name(task));
        REQUIRE(j.at("model") == "bag");
        REQUIRE(j.at("n") == 1);
        REQUIRE(j.at("count").get<int>() > 0);
        REQUIRE(j.at("accuracy").get<double>() >= 0.0);
        REQUIRE(j.at("chance").get<double>() > 0.0);
        REQUIRE(j.at("buckets").is_array());
        const auto csv = lines_of(read_file(paths.probe_csv(task)));
        REQUIRE(csv[0] == "task,model,n,overall,bucket,bucket_count,accuracy");
        REQUIRE(csv.size() == 1 + j.at("buckets").size());
    }
}

TEST_CASE("probe results are identical at any worker count") {
    const auto dir = fresh_dir("pipe_jobs");
    const ExperimentConfig a = tiny_config(dir, "run_a");
    const ExperimentConfig b = tiny_config(dir, "run_b");
    run_prepare(a);
    run_train(a);
    run_prepare(b);
    run_train(b);
    run_probe(a, all_probe_tasks(), "", 1);
    run_probe(b, all_probe_tasks(), "", 4);
    for (const ProbeTask task : all_probe_tasks()) {
        INFO(probe_task_name(task));
        REQUIRE(read_file(RunPaths(a.out).probe_json(task)) ==
                read_file(RunPaths(b.out).probe_json(task)));
    }
}

TEST_CASE("checkpoints are rejected under a foreign vocabulary") {
    const auto dir = fresh_dir("pipe_vocabhash");
    const ExperimentConfig cfg = tiny_config(dir, "run");
    run_prepare(cfg);
    run_train(cfg);

    const RunPaths paths(cfg.out);
    const Corpus train = load_corpus(paths.train_corpus(), "train", "en");
    build_vocabulary(train, 1, 50).save(paths.vocab());
    REQUIRE_THROWS_AS(run_eval(cfg), std::runtime_error);
}

TEST_CASE("the full pipeline is deterministic across output roots") {
    const auto dir = fresh_dir("pipe_determinism");
    const ExperimentConfig a = tiny_config(dir, "run_a");
    const ExperimentConfig b = tiny_config(dir, "run_b");
    run_all_stages(a);
    run_all_stages(b);

    const RunPaths pa(a.out), pb(b.out);
    REQUIRE(read_file(pa.checkpoint()) == read_file(pb.checkpoint()));
    REQUIRE(read_file(pa.bleu_json()) == read_file(pb.bleu_json()));
    REQUIRE(read_file(pa.norms_json()) == read_file(pb.norms_json()));
    for (const ProbeTask task : all_probe_tasks()) {
        REQUIRE(read_file(pa.probe_json(task)) == read_file(pb.probe_json(task)));
    }
}

TEST_CASE("report merges runs and nulls out missing stages") {
    const auto dir = fresh_dir("pipe_report");
    const std::filesystem::path runs_root = dir / "runs";
    std::filesystem::create_directories(runs_root);

    ExperimentConfig full = tiny_config(dir, "runs/full");
    run_all_stages(full);
    ExperimentConfig partial = tiny_config(dir, "runs/partial");
    partial.model.seed = 6;  // distinct row key
    run_prepare(partial);

    run_report(runs_root.string());

    const ordered_json summary =
        ordered_json::parse(read_file((runs_root / "summary.json").string()));
    REQUIRE(summary.at("schema_version") == 1);
    REQUIRE(summary.at("tool_version") == kToolVersion);
    REQUIRE(summary.at("runs").size() == 2);

    // Sorted by (language, model, n, seed): the full run (seed 5) comes first.
    const auto& run_full = summary.at("runs")[0];
    const auto& run_partial = summary.at("runs")[1];
    REQUIRE(run_full.at("seed") == 5);
    REQUIRE(run_partial.at("seed") == 6);

    REQUIRE_FALSE(run_full.at("train").is_null());
    REQUIRE(run_full.at("train").at("epochs") == 3);
    REQUIRE(run_full.at("train").at("epoch_losses").size() == 3);
    REQUIRE_FALSE(run_full.at("bleu").is_null());
    REQUIRE_FALSE(run_full.at("probes").at("length").is_null());

    REQUIRE(run_partial.at("train").is_null());
    REQUIRE(run_partial.at("bleu").is_null());
    REQUIRE(run_partial.at("norms").is_null());
    for (const ProbeTask task : all_probe_tasks()) {
        REQUIRE(run_partial.at("probes").at(probe_task_name(task)).is_null());
    }
    REQUIRE_FALSE(run_partial.at("vocab_hash").is_null());

    // The config snapshot drops the output location.
    REQUIRE_FALSE(run_full.at("config").contains("out"));
    REQUIRE(run_full.at("config").at("data").at("seed") == 42);

    // Merged tables: documented headers, null runs contribute no rows.
    const auto recon = lines_of(read_file((runs_root / "tables" / "reconstruction.csv").string()));
    REQUIRE(recon[0] == "language,model,n,group,count,mean_bleu");
    REQUIRE(recon.size() == 4);  // one run with three groups
    for (size_t i = 1; i < recon.size(); ++i) REQUIRE(recon[i].rfind("en,bag,1,", 0) == 0);

    const auto probes = lines_of(read_file((runs_root / "tables" / "probes.csv").string()));
    REQUIRE(probes[0] == "language,model,n,task,bucket,bucket_count,accuracy");
    int overall_rows = 0;
    for (size_t i = 1; i < probes.size(); ++i) {
        if (probes[i].find(",overall,") != std::string::npos) ++overall_rows;
    }
    REQUIRE(overall_rows == 4);  // one per task for the single probed run

    const auto norms = lines_of(read_file((runs_root / "tables" / "norms.csv").string()));
    REQUIRE(norms[0] == "language,model,n,bin,count,mean_norm");
    REQUIRE(norms.size() == 1 + kNormBins);
}

TEST_CASE("summary validates against the shipped schema") {
    const auto dir = fresh_dir("pipe_schema");
    const std::filesystem::path runs_root = dir / "runs";
    std::filesystem::create_directories(runs_root);
    ExperimentConfig cfg = tiny_config(dir, "runs/run");
    run_all_stages(cfg);
    run_report(runs_root.string());

    const ordered_json schema = ordered_json::parse(summary_schema_text());
    const ordered_json summary =
        ordered_json::parse(read_file((runs_root / "summary.json").string()));
    std::string err;
    REQUIRE(validate_schema(schema, summary, err));

    // A run entry violating the schema is caught.
    ordered_json broken = summary;
    broken["runs"][0]["model"] = "transformer";
    REQUIRE_FALSE(validate_schema(schema, broken, err));
    REQUIRE_FALSE(err.empty());

    ordered_json missing = summary;
    missing["runs"][0].erase("vocab_hash");
    REQUIRE_FALSE(validate_schema(schema, missing, err));
}

TEST_CASE("shipped schema file matches the embedded schema") {
    const std::string shipped = std::filesystem::exists("schemas/summary.schema.json")
                                    ? "schemas/summary.schema.json"
                                    : "../schemas/summary.schema.json";
    REQUIRE(read_file(shipped) == summary_schema_text());
}

TEST_CASE("report on an empty directory still emits a valid summary") {
    const auto dir = fresh_dir("pipe_report_empty");
    const std::filesystem::path runs_root = dir / "runs";
    std::filesystem::create_directories(runs_root);
    run_report(runs_root.string());
    const ordered_json summary =
        ordered_json::parse(read_file((runs_root / "summary.json").string()));
    REQUIRE(summary.at("runs").empty());
}
