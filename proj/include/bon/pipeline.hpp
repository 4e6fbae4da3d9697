#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "bon/checkpoint.hpp"
#include "bon/config.hpp"
#include "bon/metrics.hpp"
#include "bon/model.hpp"
#include "bon/ngrams.hpp"
#include "bon/probes.hpp"
#include "bon/text.hpp"
#include "bon/util.hpp"

namespace bon {

inline constexpr const char* kToolVersion = "0.1.0";

/// Artifact layout of one run directory.
struct RunPaths {
    std::filesystem::path root;

    explicit RunPaths(const std::string& out) : root(out) {}

    std::string manifest() const { return (root / "manifest.json").string(); }
    std::string diagnostics() const { return (root / "corpus" / "diagnostics.json").string(); }
    std::string train_corpus() const { return (root / "corpus" / "train.txt").string(); }
    std::string test_corpus() const { return (root / "corpus" / "test.txt").string(); }
    std::string vocab() const { return (root / "vocab.json").string(); }
    std::string phrases() const { return (root / "phrases.json").string(); }
    std::string checkpoint() const { return (root / "checkpoint.bin").string(); }
    std::string train_log() const { return (root / "train_log.jsonl").string(); }
    std::string bleu_json() const { return (root / "eval" / "bleu.json").string(); }
    std::string bleu_csv() const { return (root / "eval" / "bleu.csv").string(); }
    std::string norms_json() const { return (root / "eval" / "norms.json").string(); }
    std::string norms_csv() const { return (root / "eval" / "norms.csv").string(); }
    std::string probe_json(ProbeTask t) const {
        return (root / "probes" / (std::string(probe_task_name(t)) + ".json")).string();
    }
    std::string probe_csv(ProbeTask t) const {
        return (root / "probes" / (std::string(probe_task_name(t)) + ".csv")).string();
    }
};

namespace detail {

inline double seconds_since(const std::chrono::steady_clock::time_point& t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

/// Creates or extends the run manifest: the resolved config plus one entry
/// per completed stage, enough to re-run the experiment bit for bit.
inline void update_manifest(const RunPaths& paths, const ExperimentConfig& cfg,
                            const std::string& stage, double wallclock_s,
                            ordered_json stage_info) {
    ordered_json m;
    if (std::filesystem::exists(paths.manifest())) {
        m = ordered_json::parse(read_file(paths.manifest()));
    }
    m["version"] = kToolVersion;
    m["config"] = cfg.to_json();
    stage_info["wallclock_s"] = wallclock_s;
    if (!m.contains("stages")) m["stages"] = ordered_json::object();
    m["stages"][stage] = std::move(stage_info);
    write_file(paths.manifest(), m.dump(2) + "\n");
}

}  // namespace detail

// ---------------------------------------------------------------------------
// prepare

/// Tokenizes the configured pair column, deduplicates, splits, and writes the
/// corpus, vocabulary, and phrase inventory artifacts.
inline void run_prepare(const ExperimentConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    const RunPaths paths(cfg.out);
    std::filesystem::create_directories(paths.root / "corpus");

    CorpusDiagnostics diag;
    const std::vector<std::string> lines = load_pairs(cfg.data.path, cfg.pair_column(), diag);
    std::vector<Sentence> sentences = tokenize_lines(lines, cfg.data.max_sentence_len, diag);
    auto [train, test] = dedup_shuffle_split(
        std::move(sentences), cfg.data.seed, diag, cfg.data.train_fraction,
        static_cast<size_t>(cfg.data.train_cap), static_cast<size_t>(cfg.data.test_cap),
        cfg.data.language);
    save_corpus(train, paths.train_corpus());
    save_corpus(test, paths.test_corpus());

    const Vocabulary vocab = build_vocabulary(train, cfg.vocab_max_order(), cfg.vocab.capacity);
    vocab.save(paths.vocab());
    const PhraseInventory inventory = PhraseInventory::build(train, cfg.probes.phrase_capacity);
    write_file(paths.phrases(), inventory.to_json().dump(2) + "\n");

    ordered_json d;
    d["skipped_lines"] = diag.skipped_lines;
    d["dropped_degenerate"] = diag.dropped_degenerate;
    d["dropped_overlong"] = diag.dropped_overlong;
    d["duplicates_removed"] = diag.duplicates_removed;
    d["train_sentences"] = train.size();
    d["test_sentences"] = test.size();
    write_file(paths.diagnostics(), d.dump(2) + "\n");

    ordered_json info;
    info["vocab_hash"] = vocab.hash();
    info["vocab_entries"] = vocab.size();
    info["train_sentences"] = train.size();
    info["test_sentences"] = test.size();
    info["artifacts"] = {"corpus/train.txt", "corpus/test.txt", "corpus/diagnostics.json",
                         "vocab.json", "phrases.json"};
    detail::update_manifest(paths, cfg, "prepare", detail::seconds_since(t0), std::move(info));
}

// ---------------------------------------------------------------------------
// train

inline void run_train(const ExperimentConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    const RunPaths paths(cfg.out);
    const Corpus train_corpus = load_corpus(paths.train_corpus(), "train", cfg.data.language);
    const Vocabulary vocab = Vocabulary::load(paths.vocab());

    std::vector<EpochStats> log;
    ReconstructionModel<float> model = train_model<float>(train_corpus, vocab, cfg.model, &log);

    std::string log_text;
    for (const EpochStats& e : log) {
        ordered_json line;
        line["epoch"] = e.epoch;
        line["mean_loss"] = e.mean_loss;
        line["wallclock_s"] = e.wallclock_s;
        log_text += line.dump() + "\n";
    }
    write_file(paths.train_log(), log_text);
    save_checkpoint(paths.checkpoint(), model, vocab.hash(), cfg.model);

    ordered_json info;
    info["epochs"] = log.size();
    info["final_mean_loss"] = log.empty() ? 0.0 : log.back().mean_loss;
    info["artifacts"] = {"checkpoint.bin", "train_log.jsonl"};
    detail::update_manifest(paths, cfg, "train", detail::seconds_since(t0), std::move(info));
}

// ---------------------------------------------------------------------------
// eval

/// Loads a checkpoint and refuses to score it against a vocabulary other
/// than the one it was trained with.
inline ReconstructionModel<float> load_checked_model(const std::string& checkpoint_path,
                                                     const Vocabulary& vocab) {
    std::string hash;
    ReconstructionModel<float> model = load_checkpoint<float>(checkpoint_path, &hash);
    if (hash != vocab.hash()) {
        throw std::runtime_error("checkpoint " + checkpoint_path +
                                 " was trained with a different vocabulary (hash " + hash +
                                 " vs " + vocab.hash() + ")");
    }
    return model;
}

/// Greedy reconstruction of one sentence as plain tokens; specials never
/// appear (UNK predictions are dropped, EOS terminates).
inline std::vector<std::string> decode_tokens(const ReconstructionModel<float>& model,
                                              const Vocabulary& vocab, const Sentence& s,
                                              int max_len) {
    EncodedSentence es;
    es.words = word_ids(s, vocab);
    if (model.variant == Variant::bag) es.bag_ids = encode_sentence(s, vocab).flat_ids();
    std::vector<std::string> out;
    for (int id : model.reconstruct(es, max_len)) {
        if (id >= Vocabulary::kNumSpecials) out.push_back(vocab.token_string(id));
    }
    return out;
}

inline void run_eval(const ExperimentConfig& cfg, const std::string& checkpoint_override = "") {
    const auto t0 = std::chrono::steady_clock::now();
    const RunPaths paths(cfg.out);
    std::filesystem::create_directories(paths.root / "eval");
    const Corpus test_corpus = load_corpus(paths.test_corpus(), "test", cfg.data.language);
    const Vocabulary vocab = Vocabulary::load(paths.vocab());
    const ReconstructionModel<float> model = load_checked_model(
        checkpoint_override.empty() ? paths.checkpoint() : checkpoint_override, vocab);

    const BleuReport bleu = corpus_bleu(
        [&](const Sentence& s) {
            return decode_tokens(model, vocab, s, cfg.metrics.max_decode_len);
        },
        test_corpus, cfg.metrics.short_threshold, cfg.metrics.bleu_max_order,
        cfg.metrics.smoothing);
    write_file(paths.bleu_json(), bleu_report_json(bleu).dump(2) + "\n");
    write_file(paths.bleu_csv(), bleu_report_csv(bleu));

    const NormTable norms = norm_by_length(
        [&](const Sentence& s) {
            EncodedSentence es;
            es.words = word_ids(s, vocab);
            if (model.variant == Variant::bag) es.bag_ids = encode_sentence(s, vocab).flat_ids();
            return norm2(model.represent(es));
        },
        test_corpus);
    write_file(paths.norms_json(), norm_table_json(norms).dump(2) + "\n");
    write_file(paths.norms_csv(), norm_table_csv(norms));

    ordered_json info;
    info["bleu_overall"] = bleu.overall.mean;
    info["artifacts"] = {"eval/bleu.json", "eval/bleu.csv", "eval/norms.json", "eval/norms.csv"};
    detail::update_manifest(paths, cfg, "eval", detail::seconds_since(t0), std::move(info));
}

// ---------------------------------------------------------------------------
// probe

inline std::vector<ProbeTask> all_probe_tasks() {
    return {ProbeTask::length, ProbeTask::word_content, ProbeTask::phrase_content,
            ProbeTask::word_order};
}

/// Reporting label: the rnn baseline carries n = 0 so it sorts apart from
/// the bag models in merged tables.
inline int report_n(const ExperimentConfig& cfg) {
    return cfg.model.variant == Variant::bag ? cfg.model.n : 0;
}

inline ProbeSet generate_probe_set(ProbeTask task, const Corpus& corpus,
                                   const std::vector<EncodedSentence>& encoded,
                                   const std::vector<Vec<float>>& reps,
                                   const ReconstructionModel<float>& model,
                                   const Vocabulary& vocab, const PhraseInventory& inventory,
                                   const ProbesConfig& pcfg, Rng& rng) {
    switch (task) {
        case ProbeTask::length:
            return make_length_examples(corpus, reps, pcfg.length_bin_width, pcfg.length_classes);
        case ProbeTask::word_content:
            return make_word_content_examples(corpus, encoded, reps, model, rng);
        case ProbeTask::phrase_content:
            return make_phrase_content_examples(corpus, reps, vocab, model, inventory, rng);
        case ProbeTask::word_order:
            return make_word_order_examples(corpus, encoded, reps, model, rng);
    }
    throw std::logic_error("unreachable probe task");
}

/// Trains and evaluates the requested probes against the run's checkpoint.
/// Tasks are independent given the shared read-only artifacts, so they fan
/// out over up to `jobs` threads; per-task rng substreams keep the outputs
/// identical at any worker count.
inline void run_probe(const ExperimentConfig& cfg, const std::vector<ProbeTask>& tasks,
                      const std::string& checkpoint_override = "", unsigned jobs = 1) {
    const auto t0 = std::chrono::steady_clock::now();
    const RunPaths paths(cfg.out);
    std::filesystem::create_directories(paths.root / "probes");
    const Corpus train_corpus = load_corpus(paths.train_corpus(), "train", cfg.data.language);
    const Corpus test_corpus = load_corpus(paths.test_corpus(), "test", cfg.data.language);
    const Vocabulary vocab = Vocabulary::load(paths.vocab());
    const PhraseInventory inventory =
        PhraseInventory::from_json(ordered_json::parse(read_file(paths.phrases())));
    const ReconstructionModel<float> model = load_checked_model(
        checkpoint_override.empty() ? paths.checkpoint() : checkpoint_override, vocab);

    const std::vector<EncodedSentence> enc_train = encode_corpus(train_corpus, vocab, model.variant);
    const std::vector<EncodedSentence> enc_test = encode_corpus(test_corpus, vocab, model.variant);
    std::vector<Vec<float>> reps_train, reps_test;
    reps_train.reserve(enc_train.size());
    for (const EncodedSentence& es : enc_train) reps_train.push_back(model.represent(es));
    reps_test.reserve(enc_test.size());
    for (const EncodedSentence& es : enc_test) reps_test.push_back(model.represent(es));

    std::vector<double> accuracies(tasks.size(), 0.0);
    const auto run_task = [&](size_t i) {
        const ProbeTask task = tasks[i];
        const uint64_t task_id = static_cast<uint64_t>(task);
        Rng gen_train(Rng::derive(cfg.model.seed, 40 + task_id));
        Rng gen_eval(Rng::derive(cfg.model.seed, 50 + task_id));
        const ProbeSet train_set = generate_probe_set(task, train_corpus, enc_train, reps_train,
                                                      model, vocab, inventory, cfg.probes,
                                                      gen_train);
        const ProbeSet eval_set = generate_probe_set(task, test_corpus, enc_test, reps_test,
                                                     model, vocab, inventory, cfg.probes,
                                                     gen_eval);
        ProbeTrainConfig pcfg;
        pcfg.lr = cfg.probes.lr;
        pcfg.epochs = cfg.probes.epochs;
        pcfg.seed = Rng::derive(cfg.model.seed, 60 + task_id);
        const Mlp<float> mlp = train_probe<float>(train_set, pcfg);
        const ProbeReport report =
            bucketed_eval(mlp, eval_set, task, model.word_vocab_size(),
                          FrequencyBuckets{cfg.probes.frequency_buckets});
        ordered_json j = probe_report_json(report, variant_name(cfg.model.variant), report_n(cfg));
        j["train_examples"] = train_set.examples.size();
        j["train_skipped"] = train_set.skipped;
        j["eval_skipped"] = eval_set.skipped;
        if (task == ProbeTask::phrase_content) {
            j["train_negative_only"] = train_set.negative_only;
            j["eval_negative_only"] = eval_set.negative_only;
        }
        write_file(paths.probe_json(task), j.dump(2) + "\n");
        write_file(paths.probe_csv(task),
                   probe_report_csv(report, variant_name(cfg.model.variant), report_n(cfg)));
        accuracies[i] = report.accuracy;
    };

    const size_t workers = std::min<size_t>(std::max(1u, jobs), tasks.size());
    if (workers <= 1) {
        for (size_t i = 0; i < tasks.size(); ++i) run_task(i);
    } else {
        std::atomic<size_t> next{0};
        std::exception_ptr failure;
        std::mutex failure_mu;
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (size_t i = next.fetch_add(1); i < tasks.size(); i = next.fetch_add(1)) {
                    try {
                        run_task(i);
                    } catch (...) {
                        const std::scoped_lock lock(failure_mu);
                        if (!failure) failure = std::current_exception();
                    }
                }
            });
        }
        for (std::thread& t : pool) t.join();
        if (failure) std::rethrow_exception(failure);
    }

    ordered_json info;
    ordered_json artifacts = ordered_json::array();
    for (size_t i = 0; i < tasks.size(); ++i) {
        info[probe_task_name(tasks[i])] = accuracies[i];
        artifacts.push_back(std::string("probes/") + probe_task_name(tasks[i]) + ".json");
        artifacts.push_back(std::string("probes/") + probe_task_name(tasks[i]) + ".csv");
    }
    info["artifacts"] = std::move(artifacts);
    detail::update_manifest(paths, cfg, "probe", detail::seconds_since(t0), std::move(info));
}

}  // namespace bon
