#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "bon/model.hpp"
#include "bon/text.hpp"
#include "bon/util.hpp"

namespace bon {

struct DataConfig {
    std::string path;
    std::string column = "left";   // which side of the tab-separated pair
    std::string language = "en";
    uint64_t seed = 42;            // shuffle/split seed
    double train_fraction = 0.8;
    int train_cap = 20000;
    int test_cap = 5000;
    int max_sentence_len = 30;
};

struct VocabConfig {
    int capacity = 50000;
};

struct ProbesConfig {
    double lr = 0.001;
    int epochs = 20;
    std::vector<int> frequency_buckets = {0, 100, 500, 1000};
    int length_bin_width = 2;
    int length_classes = 8;
    int phrase_capacity = 50000;  // inventory dictionary capacity (orders 1..3)
};

struct MetricsConfig {
    int bleu_max_order = 4;
    bool smoothing = true;
    int short_threshold = 6;
    int max_decode_len = 30;
};

/// One training/evaluation run: a single (variant, n) model over one data
/// column. Sweeps are separate configs sharing the data section.
struct ExperimentConfig {
    DataConfig data;
    VocabConfig vocab;
    TrainConfig model;
    ProbesConfig probes;
    MetricsConfig metrics;
    std::string out = "run";

    PairColumn pair_column() const {
        if (data.column == "left") return PairColumn::left;
        if (data.column == "right") return PairColumn::right;
        throw config_error("data.column must be 'left' or 'right', got '" + data.column + "'");
    }

    /// Vocabulary order for this run: the bag order, or words only for the
    /// rnn baseline.
    int vocab_max_order() const { return model.variant == Variant::bag ? model.n : 1; }

    void validate() const {
        pair_column();
        if (data.path.empty()) throw config_error("data.path is required");
        if (data.train_fraction <= 0.0 || data.train_fraction >= 1.0) {
            throw config_error("data.train_fraction must lie in (0,1)");
        }
        if (data.train_cap < 1 || data.test_cap < 1) {
            throw config_error("data caps must be positive");
        }
        if (data.max_sentence_len < 1) throw config_error("data.max_sentence_len must be positive");
        if (model.n < 1 || model.n > 5) throw config_error("model.n must lie in [1,5]");
        if (model.hidden < 1) throw config_error("model.hidden must be positive");
        if (model.lr < 0.0) throw config_error("model.lr must be non-negative");
        if (model.epochs < 1) throw config_error("model.epochs must be positive");
        if (model.tf_prob < 0.0 || model.tf_prob > 1.0) {
            throw config_error("model.tf_prob must lie in [0,1]");
        }
        if (model.clip_norm < 0.0) throw config_error("model.clip_norm must be non-negative");
        if (vocab.capacity < vocab_max_order()) {
            throw config_error("vocab.capacity must be at least the n-gram order");
        }
        if (probes.lr <= 0.0) throw config_error("probes.lr must be positive");
        if (probes.epochs < 1) throw config_error("probes.epochs must be positive");
        if (probes.length_bin_width < 1 || probes.length_classes < 2) {
            throw config_error("probes length binning must have width >= 1 and >= 2 classes");
        }
        if (probes.frequency_buckets.empty() || probes.frequency_buckets[0] != 0) {
            throw config_error("probes.frequency_buckets must start at 0");
        }
        for (size_t i = 1; i < probes.frequency_buckets.size(); ++i) {
            if (probes.frequency_buckets[i] <= probes.frequency_buckets[i - 1]) {
                throw config_error("probes.frequency_buckets must be strictly increasing");
            }
        }
        if (probes.phrase_capacity < 3) throw config_error("probes.phrase_capacity too small");
        if (metrics.bleu_max_order < 1) throw config_error("metrics.bleu_max_order must be >= 1");
        if (metrics.short_threshold < 1) throw config_error("metrics.short_threshold must be >= 1");
        if (metrics.max_decode_len < 1) throw config_error("metrics.max_decode_len must be >= 1");
        if (out.empty()) throw config_error("out directory is required");
    }

    /// Fully resolved form: every effective value appears, so the manifest
    /// never hides a default.
    ordered_json to_json() const {
        ordered_json j;
        j["data"] = {{"path", data.path},
                     {"column", data.column},
                     {"language", data.language},
                     {"seed", data.seed},
                     {"train_fraction", data.train_fraction},
                     {"train_cap", data.train_cap},
                     {"test_cap", data.test_cap},
                     {"max_sentence_len", data.max_sentence_len}};
        j["vocab"] = {{"capacity", vocab.capacity}, {"max_order", vocab_max_order()}};
        j["model"] = train_config_to_json(model);
        j["probes"] = {{"lr", probes.lr},
                       {"epochs", probes.epochs},
                       {"frequency_buckets", probes.frequency_buckets},
                       {"length_bin_width", probes.length_bin_width},
                       {"length_classes", probes.length_classes},
                       {"phrase_capacity", probes.phrase_capacity}};
        j["metrics"] = {{"bleu_max_order", metrics.bleu_max_order},
                        {"smoothing", metrics.smoothing},
                        {"short_threshold", metrics.short_threshold},
                        {"max_decode_len", metrics.max_decode_len}};
        j["out"] = out;
        return j;
    }

    static ExperimentConfig from_json(const ordered_json& j) {
        ExperimentConfig c;
        detail_check_keys(j, {"data", "vocab", "model", "probes", "metrics", "out"}, "");
        if (j.contains("data")) {
            const auto& d = j.at("data");
            detail_check_keys(d,
                              {"path", "column", "language", "seed", "train_fraction",
                               "train_cap", "test_cap", "max_sentence_len"},
                              "data.");
            get_to(d, "path", c.data.path);
            get_to(d, "column", c.data.column);
            get_to(d, "language", c.data.language);
            get_to(d, "seed", c.data.seed);
            get_to(d, "train_fraction", c.data.train_fraction);
            get_to(d, "train_cap", c.data.train_cap);
            get_to(d, "test_cap", c.data.test_cap);
            get_to(d, "max_sentence_len", c.data.max_sentence_len);
        }
        if (j.contains("vocab")) {
            const auto& v = j.at("vocab");
            detail_check_keys(v, {"capacity", "max_order"}, "vocab.");
            get_to(v, "capacity", c.vocab.capacity);
            // max_order is derived from the model; accept it in input only
            // if consistent.
        }
        if (j.contains("model")) {
            const auto& m = j.at("model");
            detail_check_keys(m,
                              {"variant", "n", "hidden", "lr", "epochs", "tf_prob", "tf_per_step",
                               "tie_decoder_input", "clip_norm", "embed_init", "seed"},
                              "model.");
            std::string variant = variant_name(c.model.variant);
            get_to(m, "variant", variant);
            c.model.variant = variant_from_string(variant);
            get_to(m, "n", c.model.n);
            get_to(m, "hidden", c.model.hidden);
            get_to(m, "lr", c.model.lr);
            get_to(m, "epochs", c.model.epochs);
            get_to(m, "tf_prob", c.model.tf_prob);
            get_to(m, "tf_per_step", c.model.tf_per_step);
            get_to(m, "tie_decoder_input", c.model.tie_decoder_input);
            get_to(m, "clip_norm", c.model.clip_norm);
            get_to(m, "embed_init", c.model.embed_init);
            get_to(m, "seed", c.model.seed);
        }
        if (c.model.variant == Variant::rnn) c.model.n = 1;
        if (j.contains("vocab") && j.at("vocab").contains("max_order")) {
            const int declared = j.at("vocab").at("max_order").get<int>();
            if (declared != c.vocab_max_order()) {
                throw config_error("vocab.max_order " + std::to_string(declared) +
                                   " conflicts with model (expected " +
                                   std::to_string(c.vocab_max_order()) + ")");
            }
        }
        if (j.contains("probes")) {
            const auto& p = j.at("probes");
            detail_check_keys(p,
                              {"lr", "epochs", "frequency_buckets", "length_bin_width",
                               "length_classes", "phrase_capacity"},
                              "probes.");
            get_to(p, "lr", c.probes.lr);
            get_to(p, "epochs", c.probes.epochs);
            get_to(p, "frequency_buckets", c.probes.frequency_buckets);
            get_to(p, "length_bin_width", c.probes.length_bin_width);
            get_to(p, "length_classes", c.probes.length_classes);
            get_to(p, "phrase_capacity", c.probes.phrase_capacity);
        }
        if (j.contains("metrics")) {
            const auto& m = j.at("metrics");
            detail_check_keys(m, {"bleu_max_order", "smoothing", "short_threshold",
                                  "max_decode_len"},
                              "metrics.");
            get_to(m, "bleu_max_order", c.metrics.bleu_max_order);
            get_to(m, "smoothing", c.metrics.smoothing);
            get_to(m, "short_threshold", c.metrics.short_threshold);
            get_to(m, "max_decode_len", c.metrics.max_decode_len);
        }
        get_to(j, "out", c.out);
        c.validate();
        return c;
    }

    static ExperimentConfig load(const std::string& path) {
        ordered_json j;
        try {
            j = ordered_json::parse(read_file(path));
        } catch (const nlohmann::json::parse_error& e) {
            throw config_error("config " + path + " is not valid JSON: " + e.what());
        }
        return from_json(j);
    }

private:
    template <class V>
    static void get_to(const ordered_json& j, const char* key, V& out) {
        if (!j.contains(key)) return;
        try {
            j.at(key).get_to(out);
        } catch (const nlohmann::json::exception& e) {
            throw config_error(std::string("config field '") + key + "': " + e.what());
        }
    }

    static void detail_check_keys(const ordered_json& j, std::initializer_list<const char*> known,
                                  const std::string& prefix) {
        if (!j.is_object()) throw config_error("config section " + prefix + " must be an object");
        for (const auto& [key, value] : j.items()) {
            bool ok = false;
            for (const char* k : known) ok = ok || key == k;
            if (!ok) throw config_error("unknown config key '" + prefix + key + "'");
        }
    }
};

}  // namespace bon
