#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include <json.hpp>

#include "bon/model.hpp"
#include "bon/ngrams.hpp"
#include "bon/nn.hpp"
#include "bon/rng.hpp"
#include "bon/text.hpp"
#include "bon/util.hpp"

namespace bon {

// ---------------------------------------------------------------------------
// probing classifier

/// Fixed-capacity classifier head: input -> 128 -> 64 -> classes, rectifier
/// activations, softmax cross-entropy loss.
template <typename T>
struct Mlp {
    Param<T> w1, b1, w2, b2, w3, b3;

    Mlp() = default;

    Mlp(int input, int classes, Rng& rng, int h1 = 128, int h2 = 64)
        : w1("mlp.w1", h1, input),
          b1("mlp.b1", 1, h1),
          w2("mlp.w2", h2, h1),
          b2("mlp.b2", 1, h2),
          w3("mlp.w3", classes, h2),
          b3("mlp.b3", 1, classes) {
        init_matrix(w1, rng);
        init_matrix(w2, rng);
        init_matrix(w3, rng);
    }

    int input_dim() const { return w1.v.cols(); }
    int num_classes() const { return w3.v.rows(); }

    std::vector<Param<T>*> params() { return {&w1, &b1, &w2, &b2, &w3, &b3}; }

    Vec<T> logits(const Vec<T>& x) const {
        Vec<T> h1(static_cast<size_t>(w1.v.rows()), T(0));
        gemv_acc(w1.v, x, h1);
        axpy(h1, T(1), b1.v.data());
        relu_inplace(h1);
        Vec<T> h2(static_cast<size_t>(w2.v.rows()), T(0));
        gemv_acc(w2.v, h1, h2);
        axpy(h2, T(1), b2.v.data());
        relu_inplace(h2);
        Vec<T> out(static_cast<size_t>(w3.v.rows()), T(0));
        gemv_acc(w3.v, h2, out);
        axpy(out, T(1), b3.v.data());
        return out;
    }

    int predict(const Vec<T>& x) const { return argmax(logits(x)); }

    /// Forward + backward on one example; grads accumulate. Returns the loss.
    double train_step(const Vec<T>& x, int label) {
        Vec<T> a1(static_cast<size_t>(w1.v.rows()), T(0));
        gemv_acc(w1.v, x, a1);
        axpy(a1, T(1), b1.v.data());
        Vec<T> h1 = a1;
        relu_inplace(h1);
        Vec<T> a2(static_cast<size_t>(w2.v.rows()), T(0));
        gemv_acc(w2.v, h1, a2);
        axpy(a2, T(1), b2.v.data());
        Vec<T> h2 = a2;
        relu_inplace(h2);
        Vec<T> out(static_cast<size_t>(w3.v.rows()), T(0));
        gemv_acc(w3.v, h2, out);
        axpy(out, T(1), b3.v.data());

        Vec<T> dout;
        const double loss = softmax_cross_entropy(out, label, dout);

        outer_acc(w3.g, dout, h2);
        axpy(b3.g, T(1), dout);
        Vec<T> dh2(h2.size(), T(0));
        gemv_t_acc(w3.v, dout, dh2);
        for (size_t i = 0; i < dh2.size(); ++i) {
            if (a2[i] <= T(0)) dh2[i] = T(0);
        }
        outer_acc(w2.g, dh2, h1);
        axpy(b2.g, T(1), dh2);
        Vec<T> dh1(h1.size(), T(0));
        gemv_t_acc(w2.v, dh2, dh1);
        for (size_t i = 0; i < dh1.size(); ++i) {
            if (a1[i] <= T(0)) dh1[i] = T(0);
        }
        outer_acc(w1.g, dh1, x);
        axpy(b1.g, T(1), dh1);
        return loss;
    }
};

// ---------------------------------------------------------------------------
// probe example generation

enum class ProbeTask { length, word_content, phrase_content, word_order };

inline const char* probe_task_name(ProbeTask t) {
    switch (t) {
        case ProbeTask::length: return "length";
        case ProbeTask::word_content: return "word_content";
        case ProbeTask::phrase_content: return "phrase_content";
        case ProbeTask::word_order: return "word_order";
    }
    return "?";
}

inline ProbeTask probe_task_from_string(const std::string& s) {
    if (s == "length") return ProbeTask::length;
    if (s == "word_content") return ProbeTask::word_content;
    if (s == "phrase_content") return ProbeTask::phrase_content;
    if (s == "word_order") return ProbeTask::word_order;
    throw config_error("unknown probe task '" + s +
                       "' (expected length, word_content, phrase_content, word_order)");
}

struct ProbeExample {
    Vec<float> input;
    int label = 0;
    int sentence = -1;   // index into the source corpus
    int word = -1;       // probed word id (word_content)
    int phrase_len = -1; // probed phrase length (phrase_content)
    int distance = -1;   // words strictly between the pair (word_order)
};

struct ProbeSet {
    std::vector<ProbeExample> examples;
    int num_classes = 2;
    int skipped = 0;        // sentences that produced nothing
    int negative_only = 0;  // phrase task: sentences with no in-inventory span
    int length_width = 2;   // length task binning, echoed into the report
};

/// Default length classes: width-2 bins 1-2 .. 13-14 plus a 15+ class.
inline constexpr int kLengthClasses = 8;

inline int length_class(int length, int width = 2, int classes = kLengthClasses) {
    if (length < 1) throw std::logic_error("length_class: non-positive length");
    return std::min((length - 1) / width, classes - 1);
}

inline std::string length_class_label(int cls, int width = 2, int classes = kLengthClasses) {
    if (cls == classes - 1) return std::to_string(width * cls + 1) + "+";
    return std::to_string(width * cls + 1) + "-" + std::to_string(width * (cls + 1));
}

namespace detail {

template <typename T>
Vec<float> to_float(const Vec<T>& v) {
    Vec<float> out(v.size());
    for (size_t i = 0; i < v.size(); ++i) out[i] = static_cast<float>(v[i]);
    return out;
}

template <typename T>
void append_row(Vec<float>& dst, const Embedder<T>& table, int id) {
    const T* row = table.row(id);
    for (int k = 0; k < table.dim(); ++k) dst.push_back(static_cast<float>(row[k]));
}

}  // namespace detail

/// Input: the sentence vector alone. Label: length class.
template <typename T>
ProbeSet make_length_examples(const Corpus& corpus, const std::vector<Vec<T>>& reps,
                              int width = 2, int classes = kLengthClasses) {
    ProbeSet set;
    set.num_classes = classes;
    set.length_width = width;
    for (size_t i = 0; i < corpus.sentences.size(); ++i) {
        ProbeExample e;
        e.input = detail::to_float(reps[i]);
        e.label = length_class(corpus.sentences[i].length(), width, classes);
        e.sentence = static_cast<int>(i);
        set.examples.push_back(std::move(e));
    }
    return set;
}

/// Input: concat(sentence vector, word embedding). Label: 1 iff the word
/// occurs in the sentence. One positive and one negative per sentence; the
/// negative is rejection-sampled from the word ids absent from the sentence.
/// UNK participates on both sides so the unknown frequency bucket is
/// populated; SOS/EOS never appear.
template <typename T>
ProbeSet make_word_content_examples(const Corpus& corpus,
                                    const std::vector<EncodedSentence>& encoded,
                                    const std::vector<Vec<T>>& reps,
                                    const ReconstructionModel<T>& model, Rng& rng) {
    ProbeSet set;
    set.num_classes = 2;
    const int words = model.word_vocab_size();
    for (size_t i = 0; i < corpus.sentences.size(); ++i) {
        const std::vector<int>& ids = encoded[i].words;
        if (ids.empty()) {
            ++set.skipped;
            continue;
        }
        const std::unordered_set<int> present(ids.begin(), ids.end());
        if (static_cast<int>(present.size()) >= words - Vocabulary::kUnk) {
            ++set.skipped;  // no absent word to sample (tiny vocabularies only)
            continue;
        }
        const Vec<float> rep = detail::to_float(reps[i]);
        const int pos_word = ids[static_cast<size_t>(rng.below(ids.size()))];
        int neg_word = -1;
        for (int tries = 0; tries < 128; ++tries) {
            const int cand =
                Vocabulary::kUnk + static_cast<int>(rng.below(
                                       static_cast<uint64_t>(words - Vocabulary::kUnk)));
            if (!present.count(cand)) {
                neg_word = cand;
                break;
            }
        }
        if (neg_word < 0) {
            for (int cand = Vocabulary::kUnk; cand < words; ++cand) {
                if (!present.count(cand)) {
                    neg_word = cand;
                    break;
                }
            }
        }
        for (const auto& [word, label] : {std::pair{pos_word, 1}, std::pair{neg_word, 0}}) {
            ProbeExample e;
            e.input = rep;
            detail::append_row(e.input, model.embedder, word);
            e.label = label;
            e.sentence = static_cast<int>(i);
            e.word = word;
            set.examples.push_back(std::move(e));
        }
    }
    return set;
}

/// Shared phrase pool for the phrase-content task: the bigram and trigram
/// entries of a frequency-clipped dictionary built once from the training
/// split, so every model is probed against the same phrases regardless of
/// its own maximum order.
struct PhraseInventory {
    std::vector<std::vector<std::string>> phrases;  // each of size 2 or 3
    std::vector<size_t> by_len[2];                  // indices of 2- and 3-token phrases

    static PhraseInventory build(const Corpus& train, int capacity) {
        PhraseInventory inv;
        const Vocabulary v = build_vocabulary(train, 3, capacity);
        for (const auto& e : v.entries) {
            if (e.order < 2) continue;
            inv.add(e.tokens);
        }
        return inv;
    }

    void add(const std::vector<std::string>& phrase) {
        by_len[phrase.size() - 2].push_back(phrases.size());
        phrases.push_back(phrase);
    }

    bool usable() const { return !by_len[0].empty() && !by_len[1].empty(); }

    ordered_json to_json() const {
        ordered_json j;
        ordered_json list = ordered_json::array();
        for (const auto& p : phrases) list.push_back(p);
        j["phrases"] = std::move(list);
        return j;
    }

    static PhraseInventory from_json(const ordered_json& j) {
        PhraseInventory inv;
        for (const auto& p : j.at("phrases")) {
            const auto tokens = p.get<std::vector<std::string>>();
            if (tokens.size() < 2 || tokens.size() > 3) {
                throw std::runtime_error("phrase inventory entry must have 2 or 3 tokens");
            }
            inv.add(tokens);
        }
        return inv;
    }
};

/// A phrase is represented exactly like a sentence: the model's own encoding
/// of its tokens (bag sum or encoder state). For a unigram model the vector
/// of [a, b] is therefore e(a) + e(b).
template <typename T>
Vec<float> phrase_vector(const std::vector<std::string>& phrase, const Vocabulary& vocab,
                         const ReconstructionModel<T>& model) {
    Sentence s{phrase};
    EncodedSentence es;
    es.words = word_ids(s, vocab);
    if (model.variant == Variant::bag) es.bag_ids = encode_sentence(s, vocab).flat_ids();
    return detail::to_float(model.represent(es));
}

/// Input: concat(sentence vector, phrase vector). Label: 1 iff the phrase
/// occurs as a contiguous span. Positives are in-inventory spans; each gets a
/// same-length negative from the inventory. Sentences with no in-inventory
/// span contribute one negative and are tallied in negative_only.
template <typename T>
ProbeSet make_phrase_content_examples(const Corpus& corpus, const std::vector<Vec<T>>& reps,
                                      const Vocabulary& vocab, const ReconstructionModel<T>& model,
                                      const PhraseInventory& inv, Rng& rng) {
    if (!inv.usable()) throw config_error("phrase inventory has no bigrams or no trigrams");
    ProbeSet set;
    set.num_classes = 2;

    std::unordered_map<std::string, size_t> index;
    for (size_t p = 0; p < inv.phrases.size(); ++p) index.emplace(join(inv.phrases[p]), p);

    for (size_t i = 0; i < corpus.sentences.size(); ++i) {
        const Sentence& s = corpus.sentences[i];
        const Vec<float> rep = detail::to_float(reps[i]);

        std::unordered_set<std::string> spans;
        std::vector<size_t> positive_pool;
        for (int len = 2; len <= 3; ++len) {
            for (int start = 0; start + len <= s.length(); ++start) {
                std::string key = s.tokens[static_cast<size_t>(start)];
                for (int k = 1; k < len; ++k) {
                    key.push_back(' ');
                    key += s.tokens[static_cast<size_t>(start + k)];
                }
                if (spans.insert(key).second) {
                    const auto it = index.find(key);
                    if (it != index.end()) positive_pool.push_back(it->second);
                }
            }
        }

        const auto emit = [&](size_t phrase_idx, int label) {
            ProbeExample e;
            e.input = rep;
            const Vec<float> pv = phrase_vector(inv.phrases[phrase_idx], vocab, model);
            e.input.insert(e.input.end(), pv.begin(), pv.end());
            e.label = label;
            e.sentence = static_cast<int>(i);
            e.phrase_len = static_cast<int>(inv.phrases[phrase_idx].size());
            set.examples.push_back(std::move(e));
        };
        const auto sample_negative = [&](int len) -> bool {
            const auto& pool = inv.by_len[len - 2];
            for (int tries = 0; tries < 128; ++tries) {
                const size_t cand = pool[static_cast<size_t>(rng.below(pool.size()))];
                if (!spans.count(join(inv.phrases[cand]))) {
                    emit(cand, 0);
                    return true;
                }
            }
            for (size_t cand : pool) {
                if (!spans.count(join(inv.phrases[cand]))) {
                    emit(cand, 0);
                    return true;
                }
            }
            return false;
        };

        if (positive_pool.empty()) {
            const int len = 2 + static_cast<int>(rng.below(2));
            if (sample_negative(len) || sample_negative(len == 2 ? 3 : 2)) {
                ++set.negative_only;
            } else {
                ++set.skipped;
            }
            continue;
        }
        const size_t pos = positive_pool[static_cast<size_t>(rng.below(positive_pool.size()))];
        emit(pos, 1);
        const int len = static_cast<int>(inv.phrases[pos].size());
        if (!sample_negative(len)) {
            set.examples.pop_back();  // keep balance when no negative exists
            ++set.skipped;
        }
    }
    return set;
}

/// Input: concat(sentence vector, e(w1), e(w2)). Label: 1 iff w1 precedes w2
/// in the sentence. Pairs are drawn from non-special words occurring exactly
/// once; presentation order is randomized so labels are balanced. distance =
/// words strictly between the pair.
template <typename T>
ProbeSet make_word_order_examples(const Corpus& corpus,
                                  const std::vector<EncodedSentence>& encoded,
                                  const std::vector<Vec<T>>& reps,
                                  const ReconstructionModel<T>& model, Rng& rng) {
    ProbeSet set;
    set.num_classes = 2;
    // Random phase, then strict alternation: presentation order still varies
    // with the seed while the labels stay balanced within one example.
    bool label_one = rng.coin(0.5);
    for (size_t i = 0; i < corpus.sentences.size(); ++i) {
        const std::vector<int>& ids = encoded[i].words;
        std::map<int, int> occurrences;
        for (int id : ids) {
            if (id >= Vocabulary::kNumSpecials) ++occurrences[id];
        }
        std::vector<int> positions;  // positions of usable words
        for (size_t pos = 0; pos < ids.size(); ++pos) {
            if (ids[pos] >= Vocabulary::kNumSpecials && occurrences[ids[pos]] == 1) {
                positions.push_back(static_cast<int>(pos));
            }
        }
        if (positions.size() < 2) {
            ++set.skipped;
            continue;
        }
        const size_t a = static_cast<size_t>(rng.below(positions.size()));
        size_t b = static_cast<size_t>(rng.below(positions.size() - 1));
        if (b >= a) ++b;
        int p1 = positions[a], p2 = positions[b];
        if ((p1 < p2) != label_one) std::swap(p1, p2);
        label_one = !label_one;

        ProbeExample e;
        e.input = detail::to_float(reps[i]);
        detail::append_row(e.input, model.embedder, ids[static_cast<size_t>(p1)]);
        detail::append_row(e.input, model.embedder, ids[static_cast<size_t>(p2)]);
        e.label = p1 < p2 ? 1 : 0;
        e.sentence = static_cast<int>(i);
        e.distance = std::abs(p1 - p2) - 1;
        set.examples.push_back(std::move(e));
    }
    return set;
}

// ---------------------------------------------------------------------------
// probe training and evaluation

struct ProbeTrainConfig {
    double lr = 0.001;
    int epochs = 20;
    uint64_t seed = 0;
};

template <typename T>
Mlp<T> train_probe(const ProbeSet& train_set, const ProbeTrainConfig& cfg) {
    if (train_set.examples.empty()) throw config_error("train_probe: no examples");
    const int input = static_cast<int>(train_set.examples[0].input.size());
    Rng rng(Rng::derive(cfg.seed, 21));
    Mlp<T> mlp(input, train_set.num_classes, rng);
    const std::vector<Param<T>*> params = mlp.params();

    std::vector<size_t> order(train_set.examples.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        rng.shuffle(order);
        double loss_sum = 0.0;
        for (size_t k : order) {
            const ProbeExample& e = train_set.examples[k];
            Vec<T> x(e.input.begin(), e.input.end());
            loss_sum += mlp.train_step(x, e.label);
            sgd_step(params, cfg.lr);
        }
        if (!std::isfinite(loss_sum)) {
            throw std::runtime_error("probe training diverged at epoch " + std::to_string(epoch));
        }
    }
    return mlp;
}

/// Word-frequency bucket boundaries (by frequency-ordered word rank).
struct FrequencyBuckets {
    std::vector<int> bounds = {0, 100, 500, 1000};  // [b_i, b_{i+1}) then [last, vocab)

    std::string label(int rank, int vocab_words) const {
        for (size_t i = 0; i + 1 < bounds.size(); ++i) {
            if (rank >= bounds[i] && rank < bounds[i + 1]) {
                return "[" + std::to_string(bounds[i]) + "," + std::to_string(bounds[i + 1]) + ")";
            }
        }
        return "[" + std::to_string(bounds.back()) + "," + std::to_string(vocab_words) + ")";
    }
};

struct ProbeBucket {
    std::string label;
    int count = 0;
    double accuracy = 0.0;
};

struct ProbeReport {
    std::string task;
    int count = 0;
    double accuracy = 0.0;
    double chance = 0.0;  // constant-classifier baseline on this set
    std::vector<ProbeBucket> buckets;
};

/// Accuracy overall and per bucket. Buckets depend on the task: frequency
/// buckets (word rank, UNK = "unknown") for word content, distance buckets
/// for word order, phrase length for phrase content, the class bins for
/// length. Empty buckets are omitted.
template <typename T>
ProbeReport bucketed_eval(const Mlp<T>& mlp, const ProbeSet& eval_set, ProbeTask task,
                          int word_vocab_size = 0,
                          const FrequencyBuckets& freq = FrequencyBuckets{}) {
    if (eval_set.examples.empty()) throw config_error("bucketed_eval: no examples");
    ProbeReport r;
    r.task = probe_task_name(task);

    std::map<std::string, std::pair<int, int>> buckets;  // label -> (correct, count)
    std::map<int, int> class_counts;
    int correct_total = 0;
    for (const ProbeExample& e : eval_set.examples) {
        Vec<T> x(e.input.begin(), e.input.end());
        const bool correct = mlp.predict(x) == e.label;
        correct_total += correct;
        ++class_counts[e.label];

        std::string label;
        switch (task) {
            case ProbeTask::length:
                label = length_class_label(e.label, eval_set.length_width, eval_set.num_classes);
                break;
            case ProbeTask::word_content:
                label = e.word == Vocabulary::kUnk
                            ? "unknown"
                            : freq.label(e.word - Vocabulary::kNumSpecials,
                                         word_vocab_size - Vocabulary::kNumSpecials);
                break;
            case ProbeTask::phrase_content:
                label = std::to_string(e.phrase_len) + "-word";
                break;
            case ProbeTask::word_order:
                label = e.distance >= 4 ? ">=4" : std::to_string(e.distance);
                break;
        }
        auto& [c, n] = buckets[label];
        c += correct;
        ++n;
    }
    r.count = static_cast<int>(eval_set.examples.size());
    r.accuracy = static_cast<double>(correct_total) / r.count;
    int largest = 0;
    for (const auto& [cls, n] : class_counts) largest = std::max(largest, n);
    r.chance = static_cast<double>(largest) / r.count;
    for (const auto& [label, cn] : buckets) {
        r.buckets.push_back(
            ProbeBucket{label, cn.second, static_cast<double>(cn.first) / cn.second});
    }
    return r;
}

/// In-place label permutation; the control probe trained on this should
/// score near chance.
inline void shuffle_labels(ProbeSet& set, Rng& rng) {
    std::vector<int> labels;
    labels.reserve(set.examples.size());
    for (const ProbeExample& e : set.examples) labels.push_back(e.label);
    rng.shuffle(labels);
    for (size_t i = 0; i < labels.size(); ++i) set.examples[i].label = labels[i];
}

inline ordered_json probe_report_json(const ProbeReport& r, const std::string& model_label,
                                      int n) {
    ordered_json j;
    j["task"] = r.task;
    j["model"] = model_label;
    j["n"] = n;
    j["count"] = r.count;
    j["accuracy"] = r.accuracy;
    j["chance"] = r.chance;
    ordered_json buckets = ordered_json::array();
    for (const ProbeBucket& b : r.buckets) {
        buckets.push_back({{"bucket", b.label}, {"count", b.count}, {"accuracy", b.accuracy}});
    }
    j["buckets"] = std::move(buckets);
    return j;
}

/// CSV schema: task,model,n,overall,bucket,bucket_count,accuracy. One row
/// per non-empty bucket; the overall column repeats the whole-set accuracy.
inline std::string probe_report_csv(const ProbeReport& r, const std::string& model_label, int n) {
    std::string out = "task,model,n,overall,bucket,bucket_count,accuracy\n";
    const std::string head = r.task + "," + model_label + "," + std::to_string(n) + "," +
                             fmt_double(r.accuracy) + ",";
    for (const ProbeBucket& b : r.buckets) {
        out += head + csv_field(b.label) + "," + std::to_string(b.count) + "," +
               fmt_double(b.accuracy) + "\n";
    }
    return out;
}

}  // namespace bon
