#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "bon/embedder.hpp"
#include "bon/gru.hpp"
#include "bon/ngrams.hpp"
#include "bon/nn.hpp"
#include "bon/rng.hpp"
#include "bon/text.hpp"
#include "bon/util.hpp"

namespace bon {

enum class Variant { bag, rnn };

inline const char* variant_name(Variant v) { return v == Variant::bag ? "bag" : "rnn"; }

inline Variant variant_from_string(const std::string& s) {
    if (s == "bag") return Variant::bag;
    if (s == "rnn") return Variant::rnn;
    throw config_error("unknown model variant '" + s + "' (expected bag or rnn)");
}

/// Everything the trainer needs from one sentence, precomputed once.
/// bag_ids: flattened n-gram bag (bag variant only). words: word-level ids,
/// used as encoder inputs (rnn) and, with EOS appended, as decoder targets.
struct EncodedSentence {
    std::vector<int> bag_ids;
    std::vector<int> words;

    std::vector<int> targets() const {
        std::vector<int> t = words;
        t.push_back(Vocabulary::kEos);
        return t;
    }
};

inline std::vector<EncodedSentence> encode_corpus(const Corpus& corpus, const Vocabulary& vocab,
                                                  Variant variant) {
    std::vector<EncodedSentence> out;
    out.reserve(corpus.sentences.size());
    for (const Sentence& s : corpus.sentences) {
        EncodedSentence es;
        es.words = word_ids(s, vocab);
        if (variant == Variant::bag) es.bag_ids = encode_sentence(s, vocab).flat_ids();
        out.push_back(std::move(es));
    }
    return out;
}

struct TrainConfig {
    Variant variant = Variant::bag;
    int n = 1;                      // max n-gram order (bag variant)
    int hidden = 256;               // embedding dim == decoder hidden dim
    double lr = 0.01;
    int epochs = 20;
    double tf_prob = 0.5;           // teacher forcing probability
    bool tf_per_step = false;       // flip the coin per step instead of per sentence
    bool tie_decoder_input = false; // decoder reads the encoder-side table
    double clip_norm = 5.0;         // global gradient norm clip, 0 disables
    double embed_init = 0.1;
    uint64_t seed = 0;
};

inline ordered_json train_config_to_json(const TrainConfig& cfg) {
    ordered_json j;
    j["variant"] = variant_name(cfg.variant);
    j["n"] = cfg.n;
    j["hidden"] = cfg.hidden;
    j["lr"] = cfg.lr;
    j["epochs"] = cfg.epochs;
    j["tf_prob"] = cfg.tf_prob;
    j["tf_per_step"] = cfg.tf_per_step;
    j["tie_decoder_input"] = cfg.tie_decoder_input;
    j["clip_norm"] = cfg.clip_norm;
    j["embed_init"] = cfg.embed_init;
    j["seed"] = cfg.seed;
    return j;
}

inline TrainConfig train_config_from_json(const ordered_json& j) {
    TrainConfig cfg;
    cfg.variant = variant_from_string(j.at("variant").get<std::string>());
    cfg.n = j.at("n").get<int>();
    cfg.hidden = j.at("hidden").get<int>();
    cfg.lr = j.at("lr").get<double>();
    cfg.epochs = j.at("epochs").get<int>();
    cfg.tf_prob = j.at("tf_prob").get<double>();
    cfg.tf_per_step = j.at("tf_per_step").get<bool>();
    cfg.tie_decoder_input = j.at("tie_decoder_input").get<bool>();
    cfg.clip_norm = j.at("clip_norm").get<double>();
    cfg.embed_init = j.at("embed_init").get<double>();
    cfg.seed = j.at("seed").get<uint64_t>();
    return cfg;
}

struct EpochStats {
    int epoch = 0;          // 1-based
    double mean_loss = 0.0;
    double wallclock_s = 0.0;
};

template <typename T>
struct DecoderParams {
    Param<T> input_embedding;  // word vocab x hidden; absent when tied
    GruParams<T> gru;          // input = hidden = model hidden size
    Param<T> w_out;            // word vocab x hidden
    Param<T> b_out;            // 1 x word vocab
};

template <typename T>
Vec<T> encode_baseline(const std::vector<int>& words, const GruParams<T>& encoder,
                       const Embedder<T>& word_table);

/// Optional per-step record of a training decode, for inspection.
template <typename T>
struct DecodeTrace {
    std::vector<int> inputs;          // ids actually fed at each step
    std::vector<double> step_losses;
    std::vector<Vec<T>> hiddens;      // h after each step
};

/// Sentence autoencoder. The bag variant sums n-gram embeddings into the
/// decoder's initial hidden state; the rnn variant runs a GRU encoder over
/// word embeddings instead. Exactly one encoder pathway is active.
template <typename T>
struct ReconstructionModel {
    Variant variant = Variant::bag;
    int n = 1;
    int hidden = 0;
    bool tie_decoder_input = false;

    Embedder<T> embedder;   // bag: full n-gram table; rnn: encoder word table
    GruParams<T> encoder;   // rnn variant only
    DecoderParams<T> decoder;

    ReconstructionModel() = default;

    ReconstructionModel(const Vocabulary& vocab, const TrainConfig& cfg, Rng& rng)
        : variant(cfg.variant), n(cfg.n), hidden(cfg.hidden),
          tie_decoder_input(cfg.tie_decoder_input) {
        const int words = vocab.word_vocab_size();
        if (variant == Variant::bag) {
            embedder = Embedder<T>(vocab.size(), hidden, rng, cfg.embed_init, "embedder.table");
        } else {
            embedder = Embedder<T>(words, hidden, rng, cfg.embed_init, "encoder.embedding");
            encoder = GruParams<T>(hidden, hidden, rng, "encoder.gru.");
        }
        if (!tie_decoder_input) {
            decoder.input_embedding = Param<T>("decoder.input_embedding", words, hidden);
            init_embedding(decoder.input_embedding, rng, cfg.embed_init);
        }
        decoder.gru = GruParams<T>(hidden, hidden, rng, "decoder.gru.");
        decoder.w_out = Param<T>("decoder.out.w", words, hidden);
        init_matrix(decoder.w_out, rng);
        decoder.b_out = Param<T>("decoder.out.b", 1, words);
    }

    /// Zero-valued skeleton with the given table heights; the checkpoint
    /// loader fills the values.
    static ReconstructionModel allocate(const TrainConfig& cfg, int table_rows, int word_vocab) {
        ReconstructionModel m;
        m.variant = cfg.variant;
        m.n = cfg.n;
        m.hidden = cfg.hidden;
        m.tie_decoder_input = cfg.tie_decoder_input;
        m.embedder.table = Param<T>(
            cfg.variant == Variant::bag ? "embedder.table" : "encoder.embedding", table_rows,
            cfg.hidden);
        if (cfg.variant == Variant::rnn) {
            m.encoder = GruParams<T>(cfg.hidden, cfg.hidden, "encoder.gru.");
        }
        if (!cfg.tie_decoder_input) {
            m.decoder.input_embedding = Param<T>("decoder.input_embedding", word_vocab, cfg.hidden);
        }
        m.decoder.gru = GruParams<T>(cfg.hidden, cfg.hidden, "decoder.gru.");
        m.decoder.w_out = Param<T>("decoder.out.w", word_vocab, cfg.hidden);
        m.decoder.b_out = Param<T>("decoder.out.b", 1, word_vocab);
        return m;
    }

    int word_vocab_size() const { return decoder.w_out.v.rows(); }

    std::vector<Param<T>*> params() {
        std::vector<Param<T>*> ps;
        ps.push_back(&embedder.table);
        if (variant == Variant::rnn) {
            for (Param<T>* p : encoder.params()) ps.push_back(p);
        }
        if (!tie_decoder_input) ps.push_back(&decoder.input_embedding);
        for (Param<T>* p : decoder.gru.params()) ps.push_back(p);
        ps.push_back(&decoder.w_out);
        ps.push_back(&decoder.b_out);
        return ps;
    }

    Param<T>& input_table() { return tie_decoder_input ? embedder.table : decoder.input_embedding; }
    const Param<T>& input_table() const {
        return tie_decoder_input ? embedder.table : decoder.input_embedding;
    }

    // -----------------------------------------------------------------------
    // encoding

    /// Frozen representation of a sentence: the probed/evaluated vector.
    Vec<T> represent(const EncodedSentence& es) const {
        if (variant == Variant::bag) return embedder.sum_rows(es.bag_ids);
        return encode_baseline(es.words, encoder, embedder);
    }

    // -----------------------------------------------------------------------
    // training decode

    /// Unrolls the decoder from h0 against `targets` (gold words + EOS),
    /// computes the mean per-step cross-entropy, and backpropagates through
    /// time. Parameter grads and dh0 are accumulated. When `per_step_rng` is
    /// non-null the teacher-forcing coin is flipped per step with
    /// probability tf_prob; otherwise `teacher` fixes the whole sentence.
    double decode_train_step(const Vec<T>& h0, const std::vector<int>& targets, bool teacher,
                             Rng* per_step_rng, double tf_prob, Vec<T>& dh0,
                             DecodeTrace<T>* trace = nullptr) {
        if (targets.empty()) throw std::logic_error("decode_train_step: empty target sequence");
        const size_t steps = targets.size();
        const T scale = T(1) / static_cast<T>(steps);

        struct Step {
            int input = 0;
            GruCache<T> cache;
            Vec<T> dlogits;
        };
        std::vector<Step> tape(steps);

        double total_loss = 0.0;
        const Vec<T>* h = &h0;
        int prev_pred = Vocabulary::kSos;
        for (size_t t = 0; t < steps; ++t) {
            Step& st = tape[t];
            const bool force = per_step_rng ? per_step_rng->coin(tf_prob) : teacher;
            st.input = t == 0 ? Vocabulary::kSos
                              : (force ? targets[t - 1] : prev_pred);
            const T* xrow = input_table().v.row(st.input);
            Vec<T> x(xrow, xrow + hidden);
            gru_forward(decoder.gru, x, *h, st.cache);
            Vec<T> logits = gemv(decoder.w_out.v, st.cache.h_new);
            axpy(logits, T(1), decoder.b_out.v.data());
            prev_pred = argmax(logits);
            total_loss += softmax_cross_entropy(logits, targets[t], st.dlogits, scale);
            if (trace) {
                trace->inputs.push_back(st.input);
                trace->step_losses.push_back(cross_entropy_from_logits(logits, targets[t]));
                trace->hiddens.push_back(st.cache.h_new);
            }
            h = &st.cache.h_new;
        }

        // reverse sweep
        Vec<T> dh(static_cast<size_t>(hidden), T(0));
        for (size_t ti = steps; ti-- > 0;) {
            Step& st = tape[ti];
            outer_acc(decoder.w_out.g, st.dlogits, st.cache.h_new);
            axpy(decoder.b_out.g, T(1), st.dlogits);
            gemv_t_acc(decoder.w_out.v, st.dlogits, dh);

            Vec<T> dx(static_cast<size_t>(hidden), T(0));
            Vec<T> dh_prev(static_cast<size_t>(hidden), T(0));
            gru_backward(decoder.gru, st.cache, dh, dx, dh_prev);
            T* row = input_table().g.row(st.input);
            for (size_t k = 0; k < dx.size(); ++k) row[k] += dx[k];
            dh = std::move(dh_prev);
        }
        axpy(dh0, T(1), dh);
        return total_loss / static_cast<double>(steps);
    }

    /// Full forward/backward on one sentence; grads accumulate into every
    /// parameter on the active pathway. Returns the mean decode loss.
    double train_step(const EncodedSentence& es, bool teacher, Rng* per_step_rng, double tf_prob) {
        const std::vector<int> targets = es.targets();
        Vec<T> dh0(static_cast<size_t>(hidden), T(0));
        if (variant == Variant::bag) {
            Vec<T> h0(static_cast<size_t>(hidden), T(0));
            embedder.forward(es.bag_ids, h0);
            const double loss =
                decode_train_step(h0, targets, teacher, per_step_rng, tf_prob, dh0);
            embedder.backward(es.bag_ids, dh0);
            return loss;
        }
        std::vector<GruCache<T>> caches(es.words.size());
        Vec<T> h(static_cast<size_t>(hidden), T(0));
        for (size_t t = 0; t < es.words.size(); ++t) {
            const T* xrow = embedder.table.v.row(es.words[t]);
            Vec<T> x(xrow, xrow + hidden);
            gru_forward(encoder, x, h, caches[t]);
            h = caches[t].h_new;
        }
        const double loss = decode_train_step(h, targets, teacher, per_step_rng, tf_prob, dh0);
        Vec<T> dh = std::move(dh0);
        for (size_t t = es.words.size(); t-- > 0;) {
            Vec<T> dx(static_cast<size_t>(hidden), T(0));
            Vec<T> dh_prev(static_cast<size_t>(hidden), T(0));
            gru_backward(encoder, caches[t], dh, dx, dh_prev);
            embedder.backward_row(es.words[t], dx);
            dh = std::move(dh_prev);
        }
        return loss;
    }

    // -----------------------------------------------------------------------
    // inference

    /// Argmax rollout from h0 until EOS or max_len steps; EOS is dropped.
    std::vector<int> greedy_decode(const Vec<T>& h0, int max_len = 30) const {
        std::vector<int> out;
        GruCache<T> cache;
        Vec<T> h = h0;
        int prev = Vocabulary::kSos;
        for (int t = 0; t < max_len; ++t) {
            const T* xrow = input_table().v.row(prev);
            Vec<T> x(xrow, xrow + hidden);
            gru_forward(decoder.gru, x, h, cache);
            Vec<T> logits = gemv(decoder.w_out.v, cache.h_new);
            axpy(logits, T(1), decoder.b_out.v.data());
            prev = argmax(logits);
            if (prev == Vocabulary::kEos) break;
            out.push_back(prev);
            h = cache.h_new;
        }
        return out;
    }

    std::vector<int> reconstruct(const EncodedSentence& es, int max_len = 30) const {
        return greedy_decode(represent(es), max_len);
    }
};

/// Final hidden state of a GRU run left to right over the word embeddings,
/// starting from h = 0.
template <typename T>
Vec<T> encode_baseline(const std::vector<int>& words, const GruParams<T>& encoder,
                       const Embedder<T>& word_table) {
    Vec<T> h(static_cast<size_t>(encoder.hidden_dim()), T(0));
    GruCache<T> cache;
    for (int id : words) {
        const T* xrow = word_table.row(id);
        Vec<T> x(xrow, xrow + word_table.dim());
        gru_forward(encoder, x, h, cache);
        h = cache.h_new;
    }
    return h;
}

// ---------------------------------------------------------------------------
// training loop

/// Per-sentence SGD over a shuffled order each epoch. Aborts on a non-finite
/// loss or gradient with the epoch and sentence index in the message.
template <typename T>
std::vector<EpochStats> train(ReconstructionModel<T>& model,
                              const std::vector<EncodedSentence>& data, const TrainConfig& cfg) {
    if (data.empty()) throw config_error("train: empty training set");
    const std::vector<Param<T>*> params = model.params();
    Rng rng(Rng::derive(cfg.seed, 2));

    std::vector<size_t> order(data.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;

    std::vector<EpochStats> log;
    log.reserve(static_cast<size_t>(cfg.epochs));
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        rng.shuffle(order);
        double loss_sum = 0.0;
        for (size_t k = 0; k < order.size(); ++k) {
            const EncodedSentence& es = data[order[k]];
            const bool teacher = cfg.tf_per_step ? false : rng.coin(cfg.tf_prob);
            double loss = 0.0;
            try {
                loss = model.train_step(es, teacher, cfg.tf_per_step ? &rng : nullptr,
                                        cfg.tf_prob);
                if (!std::isfinite(loss)) throw std::runtime_error("non-finite loss");
                sgd_step(params, cfg.lr, cfg.clip_norm);
            } catch (const std::runtime_error& e) {
                throw std::runtime_error("training diverged at epoch " + std::to_string(epoch) +
                                         ", sentence " + std::to_string(k) + ": " + e.what());
            }
            loss_sum += loss;
        }
        const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
        log.push_back(EpochStats{epoch, loss_sum / static_cast<double>(order.size()), dt.count()});
    }
    return log;
}

/// Builds and trains a model from a prepared corpus.
template <typename T>
ReconstructionModel<T> train_model(const Corpus& corpus, const Vocabulary& vocab,
                                   const TrainConfig& cfg, std::vector<EpochStats>* log = nullptr) {
    Rng init_rng(Rng::derive(cfg.seed, 1));
    ReconstructionModel<T> model(vocab, cfg, init_rng);
    std::vector<EpochStats> stats =
        train(model, encode_corpus(corpus, vocab, cfg.variant), cfg);
    if (log) *log = std::move(stats);
    return model;
}

}  // namespace bon
