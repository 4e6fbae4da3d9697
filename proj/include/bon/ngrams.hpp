#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "bon/text.hpp"
#include "bon/util.hpp"

namespace bon {

using ordered_json = nlohmann::ordered_json;

/// A contiguous n-gram, order 1..5. Tokens never contain whitespace, so the
/// space-joined form is an unambiguous key.
struct NGram {
    std::vector<std::string> tokens;

    int order() const { return static_cast<int>(tokens.size()); }
    std::string joined() const { return join(tokens); }

    bool operator==(const NGram& o) const { return tokens == o.tokens; }
};

/// All raw contiguous windows of a sentence, per order, before any
/// vocabulary filtering. For a sentence of length L, order i holds
/// max(0, L - i + 1) windows in sentence order.
struct RawNGramSet {
    std::vector<std::vector<NGram>> by_order;  // index 0 = unigrams

    int raw_count(int order) const { return static_cast<int>(by_order[order - 1].size()); }
};

inline RawNGramSet extract_ngrams(const Sentence& s, int max_order) {
    if (max_order < 1 || max_order > 5) {
        throw config_error("extract_ngrams: order must be in [1,5], got " +
                           std::to_string(max_order));
    }
    RawNGramSet set;
    set.by_order.resize(static_cast<size_t>(max_order));
    const int len = s.length();
    for (int order = 1; order <= max_order; ++order) {
        auto& grams = set.by_order[static_cast<size_t>(order - 1)];
        for (int start = 0; start + order <= len; ++start) {
            NGram g;
            g.tokens.assign(s.tokens.begin() + start, s.tokens.begin() + start + order);
            grams.push_back(std::move(g));
        }
    }
    return set;
}

// ---------------------------------------------------------------------------
// vocabulary

/// Frequency-clipped n-gram dictionary. Ids are contiguous: SOS=0, EOS=1,
/// UNK=2, then retained entries grouped by ascending order and, within an
/// order, by descending frequency (ties broken lexicographically by token
/// sequence). Id rank within an order is therefore a frequency proxy.
class Vocabulary {
public:
    static constexpr int kSos = 0;
    static constexpr int kEos = 1;
    static constexpr int kUnk = 2;
    static constexpr int kNumSpecials = 3;

    static const char* sos_token() { return "<sos>"; }
    static const char* eos_token() { return "<eos>"; }
    static const char* unk_token() { return "<unk>"; }

    struct Entry {
        std::vector<std::string> tokens;
        int order = 0;
        uint64_t frequency = 0;
    };

    int max_order = 0;
    int capacity = 0;
    std::vector<Entry> entries;           // entry k has id k + kNumSpecials
    std::vector<int> per_order_counts;    // retained entries per order, index order-1

    int size() const { return kNumSpecials + static_cast<int>(entries.size()); }

    /// Number of retained unigram entries.
    int word_count() const { return per_order_counts.empty() ? 0 : per_order_counts[0]; }

    /// Word-level id space: specials plus unigram entries, contiguous from 0.
    int word_vocab_size() const { return kNumSpecials + word_count(); }

    std::optional<int> lookup(const std::vector<std::string>& tokens) const {
        auto it = index_.find(join(tokens));
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    std::optional<int> lookup_joined(const std::string& joined) const {
        auto it = index_.find(joined);
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    /// Word id for a single token: the unigram entry id, or UNK.
    int word_id(const std::string& token) const {
        auto it = index_.find(token);
        if (it != index_.end() && entries[static_cast<size_t>(it->second - kNumSpecials)].order == 1) {
            return it->second;
        }
        return kUnk;
    }

    const Entry& entry(int id) const { return entries[static_cast<size_t>(id - kNumSpecials)]; }

    bool is_special(int id) const { return id < kNumSpecials; }

    std::string token_string(int id) const {
        switch (id) {
            case kSos: return sos_token();
            case kEos: return eos_token();
            case kUnk: return unk_token();
            default: return join(entry(id).tokens);
        }
    }

    void rebuild_index() {
        index_.clear();
        index_.reserve(entries.size() * 2);
        for (size_t k = 0; k < entries.size(); ++k) {
            index_.emplace(join(entries[k].tokens), static_cast<int>(k) + kNumSpecials);
        }
    }

    ordered_json to_json() const {
        ordered_json j;
        j["max_order"] = max_order;
        j["capacity"] = capacity;
        j["specials"] = {sos_token(), eos_token(), unk_token()};
        ordered_json entries_json = ordered_json::array();
        for (const Entry& e : entries) {
            ordered_json ej;
            ej["tokens"] = e.tokens;
            ej["order"] = e.order;
            ej["frequency"] = e.frequency;
            entries_json.push_back(std::move(ej));
        }
        j["entries"] = std::move(entries_json);
        return j;
    }

    std::string serialize() const { return to_json().dump(2) + "\n"; }

    static Vocabulary from_json(const ordered_json& j) {
        Vocabulary v;
        v.max_order = j.at("max_order").get<int>();
        v.capacity = j.at("capacity").get<int>();
        v.per_order_counts.assign(static_cast<size_t>(v.max_order), 0);
        for (const auto& ej : j.at("entries")) {
            Entry e;
            e.tokens = ej.at("tokens").get<std::vector<std::string>>();
            e.order = ej.at("order").get<int>();
            e.frequency = ej.at("frequency").get<uint64_t>();
            if (e.order < 1 || e.order > v.max_order) {
                throw std::runtime_error("vocabulary entry with order outside [1, max_order]");
            }
            ++v.per_order_counts[static_cast<size_t>(e.order - 1)];
            v.entries.push_back(std::move(e));
        }
        v.rebuild_index();
        return v;
    }

    void save(const std::string& path) const { write_file(path, serialize()); }

    static Vocabulary load(const std::string& path) {
        return from_json(ordered_json::parse(read_file(path)));
    }

    /// Fingerprint of the serialized form; stored in checkpoints so that a
    /// model is never evaluated against a different dictionary.
    std::string hash() const { return to_hex(fnv1a64(serialize())); }

private:
    std::unordered_map<std::string, int> index_;
};

/// Per-order frequency tables, keyed by the space-joined token sequence.
using NGramCounts = std::vector<std::unordered_map<std::string, uint64_t>>;

inline NGramCounts count_ngrams(const Corpus& corpus, int max_order) {
    if (max_order < 1 || max_order > 5) {
        throw config_error("count_ngrams: order must be in [1,5], got " + std::to_string(max_order));
    }
    NGramCounts counts(static_cast<size_t>(max_order));
    for (const Sentence& s : corpus.sentences) {
        const int len = s.length();
        for (int order = 1; order <= max_order; ++order) {
            auto& table = counts[static_cast<size_t>(order - 1)];
            for (int start = 0; start + order <= len; ++start) {
                std::string key = s.tokens[static_cast<size_t>(start)];
                for (int k = 1; k < order; ++k) {
                    key.push_back(' ');
                    key += s.tokens[static_cast<size_t>(start + k)];
                }
                ++table[key];
            }
        }
    }
    return counts;
}

/// Selects the retained entries from raw counts. Each order is reserved
/// floor(capacity / max_order) slots, filled by descending frequency (ties
/// lexicographic by token sequence); any slots left over are redistributed
/// across the remaining candidates of all orders by global frequency.
inline Vocabulary finalize_vocabulary(const NGramCounts& counts, int max_order, int capacity) {
    if (capacity < max_order) {
        throw config_error("vocabulary capacity " + std::to_string(capacity) +
                           " is smaller than max_order " + std::to_string(max_order));
    }

    struct Cand {
        std::vector<std::string> tokens;
        int order;
        uint64_t freq;
    };
    auto by_rank = [](const Cand& a, const Cand& b) {
        if (a.freq != b.freq) return a.freq > b.freq;
        return std::lexicographical_compare(a.tokens.begin(), a.tokens.end(), b.tokens.begin(),
                                            b.tokens.end());
    };

    std::vector<std::vector<Cand>> per_order(static_cast<size_t>(max_order));
    for (int order = 1; order <= max_order; ++order) {
        auto& cands = per_order[static_cast<size_t>(order - 1)];
        cands.reserve(counts[static_cast<size_t>(order - 1)].size());
        for (const auto& [key, freq] : counts[static_cast<size_t>(order - 1)]) {
            cands.push_back(Cand{split_ws(key), order, freq});
        }
        std::sort(cands.begin(), cands.end(), by_rank);
    }

    const size_t quota = static_cast<size_t>(capacity / max_order);
    std::vector<Cand> selected;
    std::vector<Cand> overflow;
    for (auto& cands : per_order) {
        const size_t take = std::min(quota, cands.size());
        for (size_t i = 0; i < cands.size(); ++i) {
            (i < take ? selected : overflow).push_back(std::move(cands[i]));
        }
    }
    if (selected.size() < static_cast<size_t>(capacity) && !overflow.empty()) {
        std::sort(overflow.begin(), overflow.end(), by_rank);
        const size_t leftover = static_cast<size_t>(capacity) - selected.size();
        const size_t take = std::min(leftover, overflow.size());
        for (size_t i = 0; i < take; ++i) selected.push_back(std::move(overflow[i]));
    }

    // Id order: ascending n-gram order, then frequency rank within the order.
    std::stable_sort(selected.begin(), selected.end(), [&](const Cand& a, const Cand& b) {
        if (a.order != b.order) return a.order < b.order;
        return by_rank(a, b);
    });

    Vocabulary v;
    v.max_order = max_order;
    v.capacity = capacity;
    v.per_order_counts.assign(static_cast<size_t>(max_order), 0);
    v.entries.reserve(selected.size());
    for (Cand& c : selected) {
        ++v.per_order_counts[static_cast<size_t>(c.order - 1)];
        v.entries.push_back(Vocabulary::Entry{std::move(c.tokens), c.order, c.freq});
    }
    v.rebuild_index();
    return v;
}

inline Vocabulary build_vocabulary(const Corpus& train, int max_order, int capacity) {
    if (train.sentences.empty()) {
        throw config_error("build_vocabulary: empty training corpus");
    }
    return finalize_vocabulary(count_ngrams(train, max_order), max_order, capacity);
}

// ---------------------------------------------------------------------------
// sentence encoding

/// Vocabulary ids of one sentence, per order. Out-of-vocabulary unigrams map
/// to UNK; out-of-vocabulary n-grams of order >= 2 are omitted, keeping the
/// unigram backbone intact and the higher orders sparse.
struct SentenceNGramSet {
    int length = 0;
    std::vector<std::vector<int>> ids_by_order;  // index 0 = unigrams
    std::vector<int> raw_counts;                 // max(0, L - i + 1), pre-filter

    std::vector<int> flat_ids() const {
        std::vector<int> ids;
        for (const auto& level : ids_by_order) ids.insert(ids.end(), level.begin(), level.end());
        return ids;
    }
};

inline SentenceNGramSet encode_sentence(const Sentence& s, const Vocabulary& vocab) {
    SentenceNGramSet set;
    const int len = s.length();
    set.length = len;
    set.ids_by_order.resize(static_cast<size_t>(vocab.max_order));
    set.raw_counts.resize(static_cast<size_t>(vocab.max_order));
    for (int order = 1; order <= vocab.max_order; ++order) {
        set.raw_counts[static_cast<size_t>(order - 1)] = std::max(0, len - order + 1);
        auto& ids = set.ids_by_order[static_cast<size_t>(order - 1)];
        for (int start = 0; start + order <= len; ++start) {
            std::string key = s.tokens[static_cast<size_t>(start)];
            for (int k = 1; k < order; ++k) {
                key.push_back(' ');
                key += s.tokens[static_cast<size_t>(start + k)];
            }
            const std::optional<int> id = vocab.lookup_joined(key);
            if (id) {
                ids.push_back(*id);
            } else if (order == 1) {
                ids.push_back(Vocabulary::kUnk);
            }
        }
    }
    return set;
}

/// Word-level ids of a sentence (unigram entries or UNK), used as decoder
/// targets and inputs.
inline std::vector<int> word_ids(const Sentence& s, const Vocabulary& vocab) {
    std::vector<int> ids;
    ids.reserve(s.tokens.size());
    for (const std::string& tok : s.tokens) ids.push_back(vocab.word_id(tok));
    return ids;
}

}  // namespace bon
