#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "bon/rng.hpp"
#include "bon/util.hpp"

namespace bon {

// ---------------------------------------------------------------------------
// UTF-8 and character classes
//
// The tokenizer is deliberately rule-based so that runs reproduce
// bit-for-bit: lowercase, split on whitespace, and emit every punctuation
// character as its own token. The exact character sets are fixed below.

namespace utf8 {

/// Decodes the codepoint starting at `i`, advancing `i`. Bytes that do not
/// form a valid sequence are consumed one at a time and returned as their
/// own byte value, so no input is ever dropped.
inline uint32_t decode(std::string_view s, size_t& i) {
    const auto byte = [&](size_t k) { return static_cast<unsigned char>(s[k]); };
    const unsigned char b0 = byte(i);
    if (b0 < 0x80) {
        ++i;
        return b0;
    }
    auto cont = [&](size_t k) { return k < s.size() && (byte(k) & 0xC0) == 0x80; };
    if ((b0 & 0xE0) == 0xC0 && cont(i + 1)) {
        uint32_t cp = (uint32_t(b0 & 0x1F) << 6) | (byte(i + 1) & 0x3F);
        if (cp >= 0x80) {  // reject overlong encodings
            i += 2;
            return cp;
        }
    }
    if ((b0 & 0xF0) == 0xE0 && cont(i + 1) && cont(i + 2)) {
        uint32_t cp = (uint32_t(b0 & 0x0F) << 12) | (uint32_t(byte(i + 1) & 0x3F) << 6) |
                      (byte(i + 2) & 0x3F);
        if (cp >= 0x800) {
            i += 3;
            return cp;
        }
    }
    if ((b0 & 0xF8) == 0xF0 && cont(i + 1) && cont(i + 2) && cont(i + 3)) {
        uint32_t cp = (uint32_t(b0 & 0x07) << 18) | (uint32_t(byte(i + 1) & 0x3F) << 12) |
                      (uint32_t(byte(i + 2) & 0x3F) << 6) | (byte(i + 3) & 0x3F);
        if (cp >= 0x10000 && cp <= 0x10FFFF) {
            i += 4;
            return cp;
        }
    }
    ++i;
    return b0;
}

inline void encode(uint32_t cp, std::string& out) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

}  // namespace utf8

inline bool is_space_cp(uint32_t cp) {
    switch (cp) {
        case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
        case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
        case 0x202F: case 0x205F: case 0x3000:
            return true;
        default:
            return cp >= 0x2000 && cp <= 0x200A;
    }
}

/// ASCII punctuation plus the Unicode general-punctuation block (whitespace
/// codepoints inside that block are classified as whitespace first).
inline bool is_punct_cp(uint32_t cp) {
    if (cp < 0x80) {
        return (cp >= 0x21 && cp <= 0x2F) || (cp >= 0x3A && cp <= 0x40) ||
               (cp >= 0x5B && cp <= 0x60) || (cp >= 0x7B && cp <= 0x7E);
    }
    return cp >= 0x2000 && cp <= 0x206F && !is_space_cp(cp);
}

/// Rule-based lowercase: ASCII, Latin-1, and Latin Extended-A (covers
/// English, French, Finnish and Turkish). Codepoints without a mapping pass
/// through unchanged, so caseless scripts are untouched.
inline uint32_t lowercase_cp(uint32_t cp) {
    if (cp >= 'A' && cp <= 'Z') return cp + 0x20;
    if (cp >= 0xC0 && cp <= 0xDE && cp != 0xD7) return cp + 0x20;
    if (cp == 0x130) return 'i';   // dotted capital I
    if (cp == 0x178) return 0xFF;  // Y with diaeresis
    if (cp >= 0x100 && cp <= 0x137 && (cp & 1) == 0) return cp + 1;
    if (cp >= 0x139 && cp <= 0x148 && (cp & 1) == 1) return cp + 1;
    if (cp >= 0x14A && cp <= 0x177 && (cp & 1) == 0) return cp + 1;
    if (cp >= 0x179 && cp <= 0x17E && (cp & 1) == 1) return cp + 1;
    return cp;
}

// ---------------------------------------------------------------------------
// domain types

/// A tokenized sentence: lowercase tokens, none containing whitespace.
struct Sentence {
    std::vector<std::string> tokens;

    int length() const { return static_cast<int>(tokens.size()); }
    std::string joined() const { return join(tokens); }

    bool operator==(const Sentence& o) const { return tokens == o.tokens; }
};

enum class PairColumn { left, right };

struct RawPair {
    std::string left;
    std::string right;
    long source_line = 0;
};

struct Corpus {
    std::vector<Sentence> sentences;
    std::string split_tag;     // "train" or "test"
    std::string language_tag;

    size_t size() const { return sentences.size(); }
};

/// Ingestion tallies, reported (not fatal) alongside the prepared corpus.
struct CorpusDiagnostics {
    long skipped_lines = 0;       // lines without a tab separator
    long dropped_degenerate = 0;  // lines that tokenize to zero tokens
    long dropped_overlong = 0;    // sentences above the length cap
    long duplicates_removed = 0;  // exact duplicate token sequences
};

// ---------------------------------------------------------------------------
// operations

/// Reads the selected column of every well-formed line of a tab-delimited
/// pair file. Columns beyond the second are ignored. Lines without a tab are
/// skipped and tallied in `diag`.
inline std::vector<std::string> load_pairs(const std::string& path, PairColumn column,
                                           CorpusDiagnostics& diag) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw config_error("cannot open pair file: " + path);
    }
    std::vector<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const size_t tab = line.find('\t');
        if (tab == std::string::npos) {
            ++diag.skipped_lines;
            continue;
        }
        if (column == PairColumn::left) {
            out.emplace_back(line.substr(0, tab));
        } else {
            const size_t tab2 = line.find('\t', tab + 1);
            const size_t end = tab2 == std::string::npos ? line.size() : tab2;
            out.emplace_back(line.substr(tab + 1, end - tab - 1));
        }
    }
    if (in.bad()) {
        throw std::runtime_error("read error on pair file: " + path);
    }
    return out;
}

/// Lowercases and tokenizes one line. Whitespace separates tokens;
/// punctuation characters become standalone tokens. Returns nothing when the
/// text normalizes to zero tokens.
inline std::optional<Sentence> normalize_and_tokenize(std::string_view text) {
    Sentence s;
    std::string current;
    size_t i = 0;
    while (i < text.size()) {
        const uint32_t cp = utf8::decode(text, i);
        if (is_space_cp(cp)) {
            if (!current.empty()) {
                s.tokens.push_back(std::move(current));
                current.clear();
            }
        } else if (is_punct_cp(cp)) {
            if (!current.empty()) {
                s.tokens.push_back(std::move(current));
                current.clear();
            }
            std::string tok;
            utf8::encode(lowercase_cp(cp), tok);
            s.tokens.push_back(std::move(tok));
        } else {
            utf8::encode(lowercase_cp(cp), current);
        }
    }
    if (!current.empty()) s.tokens.push_back(std::move(current));
    if (s.tokens.empty()) return std::nullopt;
    return s;
}

/// Tokenizes raw lines, dropping degenerate and overlong sentences (tallied
/// in `diag`).
inline std::vector<Sentence> tokenize_lines(const std::vector<std::string>& lines,
                                            int max_sentence_len, CorpusDiagnostics& diag) {
    std::vector<Sentence> out;
    out.reserve(lines.size());
    for (const std::string& line : lines) {
        std::optional<Sentence> s = normalize_and_tokenize(line);
        if (!s) {
            ++diag.dropped_degenerate;
            continue;
        }
        if (max_sentence_len > 0 && s->length() > max_sentence_len) {
            ++diag.dropped_overlong;
            continue;
        }
        out.push_back(std::move(*s));
    }
    return out;
}

/// Removes exact duplicate token sequences (first occurrence kept), shuffles
/// with a seeded Fisher-Yates, splits the first floor(train_fraction * N)
/// sentences into the train corpus and the rest into test, then truncates to
/// the caps. The same seed always yields the same split.
inline std::pair<Corpus, Corpus> dedup_shuffle_split(std::vector<Sentence> sentences,
                                                     uint64_t seed, CorpusDiagnostics& diag,
                                                     double train_fraction = 0.8,
                                                     size_t train_cap = 20000,
                                                     size_t test_cap = 5000,
                                                     const std::string& language_tag = "") {
    std::vector<Sentence> unique;
    unique.reserve(sentences.size());
    std::unordered_set<std::string> seen;
    for (Sentence& s : sentences) {
        std::string key = s.joined();
        if (seen.insert(std::move(key)).second) {
            unique.push_back(std::move(s));
        } else {
            ++diag.duplicates_removed;
        }
    }
    if (unique.size() < 2) {
        throw config_error("dedup_shuffle_split: need at least 2 unique sentences, got " +
                           std::to_string(unique.size()));
    }

    Rng rng(seed);
    rng.shuffle(unique);

    const size_t n_train = static_cast<size_t>(train_fraction * static_cast<double>(unique.size()));
    Corpus train{{}, "train", language_tag};
    Corpus test{{}, "test", language_tag};
    for (size_t i = 0; i < unique.size(); ++i) {
        if (i < n_train) {
            if (train.sentences.size() < train_cap) train.sentences.push_back(std::move(unique[i]));
        } else {
            if (test.sentences.size() < test_cap) test.sentences.push_back(std::move(unique[i]));
        }
    }
    return {std::move(train), std::move(test)};
}

// ---------------------------------------------------------------------------
// corpus files: one sentence per line, tokens joined by single spaces.
// Tokenization is idempotent on this form, so the round-trip is exact.

inline void save_corpus(const Corpus& corpus, const std::string& path) {
    std::string buf;
    for (const Sentence& s : corpus.sentences) {
        buf += s.joined();
        buf.push_back('\n');
    }
    write_file(path, buf);
}

inline Corpus load_corpus(const std::string& path, const std::string& split_tag,
                          const std::string& language_tag) {
    Corpus c{{}, split_tag, language_tag};
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw std::runtime_error("cannot open corpus file: " + path);
    }
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        c.sentences.push_back(Sentence{split_ws(line)});
    }
    return c;
}

}  // namespace bon
