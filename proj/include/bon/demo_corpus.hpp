#pragma once

#include <string>
#include <utility>
#include <vector>

#include "bon/rng.hpp"
#include "bon/util.hpp"

namespace bon {

// ---------------------------------------------------------------------------
// toy parallel corpus
//
// Tab-separated English/French pairs from a small phrase grammar. Word order
// is rigid (English adjectives precede nouns, French adjectives follow), so
// order and content probes have real signal to find, and sentence lengths
// span one-word interjections through multi-clause 20+ token lines. With
// noise enabled the stream also carries the malformed shapes the loader must
// survive: lines without a tab, extra columns, empty columns, duplicates,
// and overlong sentences.

namespace demo {

struct Pair {
    const char* en;
    const char* fr;
};

inline const std::vector<Pair>& determiners() {
    static const std::vector<Pair> v = {
        {"the", "le"}, {"a", "un"}, {"this", "ce"}, {"every", "chaque"}};
    return v;
}

inline const std::vector<Pair>& adjectives() {
    static const std::vector<Pair> v = {
        {"red", "rouge"},     {"big", "grand"},     {"small", "petit"},
        {"old", "vieux"},     {"young", "jeune"},   {"happy", "heureux"},
        {"sad", "triste"},    {"quick", "rapide"},  {"slow", "lent"},
        {"bright", "vif"},    {"dark", "sombre"},   {"quiet", "calme"},
        {"loud", "bruyant"},  {"strange", "étrange"}};
    return v;
}

inline const std::vector<Pair>& nouns() {
    static const std::vector<Pair> v = {
        {"cat", "chat"},        {"dog", "chien"},       {"bird", "oiseau"},
        {"fish", "poisson"},    {"tree", "arbre"},      {"house", "maison"},
        {"river", "rivière"},   {"mountain", "montagne"}, {"child", "enfant"},
        {"teacher", "professeur"}, {"doctor", "docteur"}, {"farmer", "fermier"},
        {"book", "livre"},      {"song", "chanson"},    {"stone", "pierre"},
        {"garden", "jardin"},   {"city", "ville"},      {"village", "village"},
        {"road", "route"},      {"bridge", "pont"}};
    return v;
}

inline const std::vector<Pair>& verbs() {
    static const std::vector<Pair> v = {
        {"sleeps", "dort"},   {"runs", "court"},    {"sings", "chante"},
        {"waits", "attend"},  {"falls", "tombe"},   {"dreams", "rêve"},
        {"laughs", "rit"},    {"works", "travaille"}};
    return v;
}

inline const std::vector<Pair>& transitive_verbs() {
    static const std::vector<Pair> v = {
        {"sees", "voit"},       {"finds", "trouve"}, {"follows", "suit"},
        {"carries", "porte"},   {"watches", "regarde"}, {"loves", "aime"}};
    return v;
}

inline const std::vector<Pair>& adverbs() {
    static const std::vector<Pair> v = {
        {"slowly", "lentement"}, {"quickly", "vite"},     {"quietly", "doucement"},
        {"often", "souvent"},    {"rarely", "rarement"},  {"again", "encore"},
        {"now", "maintenant"}};
    return v;
}

inline const std::vector<Pair>& prepositions() {
    static const std::vector<Pair> v = {
        {"near", "vers"},      {"under", "sous"},   {"behind", "derrière"},
        {"beside", "devant"},  {"above", "sur"}};
    return v;
}

inline const std::vector<Pair>& interjections() {
    static const std::vector<Pair> v = {
        {"yes", "oui"}, {"no", "non"}, {"hello", "bonjour"},
        {"thanks", "merci"}, {"goodbye", "salut"}};
    return v;
}

inline const Pair& pick(const std::vector<Pair>& pool, Rng& rng) {
    return pool[static_cast<size_t>(rng.below(pool.size()))];
}

struct Builder {
    std::vector<std::string> en;
    std::vector<std::string> fr;

    void add(const Pair& p) {
        en.emplace_back(p.en);
        fr.emplace_back(p.fr);
    }
};

/// det [adj] noun, with the adjective postposed on the French side.
inline void noun_phrase(Builder& b, Rng& rng, double adj_prob) {
    const Pair& det = pick(determiners(), rng);
    b.en.emplace_back(det.en);
    b.fr.emplace_back(det.fr);
    const bool with_adj = rng.coin(adj_prob);
    const Pair& adj = pick(adjectives(), rng);
    const Pair& noun = pick(nouns(), rng);
    if (with_adj) b.en.emplace_back(adj.en);
    b.en.emplace_back(noun.en);
    b.fr.emplace_back(noun.fr);
    if (with_adj) b.fr.emplace_back(adj.fr);
}

inline void prep_phrase(Builder& b, Rng& rng, double adj_prob) {
    const Pair& prep = pick(prepositions(), rng);
    b.add(prep);
    noun_phrase(b, rng, adj_prob);
}

/// One clause: NP V | NP V-trans NP, optionally trailed by an adverb and a
/// prepositional phrase.
inline void clause(Builder& b, Rng& rng, double adj_prob, double pp_prob) {
    noun_phrase(b, rng, adj_prob);
    if (rng.coin(0.45)) {
        b.add(pick(transitive_verbs(), rng));
        noun_phrase(b, rng, adj_prob);
    } else {
        b.add(pick(verbs(), rng));
    }
    if (rng.coin(0.3)) b.add(pick(adverbs(), rng));
    if (rng.coin(pp_prob)) prep_phrase(b, rng, adj_prob);
}

inline std::string finish(std::vector<std::string> tokens, Rng& rng) {
    const double r = rng.uniform();
    if (r < 0.75) {
        tokens.back() += " .";
    } else if (r < 0.87) {
        tokens.back() += " !";
    } else if (r < 0.95) {
        tokens.back() += " ?";
    }
    char& first = tokens[0][0];
    if (first >= 'a' && first <= 'z') first = static_cast<char>(first - 'a' + 'A');
    return join(tokens);
}

/// One aligned pair. Shape mix: a few one-word interjections, mostly short
/// single clauses, a medium band with richer modifiers, and a long tail of
/// conjoined clauses reaching past 15 tokens.
inline std::pair<std::string, std::string> sentence_pair(Rng& rng) {
    Builder b;
    const double shape = rng.uniform();
    if (shape < 0.04) {
        b.add(pick(interjections(), rng));
    } else if (shape < 0.50) {
        clause(b, rng, /*adj_prob=*/0.30, /*pp_prob=*/0.10);
    } else if (shape < 0.85) {
        clause(b, rng, 0.55, 0.55);
        if (rng.coin(0.25)) {
            b.add({"and", "et"});
            clause(b, rng, 0.30, 0.10);
        }
    } else {
        clause(b, rng, 0.60, 0.70);
        b.add({"and", "et"});
        clause(b, rng, 0.60, 0.70);
        if (rng.coin(0.45)) {
            b.add({"and", "et"});
            clause(b, rng, 0.40, 0.40);
        }
    }
    Rng punct(rng.next_u64());
    return {finish(std::move(b.en), punct), finish(std::move(b.fr), punct)};
}

inline std::string long_run(const char* word, int times) {
    std::string s;
    for (int i = 0; i < times; ++i) {
        if (!s.empty()) s += ' ';
        s += word;
    }
    return s;
}

}  // namespace demo

/// `count` clean tab-separated pairs, plus malformed lines when `noise` is
/// set. The same (count, seed, noise) triple always yields the same lines.
inline std::vector<std::string> make_demo_pairs(size_t count, uint64_t seed, bool noise) {
    Rng rng(Rng::derive(seed, 1));
    std::vector<std::string> lines;
    lines.reserve(count + 32);
    for (size_t i = 0; i < count; ++i) {
        auto [en, fr] = demo::sentence_pair(rng);
        lines.push_back(en + "\t" + fr);
    }
    if (noise) {
        Rng noise_rng(Rng::derive(seed, 2));
        for (int i = 0; i < 6; ++i) {
            lines.push_back("this line has no tab separator at all " + std::to_string(i));
        }
        for (int i = 0; i < 4; ++i) {
            auto [en, fr] = demo::sentence_pair(noise_rng);
            lines.push_back(en + "\t" + fr + "\talignment-note-" + std::to_string(i));
        }
        for (int i = 0; i < 4; ++i) {
            lines.push_back("\t" + demo::sentence_pair(noise_rng).second);
        }
        for (int i = 0; i < 4; ++i) {
            lines.push_back(demo::sentence_pair(noise_rng).first + "\t");
        }
        for (int i = 0; i < 8 && !lines.empty(); ++i) {
            lines.push_back(lines[static_cast<size_t>(noise_rng.below(count))]);
        }
        lines.push_back(demo::long_run("again", 33) + "\t" + demo::long_run("encore", 33));
        lines.push_back(demo::long_run("yes", 40) + "\t" + demo::long_run("oui", 40));
        Rng shuffle_rng(Rng::derive(seed, 3));
        shuffle_rng.shuffle(lines);
    }
    return lines;
}

inline void write_demo_pairs(const std::string& path, size_t count, uint64_t seed, bool noise) {
    std::string buf;
    for (const std::string& line : make_demo_pairs(count, seed, noise)) {
        buf += line;
        buf += '\n';
    }
    write_file(path, buf);
}

}  // namespace bon
