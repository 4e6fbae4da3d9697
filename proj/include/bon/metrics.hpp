#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "bon/text.hpp"
#include "bon/util.hpp"

namespace bon {

using ordered_json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// BLEU-clip

/// Per-order clipped match and candidate-total counts for one pair.
/// matches[k-1] = sum over candidate k-grams of min(cand count, ref count);
/// totals[k-1] = number of candidate k-grams. Orders run 1..max_order capped
/// by the reference length.
struct BleuBreakdown {
    std::vector<uint64_t> matches;
    std::vector<uint64_t> totals;
    int cand_len = 0;
    int ref_len = 0;

    int orders() const { return static_cast<int>(matches.size()); }
};

inline BleuBreakdown bleu_breakdown(const std::vector<std::string>& candidate,
                                    const std::vector<std::string>& reference, int max_order) {
    if (reference.empty()) throw std::runtime_error("bleu: empty reference");
    if (max_order < 1) throw config_error("bleu: max_order must be >= 1");
    BleuBreakdown b;
    b.cand_len = static_cast<int>(candidate.size());
    b.ref_len = static_cast<int>(reference.size());
    const int orders = std::min(max_order, b.ref_len);
    b.matches.assign(static_cast<size_t>(orders), 0);
    b.totals.assign(static_cast<size_t>(orders), 0);
    for (int k = 1; k <= orders; ++k) {
        std::unordered_map<std::string, uint64_t> ref_counts;
        for (int i = 0; i + k <= b.ref_len; ++i) {
            std::string key = reference[static_cast<size_t>(i)];
            for (int j = 1; j < k; ++j) {
                key.push_back(' ');
                key += reference[static_cast<size_t>(i + j)];
            }
            ++ref_counts[key];
        }
        std::unordered_map<std::string, uint64_t> cand_counts;
        for (int i = 0; i + k <= b.cand_len; ++i) {
            std::string key = candidate[static_cast<size_t>(i)];
            for (int j = 1; j < k; ++j) {
                key.push_back(' ');
                key += candidate[static_cast<size_t>(i + j)];
            }
            ++cand_counts[key];
        }
        uint64_t matched = 0, total = 0;
        for (const auto& [gram, cnt] : cand_counts) {
            total += cnt;
            const auto it = ref_counts.find(gram);
            if (it != ref_counts.end()) matched += std::min(cnt, it->second);
        }
        b.matches[static_cast<size_t>(k - 1)] = matched;
        b.totals[static_cast<size_t>(k - 1)] = total;
    }
    return b;
}

/// Clipped precision for one order, with add-one smoothing on numerator and
/// denominator for orders >= 2.
inline double bleu_precision(const BleuBreakdown& b, int order, bool smoothing) {
    const uint64_t m = b.matches[static_cast<size_t>(order - 1)];
    const uint64_t t = b.totals[static_cast<size_t>(order - 1)];
    if (smoothing && order >= 2) {
        return static_cast<double>(m + 1) / static_cast<double>(t + 1);
    }
    if (t == 0) return 0.0;
    return static_cast<double>(m) / static_cast<double>(t);
}

inline double brevity_penalty(int cand_len, int ref_len) {
    if (cand_len == 0) return 0.0;
    if (cand_len >= ref_len) return 1.0;
    return std::exp(1.0 - static_cast<double>(ref_len) / static_cast<double>(cand_len));
}

/// Geometric mean of the per-order precisions times the brevity penalty.
inline double bleu_from_counts(const BleuBreakdown& b, bool smoothing) {
    if (b.cand_len == 0) return 0.0;
    double log_sum = 0.0;
    for (int k = 1; k <= b.orders(); ++k) {
        const double p = bleu_precision(b, k, smoothing);
        if (p <= 0.0) return 0.0;
        log_sum += std::log(p);
    }
    return brevity_penalty(b.cand_len, b.ref_len) *
           std::exp(log_sum / static_cast<double>(b.orders()));
}

/// BLEU with reference-clipped counts. Orders 1..max_order, capped by the
/// reference length. Empty candidate scores 0; empty reference is an error.
inline double bleu_clip(const std::vector<std::string>& candidate,
                        const std::vector<std::string>& reference, int max_order = 4,
                        bool smoothing = true) {
    return bleu_from_counts(bleu_breakdown(candidate, reference, max_order), smoothing);
}

// ---------------------------------------------------------------------------
// corpus aggregation

struct BleuGroup {
    int count = 0;
    double mean = 0.0;
};

struct BleuReport {
    std::vector<double> sentence_scores;      // one per test sentence, corpus order
    BleuGroup overall, short_group, long_group;
    std::vector<double> precision_mean;       // per order, over sentences scoring that order
    std::vector<int> precision_count;
    double bp_mean = 0.0;
    int short_threshold = 6;
    int max_order = 4;
    bool smoothing = true;
};

/// Scores decode(sentence) against the sentence itself for every sentence,
/// splitting means by reference length (short: <= threshold). `decode` maps a
/// Sentence to candidate tokens; specials must already be stripped.
template <class DecodeFn>
BleuReport corpus_bleu(DecodeFn&& decode, const Corpus& corpus, int short_threshold = 6,
                       int max_order = 4, bool smoothing = true) {
    if (corpus.sentences.empty()) throw config_error("corpus_bleu: empty corpus");
    BleuReport r;
    r.short_threshold = short_threshold;
    r.max_order = max_order;
    r.smoothing = smoothing;
    r.precision_mean.assign(static_cast<size_t>(max_order), 0.0);
    r.precision_count.assign(static_cast<size_t>(max_order), 0);
    double sum = 0.0, sum_short = 0.0, sum_long = 0.0, bp_sum = 0.0;
    for (const Sentence& s : corpus.sentences) {
        const std::vector<std::string> cand = decode(s);
        const BleuBreakdown b = bleu_breakdown(cand, s.tokens, max_order);
        const double score = bleu_from_counts(b, smoothing);
        r.sentence_scores.push_back(score);
        bp_sum += brevity_penalty(b.cand_len, b.ref_len);
        for (int k = 1; k <= b.orders(); ++k) {
            r.precision_mean[static_cast<size_t>(k - 1)] += bleu_precision(b, k, smoothing);
            ++r.precision_count[static_cast<size_t>(k - 1)];
        }
        sum += score;
        if (s.length() <= short_threshold) {
            sum_short += score;
            ++r.short_group.count;
        } else {
            sum_long += score;
            ++r.long_group.count;
        }
    }
    r.overall.count = static_cast<int>(r.sentence_scores.size());
    r.overall.mean = sum / r.overall.count;
    if (r.short_group.count > 0) r.short_group.mean = sum_short / r.short_group.count;
    if (r.long_group.count > 0) r.long_group.mean = sum_long / r.long_group.count;
    for (size_t k = 0; k < r.precision_mean.size(); ++k) {
        if (r.precision_count[k] > 0) r.precision_mean[k] /= r.precision_count[k];
    }
    r.bp_mean = bp_sum / r.overall.count;
    return r;
}

inline ordered_json bleu_report_json(const BleuReport& r) {
    ordered_json j;
    j["overall"] = {{"count", r.overall.count}, {"mean", r.overall.mean}};
    j["short"] = {{"count", r.short_group.count}, {"mean", r.short_group.mean}};
    j["long"] = {{"count", r.long_group.count}, {"mean", r.long_group.mean}};
    ordered_json prec = ordered_json::array();
    for (size_t k = 0; k < r.precision_mean.size(); ++k) {
        prec.push_back({{"order", k + 1},
                        {"mean", r.precision_mean[k]},
                        {"count", r.precision_count[k]}});
    }
    j["precision"] = std::move(prec);
    j["brevity_penalty_mean"] = r.bp_mean;
    j["short_threshold"] = r.short_threshold;
    j["max_order"] = r.max_order;
    j["smoothing"] = r.smoothing;
    return j;
}

/// CSV, one row per group: group,count,mean_bleu
inline std::string bleu_report_csv(const BleuReport& r) {
    std::string out = "group,count,mean_bleu\n";
    const auto row = [&out](const char* g, const BleuGroup& grp) {
        out += std::string(g) + "," + std::to_string(grp.count) + "," + fmt_double(grp.mean) + "\n";
    };
    row("overall", r.overall);
    row("short", r.short_group);
    row("long", r.long_group);
    return out;
}

// ---------------------------------------------------------------------------
// representation norm by sentence length

inline constexpr int kNormBins = 7;  // 1-2, 3-4, ..., 13-14

/// Bin index for a sentence length, or -1 when the length is outside 1..14.
inline int norm_bin(int length) {
    if (length < 1 || length > 2 * kNormBins) return -1;
    return (length - 1) / 2;
}

inline std::string norm_bin_label(int bin) {
    return std::to_string(2 * bin + 1) + "-" + std::to_string(2 * bin + 2);
}

struct NormTable {
    std::vector<int> counts = std::vector<int>(kNormBins, 0);
    std::vector<double> mean_norm = std::vector<double>(kNormBins, 0.0);
};

/// Mean representation norm per length bin. `rep_norm` maps a Sentence to
/// the Euclidean norm of its representation.
template <class NormFn>
NormTable norm_by_length(NormFn&& rep_norm, const Corpus& corpus) {
    NormTable t;
    std::vector<double> sums(kNormBins, 0.0);
    for (const Sentence& s : corpus.sentences) {
        const int bin = norm_bin(s.length());
        if (bin < 0) continue;
        sums[static_cast<size_t>(bin)] += rep_norm(s);
        ++t.counts[static_cast<size_t>(bin)];
    }
    for (int b = 0; b < kNormBins; ++b) {
        if (t.counts[static_cast<size_t>(b)] > 0) {
            t.mean_norm[static_cast<size_t>(b)] =
                sums[static_cast<size_t>(b)] / t.counts[static_cast<size_t>(b)];
        }
    }
    return t;
}

inline ordered_json norm_table_json(const NormTable& t) {
    ordered_json bins = ordered_json::array();
    for (int b = 0; b < kNormBins; ++b) {
        bins.push_back({{"bin", norm_bin_label(b)},
                        {"count", t.counts[static_cast<size_t>(b)]},
                        {"mean_norm", t.mean_norm[static_cast<size_t>(b)]}});
    }
    ordered_json j;
    j["bins"] = std::move(bins);
    return j;
}

/// CSV, one row per bin: bin,count,mean_norm
inline std::string norm_table_csv(const NormTable& t) {
    std::string out = "bin,count,mean_norm\n";
    for (int b = 0; b < kNormBins; ++b) {
        out += norm_bin_label(b) + "," + std::to_string(t.counts[static_cast<size_t>(b)]) + "," +
               fmt_double(t.mean_norm[static_cast<size_t>(b)]) + "\n";
    }
    return out;
}

// ---------------------------------------------------------------------------
// rank correlation

/// Average ranks (1-based); ties share the mean of their rank range.
inline std::vector<double> average_ranks(const std::vector<double>& x) {
    const size_t n = x.size();
    std::vector<size_t> idx(n);
    std::iota(idx.begin(), idx.end(), size_t{0});
    std::sort(idx.begin(), idx.end(), [&x](size_t a, size_t b) { return x[a] < x[b]; });
    std::vector<double> ranks(n, 0.0);
    size_t i = 0;
    while (i < n) {
        size_t j = i;
        while (j + 1 < n && x[idx[j + 1]] == x[idx[i]]) ++j;
        const double r = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
        i = j + 1;
    }
    return ranks;
}

/// Spearman rank correlation (Pearson on average ranks). Returns 0 when a
/// side is constant.
inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) {
        throw config_error("spearman: need two equal-length series of size >= 2");
    }
    const std::vector<double> rx = average_ranks(x);
    const std::vector<double> ry = average_ranks(y);
    const double n = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        mx += rx[i];
        my += ry[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0, sxx = 0, syy = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx) * (rx[i] - mx);
        syy += (ry[i] - my) * (ry[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return 0.0;
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace bon
