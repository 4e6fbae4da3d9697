// Probe task generation, training, and bucketed evaluation.
//
// Generation tests recover the probed words from the example inputs by
// matching embedding segments against the model's table, then check the
// labels against the source sentence directly.

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "bon/model.hpp"
#include "bon/ngrams.hpp"
#include "bon/probes.hpp"
#include "bon/rng.hpp"
#include "bon/text.hpp"

using namespace bon;

namespace {

Sentence sent(const std::string& text) {
    return Sentence{split_ws(text)};
}

Corpus fixture_corpus() {
    const char* lines[] = {
        "the cat sat on the mat",
        "a dog ran fast",
        "birds sing in the tall tree",
        "she reads an old book by the fire",
        "rain fell on the quiet town all night long and then some",
        "he walks",
        "wind",
        "the small fox jumped over a lazy dog near the river bank today",
        "stars shine",
        "a cook stirs the soup with a wooden spoon",
        "they play chess on sunday",
        "the train left the station early",
        "cold snow covers every roof in winter",
        "my friend paints bright pictures of the sea",
        "we ate warm bread",
        "the clock ticks",
        "an owl hoots at the pale moon",
        "children laugh loudly during the short break between lessons here",
        "grapes grow on the green vine",
        "the old man fed the grey pigeons",
    };
    Corpus c;
    c.split_tag = "train";
    c.language_tag = "en";
    for (const char* l : lines) c.sentences.push_back(sent(l));
    return c;
}

TrainConfig small_cfg(int max_order, uint64_t seed) {
    TrainConfig cfg;
    cfg.variant = Variant::bag;
    cfg.n = max_order;
    cfg.hidden = 12;
    cfg.seed = seed;
    return cfg;
}

struct Fixture {
    Corpus corpus;
    Vocabulary vocab;
    Rng init_rng;
    ReconstructionModel<float> model;
    std::vector<EncodedSentence> encoded;
    std::vector<Vec<float>> reps;

    Fixture(int max_order, int capacity, uint64_t seed)
        : corpus(fixture_corpus()),
          vocab(build_vocabulary(corpus, max_order, capacity)),
          init_rng(Rng::derive(seed, 1)),
          model(vocab, small_cfg(max_order, seed), init_rng),
          encoded(encode_corpus(corpus, vocab, Variant::bag)) {
        for (const EncodedSentence& es : encoded) reps.push_back(model.represent(es));
    }
};

// Finds the unique embedding row equal to the given float segment.
int match_row(const Embedder<float>& emb, const float* seg) {
    for (int id = 0; id < emb.vocab_size(); ++id) {
        const float* row = emb.row(id);
        if (std::memcmp(row, seg, sizeof(float) * static_cast<size_t>(emb.dim())) == 0) {
            return id;
        }
    }
    return -1;
}

bool is_span(const Sentence& s, const std::vector<std::string>& phrase) {
    const int len = static_cast<int>(phrase.size());
    for (int start = 0; start + len <= s.length(); ++start) {
        bool eq = true;
        for (int k = 0; k < len; ++k) {
            if (s.tokens[static_cast<size_t>(start + k)] != phrase[static_cast<size_t>(k)]) {
                eq = false;
                break;
            }
        }
        if (eq) return true;
    }
    return false;
}

// Two gaussian-free blobs on either side of the first axis.
ProbeSet separable_set(int count, uint64_t seed, double spread = 0.4) {
    Rng rng(seed);
    ProbeSet set;
    set.num_classes = 2;
    for (int i = 0; i < count; ++i) {
        ProbeExample e;
        e.label = i % 2;
        const float center = e.label == 1 ? 1.0f : -1.0f;
        for (int d = 0; d < 4; ++d) {
            e.input.push_back(center + static_cast<float>(rng.uniform(-spread, spread)));
        }
        set.examples.push_back(std::move(e));
    }
    return set;
}

}  // namespace

TEST_CASE("length classes bin widths and labels") {
    REQUIRE(length_class(1) == 0);
    REQUIRE(length_class(2) == 0);
    REQUIRE(length_class(3) == 1);
    REQUIRE(length_class(14) == 6);
    REQUIRE(length_class(15) == 7);
    REQUIRE(length_class(40) == 7);
    REQUIRE_THROWS_AS(length_class(0), std::logic_error);
    REQUIRE(length_class_label(0) == "1-2");
    REQUIRE(length_class_label(6) == "13-14");
    REQUIRE(length_class_label(7) == "15+");
    REQUIRE(length_class(5, 3, 4) == 1);
    REQUIRE(length_class_label(3, 3, 4) == "10+");
}

TEST_CASE("length task labels every sentence by its bin") {
    Fixture f(1, 500, 3);
    ProbeSet set = make_length_examples(f.corpus, f.reps);
    REQUIRE(set.examples.size() == f.corpus.size());
    REQUIRE(set.num_classes == kLengthClasses);
    REQUIRE(set.skipped == 0);
    for (const ProbeExample& e : set.examples) {
        const Sentence& s = f.corpus.sentences[static_cast<size_t>(e.sentence)];
        REQUIRE(e.label == length_class(s.length()));
        REQUIRE(e.input.size() == f.reps[static_cast<size_t>(e.sentence)].size());
        for (size_t k = 0; k < e.input.size(); ++k) {
            REQUIRE(e.input[k] == f.reps[static_cast<size_t>(e.sentence)][k]);
        }
    }
}

TEST_CASE("word content examples are balanced and truthful") {
    Fixture f(1, 500, 5);
    Rng rng(Rng::derive(5, 50));
    ProbeSet set = make_word_content_examples(f.corpus, f.encoded, f.reps, f.model, rng);

    int pos = 0, neg = 0;
    for (const ProbeExample& e : set.examples) {
        const std::vector<int>& words = f.encoded[static_cast<size_t>(e.sentence)].words;
        const bool present = std::count(words.begin(), words.end(), e.word) > 0;
        REQUIRE(e.word >= Vocabulary::kUnk);
        REQUIRE(e.word < f.model.word_vocab_size());
        REQUIRE(e.input.size() == 2 * static_cast<size_t>(f.model.embedder.dim()));
        // The word half of the input is the probed word's embedding row.
        REQUIRE(match_row(f.model.embedder,
                          e.input.data() + f.model.embedder.dim()) == e.word);
        if (e.label == 1) {
            REQUIRE(present);
            ++pos;
        } else {
            REQUIRE_FALSE(present);
            ++neg;
        }
    }
    REQUIRE(pos == neg);  // one positive and one negative per kept sentence
    REQUIRE(pos + set.skipped == static_cast<int>(f.corpus.size()));
}

TEST_CASE("word content probes the unknown token when the vocabulary clips") {
    Fixture f(1, 12, 5);  // most words fall out of a 12-entry vocabulary
    Rng rng(Rng::derive(5, 50));
    ProbeSet set = make_word_content_examples(f.corpus, f.encoded, f.reps, f.model, rng);
    bool saw_unk = false;
    for (const ProbeExample& e : set.examples) saw_unk |= e.word == Vocabulary::kUnk;
    REQUIRE(saw_unk);
}

TEST_CASE("word order pairs come from exactly-once words with true labels") {
    Fixture f(1, 500, 9);
    Rng rng(Rng::derive(9, 50));
    ProbeSet set = make_word_order_examples(f.corpus, f.encoded, f.reps, f.model, rng);
    REQUIRE_FALSE(set.examples.empty());

    const int dim = f.model.embedder.dim();
    int ones = 0, zeros = 0;
    for (const ProbeExample& e : set.examples) {
        const std::vector<int>& words = f.encoded[static_cast<size_t>(e.sentence)].words;
        REQUIRE(e.input.size() == 3 * static_cast<size_t>(dim));
        const int w1 = match_row(f.model.embedder, e.input.data() + dim);
        const int w2 = match_row(f.model.embedder, e.input.data() + 2 * dim);
        REQUIRE(w1 >= Vocabulary::kNumSpecials);
        REQUIRE(w2 >= Vocabulary::kNumSpecials);
        REQUIRE(w1 != w2);
        REQUIRE(std::count(words.begin(), words.end(), w1) == 1);
        REQUIRE(std::count(words.begin(), words.end(), w2) == 1);
        const int p1 = static_cast<int>(std::find(words.begin(), words.end(), w1) -
                                        words.begin());
        const int p2 = static_cast<int>(std::find(words.begin(), words.end(), w2) -
                                        words.begin());
        REQUIRE(e.label == (p1 < p2 ? 1 : 0));
        REQUIRE(e.distance == std::abs(p1 - p2) - 1);
        e.label == 1 ? ++ones : ++zeros;
    }
    REQUIRE(std::abs(ones - zeros) <= 1);  // balanced within one example
}

TEST_CASE("word order skips sentences without two exactly-once words") {
    Corpus c;
    c.sentences = {sent("echo echo echo"), sent("solo"), sent("alpha beta")};
    Vocabulary v = build_vocabulary(c, 1, 100);
    TrainConfig cfg;
    cfg.hidden = 8;
    Rng init(1);
    ReconstructionModel<float> model(v, cfg, init);
    auto encoded = encode_corpus(c, v, Variant::bag);
    std::vector<Vec<float>> reps;
    for (const auto& es : encoded) reps.push_back(model.represent(es));

    Rng rng(2);
    ProbeSet set = make_word_order_examples(c, encoded, reps, model, rng);
    REQUIRE(set.examples.size() == 1);  // only "alpha beta" qualifies
    REQUIRE(set.skipped == 2);
    REQUIRE(set.examples[0].distance == 0);
}

TEST_CASE("word order label balance holds across seeds") {
    Fixture f(1, 500, 11);
    for (uint64_t seed : {1ull, 2ull, 3ull, 17ull, 99ull}) {
        Rng rng(seed);
        ProbeSet set = make_word_order_examples(f.corpus, f.encoded, f.reps, f.model, rng);
        int ones = 0;
        for (const ProbeExample& e : set.examples) ones += e.label;
        const int zeros = static_cast<int>(set.examples.size()) - ones;
        REQUIRE(std::abs(ones - zeros) <= 1);
    }
}

TEST_CASE("unigram phrase vector is the sum of its word embeddings") {
    Fixture f(1, 500, 13);
    const std::vector<std::string> phrase = {"cat", "dog"};
    const Vec<float> pv = phrase_vector(phrase, f.vocab, f.model);
    const int a = *f.vocab.lookup(std::vector<std::string>{"cat"});
    const int b = *f.vocab.lookup(std::vector<std::string>{"dog"});
    REQUIRE(pv.size() == static_cast<size_t>(f.model.embedder.dim()));
    for (int k = 0; k < f.model.embedder.dim(); ++k) {
        REQUIRE(pv[static_cast<size_t>(k)] ==
                f.model.embedder.row(a)[k] + f.model.embedder.row(b)[k]);
    }
}

TEST_CASE("phrase content examples label contiguous spans") {
    // Order-3 model so phrase vectors are order-sensitive and distinct.
    Fixture f(3, 2000, 21);
    PhraseInventory inv = PhraseInventory::build(f.corpus, 2000);
    REQUIRE(inv.usable());

    // Every inventory phrase must map to a distinct vector for the matching
    // below to identify phrases unambiguously.
    std::vector<Vec<float>> pvs;
    for (const auto& p : inv.phrases) pvs.push_back(phrase_vector(p, f.vocab, f.model));
    for (size_t i = 0; i < pvs.size(); ++i) {
        for (size_t j = i + 1; j < pvs.size(); ++j) REQUIRE(pvs[i] != pvs[j]);
    }

    Rng rng(Rng::derive(21, 50));
    ProbeSet set = make_phrase_content_examples(f.corpus, f.reps, f.vocab, f.model, inv, rng);
    REQUIRE_FALSE(set.examples.empty());

    const size_t rep_dim = f.reps[0].size();
    int pos = 0, neg = 0;
    for (const ProbeExample& e : set.examples) {
        const Sentence& s = f.corpus.sentences[static_cast<size_t>(e.sentence)];
        size_t match = pvs.size();
        for (size_t p = 0; p < pvs.size(); ++p) {
            if (pvs[p].size() == e.input.size() - rep_dim &&
                std::memcmp(pvs[p].data(), e.input.data() + rep_dim,
                            sizeof(float) * pvs[p].size()) == 0) {
                match = p;
                break;
            }
        }
        REQUIRE(match < pvs.size());
        REQUIRE(e.phrase_len == static_cast<int>(inv.phrases[match].size()));
        REQUIRE(is_span(s, inv.phrases[match]) == (e.label == 1));
        e.label == 1 ? ++pos : ++neg;
    }
    // Positives pair with a same-length negative; negative-only sentences
    // add one negative each.
    REQUIRE(neg == pos + set.negative_only);
    REQUIRE(pos + set.negative_only + set.skipped == static_cast<int>(f.corpus.size()));
}

TEST_CASE("phrase inventory keeps bigrams and trigrams and round-trips") {
    Corpus c;
    c.sentences = {sent("red fox runs"), sent("red fox sleeps"), sent("blue bird sings")};
    PhraseInventory inv = PhraseInventory::build(c, 100);
    REQUIRE(inv.usable());
    for (const auto& p : inv.phrases) {
        REQUIRE(p.size() >= 2);
        REQUIRE(p.size() <= 3);
    }
    const PhraseInventory back = PhraseInventory::from_json(inv.to_json());
    REQUIRE(back.phrases == inv.phrases);
    REQUIRE_FALSE(PhraseInventory{}.usable());
}

TEST_CASE("generation is deterministic under a fixed substream") {
    Fixture f(1, 500, 31);
    Rng r1(Rng::derive(31, 50));
    Rng r2(Rng::derive(31, 50));
    ProbeSet a = make_word_content_examples(f.corpus, f.encoded, f.reps, f.model, r1);
    ProbeSet b = make_word_content_examples(f.corpus, f.encoded, f.reps, f.model, r2);
    REQUIRE(a.examples.size() == b.examples.size());
    for (size_t i = 0; i < a.examples.size(); ++i) {
        REQUIRE(a.examples[i].input == b.examples[i].input);
        REQUIRE(a.examples[i].label == b.examples[i].label);
        REQUIRE(a.examples[i].word == b.examples[i].word);
    }
}

TEST_CASE("probe training leaves the representations untouched") {
    Fixture f(1, 500, 7);
    Rng rng(Rng::derive(7, 50));
    ProbeSet set = make_word_content_examples(f.corpus, f.encoded, f.reps, f.model, rng);
    const std::vector<float> before(f.model.embedder.table.v.data(),
                                    f.model.embedder.table.v.data() +
                                        f.model.embedder.table.v.rows() *
                                            f.model.embedder.table.v.cols());
    ProbeTrainConfig cfg;
    cfg.epochs = 3;
    cfg.seed = 7;
    train_probe<float>(set, cfg);
    const std::vector<float> after(f.model.embedder.table.v.data(),
                                   f.model.embedder.table.v.data() + before.size());
    REQUIRE(before == after);
}

TEST_CASE("probe reaches full accuracy on a separable set") {
    ProbeSet train = separable_set(240, 41);
    ProbeTrainConfig cfg;
    cfg.lr = 0.01;
    cfg.epochs = 25;
    cfg.seed = 41;
    Mlp<float> mlp = train_probe<float>(train, cfg);
    ProbeSet eval = separable_set(240, 42);
    const ProbeReport r = bucketed_eval(mlp, eval, ProbeTask::length);
    REQUIRE(r.accuracy == 1.0);
    REQUIRE(r.chance == 0.5);
}

TEST_CASE("label shuffling drops the probe to chance") {
    ProbeSet train = separable_set(400, 43);
    Rng rng(Rng::derive(43, 9));
    shuffle_labels(train, rng);
    ProbeTrainConfig cfg;
    cfg.lr = 0.01;
    cfg.epochs = 10;
    cfg.seed = 43;
    Mlp<float> mlp = train_probe<float>(train, cfg);
    const ProbeReport r = bucketed_eval(mlp, separable_set(400, 44), ProbeTask::length);
    REQUIRE(std::abs(r.accuracy - 0.5) < 0.15);
}

TEST_CASE("shuffle_labels permutes labels without touching inputs") {
    ProbeSet set = separable_set(50, 45);
    std::multiset<int> before;
    for (const ProbeExample& e : set.examples) before.insert(e.label);
    const Vec<float> first_input = set.examples[0].input;
    Rng rng(45);
    shuffle_labels(set, rng);
    std::multiset<int> after;
    for (const ProbeExample& e : set.examples) after.insert(e.label);
    REQUIRE(before == after);
    REQUIRE(set.examples[0].input == first_input);
}

TEST_CASE("diverged probe training reports failure") {
    ProbeSet train = separable_set(40, 47);
    ProbeTrainConfig cfg;
    cfg.lr = 1e25;
    cfg.epochs = 3;
    cfg.seed = 47;
    REQUIRE_THROWS_AS(train_probe<float>(train, cfg), std::runtime_error);
}

TEST_CASE("training on an empty set is a configuration error") {
    ProbeSet empty;
    REQUIRE_THROWS_AS(train_probe<float>(empty, ProbeTrainConfig{}), config_error);
    Rng rng(1);
    Mlp<float> mlp(4, 2, rng);
    REQUIRE_THROWS_AS(bucketed_eval(mlp, empty, ProbeTask::length), config_error);
}

TEST_CASE("frequency bucket labels follow the rank boundaries") {
    FrequencyBuckets freq;
    REQUIRE(freq.label(0, 5000) == "[0,100)");
    REQUIRE(freq.label(99, 5000) == "[0,100)");
    REQUIRE(freq.label(100, 5000) == "[100,500)");
    REQUIRE(freq.label(499, 5000) == "[100,500)");
    REQUIRE(freq.label(500, 5000) == "[500,1000)");
    REQUIRE(freq.label(1000, 5000) == "[1000,5000)");
    REQUIRE(freq.label(4000, 5000) == "[1000,5000)");
    FrequencyBuckets tight{{0, 2, 5}};
    REQUIRE(tight.label(1, 20) == "[0,2)");
    REQUIRE(tight.label(4, 20) == "[2,5)");
    REQUIRE(tight.label(10, 20) == "[5,20)");
}

TEST_CASE("bucketed eval groups by task-specific buckets") {
    Rng rng(51);
    Mlp<float> mlp(3, 2, rng, 8, 4);

    const auto example = [](int label, int word, int distance, int phrase_len) {
        ProbeExample e;
        e.input = {0.1f, -0.2f, 0.3f};
        e.label = label;
        e.word = word;
        e.distance = distance;
        e.phrase_len = phrase_len;
        return e;
    };

    SECTION("word content: frequency buckets plus unknown") {
        ProbeSet set;
        set.examples = {
            example(1, Vocabulary::kUnk, -1, -1),
            example(0, Vocabulary::kNumSpecials + 0, -1, -1),
            example(1, Vocabulary::kNumSpecials + 1, -1, -1),
            example(0, Vocabulary::kNumSpecials + 3, -1, -1),
        };
        FrequencyBuckets tight{{0, 2}};
        const ProbeReport r = bucketed_eval(mlp, set, ProbeTask::word_content, 10, tight);
        REQUIRE(r.count == 4);
        REQUIRE(r.chance == 0.5);
        std::map<std::string, int> counts;
        for (const ProbeBucket& b : r.buckets) counts[b.label] = b.count;
        REQUIRE(counts == std::map<std::string, int>{
                              {"unknown", 1}, {"[0,2)", 2}, {"[2,7)", 1}});
    }

    SECTION("word order: distances cap at >=4") {
        ProbeSet set;
        for (int d : {0, 1, 2, 3, 4, 7}) set.examples.push_back(example(d % 2, -1, d, -1));
        const ProbeReport r = bucketed_eval(mlp, set, ProbeTask::word_order);
        std::map<std::string, int> counts;
        for (const ProbeBucket& b : r.buckets) counts[b.label] = b.count;
        REQUIRE(counts == std::map<std::string, int>{
                              {"0", 1}, {"1", 1}, {"2", 1}, {"3", 1}, {">=4", 2}});
    }

    SECTION("phrase content: bucket per phrase length") {
        ProbeSet set;
        set.examples = {example(1, -1, -1, 2), example(0, -1, -1, 2), example(1, -1, -1, 3)};
        const ProbeReport r = bucketed_eval(mlp, set, ProbeTask::phrase_content);
        std::map<std::string, int> counts;
        for (const ProbeBucket& b : r.buckets) counts[b.label] = b.count;
        REQUIRE(counts == std::map<std::string, int>{{"2-word", 2}, {"3-word", 1}});
        REQUIRE(r.chance == Catch::Approx(2.0 / 3.0));
    }

    SECTION("length: bucket per class bin, empty bins absent") {
        ProbeSet set;
        set.num_classes = 8;
        set.examples = {example(0, -1, -1, -1), example(0, -1, -1, -1),
                        example(7, -1, -1, -1)};
        const ProbeReport r = bucketed_eval(mlp, set, ProbeTask::length);
        std::map<std::string, int> counts;
        for (const ProbeBucket& b : r.buckets) counts[b.label] = b.count;
        REQUIRE(counts == std::map<std::string, int>{{"1-2", 2}, {"15+", 1}});
        REQUIRE(r.chance == Catch::Approx(2.0 / 3.0));
    }
}

TEST_CASE("bucket counts sum to the evaluated total") {
    Fixture f(1, 500, 61);
    Rng rng(Rng::derive(61, 50));
    ProbeSet set = make_word_order_examples(f.corpus, f.encoded, f.reps, f.model, rng);
    ProbeTrainConfig cfg;
    cfg.epochs = 2;
    cfg.seed = 61;
    Mlp<float> mlp = train_probe<float>(set, cfg);
    const ProbeReport r = bucketed_eval(mlp, set, ProbeTask::word_order);
    int sum = 0;
    for (const ProbeBucket& b : r.buckets) sum += b.count;
    REQUIRE(sum == r.count);
    REQUIRE(r.count == static_cast<int>(set.examples.size()));
}

TEST_CASE("probe reports render to the documented schemas") {
    ProbeReport r;
    r.task = "word_content";
    r.count = 10;
    r.accuracy = 0.75;
    r.chance = 0.5;
    r.buckets = {ProbeBucket{"[0,100)", 6, 0.5}, ProbeBucket{"unknown", 4, 1.0}};

    const ordered_json j = probe_report_json(r, "bag", 2);
    REQUIRE(j.at("task") == "word_content");
    REQUIRE(j.at("model") == "bag");
    REQUIRE(j.at("n") == 2);
    REQUIRE(j.at("count") == 10);
    REQUIRE(j.at("accuracy") == 0.75);
    REQUIRE(j.at("chance") == 0.5);
    REQUIRE(j.at("buckets").size() == 2);
    REQUIRE(j.at("buckets")[0].at("bucket") == "[0,100)");
    REQUIRE(j.at("buckets")[1].at("count") == 4);

    const std::string csv = probe_report_csv(r, "bag", 2);
    std::vector<std::string> lines;
    size_t start = 0;
    while (start < csv.size()) {
        const size_t nl = csv.find('\n', start);
        lines.push_back(csv.substr(start, nl - start));
        start = nl + 1;
    }
    REQUIRE(lines.size() == 3);
    REQUIRE(lines[0] == "task,model,n,overall,bucket,bucket_count,accuracy");
    REQUIRE(lines[1] == "word_content,bag,2,0.75,\"[0,100)\",6,0.5");
    REQUIRE(lines[2] == "word_content,bag,2,0.75,unknown,4,1");
}

TEST_CASE("task names round-trip") {
    for (ProbeTask t : {ProbeTask::length, ProbeTask::word_content, ProbeTask::phrase_content,
                        ProbeTask::word_order}) {
        REQUIRE(probe_task_from_string(probe_task_name(t)) == t);
    }
    REQUIRE_THROWS_AS(probe_task_from_string("lengths"), config_error);
}
