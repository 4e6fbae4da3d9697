#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "bon/demo_corpus.hpp"
#include "bon/text.hpp"

using namespace bon;

namespace {

std::filesystem::path fresh_dir(const std::string& name) {
    const std::filesystem::path dir = std::filesystem::path("test_tmp") / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("tokenizer lowercases and splits punctuation") {
    const auto s = normalize_and_tokenize("The cat, quietly, SLEEPS.");
    REQUIRE(s.has_value());
    REQUIRE(s->tokens == std::vector<std::string>{"the", "cat", ",", "quietly", ",", "sleeps", "."});
}

TEST_CASE("tokenizer handles multi-byte letters") {
    const auto s = normalize_and_tokenize("Étrange rivière!");
    REQUIRE(s.has_value());
    REQUIRE(s->tokens == std::vector<std::string>{"étrange", "rivière", "!"});
}

TEST_CASE("tokenizer is idempotent on its own output") {
    const auto first = normalize_and_tokenize("  Hello,world ...  again\t!");
    REQUIRE(first.has_value());
    const auto second = normalize_and_tokenize(first->joined());
    REQUIRE(second.has_value());
    REQUIRE(second->tokens == first->tokens);
}

TEST_CASE("whitespace-only text is degenerate") {
    REQUIRE_FALSE(normalize_and_tokenize("").has_value());
    REQUIRE_FALSE(normalize_and_tokenize(" \t  \n").has_value());
}

TEST_CASE("pair loading selects columns and counts malformed lines") {
    const auto dir = fresh_dir("text_pairs");
    const std::string path = (dir / "pairs.tsv").string();
    write_file(path,
               "the cat\tle chat\n"
               "no tab here\n"
               "a dog\tun chien\textra column\n"
               "\r\n"
               "last\tdernier\r\n");

    CorpusDiagnostics diag;
    const auto left = load_pairs(path, PairColumn::left, diag);
    REQUIRE(left == std::vector<std::string>{"the cat", "a dog", "last"});
    REQUIRE(diag.skipped_lines == 1);

    CorpusDiagnostics diag_right;
    const auto right = load_pairs(path, PairColumn::right, diag_right);
    REQUIRE(right == std::vector<std::string>{"le chat", "un chien", "dernier"});
}

TEST_CASE("missing pair file throws") {
    CorpusDiagnostics diag;
    REQUIRE_THROWS(load_pairs("test_tmp/does_not_exist.tsv", PairColumn::left, diag));
}

TEST_CASE("tokenize_lines drops degenerate and overlong lines") {
    CorpusDiagnostics diag;
    const std::vector<std::string> lines = {
        "a b c", "   ", "one two three four five", "x"};
    const auto sentences = tokenize_lines(lines, 4, diag);
    REQUIRE(sentences.size() == 2);
    REQUIRE(diag.dropped_degenerate == 1);
    REQUIRE(diag.dropped_overlong == 1);
}

TEST_CASE("dedup keeps first occurrence and counts removals") {
    CorpusDiagnostics diag;
    std::vector<Sentence> sentences;
    for (const char* text : {"a b", "c d", "a b", "e f", "c d", "a b"}) {
        sentences.push_back(*normalize_and_tokenize(text));
    }
    const auto [train, test] = dedup_shuffle_split(std::move(sentences), 1, diag, 0.5, 100, 100);
    REQUIRE(diag.duplicates_removed == 3);
    REQUIRE(train.size() + test.size() == 3);
}

TEST_CASE("split is deterministic and respects fraction and caps") {
    const auto make = [] {
        std::vector<Sentence> v;
        for (int i = 0; i < 100; ++i) {
            v.push_back(*normalize_and_tokenize("sentence number " + std::to_string(i)));
        }
        return v;
    };
    CorpusDiagnostics d1, d2;
    const auto [train1, test1] = dedup_shuffle_split(make(), 9, d1, 0.8, 1000, 1000, "en");
    const auto [train2, test2] = dedup_shuffle_split(make(), 9, d2, 0.8, 1000, 1000, "en");
    REQUIRE(train1.size() == 80);
    REQUIRE(test1.size() == 20);
    REQUIRE(train1.split_tag == "train");
    REQUIRE(test1.language_tag == "en");
    for (size_t i = 0; i < train1.size(); ++i) {
        REQUIRE(train1.sentences[i].tokens == train2.sentences[i].tokens);
    }

    CorpusDiagnostics d3;
    const auto [train3, test3] = dedup_shuffle_split(make(), 9, d3, 0.8, 30, 5);
    REQUIRE(train3.size() == 30);
    REQUIRE(test3.size() == 5);

    CorpusDiagnostics d4;
    const auto [train4, test4] = dedup_shuffle_split(make(), 10, d4, 0.8, 1000, 1000);
    bool moved = false;
    for (size_t i = 0; i < train1.size(); ++i) {
        moved = moved || train4.sentences[i].tokens != train1.sentences[i].tokens;
    }
    REQUIRE(moved);
}

TEST_CASE("fewer than two unique sentences is an error") {
    CorpusDiagnostics diag;
    std::vector<Sentence> one = {*normalize_and_tokenize("a b")};
    REQUIRE_THROWS_AS(dedup_shuffle_split(std::move(one), 1, diag), config_error);
}

TEST_CASE("corpus files round-trip exactly") {
    const auto dir = fresh_dir("text_corpus");
    Corpus corpus{{}, "train", "en"};
    corpus.sentences.push_back(*normalize_and_tokenize("the red cat sleeps ."));
    corpus.sentences.push_back(*normalize_and_tokenize("étrange !"));
    const std::string path = (dir / "train.txt").string();
    save_corpus(corpus, path);
    const Corpus back = load_corpus(path, "train", "en");
    REQUIRE(back.size() == corpus.size());
    for (size_t i = 0; i < corpus.size(); ++i) {
        REQUIRE(back.sentences[i].tokens == corpus.sentences[i].tokens);
    }
}

TEST_CASE("demo pair generator is deterministic") {
    const auto a = make_demo_pairs(200, 7, true);
    const auto b = make_demo_pairs(200, 7, true);
    REQUIRE(a == b);
    const auto c = make_demo_pairs(200, 8, true);
    REQUIRE(a != c);
}

TEST_CASE("demo pairs without noise are all well-formed") {
    for (const std::string& line : make_demo_pairs(300, 3, false)) {
        const size_t tab = line.find('\t');
        REQUIRE(tab != std::string::npos);
        REQUIRE(tab > 0);
        REQUIRE(tab + 1 < line.size());
        REQUIRE(line.find('\t', tab + 1) == std::string::npos);
    }
}

TEST_CASE("demo noise exercises every diagnostics counter") {
    const auto dir = fresh_dir("text_demo");
    const std::string path = (dir / "pairs.tsv").string();
    write_demo_pairs(path, 600, 7, true);

    CorpusDiagnostics diag;
    const auto lines = load_pairs(path, PairColumn::left, diag);
    REQUIRE(diag.skipped_lines >= 6);
    const auto sentences = tokenize_lines(lines, 30, diag);
    REQUIRE(diag.dropped_degenerate >= 4);
    REQUIRE(diag.dropped_overlong >= 1);
    const auto [train, test] = dedup_shuffle_split(sentences, 42, diag);
    REQUIRE(diag.duplicates_removed >= 8);
    REQUIRE(train.size() + test.size() >= 400);

    std::set<size_t> lengths;
    for (const Sentence& s : train.sentences) lengths.insert(s.length());
    REQUIRE(*lengths.begin() <= 2);
    REQUIRE(*lengths.rbegin() >= 15);
}
