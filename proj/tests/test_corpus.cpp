#include <filesystem>
#include <fstream>
#include <unistd.h>

#include "cooctk/corpus.hpp"
#include "doctest.h"
#include "support/oracles.hpp"

using namespace cooctk;
using namespace cooctk::corpus;

namespace {

std::filesystem::path make_temp_dir(const std::string& tag) {
    auto dir = std::filesystem::temp_directory_path() / ("cooctk_test_" + tag + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("tokenizer handles the two-sentence fixture") {
    const auto c = corpus_from_texts({"The cat sat. The cat ran."});
    CHECK(c.total_tokens() == 6);
    CHECK(c.vocab().size() == 4);
    CHECK(c.vocab().id_of("the") == TokenId{0});
    CHECK(c.vocab().id_of("cat") == TokenId{1});
    CHECK(c.vocab().id_of("sat") == TokenId{2});
    CHECK(c.vocab().id_of("ran") == TokenId{3});
    REQUIRE(c.documents().size() == 1);
    const auto& doc = c.documents()[0];
    REQUIRE(doc.sentence_spans.size() == 2);
    CHECK(doc.sentence_spans[0] == SentenceSpan{0, 3});
    CHECK(doc.sentence_spans[1] == SentenceSpan{3, 6});
    CHECK(c.vocab().freq(0) == 2);  // the
    CHECK(c.vocab().freq(2) == 1);  // sat
}

TEST_CASE("vocabulary ranks break frequency ties by first occurrence") {
    const auto c = corpus_from_texts({"b b a a c"});
    // a and b tie at 2; b appeared first so it outranks a.
    CHECK(c.vocab().rank(*c.vocab().id_of("b")) == 1);
    CHECK(c.vocab().rank(*c.vocab().id_of("a")) == 2);
    CHECK(c.vocab().rank(*c.vocab().id_of("c")) == 3);
}

TEST_CASE("tokenizer keeps internal apostrophes and strips edge punctuation") {
    const auto c = corpus_from_texts({"\"They're 'well-known',\" she said!"});
    CHECK(c.vocab().id_of("they're").has_value());
    CHECK(c.vocab().id_of("well-known").has_value());
    CHECK(c.vocab().id_of("she").has_value());
    CHECK(c.vocab().id_of("said").has_value());
    CHECK(c.vocab().size() == 4);
}

TEST_CASE("document without a terminator is one sentence") {
    const auto c = corpus_from_texts({"no terminator here at all"});
    REQUIRE(c.documents()[0].sentence_spans.size() == 1);
    CHECK(c.documents()[0].sentence_spans[0] == SentenceSpan{0, 5});
}

TEST_CASE("empty input is rejected") {
    CHECK_THROWS_AS(corpus_from_texts({""}), UsageError);
    CHECK_THROWS_AS(corpus_from_texts({"... !!!"}), UsageError);
}

TEST_CASE("tokenization is deterministic and parallel ingest matches sequential") {
    std::vector<std::string> texts;
    for (int i = 0; i < 40; ++i) {
        texts.push_back("Document number " + std::to_string(i) + " talks. About cats! And dogs? Yes it does " +
                        std::to_string(i * 7) + ".");
    }
    const auto sequential = corpus_from_texts(texts, {}, 1);
    const auto parallel = corpus_from_texts(texts, {}, 4);
    CHECK(sequential == parallel);
    CHECK(sequential == corpus_from_texts(texts, {}, 1));
}

TEST_CASE("vocabulary frequencies sum to the token total") {
    const auto c = corpus_from_texts({"a b c a. b a c c d!", "d d a. c b?"});
    std::uint64_t sum = 0;
    for (std::size_t id = 0; id < c.vocab().size(); ++id) sum += c.vocab().freq(static_cast<TokenId>(id));
    CHECK(sum == c.total_tokens());
}

TEST_CASE("ingest reads a directory of txt files in filename order") {
    const auto dir = make_temp_dir("ingest_dir");
    std::ofstream(dir / "b.txt") << "second file.";
    std::ofstream(dir / "a.txt") << "first file.";
    std::ofstream(dir / "notes.md") << "ignored";
    const auto c = ingest(dir);
    REQUIRE(c.documents().size() == 2);
    CHECK(c.vocab().id_of("first") == TokenId{0});
    CHECK(c.vocab().id_of("second") == TokenId{2});
    std::filesystem::remove_all(dir);
}

TEST_CASE("ingest reads json-lines and reports malformed records with line numbers") {
    const auto dir = make_temp_dir("ingest_jsonl");
    const auto good = dir / "docs.jsonl";
    std::ofstream(good) << R"({"text": "Alpha beta."})" << "\n"
                        << R"({"id": "x", "text": "Gamma."})" << "\n";
    const auto c = ingest(good);
    CHECK(c.documents().size() == 2);
    CHECK(c.total_tokens() == 3);

    const auto bad = dir / "bad.jsonl";
    std::ofstream(bad) << R"({"text": "ok"})" << "\n" << "{oops\n";
    try {
        ingest(bad);
        FAIL("expected UsageError");
    } catch (const UsageError& e) {
        CHECK(std::string(e.what()).find(":2:") != std::string::npos);
    }

    CHECK_THROWS_AS(ingest(dir / "missing.jsonl"), UsageError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("harmonic model values") {
    const auto m4 = harmonic_model(4);
    REQUIRE(m4.size() == 4);
    CHECK(m4[0] == doctest::Approx(4.0));
    CHECK(m4[1] == doctest::Approx(2.0));
    CHECK(m4[2] == doctest::Approx(4.0 / 3.0));
    CHECK(m4[3] == doctest::Approx(1.0));

    CHECK(harmonic_model(1) == std::vector<double>{1.0});
    CHECK_THROWS_AS(harmonic_model(0), UsageError);

    for (std::size_t n : {std::size_t{2}, std::size_t{7}, std::size_t{100}}) {
        const auto model = harmonic_model(n);
        CHECK(model.back() == doctest::Approx(1.0));
        for (std::size_t r = 1; r < n; ++r) CHECK(model[r - 1] > model[r]);
    }
}

TEST_CASE("zipf corpus generator is deterministic and fits the harmonic slope") {
    const SentenceLengthDist fixed20 = SentenceLengthDist::fixed(20);
    const auto a = generate_zipf_corpus(100, 100000, fixed20, 7);
    const auto b = generate_zipf_corpus(100, 100000, fixed20, 7);
    CHECK(a == b);
    CHECK(a.total_tokens() == 100000);

    // Log-log regression of empirical frequency on rank over the whole vocab.
    std::vector<double> log_rank;
    std::vector<double> log_freq;
    for (std::size_t id = 0; id < a.vocab().size(); ++id) {
        log_rank.push_back(std::log(static_cast<double>(a.vocab().rank(static_cast<TokenId>(id)))));
        log_freq.push_back(std::log(static_cast<double>(a.vocab().freq(static_cast<TokenId>(id)))));
    }
    const double slope = oracles::ols_slope(log_rank, log_freq);
    CHECK(slope == doctest::Approx(-1.0).epsilon(0.1));

    for (const auto& doc : a.documents()) {
        for (const auto& span : doc.sentence_spans) CHECK(span.length() <= 20);
    }
}

TEST_CASE("smallest feasible zipf draw covers both types") {
    const auto c = generate_zipf_corpus(2, 2, SentenceLengthDist::fixed(2), 3);
    CHECK(c.vocab().size() == 2);  // enumerated for this seed
    CHECK(c.total_tokens() == 2);
}

TEST_CASE("zipf generator rejects infeasible parameters") {
    CHECK_THROWS_AS(generate_zipf_corpus(1, 10, SentenceLengthDist::fixed(5), 0), UsageError);
    CHECK_THROWS_AS(generate_zipf_corpus(10, 5, SentenceLengthDist::fixed(5), 0), UsageError);
    CHECK_THROWS_AS(generate_zipf_corpus(4, 100, SentenceLengthDist::fixed(5), 0, 0), UsageError);
    CHECK_THROWS_AS(generate_zipf_corpus(4, 100, SentenceLengthDist{SentenceLengthDist::Kind::Uniform, 8, 3}, 0),
                    UsageError);
}

TEST_CASE("zipf corpus spreads across documents with sentence spans intact") {
    const auto c = generate_zipf_corpus(50, 5000, SentenceLengthDist::uniform(5, 25), 11, 13);
    CHECK(c.documents().size() == 13);
    CHECK(c.total_tokens() == 5000);
    std::uint64_t tokens = 0;
    for (const auto& doc : c.documents()) {
        tokens += doc.tokens.size();
        std::size_t covered = 0;
        for (const auto& span : doc.sentence_spans) {
            CHECK(span.begin == covered);
            CHECK(span.end > span.begin);
            covered = span.end;
        }
        CHECK(covered == doc.tokens.size());
    }
    CHECK(tokens == 5000);
}
