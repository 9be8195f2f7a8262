#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cooctk/common.hpp"

namespace cooctk::corpus {

using TokenId = std::uint32_t;

struct TokenizeConfig {
  bool lowercase = true;
  /// Strip leading/trailing punctuation from each token; internal
  /// apostrophes and hyphens survive ("they're" is one token).
  bool strip_punctuation = true;
};

/// Half-open token-index range [begin, end); spans partition a document.
struct SentenceSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t length() const { return end - begin; }
  bool operator==(const SentenceSpan&) const = default;
};

struct Document {
  std::vector<TokenId> tokens;
  std::vector<SentenceSpan> sentence_spans;
  bool operator==(const Document&) const = default;
};

/// Dense-id vocabulary with per-type frequency and 1-based frequency rank.
/// Ranks sort by non-increasing frequency, ties broken by id order.
class Vocabulary {
 public:
  Vocabulary() = default;
  /// `counts` in id order; every count must be positive.
  static Vocabulary from_counts(std::vector<std::pair<std::string, std::uint64_t>> counts);

  std::size_t size() const { return types_.size(); }
  std::optional<TokenId> id_of(std::string_view type) const;
  const std::string& type(TokenId id) const { return types_.at(id); }
  std::uint64_t freq(TokenId id) const { return freq_.at(id); }
  std::uint32_t rank(TokenId id) const { return rank_.at(id); }
  const std::vector<std::uint64_t>& freqs() const { return freq_; }
  std::uint64_t hash() const;

  bool operator==(const Vocabulary& other) const {
    return types_ == other.types_ && freq_ == other.freq_;
  }

 private:
  std::vector<std::string> types_;
  std::vector<std::uint64_t> freq_;
  std::vector<std::uint32_t> rank_;
  std::map<std::string, TokenId, std::less<>> index_;
};

class Corpus {
 public:
  Corpus() = default;
  Corpus(std::vector<Document> documents, Vocabulary vocab);

  const std::vector<Document>& documents() const { return documents_; }
  const Vocabulary& vocab() const { return vocab_; }
  std::uint64_t total_tokens() const { return total_tokens_; }
  /// Sentence length -> number of sentences of that length (S_L).
  std::map<std::size_t, std::size_t> sentence_length_histogram() const;

  bool operator==(const Corpus& other) const {
    return documents_ == other.documents_ && vocab_ == other.vocab_;
  }

 private:
  std::vector<Document> documents_;
  Vocabulary vocab_;
  std::uint64_t total_tokens_ = 0;
};

/// Tokenizes raw texts into a corpus. Token ids are dense integers in
/// first-occurrence order; sentences split after '.', '!' or '?' at a word
/// boundary, and a document without a terminator is one sentence.
Corpus corpus_from_texts(const std::vector<std::string>& texts, const TokenizeConfig& config = {},
                         int threads = 1);

/// Reads a corpus from (a) a directory of UTF-8 .txt files, one document per
/// file in lexicographic filename order, or (b) a JSON-lines file with one
/// object per line carrying a required "text" field.
Corpus ingest(const std::filesystem::path& path, const TokenizeConfig& config = {}, int threads = 1);

/// Harmonic (Zipfian) model frequencies N/r for r = 1..N; the least-frequent
/// type has model frequency 1.
std::vector<double> harmonic_model(std::size_t n_types);

struct SentenceLengthDist {
  enum class Kind { Fixed, Uniform };
  Kind kind = Kind::Fixed;
  std::size_t min_len = 20;
  std::size_t max_len = 20;
  static SentenceLengthDist fixed(std::size_t len) { return {Kind::Fixed, len, len}; }
  static SentenceLengthDist uniform(std::size_t lo, std::size_t hi) { return {Kind::Uniform, lo, hi}; }
};

/// Synthetic corpus of i.i.d. tokens drawn with probability proportional to
/// the harmonic model, chunked into sentences and documents. Types that never
/// occur are dropped so every vocabulary frequency is positive.
Corpus generate_zipf_corpus(std::size_t n_types, std::uint64_t n_tokens, const SentenceLengthDist& dist,
                            std::uint64_t seed, std::size_t n_documents = 1);

}  // namespace cooctk::corpus
