#include "cooctk/corpus.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>

#include "json.hpp"

namespace cooctk::corpus {

namespace {

// Decodes one UTF-8 codepoint and advances p. Invalid bytes pass through as
// single-byte codepoints so tokenization never fails on dirty input.
char32_t next_codepoint(const char*& p, const char* end) {
    const auto b0 = static_cast<unsigned char>(*p);
    if (b0 < 0x80) {
        ++p;
        return b0;
    }
    int extra = 0;
    char32_t cp = 0;
    if ((b0 & 0xe0) == 0xc0) {
        extra = 1;
        cp = b0 & 0x1f;
    } else if ((b0 & 0xf0) == 0xe0) {
        extra = 2;
        cp = b0 & 0x0f;
    } else if ((b0 & 0xf8) == 0xf0) {
        extra = 3;
        cp = b0 & 0x07;
    } else {
        ++p;
        return b0;
    }
    if (end - p <= extra) {
        ++p;
        return b0;
    }
    for (int i = 1; i <= extra; ++i) {
        const auto bi = static_cast<unsigned char>(p[i]);
        if ((bi & 0xc0) != 0x80) {
            ++p;
            return b0;
        }
        cp = (cp << 6) | (bi & 0x3f);
    }
    p += extra + 1;
    return cp;
}

bool is_space_cp(char32_t c) {
    switch (c) {
        case U' ': case U'\t': case U'\n': case U'\r': case U'\v': case U'\f':
        case 0x0085: case 0x00a0: case 0x1680: case 0x2028: case 0x2029:
        case 0x202f: case 0x205f: case 0x3000:
            return true;
        default:
            return c >= 0x2000 && c <= 0x200a;
    }
}

bool is_punct_cp(char32_t c) {
    if (c < 0x80) {
        return std::ispunct(static_cast<unsigned char>(c)) != 0;
    }
    switch (c) {
        case 0x2018: case 0x2019: case 0x201c: case 0x201d:  // curly quotes
        case 0x2013: case 0x2014: case 0x2026:               // dashes, ellipsis
        case 0x00ab: case 0x00bb: case 0x00a1: case 0x00bf:
            return true;
        default:
            return false;
    }
}

bool is_terminator_cp(char32_t c) { return c == U'.' || c == U'!' || c == U'?'; }

struct TokenizedDoc {
    std::vector<std::string> tokens;
    // Token index after which a sentence boundary falls (exclusive end).
    std::vector<std::size_t> sentence_ends;
};

TokenizedDoc tokenize_text(const std::string& text, const TokenizeConfig& config) {
    TokenizedDoc doc;
    const char* p = text.data();
    const char* end = text.data() + text.size();
    struct Cp {
        char32_t cp;
        const char* begin;
        const char* end;
    };
    std::vector<Cp> word;
    auto flush_word = [&] {
        if (word.empty()) return;
        std::size_t lo = 0;
        std::size_t hi = word.size();
        if (config.strip_punctuation) {
            while (lo < hi && is_punct_cp(word[lo].cp)) ++lo;
            while (hi > lo && is_punct_cp(word[hi - 1].cp)) --hi;
        }
        // The trailing punctuation run decides sentence termination even when
        // punctuation is kept in the token.
        bool terminator = false;
        for (std::size_t i = word.size(); i > 0; --i) {
            if (!is_punct_cp(word[i - 1].cp)) break;
            if (is_terminator_cp(word[i - 1].cp)) terminator = true;
        }
        if (!config.strip_punctuation) {
            hi = word.size();
            lo = 0;
        }
        if (lo < hi) {
            std::string token(word[lo].begin, word[hi - 1].end);
            if (config.lowercase) {
                for (char& c : token) {
                    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
                }
            }
            doc.tokens.push_back(std::move(token));
        }
        if (terminator && !doc.tokens.empty() &&
            (doc.sentence_ends.empty() || doc.sentence_ends.back() < doc.tokens.size())) {
            doc.sentence_ends.push_back(doc.tokens.size());
        }
        word.clear();
    };
    while (p < end) {
        const char* cp_begin = p;
        const char32_t cp = next_codepoint(p, end);
        if (is_space_cp(cp)) {
            flush_word();
        } else {
            word.push_back({cp, cp_begin, p});
        }
    }
    flush_word();
    if (doc.sentence_ends.empty() || doc.sentence_ends.back() != doc.tokens.size()) {
        if (!doc.tokens.empty()) doc.sentence_ends.push_back(doc.tokens.size());
    }
    return doc;
}

Corpus assemble(std::vector<TokenizedDoc> tokenized) {
    std::map<std::string, TokenId, std::less<>> index;
    std::vector<std::pair<std::string, std::uint64_t>> counts;
    std::vector<Document> documents;
    documents.reserve(tokenized.size());
    for (auto& tdoc : tokenized) {
        Document doc;
        doc.tokens.reserve(tdoc.tokens.size());
        for (auto& tok : tdoc.tokens) {
            auto it = index.find(tok);
            TokenId id;
            if (it == index.end()) {
                id = static_cast<TokenId>(counts.size());
                index.emplace(tok, id);
                counts.emplace_back(std::move(tok), 0);
            } else {
                id = it->second;
            }
            counts[id].second += 1;
            doc.tokens.push_back(id);
        }
        std::size_t begin = 0;
        for (std::size_t sentence_end : tdoc.sentence_ends) {
            if (sentence_end > begin) {
                doc.sentence_spans.push_back({begin, sentence_end});
                begin = sentence_end;
            }
        }
        documents.push_back(std::move(doc));
    }
    std::uint64_t total = 0;
    for (const auto& [type, count] : counts) total += count;
    if (total == 0) throw UsageError("empty corpus");
    return Corpus(std::move(documents), Vocabulary::from_counts(std::move(counts)));
}

}  // namespace

Vocabulary Vocabulary::from_counts(std::vector<std::pair<std::string, std::uint64_t>> counts) {
    Vocabulary v;
    v.types_.reserve(counts.size());
    v.freq_.reserve(counts.size());
    for (auto& [type, count] : counts) {
        if (count == 0) throw UsageError("vocabulary frequency must be positive: " + type);
        v.index_.emplace(type, static_cast<TokenId>(v.types_.size()));
        v.types_.push_back(std::move(type));
        v.freq_.push_back(count);
    }
    // Rank by non-increasing frequency; ties keep id (first-occurrence) order.
    std::vector<TokenId> order(v.types_.size());
    std::iota(order.begin(), order.end(), 0u);
    std::stable_sort(order.begin(), order.end(),
                     [&](TokenId a, TokenId b) { return v.freq_[a] > v.freq_[b]; });
    v.rank_.assign(v.types_.size(), 0);
    for (std::size_t i = 0; i < order.size(); ++i) {
        v.rank_[order[i]] = static_cast<std::uint32_t>(i + 1);
    }
    return v;
}

std::optional<TokenId> Vocabulary::id_of(std::string_view type) const {
    auto it = index_.find(type);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

std::uint64_t Vocabulary::hash() const {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::size_t i = 0; i < types_.size(); ++i) {
        h = fnv1a(types_[i].data(), types_[i].size(), h);
        const std::uint64_t f = freq_[i];
        h = fnv1a(&f, sizeof(f), h);
    }
    return h;
}

Corpus::Corpus(std::vector<Document> documents, Vocabulary vocab)
    : documents_(std::move(documents)), vocab_(std::move(vocab)) {
    total_tokens_ = 0;
    for (const auto& doc : documents_) {
        total_tokens_ += doc.tokens.size();
        std::size_t covered = 0;
        for (const auto& span : doc.sentence_spans) {
            if (span.begin != covered || span.end <= span.begin || span.end > doc.tokens.size()) {
                throw ComputeError("sentence spans must partition the document");
            }
            covered = span.end;
        }
        if (covered != doc.tokens.size()) throw ComputeError("sentence spans must cover the document");
        for (TokenId id : doc.tokens) {
            if (id >= vocab_.size()) throw ComputeError("token id outside vocabulary");
        }
    }
}

std::map<std::size_t, std::size_t> Corpus::sentence_length_histogram() const {
    std::map<std::size_t, std::size_t> histogram;
    for (const auto& doc : documents_) {
        for (const auto& span : doc.sentence_spans) histogram[span.length()] += 1;
    }
    return histogram;
}

Corpus corpus_from_texts(const std::vector<std::string>& texts, const TokenizeConfig& config, int threads) {
    std::vector<TokenizedDoc> tokenized(texts.size());
    parallel_chunks(texts.size(), threads, [&](std::size_t begin, std::size_t end) {
        for (std::size_t i = begin; i < end; ++i) tokenized[i] = tokenize_text(texts[i], config);
    });
    return assemble(std::move(tokenized));
}

Corpus ingest(const std::filesystem::path& path, const TokenizeConfig& config, int threads) {
    namespace fs = std::filesystem;
    if (!fs::exists(path)) throw UsageError("corpus path does not exist: " + path.string());
    std::vector<std::string> texts;
    if (fs::is_directory(path)) {
        std::vector<fs::path> files;
        for (const auto& entry : fs::directory_iterator(path)) {
            if (entry.is_regular_file() && entry.path().extension() == ".txt") {
                files.push_back(entry.path());
            }
        }
        std::sort(files.begin(), files.end(),
                  [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });
        if (files.empty()) throw UsageError("no .txt files in corpus directory: " + path.string());
        texts.reserve(files.size());
        for (const auto& file : files) texts.push_back(read_text_file(file));
    } else {
        const auto ext = path.extension().string();
        if (ext != ".jsonl" && ext != ".ndjson") {
            throw UsageError("unsupported corpus format (expected a directory of .txt files or a .jsonl file): " +
                             path.string());
        }
        std::ifstream in(path);
        if (!in) throw UsageError("cannot open corpus file: " + path.string());
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            nlohmann::json record;
            try {
                record = nlohmann::json::parse(line);
            } catch (const nlohmann::json::exception& e) {
                throw UsageError(path.string() + ":" + std::to_string(line_no) +
                                 ": malformed document record: " + e.what());
            }
            if (!record.is_object() || !record.contains("text") || !record["text"].is_string()) {
                throw UsageError(path.string() + ":" + std::to_string(line_no) +
                                 ": document record needs a string \"text\" field");
            }
            texts.push_back(record["text"].get<std::string>());
        }
        if (texts.empty()) throw UsageError("empty corpus");
    }
    return corpus_from_texts(texts, config, threads);
}

std::vector<double> harmonic_model(std::size_t n_types) {
    if (n_types == 0) throw UsageError("harmonic_model: vocabulary size must be positive");
    std::vector<double> freqs(n_types);
    for (std::size_t r = 1; r <= n_types; ++r) {
        freqs[r - 1] = static_cast<double>(n_types) / static_cast<double>(r);
    }
    return freqs;
}

Corpus generate_zipf_corpus(std::size_t n_types, std::uint64_t n_tokens, const SentenceLengthDist& dist,
                            std::uint64_t seed, std::size_t n_documents) {
    if (n_types < 2) throw UsageError("generate_zipf_corpus: need at least 2 types");
    if (n_tokens < n_types) throw UsageError("generate_zipf_corpus: need at least as many tokens as types");
    if (n_documents == 0 || n_documents > n_tokens) {
        throw UsageError("generate_zipf_corpus: infeasible document count");
    }
    if (dist.min_len == 0 || dist.min_len > dist.max_len) {
        throw UsageError("generate_zipf_corpus: infeasible sentence length distribution");
    }

    std::vector<double> cumulative(n_types);
    double acc = 0.0;
    for (std::size_t r = 1; r <= n_types; ++r) {
        acc += 1.0 / static_cast<double>(r);
        cumulative[r - 1] = acc;
    }

    Rng rng(seed);
    auto draw_type = [&]() -> std::uint32_t {
        const double u = rng.next_double() * acc;
        const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
        const auto idx = static_cast<std::size_t>(it - cumulative.begin());
        return static_cast<std::uint32_t>(std::min(idx, n_types - 1));
    };
    auto draw_len = [&]() -> std::size_t {
        if (dist.kind == SentenceLengthDist::Kind::Fixed) return dist.min_len;
        return dist.min_len + rng.next_below(dist.max_len - dist.min_len + 1);
    };

    // Per-document token budgets; remainder goes to the leading documents.
    const std::uint64_t base = n_tokens / n_documents;
    const std::uint64_t extra = n_tokens % n_documents;

    // First pass over sampled ranks; ids remapped to occurring types below.
    std::vector<std::vector<std::uint32_t>> doc_ranks(n_documents);
    std::vector<std::vector<SentenceSpan>> doc_spans(n_documents);
    std::vector<std::uint64_t> occurrences(n_types, 0);
    for (std::size_t d = 0; d < n_documents; ++d) {
        const std::uint64_t budget = base + (d < extra ? 1 : 0);
        auto& ranks = doc_ranks[d];
        ranks.reserve(budget);
        std::size_t begin = 0;
        while (ranks.size() < budget) {
            const std::size_t len = std::min<std::size_t>(draw_len(), budget - ranks.size());
            for (std::size_t i = 0; i < len; ++i) {
                const auto r = draw_type();
                occurrences[r] += 1;
                ranks.push_back(r);
            }
            doc_spans[d].push_back({begin, begin + len});
            begin += len;
        }
    }

    std::vector<TokenId> remap(n_types, 0);
    std::vector<std::pair<std::string, std::uint64_t>> counts;
    char name[32];
    for (std::size_t r = 0; r < n_types; ++r) {
        if (occurrences[r] == 0) continue;
        remap[r] = static_cast<TokenId>(counts.size());
        std::snprintf(name, sizeof(name), "w%05zu", r + 1);
        counts.emplace_back(name, occurrences[r]);
    }

    std::vector<Document> documents(n_documents);
    for (std::size_t d = 0; d < n_documents; ++d) {
        documents[d].tokens.reserve(doc_ranks[d].size());
        for (auto r : doc_ranks[d]) documents[d].tokens.push_back(remap[r]);
        documents[d].sentence_spans = std::move(doc_spans[d]);
    }
    return Corpus(std::move(documents), Vocabulary::from_counts(std::move(counts)));
}

}  // namespace cooctk::corpus
