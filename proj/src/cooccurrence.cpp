#include "cooctk/cooccurrence.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace cooctk::cooc {

namespace {

inline std::uint64_t pair_key(std::uint32_t t, std::uint32_t s) {
    return (static_cast<std::uint64_t>(t) << 32) | s;
}

using CountMap = std::unordered_map<std::uint64_t, double>;

void count_range(const std::vector<const corpus::Document*>& docs, std::size_t begin, std::size_t end,
                 WindowConfig window, CountMap& out) {
    const auto m = static_cast<std::size_t>(window.radius);
    for (std::size_t d = begin; d < end; ++d) {
        const auto& doc = *docs[d];
        auto count_span = [&](std::size_t lo, std::size_t hi) {
            for (std::size_t i = lo; i < hi; ++i) {
                const std::size_t jmax = std::min(i + m + 1, hi);
                for (std::size_t j = i + 1; j < jmax; ++j) {
                    out[pair_key(doc.tokens[i], doc.tokens[j])] += 1.0;
                    out[pair_key(doc.tokens[j], doc.tokens[i])] += 1.0;
                }
            }
        };
        if (window.boundary == Boundary::Sentence) {
            for (const auto& span : doc.sentence_spans) count_span(span.begin, span.end);
        } else {
            count_span(0, doc.tokens.size());
        }
    }
}

}  // namespace

Boundary boundary_from_string(std::string_view s) {
    if (s == "sentence") return Boundary::Sentence;
    if (s == "document") return Boundary::Document;
    throw UsageError("unknown boundary mode: " + std::string(s));
}

std::string to_string(Boundary b) {
    return b == Boundary::Sentence ? "sentence" : "document";
}

void CoocModel::finalize() {
    marginals_.assign(n_types_, 0.0);
    // Counts are integral increments, so summation order cannot change the
    // result; iteration over the map is fine here.
    for (const auto& [key, count] : counts_) {
        marginals_[key >> 32] += count;
    }
    total_ = 0.0;
    for (double f : marginals_) total_ += f;
}

CoocModel CoocModel::from_entries(std::size_t n_types, const std::vector<Entry>& entries, WindowConfig window) {
    CoocModel model;
    model.n_types_ = n_types;
    model.window_ = window;
    for (const auto& e : entries) {
        if (e.t >= n_types || e.s >= n_types) throw UsageError("entry outside type range");
        if (e.count < 0.0) throw UsageError("negative co-occurrence count");
        if (e.count > 0.0) model.counts_[pair_key(e.t, e.s)] += e.count;
    }
    // Fractional entries: recompute marginals in sorted key order so the
    // result does not depend on hash-map iteration.
    model.marginals_.assign(n_types, 0.0);
    for (const auto& e : model.sorted_entries()) model.marginals_[e.t] += e.count;
    model.total_ = 0.0;
    for (double f : model.marginals_) model.total_ += f;
    return model;
}

double CoocModel::at(std::uint32_t t, std::uint32_t s) const {
    const auto it = counts_.find(pair_key(t, s));
    return it == counts_.end() ? 0.0 : it->second;
}

std::vector<Entry> CoocModel::sorted_entries() const {
    std::vector<Entry> entries;
    entries.reserve(counts_.size());
    for (const auto& [key, count] : counts_) {
        entries.push_back({static_cast<std::uint32_t>(key >> 32),
                           static_cast<std::uint32_t>(key & 0xffffffffu), count});
    }
    std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
        return a.t != b.t ? a.t < b.t : a.s < b.s;
    });
    return entries;
}

CoocModel count_documents(const std::vector<const corpus::Document*>& docs, std::size_t n_types,
                          WindowConfig window, int threads) {
    if (window.radius < 1) throw UsageError("window radius must be >= 1");
    CoocModel model;
    model.n_types_ = n_types;
    model.window_ = window;

    const std::size_t workers = std::min<std::size_t>(std::max(threads, 1), std::max<std::size_t>(docs.size(), 1));
    if (workers <= 1) {
        count_range(docs, 0, docs.size(), window, model.counts_);
    } else {
        std::vector<CountMap> partial(workers);
        std::vector<std::pair<std::size_t, std::size_t>> ranges;
        const std::size_t base = docs.size() / workers;
        const std::size_t extra = docs.size() % workers;
        std::size_t begin = 0;
        for (std::size_t w = 0; w < workers; ++w) {
            const std::size_t len = base + (w < extra ? 1 : 0);
            ranges.emplace_back(begin, begin + len);
            begin += len;
        }
        parallel_indexed(workers, static_cast<int>(workers), [&](std::size_t w) {
            count_range(docs, ranges[w].first, ranges[w].second, window, partial[w]);
        });
        // Merge in worker order; integral additions are order-exact.
        for (auto& part : partial) {
            for (const auto& [key, count] : part) model.counts_[key] += count;
        }
    }
    model.finalize();
    return model;
}

CoocModel count_cooccurrences(const corpus::Corpus& corpus, WindowConfig window, int threads) {
    if (corpus.total_tokens() == 0) throw UsageError("cannot count an empty corpus");
    std::vector<const corpus::Document*> docs;
    docs.reserve(corpus.documents().size());
    for (const auto& doc : corpus.documents()) docs.push_back(&doc);
    CoocModel model = count_documents(docs, corpus.vocab().size(), window, threads);
    model.attach_vocab(corpus.vocab());
    return model;
}

std::uint64_t sentence_capacity(std::uint64_t sentence_len, std::uint64_t radius) {
    if (sentence_len < 1 || radius < 1) throw UsageError("sentence_capacity: L and m must be >= 1");
    const std::uint64_t clipped = std::min(radius, sentence_len);
    return (clipped - 1) * (2 * sentence_len - clipped);
}

std::uint64_t exact_sentence_capacity(std::uint64_t sentence_len, std::uint64_t radius) {
    if (sentence_len < 1 || radius < 1) throw UsageError("exact_sentence_capacity: L and m must be >= 1");
    if (radius >= sentence_len) return sentence_len * (sentence_len - 1);
    return radius * (2 * sentence_len - radius - 1);
}

double total_capacity(const std::map<std::size_t, std::size_t>& histogram, std::uint64_t radius,
                      CapacityKind kind) {
    if (radius == 0) return 0.0;  // T_0 = 0
    double total = 0.0;
    for (const auto& [len, n_sentences] : histogram) {
        const std::uint64_t per_sentence = kind == CapacityKind::Paper
                                               ? sentence_capacity(len, radius)
                                               : exact_sentence_capacity(len, radius);
        total += static_cast<double>(per_sentence) * static_cast<double>(n_sentences);
    }
    return total;
}

double total_capacity(const corpus::Corpus& corpus, std::uint64_t radius, CapacityKind kind) {
    return total_capacity(corpus.sentence_length_histogram(), radius, kind);
}

SparseView conditional_matrix(const CoocModel& model) {
    SparseView view;
    view.n_types = model.n_types();
    view.entries = model.sorted_entries();
    for (auto& e : view.entries) {
        const double row_sum = model.marginal(e.t);
        if (!(row_sum > 0.0)) throw ComputeError("zero marginal for a row with entries");
        e.count /= row_sum;
    }
    return view;
}

SparseView pmi_matrix(const CoocModel& model) {
    SparseView view;
    view.n_types = model.n_types();
    view.entries = model.sorted_entries();
    const double total = model.total();
    for (auto& e : view.entries) {
        const double ft = model.marginal(e.t);
        const double fs = model.marginal(e.s);
        if (!(ft > 0.0) || !(fs > 0.0)) throw ComputeError("zero marginal for a row with entries");
        e.count = std::log(e.count * total / (ft * fs));
    }
    return view;
}

void save_cooc(const CoocModel& model, const std::filesystem::path& tsv_path,
               const std::filesystem::path& meta_path) {
    std::ostringstream tsv;
    for (const auto& e : model.sorted_entries()) {
        tsv << e.t << '\t' << e.s << '\t' << fmt_double(e.count) << '\n';
    }
    write_text_file(tsv_path, tsv.str());

    nlohmann::json meta;
    meta["m"] = model.window().radius;
    meta["boundary"] = to_string(model.window().boundary);
    meta["n_types"] = model.n_types();
    meta["total"] = model.total();
    meta["n_entries"] = model.n_entries();
    if (model.has_vocab()) {
        meta["vocab_hash"] = model.vocab().hash();
        nlohmann::json vocab = nlohmann::json::array();
        for (std::size_t id = 0; id < model.vocab().size(); ++id) {
            vocab.push_back({model.vocab().type(static_cast<std::uint32_t>(id)),
                             model.vocab().freq(static_cast<std::uint32_t>(id))});
        }
        meta["vocab"] = std::move(vocab);
    }
    write_text_file(meta_path, meta.dump(2) + "\n");
}

CoocModel load_cooc(const std::filesystem::path& tsv_path, const std::filesystem::path& meta_path) {
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(read_text_file(meta_path));
    } catch (const nlohmann::json::exception& e) {
        throw UsageError("malformed co-occurrence sidecar " + meta_path.string() + ": " + e.what());
    }
    WindowConfig window;
    window.radius = meta.at("m").get<int>();
    window.boundary = boundary_from_string(meta.at("boundary").get<std::string>());
    const auto n_types = meta.at("n_types").get<std::size_t>();

    std::vector<Entry> entries;
    std::ifstream in(tsv_path);
    if (!in) throw UsageError("cannot open co-occurrence TSV: " + tsv_path.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream row(line);
        Entry e;
        if (!(row >> e.t >> e.s >> e.count)) {
            throw UsageError(tsv_path.string() + ":" + std::to_string(line_no) + ": malformed entry");
        }
        entries.push_back(e);
    }
    CoocModel model = CoocModel::from_entries(n_types, entries, window);
    if (meta.contains("vocab")) {
        std::vector<std::pair<std::string, std::uint64_t>> counts;
        for (const auto& item : meta["vocab"]) {
            counts.emplace_back(item.at(0).get<std::string>(), item.at(1).get<std::uint64_t>());
        }
        model.attach_vocab(corpus::Vocabulary::from_counts(std::move(counts)));
    }
    return model;
}

}  // namespace cooctk::cooc
