#include "cooctk/biasprobe.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

namespace cooctk::bias {

namespace {

std::string fold(std::string_view s) {
    std::string out(s);
    for (char& c : out) {
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    return out;
}

double lookup_or_throw(const FrequencyTable& freqs, const std::string& word) {
    const auto count = freqs.count(word);
    if (!count) throw UsageError("out-of-vocabulary word: " + word);
    return *count;
}

}  // namespace

FrequencyTable FrequencyTable::from_counts(const std::vector<std::pair<std::string, double>>& counts,
                                           bool fold_case) {
    FrequencyTable table;
    table.fold_case_ = fold_case;
    for (const auto& [type, count] : counts) {
        if (!(count > 0.0)) throw UsageError("non-positive frequency for type: " + type);
        table.counts_[fold_case ? fold(type) : type] += count;
    }
    table.max_log_ = 0.0;
    for (const auto& [type, count] : table.counts_) {
        table.max_log_ = std::max(table.max_log_, std::log(count));
    }
    return table;
}

FrequencyTable FrequencyTable::from_tsv(const std::filesystem::path& path, bool fold_case) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open frequency table: " + path.string());
    std::vector<std::pair<std::string, double>> counts;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string type;
        double count = 0.0;
        if (!(row >> type >> count)) {
            throw UsageError(path.string() + ":" + std::to_string(line_no) + ": malformed frequency line");
        }
        if (!(count > 0.0)) {
            throw UsageError(path.string() + ":" + std::to_string(line_no) + ": non-positive count");
        }
        counts.emplace_back(std::move(type), count);
    }
    if (counts.empty()) throw UsageError("empty frequency table: " + path.string());
    return from_counts(counts, fold_case);
}

FrequencyTable FrequencyTable::from_corpus(const corpus::Corpus& corpus) {
    std::vector<std::pair<std::string, double>> counts;
    counts.reserve(corpus.vocab().size());
    for (std::size_t id = 0; id < corpus.vocab().size(); ++id) {
        counts.emplace_back(corpus.vocab().type(static_cast<corpus::TokenId>(id)),
                            static_cast<double>(corpus.vocab().freq(static_cast<corpus::TokenId>(id))));
    }
    // Corpus tokenization already folded case if configured; fold again so
    // pre-folded and unfolded corpora behave alike.
    return from_counts(counts, true);
}

std::optional<double> FrequencyTable::count(std::string_view type) const {
    const auto it = fold_case_ ? counts_.find(fold(type)) : counts_.find(type);
    if (it == counts_.end()) return std::nullopt;
    return it->second;
}

double dissonance(const Analogy& analogy, const FrequencyTable& freqs) {
    const double ft = lookup_or_throw(freqs, analogy.t);
    const double fs = lookup_or_throw(freqs, analogy.s);
    const double ft2 = lookup_or_throw(freqs, analogy.t2);
    const double fs2 = lookup_or_throw(freqs, analogy.s2);
    if (!(freqs.max_log() > 0.0)) {
        throw ComputeError("degenerate frequency table: max log frequency is zero");
    }
    const double raw = std::abs(std::log(ft * fs2 / (fs * ft2))) / freqs.max_log();
    // The normalizer bounds the least-most-frequent comparison; arbitrary
    // tables can exceed it, so the reported range is enforced here.
    return std::min(raw, 1.0);
}

CategoryResult category_average(const AnalogyCategory& category, const FrequencyTable& freqs) {
    if (category.analogies.empty()) throw UsageError("category has no analogies: " + category.id);
    CategoryResult result;
    double weighted_sum = 0.0;
    double weight_total = 0.0;
    for (const auto& analogy : category.analogies) {
        const auto ft = freqs.count(analogy.t);
        const auto fs = freqs.count(analogy.s);
        const auto ft2 = freqs.count(analogy.t2);
        const auto fs2 = freqs.count(analogy.s2);
        if (!ft || !fs || !ft2 || !fs2) {
            result.dropped += 1;
            continue;
        }
        const double delta = dissonance(analogy, freqs);
        const double weight = *ft + *fs + *ft2 + *fs2;
        weighted_sum += weight * delta;
        weight_total += weight;
        result.included += 1;
    }
    if (result.included == 0) {
        throw UsageError("category " + category.id + " has no in-vocabulary analogies (" +
                         std::to_string(result.dropped) + " dropped)");
    }
    result.d = weighted_sum / weight_total;
    return result;
}

DissonanceReport compare_corpora(const std::vector<AnalogyCategory>& categories, const FrequencyTable& a,
                                 const FrequencyTable* b) {
    DissonanceReport report;
    report.two_corpora = b != nullptr;
    for (const auto& category : categories) {
        CategoryComparison row;
        row.id = category.id;
        row.name = category.name;
        try {
            const auto result = category_average(category, a);
            row.d_a = result.d;
            row.dropped_a = result.dropped;
        } catch (const std::exception& e) {
            row.error_a = e.what();
            row.dropped_a = category.analogies.size();
        }
        if (b != nullptr) {
            try {
                const auto result = category_average(category, *b);
                row.d_b = result.d;
                row.dropped_b = result.dropped;
            } catch (const std::exception& e) {
                row.error_b = e.what();
                row.dropped_b = category.analogies.size();
            }
            if (row.d_a && row.d_b) row.diff = *row.d_a - *row.d_b;
        }
        report.rows.push_back(std::move(row));
    }
    return report;
}

std::vector<AnalogyCategory> load_bats(const std::filesystem::path& dir, VariantPolicy variants,
                                       bool ordered_pairs) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw UsageError("analogy directory does not exist: " + dir.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".txt") files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end(),
              [](const fs::path& x, const fs::path& y) { return x.string() < y.string(); });
    if (files.empty()) throw UsageError("no category files under: " + dir.string());

    std::vector<AnalogyCategory> categories;
    for (const auto& file : files) {
        std::ifstream in(file);
        if (!in) throw UsageError("cannot open category file: " + file.string());

        // One dyad per line; the answer side may carry slash-separated
        // variants.
        std::vector<std::vector<std::pair<std::string, std::string>>> lines;
        std::string line;
        while (std::getline(in, line)) {
            while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) line.pop_back();
            if (line.empty()) continue;
            auto tab = line.find('\t');
            if (tab == std::string::npos) tab = line.find(' ');
            if (tab == std::string::npos) {
                throw UsageError(file.string() + ": malformed dyad line: " + line);
            }
            const std::string word = line.substr(0, tab);
            const std::string answers = line.substr(tab + 1);
            std::vector<std::pair<std::string, std::string>> dyads;
            std::size_t start = 0;
            for (;;) {
                const auto slash = answers.find('/', start);
                const std::string answer =
                    answers.substr(start, slash == std::string::npos ? slash : slash - start);
                if (!answer.empty()) dyads.emplace_back(word, answer);
                if (slash == std::string::npos || variants == VariantPolicy::First) break;
                start = slash + 1;
            }
            if (!dyads.empty()) lines.push_back(std::move(dyads));
        }
        if (lines.empty()) {
            std::cerr << "warning: skipping empty category file " << file.string() << "\n";
            continue;
        }

        AnalogyCategory category;
        const std::string stem = file.stem().string();
        const auto space = stem.find(' ');
        category.id = space == std::string::npos ? stem : stem.substr(0, space);
        const auto lb = stem.find('[');
        const auto rb = stem.rfind(']');
        category.name = (lb != std::string::npos && rb != std::string::npos && rb > lb)
                            ? stem.substr(lb + 1, rb - lb - 1)
                            : stem;

        for (std::size_t i = 0; i < lines.size(); ++i) {
            for (std::size_t j = i + 1; j < lines.size(); ++j) {
                for (const auto& [t, s] : lines[i]) {
                    for (const auto& [t2, s2] : lines[j]) {
                        category.analogies.push_back({t, s, t2, s2});
                        if (ordered_pairs) category.analogies.push_back({t2, s2, t, s});
                    }
                }
            }
        }
        if (category.analogies.empty()) {
            std::cerr << "warning: category " << category.id << " has fewer than two dyads; skipped\n";
            continue;
        }
        categories.push_back(std::move(category));
    }
    if (categories.empty()) throw UsageError("no usable categories under: " + dir.string());
    return categories;
}

}  // namespace cooctk::bias
