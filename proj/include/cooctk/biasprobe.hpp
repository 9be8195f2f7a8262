#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cooctk/corpus.hpp"

namespace cooctk::bias {

/// One analogy x : y with dyads x = (t, s) and y = (t2, s2).
struct Analogy {
  std::string t, s, t2, s2;
};

struct AnalogyCategory {
  std::string id;
  std::string name;
  std::vector<Analogy> analogies;
};

/// Type -> count with the cached corpus-wide max log frequency that
/// normalizes the dissonance. Keys are case-folded when fold_case is set, to
/// match corpus tokenization; duplicate keys sum.
class FrequencyTable {
 public:
  static FrequencyTable from_tsv(const std::filesystem::path& path, bool fold_case = true);
  static FrequencyTable from_corpus(const corpus::Corpus& corpus);
  static FrequencyTable from_counts(const std::vector<std::pair<std::string, double>>& counts,
                                    bool fold_case = true);

  std::optional<double> count(std::string_view type) const;
  double max_log() const { return max_log_; }
  std::size_t size() const { return counts_.size(); }

 private:
  std::map<std::string, double, std::less<>> counts_;
  double max_log_ = 0.0;
  bool fold_case_ = true;
};

/// Dissonance |log(f_t f_s2 / (f_s f_t2))| / max_l log f_l, clamped into
/// [0, 1]. Throws UsageError naming any out-of-vocabulary word, ComputeError
/// on a degenerate (max_log = 0) table.
double dissonance(const Analogy& analogy, const FrequencyTable& freqs);

struct CategoryResult {
  double d = 0.0;
  std::size_t included = 0;
  std::size_t dropped = 0;
};

/// Frequency-weighted average of in-vocabulary dissonances; weight of an
/// analogy is the sum of its four counts. OOV analogies are dropped, never
/// imputed; a fully-OOV category is an error.
CategoryResult category_average(const AnalogyCategory& category, const FrequencyTable& freqs);

struct CategoryComparison {
  std::string id;
  std::string name;
  std::optional<double> d_a;
  std::optional<double> d_b;
  std::optional<double> diff;  // d_a - d_b when both present
  std::size_t dropped_a = 0;
  std::size_t dropped_b = 0;
  std::string error_a;
  std::string error_b;
};

struct DissonanceReport {
  std::vector<CategoryComparison> rows;
  bool two_corpora = false;
};

/// Per-category D for one or two corpora; per-category failures are recorded
/// in the row, not fatal.
DissonanceReport compare_corpora(const std::vector<AnalogyCategory>& categories, const FrequencyTable& a,
                                 const FrequencyTable* b = nullptr);

enum class VariantPolicy { First, All };

/// Loads a BATS-layout directory: category files of `word<TAB>answer[/...]`
/// lines, analogies formed from pairs of distinct lines (unordered and
/// deduplicated by default). Empty files are skipped with a warning on
/// stderr.
std::vector<AnalogyCategory> load_bats(const std::filesystem::path& dir,
                                       VariantPolicy variants = VariantPolicy::First,
                                       bool ordered_pairs = false);

}  // namespace cooctk::bias
