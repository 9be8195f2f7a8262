#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <unordered_map>
#include <vector>

#include "cooctk/corpus.hpp"

namespace cooctk::cooc {

enum class Boundary { Sentence, Document };

Boundary boundary_from_string(std::string_view s);
std::string to_string(Boundary b);

struct WindowConfig {
  int radius = 1;
  Boundary boundary = Boundary::Sentence;
};

struct Entry {
  std::uint32_t t = 0;
  std::uint32_t s = 0;
  double count = 0.0;
};

/// Sparse symmetric co-occurrence model F^m with marginals f^m and total
/// M_F^m. Counts are doubles because model-valued (fractional) matrices flow
/// through the same interface. Immutable after construction.
class CoocModel {
 public:
  CoocModel() = default;
  /// Entries are taken as given (a full symmetric set, both (t,s) and (s,t)
  /// for t != s); marginals and total are recomputed.
  static CoocModel from_entries(std::size_t n_types, const std::vector<Entry>& entries,
                                WindowConfig window = {});

  double at(std::uint32_t t, std::uint32_t s) const;
  double marginal(std::uint32_t t) const { return marginals_.at(t); }
  const std::vector<double>& marginals() const { return marginals_; }
  double total() const { return total_; }
  std::size_t n_types() const { return n_types_; }
  std::size_t n_entries() const { return counts_.size(); }
  const WindowConfig& window() const { return window_; }

  /// Entries in (t, s) order; the deterministic iteration for output and
  /// order-sensitive reductions.
  std::vector<Entry> sorted_entries() const;

  template <class F>
  void for_each(F&& fn) const {
    for (const auto& [key, count] : counts_) {
      fn(static_cast<std::uint32_t>(key >> 32), static_cast<std::uint32_t>(key & 0xffffffffu), count);
    }
  }

  bool has_vocab() const { return !vocab_.freqs().empty(); }
  const corpus::Vocabulary& vocab() const { return vocab_; }
  void attach_vocab(corpus::Vocabulary vocab) { vocab_ = std::move(vocab); }

 private:
  friend CoocModel count_documents(const std::vector<const corpus::Document*>& docs, std::size_t n_types,
                                   WindowConfig window, int threads);

  void finalize();

  std::size_t n_types_ = 0;
  WindowConfig window_;
  std::unordered_map<std::uint64_t, double> counts_;
  std::vector<double> marginals_;
  double total_ = 0.0;
  corpus::Vocabulary vocab_;
};

/// Counts every ordered in-window pair: position j contributes to F[t_i, t_j]
/// whenever 0 < |i - j| <= m and, under sentence bounding, i and j share a
/// sentence. Parallel counting merges deterministically.
CoocModel count_cooccurrences(const corpus::Corpus& corpus, WindowConfig window, int threads = 1);

/// Counting over an explicit document subset (sampling support).
CoocModel count_documents(const std::vector<const corpus::Document*>& docs, std::size_t n_types,
                          WindowConfig window, int threads = 1);

/// Per-sentence co-occurrence capacity T_{L,m} = (min(m,L)-1)(2L-min(m,L)).
/// This matches brute-force ordered-pair counting at radius m-1, not m;
/// exact_sentence_capacity gives the radius-m count.
std::uint64_t sentence_capacity(std::uint64_t sentence_len, std::uint64_t radius);

/// Ordered in-window pairs at radius m: m(2L-m-1) for m < L, else L(L-1).
std::uint64_t exact_sentence_capacity(std::uint64_t sentence_len, std::uint64_t radius);

enum class CapacityKind { Paper, Exact };

/// T_m summed over a sentence-length histogram; T_0 = 0.
double total_capacity(const std::map<std::size_t, std::size_t>& histogram, std::uint64_t radius,
                      CapacityKind kind = CapacityKind::Paper);
double total_capacity(const corpus::Corpus& corpus, std::uint64_t radius,
                      CapacityKind kind = CapacityKind::Paper);

struct SparseView {
  std::size_t n_types = 0;
  std::vector<Entry> entries;  // sorted by (t, s)
};

/// Row-conditional probabilities F[t,s]/f^m_t over positive entries.
SparseView conditional_matrix(const CoocModel& model);

/// Natural-log PMI log(F[t,s] M_F / (f^m_t f^m_s)) over positive entries.
SparseView pmi_matrix(const CoocModel& model);

/// TSV of `t<TAB>s<TAB>count` (ids, sorted) plus a JSON sidecar with the
/// window, totals, vocab hash and, when present, the vocabulary itself.
void save_cooc(const CoocModel& model, const std::filesystem::path& tsv_path,
               const std::filesystem::path& meta_path);
CoocModel load_cooc(const std::filesystem::path& tsv_path, const std::filesystem::path& meta_path);

}  // namespace cooctk::cooc
