#pragma once

#include <cstdint>
#include <vector>

#include "cooctk/cooccurrence.hpp"

namespace cooctk::ifm {

/// Independent frequencies model: closed-form co-occurrence expectations from
/// unigram statistics. Built either from raw frequencies f (expectation
/// 2m f_t f_s / M, marginal 2m f_t) or from m-inflated marginals f^m
/// (expectation f^m_t f^m_s / M_F, marginal f^m_t). Exposed as a lazy entry
/// and row generator; dense export is capped at desk scale.
class IfmModel {
 public:
  static IfmModel from_unigram(std::vector<double> freqs, int radius);
  static IfmModel from_inflated(std::vector<double> marginals, int radius = 1);

  std::size_t n_types() const { return freqs_.size(); }
  int radius() const { return radius_; }
  bool inflated() const { return scale_ == 1.0; }

  /// Expected count for the pair (t, s); fractional values are normal.
  double entry(std::uint32_t t, std::uint32_t s) const;
  /// Analytic row sum: 2m f_t (raw) or f^m_t (inflated).
  double marginal(std::uint32_t t) const;
  /// Analytic matrix total: 2mM (raw) or M_F (inflated).
  double total() const;
  std::vector<double> row(std::uint32_t t) const;
  const std::vector<double>& base_freqs() const { return freqs_; }

  /// Dense materialization for trainers; refuses vocabularies beyond the cap.
  cooc::CoocModel to_cooc_model(std::size_t max_dense = 2000) const;

 private:
  IfmModel(std::vector<double> freqs, double scale, int radius);

  std::vector<double> freqs_;
  double mass_ = 0.0;   // sum of freqs_
  double scale_ = 1.0;  // 2m for the raw variant, 1 for the inflated one
  int radius_ = 1;
};

struct ScatterPoint {
  std::uint32_t s = 0;
  double empirical_plus1 = 1.0;
  double model_plus1 = 1.0;
};

/// Fig.-1-style data: one record per type with either value nonzero, both
/// offset by one so non-occurrent pairs survive a log-log plot.
std::vector<ScatterPoint> deviation_scatter(const cooc::CoocModel& empirical, const IfmModel& model,
                                            std::uint32_t t);

}  // namespace cooctk::ifm
