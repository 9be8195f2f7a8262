#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "cooctk/cooccurrence.hpp"

namespace cooctk::dep {

/// Information quality ratio: mutual information of the co-occurrence joint
/// divided by its joint entropy, in [0, 1]. 0 log 0 terms vanish; a zero
/// joint entropy (single co-occurring pair type) is an error.
double iqr(const cooc::CoocModel& model);

struct ProfileCell {
  std::size_t k = 0;       // documents sampled
  int m = 0;               // window radius
  int replicate = 0;
  double iqr = 0.0;
  double tokens = 0.0;     // M_k for this sample
};

struct IqrProfile {
  std::vector<ProfileCell> cells;
  int replicates = 0;
};

struct ProfileConfig {
  std::vector<std::size_t> k_values;  // typically powers of two
  std::vector<int> m_values;
  int replicates = 5;
  std::uint64_t seed = 0;
  cooc::Boundary boundary = cooc::Boundary::Sentence;
  int threads = 1;
};

/// Samples k documents uniformly without replacement per (k, replicate) with
/// seeds derived from the master seed, counts co-occurrences per m, and
/// records the IQR. Deterministic for any thread count.
IqrProfile iqr_profile(const corpus::Corpus& corpus, const ProfileConfig& config);

struct SentenceStats {
  std::map<std::size_t, std::size_t> histogram;  // L -> S_L
  double total_tokens = 0.0;
  cooc::CapacityKind capacity = cooc::CapacityKind::Paper;
};

SentenceStats stats_of(const corpus::Corpus& corpus,
                       cooc::CapacityKind capacity = cooc::CapacityKind::Paper);

struct DependenceFit {
  double nu = 1.0;       // power-law exponent of the dependence-length density
  double m_max = 1.0;    // maximum dependence length
  double rho = 0.0;      // mean dependencies per word
  double residual = 0.0; // squared log-space residual of the accepted fit
  bool nu_identifiable = true;
};

/// Parametric IQR estimate: rho * [q_m G_m / (2m) + (1 - q_m) M_k / T_m] with
/// G_m = m^{1-nu} / m_max^{1-nu} clipped to 1 past m_max and
/// q_m = (T_m - T_{m-1}) / (2 M_k) clamped into [0, 1]. Returns 0 when the
/// capacity T_m is zero.
double dependence_model_predict(const DependenceFit& params, const SentenceStats& stats, double tokens,
                                int m);

/// Coarse grid search over (nu, m_max) with closed-form rho in log space,
/// then pattern-search refinement that never accepts a worse residual.
DependenceFit fit_dependence_model(const IqrProfile& profile, const SentenceStats& stats);

struct RatePoint {
  int m = 0;
  std::size_t k_doubled = 0;  // the doubled sample size (2k)
  double tokens = 0.0;        // mean M_{2k}; the abscissa of the power law
  double delta = 0.0;
  bool decayed = true;        // false flags a non-decreasing mean
};

/// delta_{2k,m} = (E[I_k] - E[I_2k]) / E[I_k] over consecutive doubling pairs.
std::vector<RatePoint> reduction_rates(const IqrProfile& profile);

struct ReductionFit {
  double gamma = 0.0;
  std::map<int, double> b_m;      // log10 proportionality constant per m
  std::size_t k_min = 0;          // first doubled sample size included
  double max_abs_residual = 0.0;  // log10 units over the accepted points
};

/// Least squares for the shared exponent gamma on log10 delta vs log10 M,
/// with each b_m pinned so the curve passes through the last empirical point
/// of its m. k_min is the smallest doubled sample size from which the
/// residuals fall below the threshold, unless overridden.
ReductionFit fit_reduction_power_law(const std::vector<RatePoint>& rates, double residual_threshold = 0.05,
                                     std::optional<std::size_t> k_min_override = std::nullopt);

struct BoundResult {
  int m = 0;
  double start_iqr = 0.0;
  double start_tokens = 0.0;
  double limit_iterated = 0.0;  // after the requested doubling updates
  double bound = 0.0;           // closed-form geometric-series lower bound
  bool positivity = false;      // tokens clear the positivity threshold
  int steps = 0;
};

/// Iterates I <- I (1 - delta) with delta = M^{-gamma} / 10^{b_m}, doubling M
/// each step, and evaluates the closed-form bound
/// I [1 - M_{2k}^{-gamma} / (10^{b_m} (1 - 2^{-gamma}))] plus its positivity
/// condition 10^{-b_m/gamma} (2^gamma - 1)^{-1/gamma} < M_k.
BoundResult extrapolate_limit(double start_iqr, double start_tokens, double gamma, double b_m, int m,
                              int steps = 1024);

/// Spearman rank correlation; shared ranks average over ties.
double spearman(const std::vector<double>& xs, const std::vector<double>& ys);

}  // namespace cooctk::dep
