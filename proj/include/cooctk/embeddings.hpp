#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cooctk/cooccurrence.hpp"
#include "cooctk/ifm.hpp"

namespace cooctk::embed {

enum class Objective {
  GloveClamped,       // sum W (u.v - log F)^2
  Glove,              // sum W (u.v + a_t + b_s - log F)^2
  SoftmaxNll,         // -sum F log softmax(u.v) by row
  SoftmaxRegression,  // sum W (u.v - log(F/f_t))^2
  SgnsExact,          // sum (u.v - sgns_target)^2, unit weights
  SgnsSampled,        // logistic objective with sampled negatives
};

Objective objective_from_string(std::string_view s);
std::string to_string(Objective objective);

enum class Solver { Auto, GradientDescent, ExactFullRank };

struct TrainConfig {
  Objective objective = Objective::GloveClamped;
  int dim = 16;
  double learning_rate = 0.5;
  int epochs = 2000;
  std::uint64_t seed = 0;
  /// Convergence: relative loss change below this ends training.
  double tolerance = 1e-9;
  bool halve_on_increase = true;
  Solver solver = Solver::Auto;
  double x_max = 100.0;          // GloVe weight knee
  double weight_exponent = 0.75; // GloVe weight power
  double alpha = 0.75;           // SGNS noise exponent
  int negatives = 5;             // SGNS negatives per positive
  std::size_t softmax_cap = 2000;
};

/// Aggregated counts in the shape every trainer consumes: positive entries in
/// (t, s) order, per-row sums f^m, and the matrix total.
struct Counts {
  std::size_t n = 0;
  std::vector<cooc::Entry> entries;
  std::vector<double> row_sums;
  double total = 0.0;
};

Counts make_counts(const cooc::CoocModel& model);
Counts make_counts(const ifm::IfmModel& model, std::size_t max_dense = 2000);

struct EmbeddingPair {
  Eigen::MatrixXd u;  // N x k
  Eigen::MatrixXd v;  // N x k
  Eigen::VectorXd a;  // size N for un-clamped GloVe, else empty
  Eigen::VectorXd b;
  Objective objective = Objective::GloveClamped;
  bool has_bias() const { return a.size() > 0; }
};

struct TrainResult {
  EmbeddingPair pair;
  std::vector<double> loss_curve;
  bool converged = false;
  int epochs_run = 0;
  bool exact_solution = false;
  double final_learning_rate = 0.0;
};

/// Full-batch gradient descent on the selected loss, deterministic for a
/// fixed seed. Solver::Auto short-circuits regression objectives at full rank
/// to the exact least-squares construction. Softmax NLL refuses vocabularies
/// past the configured cap; a non-finite loss aborts with the epoch index.
/// Softmax solutions are gauge-fixed to unit row mass
/// (sum_s exp(u_t.v_s) = 1, the conditional-probability normalization) when
/// full rank makes that expressible; the loss is invariant under the shift.
TrainResult train(const Counts& counts, const TrainConfig& config);
/// Deterministic hook for tests: training from explicit initial parameters.
TrainResult train_from_init(const Counts& counts, const TrainConfig& config, EmbeddingPair init);

/// Loss and its exact analytic gradients for the configured objective; the
/// gradient-check tests difference these against each other.
double loss_value(const Counts& counts, const TrainConfig& config, const EmbeddingPair& pair);

struct Gradients {
  Eigen::MatrixXd du, dv;
  Eigen::VectorXd da, db;
};
Gradients loss_gradients(const Counts& counts, const TrainConfig& config, const EmbeddingPair& pair);

/// Log conditional probabilities log(F/f^m_t) over positive entries.
cooc::SparseView softmax_target(const Counts& counts);

/// Per-objective factorization target over positive entries; cells outside
/// the support are NaN.
Eigen::MatrixXd target_matrix(const Counts& counts, const TrainConfig& config);

/// Exact full-rank placement: inner products u_t.v_s reproduce `target`
/// wherever it is finite (U = target with NaN zeroed, V = identity).
EmbeddingPair pair_from_target(const Eigen::MatrixXd& target, Objective tag);

/// Appendix-style ansatz at full rank: positive entries log(beta_t F/f^m_t),
/// non-occurring entries log((1-beta_t)/n_t). Every beta_t must lie in (0,1)
/// and every row must have at least one non-occurring column.
EmbeddingPair ansatz_pair(const Counts& counts, const std::vector<double>& beta);

struct FactorizationReport {
  double max_abs_error = 0.0;
  double mean_abs_error = 0.0;
  std::size_t n_entries = 0;
  /// max |softmax(u.v) - F/f^m| for the softmax NLL objective, else NaN.
  double stationarity_max = 0.0;
  std::string objective;
};

/// Compares inner products (plus biases when the objective has them) against
/// the objective's target over positive entries only.
FactorizationReport verify_factorization(const EmbeddingPair& pair, const Counts& counts,
                                         const TrainConfig& config);

enum class Side { UDiff, VDiff };

struct FrequencyRatioReport {
  double max_abs_deviation = 0.0;
  double mean_abs_deviation = 0.0;
  /// Largest across-probe standard deviation of the measured action; the
  /// constancy check.
  double max_std_across_probes = 0.0;
  std::size_t n_pairs = 0;
  std::size_t n_probes = 0;
};

/// For ordered pairs (t, s) and probe words w, measures (x_t - x_s).y_w with
/// x from the chosen side and y the other, and reports the deviation from
/// scale * log(f_s / f_t). The sign of `scale` selects the orientation of the
/// predicted ratio.
FrequencyRatioReport frequency_ratio_report(const EmbeddingPair& pair, const std::vector<double>& freqs,
                                            Side side, double scale, std::size_t max_pairs = 64,
                                            std::uint64_t seed = 0);

struct BiasFit {
  double gamma = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// Regression of the bias parameters a_t against log f^m_t; the slope is the
/// power-law exponent of e^{a_t} in f^m_t.
BiasFit dissect_unclamped_bias(const EmbeddingPair& pair, const std::vector<double>& freqs);

/// Text format: header `N k objective`, then one row per token:
/// token<TAB>u-values<TAB>v-values[<TAB>a<TAB>b].
void save_pair(const EmbeddingPair& pair, const std::vector<std::string>& tokens,
               const std::filesystem::path& path);
std::pair<EmbeddingPair, std::vector<std::string>> load_pair(const std::filesystem::path& path);

}  // namespace cooctk::embed
