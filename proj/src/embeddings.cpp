#include "cooctk/embeddings.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace cooctk::embed {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

bool is_regression(Objective objective) {
    switch (objective) {
        case Objective::GloveClamped:
        case Objective::Glove:
        case Objective::SoftmaxRegression:
        case Objective::SgnsExact:
            return true;
        default:
            return false;
    }
}

double glove_weight(double count, const TrainConfig& config) {
    return std::min(std::pow(count / config.x_max, config.weight_exponent), 1.0);
}

double entry_weight(double count, const TrainConfig& config) {
    switch (config.objective) {
        case Objective::GloveClamped:
        case Objective::Glove:
        case Objective::SoftmaxRegression:
            return glove_weight(count, config);
        default:
            return 1.0;
    }
}

// log of the alpha-power normalizer sum_s (f^m_s)^alpha.
double log_malpha(const Counts& counts, double alpha) {
    double total = 0.0;
    for (double f : counts.row_sums) {
        if (f > 0.0) total += std::pow(f, alpha);
    }
    if (!(total > 0.0)) throw ComputeError("SGNS noise normalizer is zero");
    return std::log(total);
}

double entry_target(const Counts& counts, const TrainConfig& config, double cached_log_malpha,
                    std::uint32_t t, std::uint32_t s, double count) {
    switch (config.objective) {
        case Objective::GloveClamped:
        case Objective::Glove:
            return std::log(count);
        case Objective::SoftmaxNll:
        case Objective::SoftmaxRegression:
            return std::log(count / counts.row_sums[t]);
        case Objective::SgnsExact:
        case Objective::SgnsSampled:
            return -(std::log(count / counts.row_sums[t]) + cached_log_malpha -
                     config.alpha * std::log(counts.row_sums[s])) +
                   std::log(static_cast<double>(config.negatives));
    }
    throw ComputeError("unhandled objective");
}

Eigen::VectorXd noise_distribution(const Counts& counts, double alpha) {
    Eigen::VectorXd p(counts.n);
    double total = 0.0;
    for (std::size_t i = 0; i < counts.n; ++i) {
        const double f = counts.row_sums[i];
        p[static_cast<long>(i)] = f > 0.0 ? std::pow(f, alpha) : 0.0;
        total += p[static_cast<long>(i)];
    }
    if (!(total > 0.0)) throw ComputeError("SGNS noise distribution is empty");
    return p / total;
}

void validate(const Counts& counts, const TrainConfig& config) {
    if (counts.n == 0 || counts.entries.empty()) throw UsageError("cannot train on empty counts");
    if (config.dim < 1 || static_cast<std::size_t>(config.dim) > counts.n) {
        throw UsageError("dimension must lie in [1, n_types]");
    }
    if (config.epochs < 1) throw UsageError("epochs must be >= 1");
    if (config.alpha < 0.0 || config.alpha > 1.0) throw UsageError("alpha must lie in [0, 1]");
    if (config.negatives < 1) throw UsageError("negatives must be >= 1");
    if (config.objective == Objective::SoftmaxNll && counts.n > config.softmax_cap) {
        throw UsageError("softmax-nll vocabulary cap exceeded: " + std::to_string(counts.n) + " > " +
                         std::to_string(config.softmax_cap));
    }
}

EmbeddingPair init_pair(const Counts& counts, const TrainConfig& config) {
    const auto n = static_cast<long>(counts.n);
    const long k = config.dim;
    EmbeddingPair pair;
    pair.objective = config.objective;
    pair.u.resize(n, k);
    pair.v.resize(n, k);
    Rng rng(config.seed);
    const double half = 0.5 / static_cast<double>(k);
    // Fill order is part of the reproducibility contract: U rows, V rows,
    // then biases.
    for (long i = 0; i < n; ++i) {
        for (long j = 0; j < k; ++j) pair.u(i, j) = rng.next_in(-half, half);
    }
    for (long i = 0; i < n; ++i) {
        for (long j = 0; j < k; ++j) pair.v(i, j) = rng.next_in(-half, half);
    }
    if (config.objective == Objective::Glove) {
        pair.a.resize(n);
        pair.b.resize(n);
        for (long i = 0; i < n; ++i) pair.a[i] = rng.next_in(-half, half);
        for (long i = 0; i < n; ++i) pair.b[i] = rng.next_in(-half, half);
    }
    return pair;
}

double step_normalizer(const Counts& counts, const TrainConfig& config) {
    switch (config.objective) {
        case Objective::GloveClamped:
        case Objective::Glove:
        case Objective::SoftmaxRegression: {
            double sum = 0.0;
            for (const auto& e : counts.entries) sum += glove_weight(e.count, config);
            return std::max(sum, std::numeric_limits<double>::min());
        }
        case Objective::SgnsExact:
            return static_cast<double>(counts.entries.size());
        case Objective::SoftmaxNll:
            return std::max(counts.total, std::numeric_limits<double>::min());
        case Objective::SgnsSampled:
            return std::max(counts.total * (1.0 + config.negatives), std::numeric_limits<double>::min());
    }
    throw ComputeError("unhandled objective");
}

TrainResult run_sgns_sampled(const Counts& counts, const TrainConfig& config, EmbeddingPair pair);

}  // namespace

Objective objective_from_string(std::string_view s) {
    if (s == "glove-clamped") return Objective::GloveClamped;
    if (s == "glove") return Objective::Glove;
    if (s == "softmax-nll") return Objective::SoftmaxNll;
    if (s == "softmax-regression") return Objective::SoftmaxRegression;
    if (s == "sgns-exact") return Objective::SgnsExact;
    if (s == "sgns-sampled") return Objective::SgnsSampled;
    throw UsageError("unknown objective: " + std::string(s));
}

std::string to_string(Objective objective) {
    switch (objective) {
        case Objective::GloveClamped: return "glove-clamped";
        case Objective::Glove: return "glove";
        case Objective::SoftmaxNll: return "softmax-nll";
        case Objective::SoftmaxRegression: return "softmax-regression";
        case Objective::SgnsExact: return "sgns-exact";
        case Objective::SgnsSampled: return "sgns-sampled";
    }
    throw ComputeError("unhandled objective");
}

Counts make_counts(const cooc::CoocModel& model) {
    Counts counts;
    counts.n = model.n_types();
    counts.entries = model.sorted_entries();
    counts.row_sums = model.marginals();
    counts.total = model.total();
    return counts;
}

Counts make_counts(const ifm::IfmModel& model, std::size_t max_dense) {
    if (model.n_types() > max_dense) {
        throw UsageError("dense IFM counts capped at " + std::to_string(max_dense) + " types");
    }
    Counts counts;
    counts.n = model.n_types();
    counts.entries.reserve(counts.n * counts.n);
    for (std::uint32_t t = 0; t < counts.n; ++t) {
        for (std::uint32_t s = 0; s < counts.n; ++s) {
            counts.entries.push_back({t, s, model.entry(t, s)});
        }
    }
    counts.row_sums.resize(counts.n);
    for (std::uint32_t t = 0; t < counts.n; ++t) counts.row_sums[t] = model.marginal(t);
    counts.total = model.total();
    return counts;
}

double loss_value(const Counts& counts, const TrainConfig& config, const EmbeddingPair& pair) {
    const auto n = static_cast<long>(counts.n);
    if (is_regression(config.objective)) {
        const double lma =
            config.objective == Objective::SgnsExact ? log_malpha(counts, config.alpha) : 0.0;
        double loss = 0.0;
        const bool biased = config.objective == Objective::Glove;
        for (const auto& e : counts.entries) {
            double z = pair.u.row(e.t).dot(pair.v.row(e.s));
            if (biased) z += pair.a[e.t] + pair.b[e.s];
            const double r = z - entry_target(counts, config, lma, e.t, e.s, e.count);
            loss += entry_weight(e.count, config) * r * r;
        }
        return loss;
    }
    const Eigen::MatrixXd z = pair.u * pair.v.transpose();
    if (config.objective == Objective::SoftmaxNll) {
        double loss = 0.0;
        for (long t = 0; t < n; ++t) {
            const double f = counts.row_sums[static_cast<std::size_t>(t)];
            if (!(f > 0.0)) continue;
            const double zmax = z.row(t).maxCoeff();
            const double lse = zmax + std::log((z.row(t).array() - zmax).exp().sum());
            loss += f * lse;
        }
        for (const auto& e : counts.entries) loss -= e.count * z(e.t, e.s);
        return loss;
    }
    if (config.objective == Objective::SgnsSampled) {
        const Eigen::VectorXd noise = noise_distribution(counts, config.alpha);
        double loss = 0.0;
        for (const auto& e : counts.entries) loss += e.count * softplus(z(e.t, e.s));
        for (long t = 0; t < n; ++t) {
            const double f = counts.row_sums[static_cast<std::size_t>(t)];
            if (!(f > 0.0)) continue;
            double row = 0.0;
            for (long l = 0; l < n; ++l) row += noise[l] * softplus(-z(t, l));
            loss += config.negatives * f * row;
        }
        return loss;
    }
    throw ComputeError("unhandled objective");
}

Gradients loss_gradients(const Counts& counts, const TrainConfig& config, const EmbeddingPair& pair) {
    const auto n = static_cast<long>(counts.n);
    const long k = pair.u.cols();
    Gradients g;
    g.du = Eigen::MatrixXd::Zero(n, k);
    g.dv = Eigen::MatrixXd::Zero(n, k);
    if (pair.has_bias()) {
        g.da = Eigen::VectorXd::Zero(n);
        g.db = Eigen::VectorXd::Zero(n);
    }

    if (is_regression(config.objective)) {
        const double lma =
            config.objective == Objective::SgnsExact ? log_malpha(counts, config.alpha) : 0.0;
        const bool biased = config.objective == Objective::Glove;
        for (const auto& e : counts.entries) {
            double z = pair.u.row(e.t).dot(pair.v.row(e.s));
            if (biased) z += pair.a[e.t] + pair.b[e.s];
            const double r = z - entry_target(counts, config, lma, e.t, e.s, e.count);
            const double lead = 2.0 * entry_weight(e.count, config) * r;
            g.du.row(e.t) += lead * pair.v.row(e.s);
            g.dv.row(e.s) += lead * pair.u.row(e.t);
            if (biased) {
                g.da[e.t] += lead;
                g.db[e.s] += lead;
            }
        }
        return g;
    }

    const Eigen::MatrixXd z = pair.u * pair.v.transpose();
    Eigen::MatrixXd gz(n, n);
    if (config.objective == Objective::SoftmaxNll) {
        for (long t = 0; t < n; ++t) {
            const double f = counts.row_sums[static_cast<std::size_t>(t)];
            if (!(f > 0.0)) {
                gz.row(t).setZero();
                continue;
            }
            const double zmax = z.row(t).maxCoeff();
            Eigen::ArrayXd ex = (z.row(t).array() - zmax).exp();
            gz.row(t) = (f / ex.sum()) * ex.matrix();
        }
        for (const auto& e : counts.entries) gz(e.t, e.s) -= e.count;
    } else if (config.objective == Objective::SgnsSampled) {
        const Eigen::VectorXd noise = noise_distribution(counts, config.alpha);
        for (long t = 0; t < n; ++t) {
            const double f = counts.row_sums[static_cast<std::size_t>(t)];
            for (long l = 0; l < n; ++l) {
                gz(t, l) = f > 0.0 ? -config.negatives * f * noise[l] * sigmoid(-z(t, l)) : 0.0;
            }
        }
        for (const auto& e : counts.entries) gz(e.t, e.s) += e.count * sigmoid(z(e.t, e.s));
    } else {
        throw ComputeError("unhandled objective");
    }
    g.du = gz * pair.v;
    g.dv = gz.transpose() * pair.u;
    return g;
}

cooc::SparseView softmax_target(const Counts& counts) {
    cooc::SparseView view;
    view.n_types = counts.n;
    view.entries = counts.entries;
    for (auto& e : view.entries) {
        const double f = counts.row_sums[e.t];
        if (!(f > 0.0)) throw ComputeError("zero marginal for a row with entries");
        e.count = std::log(e.count / f);
    }
    return view;
}

Eigen::MatrixXd target_matrix(const Counts& counts, const TrainConfig& config) {
    const auto n = static_cast<long>(counts.n);
    Eigen::MatrixXd target = Eigen::MatrixXd::Constant(n, n, kNan);
    const double lma =
        config.objective == Objective::SgnsExact || config.objective == Objective::SgnsSampled
            ? log_malpha(counts, config.alpha)
            : 0.0;
    for (const auto& e : counts.entries) {
        target(e.t, e.s) = entry_target(counts, config, lma, e.t, e.s, e.count);
    }
    return target;
}

EmbeddingPair pair_from_target(const Eigen::MatrixXd& target, Objective tag) {
    if (target.rows() != target.cols()) throw UsageError("pair_from_target needs a square target");
    EmbeddingPair pair;
    pair.objective = tag;
    pair.u = target.unaryExpr([](double x) { return std::isfinite(x) ? x : 0.0; });
    pair.v = Eigen::MatrixXd::Identity(target.rows(), target.cols());
    if (tag == Objective::Glove) {
        pair.a = Eigen::VectorXd::Zero(target.rows());
        pair.b = Eigen::VectorXd::Zero(target.rows());
    }
    return pair;
}

EmbeddingPair ansatz_pair(const Counts& counts, const std::vector<double>& beta) {
    const auto n = static_cast<long>(counts.n);
    if (beta.size() != counts.n) throw UsageError("ansatz needs one beta per row");
    for (double b : beta) {
        if (!(b > 0.0 && b < 1.0)) throw UsageError("every beta must lie in (0, 1)");
    }
    std::vector<std::size_t> positives(counts.n, 0);
    for (const auto& e : counts.entries) positives[e.t] += 1;

    EmbeddingPair pair;
    pair.objective = Objective::SoftmaxNll;
    pair.u.resize(n, n);
    for (long t = 0; t < n; ++t) {
        const auto row = static_cast<std::size_t>(t);
        const std::size_t absent = counts.n - positives[row];
        if (positives[row] > 0 && absent == 0) {
            throw UsageError("ansatz row " + std::to_string(t) +
                             " is fully positive; no non-occurring column to carry 1-beta");
        }
        const double fill = absent > 0
                                ? std::log((1.0 - beta[row]) / static_cast<double>(absent))
                                : 0.0;
        pair.u.row(t).setConstant(fill);
    }
    for (const auto& e : counts.entries) {
        pair.u(e.t, e.s) = std::log(beta[e.t] * e.count / counts.row_sums[e.t]);
    }
    pair.v = Eigen::MatrixXd::Identity(n, n);
    return pair;
}

namespace {

// The softmax loss is exactly invariant under per-row shifts of u_t v^T, so
// gradient descent cannot pin them. The factorization's conditional-
// probability reading fixes the gauge at unit row mass,
// sum_s exp(u_t.v_s) = 1, which the parameters can express exactly only at
// full rank (V a = 1 must be solvable).
void normalize_softmax_gauge(EmbeddingPair& pair) {
    const long n = pair.u.rows();
    if (pair.u.cols() != n) return;
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(pair.v);
    if (qr.rank() < n) return;
    const Eigen::VectorXd a = qr.solve(ones);
    if ((pair.v * a - ones).cwiseAbs().maxCoeff() > 1e-8) return;
    const Eigen::MatrixXd z = pair.u * pair.v.transpose();
    Eigen::VectorXd shift(n);
    for (long t = 0; t < n; ++t) {
        const double zmax = z.row(t).maxCoeff();
        shift[t] = -(zmax + std::log((z.row(t).array() - zmax).exp().sum()));
    }
    pair.u += shift * a.transpose();
}

TrainResult run_gd(const Counts& counts, const TrainConfig& config, EmbeddingPair pair) {
    TrainResult result;
    double lr = config.learning_rate;
    const double normalizer = step_normalizer(counts, config);
    double prev = loss_value(counts, config, pair);
    if (!std::isfinite(prev)) throw ComputeError("non-finite loss at initialization");
    result.loss_curve.push_back(prev);

    EmbeddingPair backup = pair;
    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        result.epochs_run = epoch;
        const Gradients g = loss_gradients(counts, config, pair);
        const double step = lr / normalizer;
        backup = pair;
        pair.u -= step * g.du;
        pair.v -= step * g.dv;
        if (pair.has_bias()) {
            pair.a -= step * g.da;
            pair.b -= step * g.db;
        }
        const double cur = loss_value(counts, config, pair);
        if (!std::isfinite(cur)) {
            throw ComputeError("loss diverged (non-finite) at epoch " + std::to_string(epoch));
        }
        if (cur > prev && config.halve_on_increase) {
            pair = backup;
            lr *= 0.5;
            result.loss_curve.push_back(prev);
            if (lr < 1e-30) {
                result.converged = true;
                break;
            }
            continue;
        }
        result.loss_curve.push_back(cur);
        if (std::abs(prev - cur) <= config.tolerance * std::max(1.0, std::abs(prev))) {
            prev = cur;
            result.converged = true;
            break;
        }
        prev = cur;
    }
    if (config.objective == Objective::SoftmaxNll) normalize_softmax_gauge(pair);
    result.pair = std::move(pair);
    result.final_learning_rate = lr;
    return result;
}

TrainResult run_sgns_sampled(const Counts& counts, const TrainConfig& config, EmbeddingPair pair) {
    TrainResult result;
    const Eigen::VectorXd noise = noise_distribution(counts, config.alpha);
    std::vector<double> cumulative(counts.n);
    double acc = 0.0;
    for (std::size_t i = 0; i < counts.n; ++i) {
        acc += noise[static_cast<long>(i)];
        cumulative[i] = acc;
    }
    Rng rng(mix_seed(config.seed, 0x5347u));
    auto draw_noise = [&]() -> std::uint32_t {
        const double u = rng.next_double() * acc;
        const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
        return static_cast<std::uint32_t>(std::min<std::size_t>(it - cumulative.begin(), counts.n - 1));
    };

    const double mean_count = counts.total / static_cast<double>(counts.entries.size());
    const double step = config.learning_rate / std::max(1.0, mean_count);
    double prev = loss_value(counts, config, pair);
    result.loss_curve.push_back(prev);
    Eigen::RowVectorXd u_old(pair.u.cols());
    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        result.epochs_run = epoch;
        for (const auto& e : counts.entries) {
            // Positive pair: pull toward the negated-PMI convergence point.
            const double zp = pair.u.row(e.t).dot(pair.v.row(e.s));
            const double gp = e.count * sigmoid(zp);
            u_old = pair.u.row(e.t);
            pair.u.row(e.t) -= step * gp * pair.v.row(e.s);
            pair.v.row(e.s) -= step * gp * u_old;
            for (int j = 0; j < config.negatives; ++j) {
                const std::uint32_t l = draw_noise();
                const double zn = pair.u.row(e.t).dot(pair.v.row(l));
                const double gn = -e.count * sigmoid(-zn);
                u_old = pair.u.row(e.t);
                pair.u.row(e.t) -= step * gn * pair.v.row(l);
                pair.v.row(l) -= step * gn * u_old;
            }
        }
        const double cur = loss_value(counts, config, pair);
        if (!std::isfinite(cur)) {
            throw ComputeError("loss diverged (non-finite) at epoch " + std::to_string(epoch));
        }
        result.loss_curve.push_back(cur);
        if (std::abs(prev - cur) <= config.tolerance * std::max(1.0, std::abs(prev))) {
            prev = cur;
            result.converged = true;
            break;
        }
        prev = cur;
    }
    result.pair = std::move(pair);
    result.final_learning_rate = config.learning_rate;
    return result;
}

}  // namespace

TrainResult train_from_init(const Counts& counts, const TrainConfig& config, EmbeddingPair init) {
    validate(counts, config);
    if (config.objective == Objective::SgnsSampled) {
        return run_sgns_sampled(counts, config, std::move(init));
    }
    return run_gd(counts, config, std::move(init));
}

TrainResult train(const Counts& counts, const TrainConfig& config) {
    validate(counts, config);
    const bool full_rank = static_cast<std::size_t>(config.dim) == counts.n;
    bool exact = false;
    if (config.solver == Solver::ExactFullRank) {
        if (!is_regression(config.objective)) {
            throw UsageError("exact solver applies to regression objectives only");
        }
        if (!full_rank) throw UsageError("exact solver requires dim == n_types");
        exact = true;
    } else if (config.solver == Solver::Auto) {
        exact = is_regression(config.objective) && full_rank;
    }

    if (exact) {
        TrainResult result;
        result.pair = pair_from_target(target_matrix(counts, config), config.objective);
        result.loss_curve.push_back(loss_value(counts, config, result.pair));
        result.converged = true;
        result.exact_solution = true;
        result.epochs_run = 0;
        result.final_learning_rate = config.learning_rate;
        return result;
    }
    return train_from_init(counts, config, init_pair(counts, config));
}

FactorizationReport verify_factorization(const EmbeddingPair& pair, const Counts& counts,
                                         const TrainConfig& config) {
    FactorizationReport report;
    report.objective = to_string(config.objective);
    report.stationarity_max = kNan;
    const double lma =
        config.objective == Objective::SgnsExact || config.objective == Objective::SgnsSampled
            ? log_malpha(counts, config.alpha)
            : 0.0;
    const bool biased = config.objective == Objective::Glove && pair.has_bias();
    double sum = 0.0;
    for (const auto& e : counts.entries) {
        double z = pair.u.row(e.t).dot(pair.v.row(e.s));
        if (biased) z += pair.a[e.t] + pair.b[e.s];
        const double err = std::abs(z - entry_target(counts, config, lma, e.t, e.s, e.count));
        report.max_abs_error = std::max(report.max_abs_error, err);
        sum += err;
    }
    report.n_entries = counts.entries.size();
    report.mean_abs_error = report.n_entries ? sum / static_cast<double>(report.n_entries) : 0.0;

    if (config.objective == Objective::SoftmaxNll) {
        const auto n = static_cast<long>(counts.n);
        const Eigen::MatrixXd z = pair.u * pair.v.transpose();
        Eigen::MatrixXd phi(n, n);
        for (long t = 0; t < n; ++t) {
            const double zmax = z.row(t).maxCoeff();
            Eigen::ArrayXd ex = (z.row(t).array() - zmax).exp();
            phi.row(t) = (ex / ex.sum()).matrix();
        }
        Eigen::MatrixXd conditional = Eigen::MatrixXd::Zero(n, n);
        for (const auto& e : counts.entries) conditional(e.t, e.s) = e.count / counts.row_sums[e.t];
        double worst = 0.0;
        for (long t = 0; t < n; ++t) {
            if (!(counts.row_sums[static_cast<std::size_t>(t)] > 0.0)) continue;
            worst = std::max(worst, (phi.row(t) - conditional.row(t)).cwiseAbs().maxCoeff());
        }
        report.stationarity_max = worst;
    }
    return report;
}

FrequencyRatioReport frequency_ratio_report(const EmbeddingPair& pair, const std::vector<double>& freqs,
                                            Side side, double scale, std::size_t max_pairs,
                                            std::uint64_t seed) {
    const auto n = static_cast<std::size_t>(pair.u.rows());
    if (freqs.size() != n) throw UsageError("frequency vector does not match the vocabulary");
    if (n < 3) throw UsageError("frequency-ratio report needs at least 3 types");
    for (double f : freqs) {
        if (!(f > 0.0)) throw UsageError("frequencies must be positive");
    }

    std::vector<std::pair<std::uint32_t, std::uint32_t>> pairs;
    const std::size_t all_pairs = n * (n - 1);
    if (all_pairs <= max_pairs) {
        for (std::uint32_t p = 0; p < n; ++p) {
            for (std::uint32_t q = 0; q < n; ++q) {
                if (p != q) pairs.emplace_back(p, q);
            }
        }
    } else {
        Rng rng(mix_seed(seed, 0xf2a9u));
        std::set<std::pair<std::uint32_t, std::uint32_t>> seen;
        while (seen.size() < max_pairs) {
            const auto p = static_cast<std::uint32_t>(rng.next_below(n));
            const auto q = static_cast<std::uint32_t>(rng.next_below(n));
            if (p != q) seen.emplace(p, q);
        }
        pairs.assign(seen.begin(), seen.end());
    }

    FrequencyRatioReport report;
    report.n_pairs = pairs.size();
    double dev_sum = 0.0;
    std::size_t dev_count = 0;
    std::vector<double> actions;
    for (const auto& [p, q] : pairs) {
        const Eigen::RowVectorXd diff =
            side == Side::UDiff ? (pair.u.row(p) - pair.u.row(q)).eval() : (pair.v.row(p) - pair.v.row(q)).eval();
        const Eigen::MatrixXd& probes = side == Side::UDiff ? pair.v : pair.u;
        const double predicted = scale * std::log(freqs[q] / freqs[p]);
        actions.clear();
        for (std::uint32_t w = 0; w < n; ++w) {
            if (w == p || w == q) continue;
            const double action = diff.dot(probes.row(w));
            const double deviation = std::abs(action - predicted);
            report.max_abs_deviation = std::max(report.max_abs_deviation, deviation);
            dev_sum += deviation;
            ++dev_count;
            actions.push_back(action);
        }
        report.n_probes = actions.size();
        if (actions.size() > 1) {
            double mean = 0.0;
            for (double action : actions) mean += action;
            mean /= static_cast<double>(actions.size());
            double var = 0.0;
            for (double action : actions) var += (action - mean) * (action - mean);
            var /= static_cast<double>(actions.size());
            report.max_std_across_probes = std::max(report.max_std_across_probes, std::sqrt(var));
        }
    }
    report.mean_abs_deviation = dev_count ? dev_sum / static_cast<double>(dev_count) : 0.0;
    return report;
}

BiasFit dissect_unclamped_bias(const EmbeddingPair& pair, const std::vector<double>& freqs) {
    if (!pair.has_bias()) throw UsageError("pair has no bias parameters to dissect");
    const auto n = static_cast<std::size_t>(pair.a.size());
    if (freqs.size() != n) throw UsageError("frequency vector does not match the vocabulary");
    double mean_x = 0.0;
    double mean_y = 0.0;
    std::vector<double> xs(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(freqs[i] > 0.0)) throw UsageError("frequencies must be positive");
        xs[i] = std::log(freqs[i]);
        mean_x += xs[i];
        mean_y += pair.a[static_cast<long>(i)];
    }
    mean_x /= static_cast<double>(n);
    mean_y /= static_cast<double>(n);
    double sxx = 0.0;
    double sxy = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = xs[i] - mean_x;
        const double dy = pair.a[static_cast<long>(i)] - mean_y;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (sxx <= static_cast<double>(n) * 1e-20 * std::max(1.0, mean_x * mean_x)) {
        throw UsageError("degenerate (constant) frequencies");
    }
    BiasFit fit;
    fit.gamma = sxy / sxx;
    fit.intercept = mean_y - fit.gamma * mean_x;
    fit.r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return fit;
}

void save_pair(const EmbeddingPair& pair, const std::vector<std::string>& tokens,
               const std::filesystem::path& path) {
    const auto n = static_cast<std::size_t>(pair.u.rows());
    const auto k = static_cast<std::size_t>(pair.u.cols());
    if (!tokens.empty() && tokens.size() != n) throw UsageError("token list does not match matrix rows");
    std::ostringstream out;
    out << n << ' ' << k << ' ' << to_string(pair.objective) << '\n';
    for (std::size_t i = 0; i < n; ++i) {
        if (tokens.empty()) {
            out << 't' << i;
        } else {
            out << tokens[i];
        }
        out << '\t';
        for (std::size_t j = 0; j < k; ++j) {
            if (j) out << ' ';
            out << fmt_double(pair.u(static_cast<long>(i), static_cast<long>(j)));
        }
        out << '\t';
        for (std::size_t j = 0; j < k; ++j) {
            if (j) out << ' ';
            out << fmt_double(pair.v(static_cast<long>(i), static_cast<long>(j)));
        }
        if (pair.has_bias()) {
            out << '\t' << fmt_double(pair.a[static_cast<long>(i)]) << '\t'
                << fmt_double(pair.b[static_cast<long>(i)]);
        }
        out << '\n';
    }
    write_text_file(path, out.str());
}

std::pair<EmbeddingPair, std::vector<std::string>> load_pair(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open embedding file: " + path.string());
    std::string header;
    if (!std::getline(in, header)) throw UsageError("empty embedding file: " + path.string());
    std::istringstream hs(header);
    std::size_t n = 0;
    std::size_t k = 0;
    std::string objective;
    if (!(hs >> n >> k >> objective)) throw UsageError("malformed embedding header: " + header);

    EmbeddingPair pair;
    pair.objective = objective_from_string(objective);
    pair.u.resize(static_cast<long>(n), static_cast<long>(k));
    pair.v.resize(static_cast<long>(n), static_cast<long>(k));
    const bool biased = pair.objective == Objective::Glove;
    if (biased) {
        pair.a.resize(static_cast<long>(n));
        pair.b.resize(static_cast<long>(n));
    }
    std::vector<std::string> tokens(n);
    std::string line;
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::getline(in, line)) throw UsageError("truncated embedding file: " + path.string());
        std::vector<std::string> fields;
        std::size_t start = 0;
        for (;;) {
            const auto tab = line.find('\t', start);
            fields.push_back(line.substr(start, tab == std::string::npos ? tab : tab - start));
            if (tab == std::string::npos) break;
            start = tab + 1;
        }
        const std::size_t expected = biased ? 5 : 3;
        if (fields.size() != expected) {
            throw UsageError("embedding row " + std::to_string(i + 1) + " has " +
                             std::to_string(fields.size()) + " fields, expected " + std::to_string(expected));
        }
        tokens[i] = fields[0];
        std::istringstream us(fields[1]);
        std::istringstream vs(fields[2]);
        for (std::size_t j = 0; j < k; ++j) {
            if (!(us >> pair.u(static_cast<long>(i), static_cast<long>(j)))) {
                throw UsageError("malformed u-values in embedding row " + std::to_string(i + 1));
            }
            if (!(vs >> pair.v(static_cast<long>(i), static_cast<long>(j)))) {
                throw UsageError("malformed v-values in embedding row " + std::to_string(i + 1));
            }
        }
        if (biased) {
            pair.a[static_cast<long>(i)] = std::stod(fields[3]);
            pair.b[static_cast<long>(i)] = std::stod(fields[4]);
        }
    }
    return {std::move(pair), std::move(tokens)};
}

}  // namespace cooctk::embed
