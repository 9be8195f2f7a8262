#include "cooctk/dependence.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace cooctk::dep {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct CellStats {
    double mean_iqr = 0.0;
    double mean_tokens = 0.0;
};

// Replicate means per (m, k), deterministically ordered.
std::map<std::pair<int, std::size_t>, CellStats> cell_means(const IqrProfile& profile) {
    std::map<std::pair<int, std::size_t>, std::pair<CellStats, std::size_t>> acc;
    for (const auto& cell : profile.cells) {
        auto& slot = acc[{cell.m, cell.k}];
        slot.first.mean_iqr += cell.iqr;
        slot.first.mean_tokens += cell.tokens;
        slot.second += 1;
    }
    std::map<std::pair<int, std::size_t>, CellStats> out;
    for (auto& [key, slot] : acc) {
        slot.first.mean_iqr /= static_cast<double>(slot.second);
        slot.first.mean_tokens /= static_cast<double>(slot.second);
        out[key] = slot.first;
    }
    return out;
}

double fit_residual(const DependenceFit& params, const SentenceStats& stats,
                    const std::map<std::pair<int, std::size_t>, CellStats>& cells, double* rho_out) {
    // rho enters the model linearly, so its log has a closed form given
    // (nu, m_max): the mean log-ratio of measurement to bracket.
    double log_rho_sum = 0.0;
    std::size_t usable = 0;
    DependenceFit unit = params;
    unit.rho = 1.0;
    for (const auto& [key, cell] : cells) {
        const double bracket = dependence_model_predict(unit, stats, cell.mean_tokens, key.first);
        if (!(bracket > 0.0) || !(cell.mean_iqr > 0.0)) continue;
        log_rho_sum += std::log(cell.mean_iqr) - std::log(bracket);
        usable += 1;
    }
    if (usable == 0) return kInf;
    const double log_rho = log_rho_sum / static_cast<double>(usable);

    DependenceFit candidate = params;
    candidate.rho = std::exp(log_rho);
    double residual = 0.0;
    for (const auto& [key, cell] : cells) {
        const double predicted = dependence_model_predict(candidate, stats, cell.mean_tokens, key.first);
        if (!(predicted > 0.0) || !(cell.mean_iqr > 0.0)) continue;
        const double r = std::log(cell.mean_iqr) - std::log(predicted);
        residual += r * r;
    }
    if (rho_out != nullptr) *rho_out = candidate.rho;
    return residual;
}

}  // namespace

double iqr(const cooc::CoocModel& model) {
    if (model.n_entries() == 0) throw UsageError("IQR of an empty co-occurrence model");
    const double total = model.total();
    // Sorted iteration keeps the floating-point sums independent of hash-map
    // layout, so parallel and sequential builds agree bitwise.
    double mutual_information = 0.0;
    double joint_entropy = 0.0;
    for (const auto& e : model.sorted_entries()) {
        const double p = e.count / total;
        const double pt = model.marginal(e.t) / total;
        const double ps = model.marginal(e.s) / total;
        mutual_information += p * std::log(p / (pt * ps));
        joint_entropy -= p * std::log(p);
    }
    if (!(joint_entropy > 0.0)) {
        throw ComputeError("zero joint entropy: co-occurrence mass sits on a single pair type");
    }
    // KL non-negativity can be violated by roundoff only.
    mutual_information = std::max(mutual_information, 0.0);
    return std::min(mutual_information / joint_entropy, 1.0);
}

SentenceStats stats_of(const corpus::Corpus& corpus, cooc::CapacityKind capacity) {
    SentenceStats stats;
    stats.histogram = corpus.sentence_length_histogram();
    stats.total_tokens = static_cast<double>(corpus.total_tokens());
    stats.capacity = capacity;
    return stats;
}

IqrProfile iqr_profile(const corpus::Corpus& corpus, const ProfileConfig& config) {
    const std::size_t n_docs = corpus.documents().size();
    if (config.k_values.empty() || config.m_values.empty()) {
        throw UsageError("profile needs at least one k and one m");
    }
    if (config.replicates < 1) throw UsageError("profile needs at least one replicate");
    for (std::size_t k : config.k_values) {
        if (k == 0 || k > n_docs) {
            throw UsageError("infeasible sample size k=" + std::to_string(k) + " for " +
                             std::to_string(n_docs) + " documents");
        }
    }
    for (int m : config.m_values) {
        if (m < 1) throw UsageError("window radius must be >= 1");
    }

    struct Job {
        std::size_t k;
        int replicate;
    };
    std::vector<Job> jobs;
    for (std::size_t k : config.k_values) {
        for (int r = 0; r < config.replicates; ++r) jobs.push_back({k, r});
    }
    std::vector<std::vector<ProfileCell>> results(jobs.size());

    parallel_indexed(jobs.size(), config.threads, [&](std::size_t idx) {
        const auto [k, replicate] = jobs[idx];
        // The document subset depends only on (seed, k, replicate); every m
        // shares it.
        Rng rng(mix_seed(config.seed, k, static_cast<std::uint64_t>(replicate)));
        std::vector<std::size_t> order(n_docs);
        std::iota(order.begin(), order.end(), 0u);
        for (std::size_t i = 0; i < k; ++i) {
            const std::size_t j = i + rng.next_below(n_docs - i);
            std::swap(order[i], order[j]);
        }
        std::vector<const corpus::Document*> docs;
        docs.reserve(k);
        double tokens = 0.0;
        for (std::size_t i = 0; i < k; ++i) {
            docs.push_back(&corpus.documents()[order[i]]);
            tokens += static_cast<double>(corpus.documents()[order[i]].tokens.size());
        }
        for (int m : config.m_values) {
            const auto model =
                cooc::count_documents(docs, corpus.vocab().size(), {m, config.boundary}, 1);
            results[idx].push_back({k, m, replicate, iqr(model), tokens});
        }
    });

    IqrProfile profile;
    profile.replicates = config.replicates;
    for (const auto& chunk : results) {
        profile.cells.insert(profile.cells.end(), chunk.begin(), chunk.end());
    }
    return profile;
}

double dependence_model_predict(const DependenceFit& params, const SentenceStats& stats, double tokens,
                                int m) {
    if (m < 1) throw UsageError("window radius must be >= 1");
    if (!(tokens > 0.0)) throw UsageError("token count must be positive");
    const double t_m = cooc::total_capacity(stats.histogram, static_cast<std::uint64_t>(m), stats.capacity);
    if (!(t_m > 0.0)) return 0.0;
    const double t_prev =
        m == 1 ? 0.0 : cooc::total_capacity(stats.histogram, static_cast<std::uint64_t>(m - 1), stats.capacity);

    double g_m = 1.0;
    if (static_cast<double>(m) <= params.m_max) {
        g_m = std::pow(static_cast<double>(m), 1.0 - params.nu) / std::pow(params.m_max, 1.0 - params.nu);
    }
    double q_m = (t_m - t_prev) / (2.0 * tokens);
    q_m = std::clamp(q_m, 0.0, 1.0);
    return params.rho * (q_m * g_m / (2.0 * m) + (1.0 - q_m) * tokens / t_m);
}

DependenceFit fit_dependence_model(const IqrProfile& profile, const SentenceStats& stats) {
    const auto cells = cell_means(profile);
    std::vector<int> ms;
    for (const auto& [key, cell] : cells) {
        if (ms.empty() || ms.back() != key.first) ms.push_back(key.first);
    }
    if (ms.size() < 4) throw UsageError("dependence fit needs at least 4 distinct window sizes");
    const int m_hi = *std::max_element(ms.begin(), ms.end());

    DependenceFit best;
    best.residual = kInf;
    std::vector<double> nu_grid;
    for (double nu = 0.05; nu <= 4.0 + 1e-12; nu += 0.05) nu_grid.push_back(nu);
    const double m_max_hi = std::max(2.0 * m_hi, 40.0);

    for (double m_max = 1.0; m_max <= m_max_hi + 1e-12; m_max += 1.0) {
        for (double nu : nu_grid) {
            DependenceFit candidate{nu, m_max, 1.0, 0.0, true};
            double rho = 0.0;
            const double residual = fit_residual(candidate, stats, cells, &rho);
            if (residual < best.residual) {
                best = DependenceFit{nu, m_max, rho, residual, true};
            }
        }
    }
    if (!std::isfinite(best.residual)) throw ComputeError("dependence fit produced no finite residual");

    // The exponent carries no signal when the measured profile is flat in m
    // (rho alone explains it) or when the accepted cutoff precedes every
    // observed window so every G_m is clipped.
    std::map<int, std::pair<double, std::size_t>> per_m;
    for (const auto& [key, cell] : cells) {
        per_m[key.first].first += cell.mean_iqr;
        per_m[key.first].second += 1;
    }
    double lo_mean = kInf;
    double hi_mean = -kInf;
    for (const auto& [m, acc] : per_m) {
        const double mean = acc.first / static_cast<double>(acc.second);
        lo_mean = std::min(lo_mean, mean);
        hi_mean = std::max(hi_mean, mean);
    }
    const int m_lo = *std::min_element(ms.begin(), ms.end());
    best.nu_identifiable =
        hi_mean > 0.0 && (hi_mean - lo_mean) / hi_mean >= 0.05 && best.m_max > static_cast<double>(m_lo);

    // Pattern-search refinement; only improvements are accepted, so the
    // residual never exceeds the best grid point.
    double step_nu = 0.05;
    double step_m = 1.0;
    while (step_nu > 1e-5 || step_m > 1e-4) {
        bool improved = false;
        const double trial_nu[] = {best.nu - step_nu, best.nu + step_nu};
        const double trial_m[] = {best.m_max - step_m, best.m_max + step_m};
        for (double nu : trial_nu) {
            if (nu <= 0.0) continue;
            DependenceFit candidate{nu, best.m_max, 1.0, 0.0, best.nu_identifiable};
            double rho = 0.0;
            const double residual = fit_residual(candidate, stats, cells, &rho);
            if (residual < best.residual) {
                best.nu = nu;
                best.rho = rho;
                best.residual = residual;
                improved = true;
            }
        }
        for (double m_max : trial_m) {
            if (m_max < 1.0) continue;
            DependenceFit candidate{best.nu, m_max, 1.0, 0.0, best.nu_identifiable};
            double rho = 0.0;
            const double residual = fit_residual(candidate, stats, cells, &rho);
            if (residual < best.residual) {
                best.m_max = m_max;
                best.rho = rho;
                best.residual = residual;
                improved = true;
            }
        }
        if (!improved) {
            step_nu *= 0.5;
            step_m *= 0.5;
        }
    }
    return best;
}

std::vector<RatePoint> reduction_rates(const IqrProfile& profile) {
    const auto cells = cell_means(profile);
    std::vector<RatePoint> rates;
    for (const auto& [key, cell] : cells) {
        const auto doubled = cells.find({key.first, key.second * 2});
        if (doubled == cells.end()) continue;
        if (!(cell.mean_iqr > 0.0)) continue;
        RatePoint point;
        point.m = key.first;
        point.k_doubled = key.second * 2;
        point.tokens = doubled->second.mean_tokens;
        point.delta = (cell.mean_iqr - doubled->second.mean_iqr) / cell.mean_iqr;
        point.decayed = point.delta > 0.0;
        rates.push_back(point);
    }
    if (rates.empty()) throw UsageError("profile has no consecutive doubling sample sizes");
    return rates;
}

ReductionFit fit_reduction_power_law(const std::vector<RatePoint>& rates, double residual_threshold,
                                     std::optional<std::size_t> k_min_override) {
    std::vector<RatePoint> usable;
    for (const auto& p : rates) {
        if (p.decayed && p.delta > 0.0 && p.tokens > 0.0) usable.push_back(p);
    }
    if (usable.empty()) throw UsageError("no decaying reduction rates to fit");

    std::vector<std::size_t> candidates;
    for (const auto& p : usable) candidates.push_back(p.k_doubled);
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    if (k_min_override) candidates = {*k_min_override};

    auto attempt = [&](std::size_t k_min, ReductionFit* out) -> bool {
        std::vector<RatePoint> pts;
        for (const auto& p : usable) {
            if (p.k_doubled >= k_min) pts.push_back(p);
        }
        // Anchor per m: the largest-sample point, through which the fitted
        // curve must pass.
        std::map<int, RatePoint> anchors;
        std::map<int, std::size_t> per_m;
        for (const auto& p : pts) {
            per_m[p.m] += 1;
            auto it = anchors.find(p.m);
            if (it == anchors.end() || p.tokens > it->second.tokens) anchors[p.m] = p;
        }
        for (const auto& [m, count] : per_m) {
            if (count < 3) return false;
        }
        double sxx = 0.0;
        double sxy = 0.0;
        for (const auto& p : pts) {
            const auto& anchor = anchors[p.m];
            const double x = std::log10(p.tokens) - std::log10(anchor.tokens);
            const double y = std::log10(p.delta) - std::log10(anchor.delta);
            sxx += x * x;
            sxy += x * y;
        }
        if (!(sxx > 0.0)) return false;
        ReductionFit fit;
        fit.gamma = -sxy / sxx;
        fit.k_min = k_min;
        for (const auto& [m, anchor] : anchors) {
            fit.b_m[m] = -fit.gamma * std::log10(anchor.tokens) - std::log10(anchor.delta);
        }
        fit.max_abs_residual = 0.0;
        for (const auto& p : pts) {
            const double predicted = -fit.gamma * std::log10(p.tokens) - fit.b_m[p.m];
            fit.max_abs_residual = std::max(fit.max_abs_residual, std::abs(std::log10(p.delta) - predicted));
        }
        *out = fit;
        return true;
    };

    ReductionFit last_good;
    bool have_fit = false;
    for (std::size_t k_min : candidates) {
        ReductionFit fit;
        if (!attempt(k_min, &fit)) continue;
        have_fit = true;
        last_good = fit;
        if (fit.max_abs_residual <= residual_threshold) return fit;
    }
    if (!have_fit) throw UsageError("insufficient points for the reduction power law (need 3 per window)");
    return last_good;  // best effort past the threshold; residual reported
}

BoundResult extrapolate_limit(double start_iqr, double start_tokens, double gamma, double b_m, int m,
                              int steps) {
    if (!(start_tokens > 0.0)) throw UsageError("start token count must be positive");
    if (steps < 1) throw UsageError("need at least one doubling step");
    BoundResult result;
    result.m = m;
    result.start_iqr = start_iqr;
    result.start_tokens = start_tokens;
    result.steps = steps;

    const double pow10_b = std::pow(10.0, b_m);
    double value = start_iqr;
    double tokens = start_tokens;
    for (int step = 1; step <= steps; ++step) {
        tokens *= 2.0;
        const double delta = std::pow(tokens, -gamma) / pow10_b;
        value *= 1.0 - delta;
        if (!std::isfinite(value)) {
            throw ComputeError("non-finite extrapolation at step " + std::to_string(step));
        }
    }
    result.limit_iterated = value;

    if (gamma > 0.0) {
        const double series = std::pow(2.0 * start_tokens, -gamma) / (pow10_b * (1.0 - std::pow(2.0, -gamma)));
        result.bound = start_iqr * (1.0 - series);
        const double threshold = std::pow(10.0, -b_m / gamma) * std::pow(std::pow(2.0, gamma) - 1.0, -1.0 / gamma);
        result.positivity = threshold < start_tokens;
    } else {
        result.bound = -kInf;
        result.positivity = false;
    }
    return result;
}

double spearman(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size() || xs.size() < 2) throw UsageError("spearman needs matched samples of size >= 2");
    auto ranks = [](const std::vector<double>& values) {
        const std::size_t n = values.size();
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), 0u);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
        std::vector<double> rank(n);
        std::size_t i = 0;
        while (i < n) {
            std::size_t j = i;
            while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
            const double shared = 0.5 * static_cast<double>(i + j) + 1.0;
            for (std::size_t l = i; l <= j; ++l) rank[order[l]] = shared;
            i = j + 1;
        }
        return rank;
    };
    const auto rx = ranks(xs);
    const auto ry = ranks(ys);
    double mean_x = 0.0;
    double mean_y = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        mean_x += rx[i];
        mean_y += ry[i];
    }
    mean_x /= static_cast<double>(rx.size());
    mean_y /= static_cast<double>(ry.size());
    double sxx = 0.0;
    double syy = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mean_x) * (ry[i] - mean_y);
        sxx += (rx[i] - mean_x) * (rx[i] - mean_x);
        syy += (ry[i] - mean_y) * (ry[i] - mean_y);
    }
    if (!(sxx > 0.0) || !(syy > 0.0)) throw ComputeError("spearman undefined for constant ranks");
    return sxy / std::sqrt(sxx * syy);
}

}  // namespace cooctk::dep
