#include "cooctk/ifm.hpp"

#include <algorithm>

namespace cooctk::ifm {

IfmModel::IfmModel(std::vector<double> freqs, double scale, int radius)
    : freqs_(std::move(freqs)), scale_(scale), radius_(radius) {
    if (freqs_.empty()) throw UsageError("IFM needs a non-empty frequency vector");
    mass_ = 0.0;
    for (double f : freqs_) {
        if (!(f > 0.0)) throw UsageError("IFM frequencies must be positive");
        mass_ += f;
    }
}

IfmModel IfmModel::from_unigram(std::vector<double> freqs, int radius) {
    if (radius < 1) throw UsageError("IFM window radius must be >= 1");
    return IfmModel(std::move(freqs), 2.0 * radius, radius);
}

IfmModel IfmModel::from_inflated(std::vector<double> marginals, int radius) {
    if (radius < 1) throw UsageError("IFM window radius must be >= 1");
    return IfmModel(std::move(marginals), 1.0, radius);
}

double IfmModel::entry(std::uint32_t t, std::uint32_t s) const {
    if (t >= freqs_.size() || s >= freqs_.size()) throw UsageError("IFM entry outside type range");
    return scale_ * freqs_[t] * freqs_[s] / mass_;
}

double IfmModel::marginal(std::uint32_t t) const {
    if (t >= freqs_.size()) throw UsageError("IFM marginal outside type range");
    return scale_ * freqs_[t];
}

double IfmModel::total() const { return scale_ * mass_; }

std::vector<double> IfmModel::row(std::uint32_t t) const {
    if (t >= freqs_.size()) throw UsageError("IFM row outside type range");
    std::vector<double> values(freqs_.size());
    const double lead = scale_ * freqs_[t] / mass_;
    for (std::size_t s = 0; s < freqs_.size(); ++s) values[s] = lead * freqs_[s];
    return values;
}

cooc::CoocModel IfmModel::to_cooc_model(std::size_t max_dense) const {
    const std::size_t n = freqs_.size();
    if (n > max_dense) {
        throw UsageError("dense IFM export capped at " + std::to_string(max_dense) + " types, got " +
                         std::to_string(n));
    }
    std::vector<cooc::Entry> entries;
    entries.reserve(n * n);
    for (std::uint32_t t = 0; t < n; ++t) {
        const double lead = scale_ * freqs_[t] / mass_;
        for (std::uint32_t s = 0; s < n; ++s) {
            entries.push_back({t, s, lead * freqs_[s]});
        }
    }
    return cooc::CoocModel::from_entries(n, entries, {radius_, cooc::Boundary::Sentence});
}

std::vector<ScatterPoint> deviation_scatter(const cooc::CoocModel& empirical, const IfmModel& model,
                                            std::uint32_t t) {
    if (t >= model.n_types() || (empirical.n_types() > 0 && t >= empirical.n_types())) {
        throw UsageError("deviation_scatter: unknown target word id " + std::to_string(t));
    }
    std::vector<ScatterPoint> points;
    const auto n = static_cast<std::uint32_t>(model.n_types());
    const bool in_empirical = t < empirical.n_types();
    for (std::uint32_t s = 0; s < n; ++s) {
        const double observed = in_empirical && s < empirical.n_types() ? empirical.at(t, s) : 0.0;
        const double expected = model.entry(t, s);
        if (observed == 0.0 && expected == 0.0) continue;
        points.push_back({s, observed + 1.0, expected + 1.0});
    }
    return points;
}

}  // namespace cooctk::ifm
