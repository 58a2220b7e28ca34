#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace q2sim::bench {

struct TrialStats {
    std::size_t trials = 0;
    double mean = 0.0;
    /// Sample standard deviation (n - 1 denominator); 0 for a single trial.
    double std = 0.0;
    /// Half-width of the normal-approximation confidence interval.
    double ci95_margin = 0.0;
};

/// Two-sided normal quantile: z with P(|Z| <= z) = confidence.
inline double normal_quantile(double confidence) {
    if (!(confidence > 0.0 && confidence < 1.0)) throw std::invalid_argument("confidence must be in (0, 1)");
    if (confidence == 0.95) return 1.96;
    double lo = 0.0, hi = 10.0;
    for (int k = 0; k < 200; ++k) {
        const double mid = 0.5 * (lo + hi);
        (std::erf(mid / std::sqrt(2.0)) < confidence ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

inline TrialStats summarize(const std::vector<double>& xs, double confidence = 0.95) {
    TrialStats s;
    s.trials = xs.size();
    if (xs.empty()) return s;
    double sum = 0.0;
    for (double x : xs) sum += x;
    s.mean = sum / static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - s.mean) * (x - s.mean);
        s.std = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    }
    s.ci95_margin = normal_quantile(confidence) * s.std / std::sqrt(static_cast<double>(xs.size()));
    return s;
}

struct CiOptions {
    double confidence = 0.95;
    double margin_frac = 0.02;
    std::size_t min_trials = 5;
    std::size_t max_trials = 1000;

    void validate() const {
        if (!(margin_frac > 0.0)) throw std::invalid_argument("margin_frac must be > 0");
        if (min_trials < 2) throw std::invalid_argument("min_trials must be >= 2");
        if (max_trials < min_trials) throw std::invalid_argument("max_trials < min_trials");
        normal_quantile(confidence);
    }
};

using Sample = std::map<std::string, double>;

struct CiResult {
    std::map<std::string, TrialStats> metrics;
    std::map<std::string, std::vector<double>> samples;
    std::size_t trials = 0;
    bool converged = false;

    const TrialStats& at(const std::string& metric) const { return metrics.at(metric); }
};

inline bool margin_ok(const TrialStats& s, double margin_frac) {
    return s.ci95_margin <= margin_frac * std::abs(s.mean);
}

/// Runs trials one after another until every metric's confidence margin is
/// within margin_frac of its mean, or max_trials is reached (converged =
/// false). Every trial must report the same metric names.
inline CiResult repeat_until_ci(const std::function<Sample()>& runner, const CiOptions& opt = {}) {
    opt.validate();
    CiResult r;
    while (r.trials < opt.max_trials) {
        const Sample s = runner();
        if (s.empty()) throw std::invalid_argument("runner returned no metrics");
        if (r.trials > 0 && s.size() != r.samples.size()) throw std::invalid_argument("runner changed its metric set");
        for (const auto& [k, v] : s) {
            if (r.trials > 0 && !r.samples.count(k)) throw std::invalid_argument("runner changed its metric set");
            r.samples[k].push_back(v);
        }
        ++r.trials;
        if (r.trials < opt.min_trials) continue;
        bool all = true;
        for (const auto& [k, xs] : r.samples) {
            r.metrics[k] = summarize(xs, opt.confidence);
            all = all && margin_ok(r.metrics[k], opt.margin_frac);
        }
        if (all) {
            r.converged = true;
            return r;
        }
    }
    for (const auto& [k, xs] : r.samples) r.metrics[k] = summarize(xs, opt.confidence);
    return r;
}

}  // namespace q2sim::bench
