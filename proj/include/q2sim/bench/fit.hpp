#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace q2sim::bench {

/// One (N, Y) observation. sigma is only read by weighted fits.
struct FitPoint {
    double n = 0.0;
    double y = 0.0;
    double sigma = 0.0;
};

enum class Region { Low, Mid, High, All };
enum class Model { PowerLaw, Exponential };

inline constexpr std::string_view region_name(Region r) {
    switch (r) {
        case Region::Low: return "low";
        case Region::Mid: return "mid";
        case Region::High: return "high";
        case Region::All: return "all";
    }
    return "?";
}

inline Region parse_region(std::string_view s) {
    for (Region r : {Region::Low, Region::Mid, Region::High, Region::All}) {
        if (region_name(r) == s) return r;
    }
    throw std::invalid_argument("unknown region '" + std::string(s) + "' (low, mid, high, all)");
}

inline constexpr std::string_view model_name(Model m) { return m == Model::PowerLaw ? "power_law" : "exponential"; }

/// low = {8,16,32}, mid = {32,64,128}, high = N >= 128; regions share their
/// boundary sizes.
inline bool in_region(double n, Region r) {
    switch (r) {
        case Region::Low: return n >= 8 && n <= 32;
        case Region::Mid: return n >= 32 && n <= 128;
        case Region::High: return n >= 128;
        case Region::All: return true;
    }
    return false;
}

inline std::vector<FitPoint> select_region(const std::vector<FitPoint>& pts, Region r) {
    std::vector<FitPoint> out;
    for (const auto& p : pts) {
        if (in_region(p.n, r)) out.push_back(p);
    }
    return out;
}

struct LinearFit {
    double intercept = 0.0;
    double slope = 0.0;
    double r_squared = 1.0;
    /// Residual sum of squares, weighted when weights are given.
    double rss = 0.0;
    double sst = 0.0;
    /// Zero variance in y: r_squared is set to 1 by convention.
    bool degenerate = false;
};

/// Least squares y = a + b x, optionally weighted.
inline LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y,
                            const std::vector<double>& w = {}) {
    const std::size_t m = x.size();
    if (y.size() != m || (!w.empty() && w.size() != m)) throw std::invalid_argument("linear_fit: size mismatch");
    if (m < 2) throw std::invalid_argument("linear_fit: need at least 2 points");
    auto wt = [&](std::size_t i) { return w.empty() ? 1.0 : w[i]; };
    double sw = 0, sx = 0, sy = 0;
    for (std::size_t i = 0; i < m; ++i) {
        if (!(wt(i) > 0.0) || !std::isfinite(wt(i))) throw std::invalid_argument("linear_fit: weights must be positive");
        sw += wt(i);
        sx += wt(i) * x[i];
        sy += wt(i) * y[i];
    }
    const double mx = sx / sw, my = sy / sw;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < m; ++i) {
        sxx += wt(i) * (x[i] - mx) * (x[i] - mx);
        sxy += wt(i) * (x[i] - mx) * (y[i] - my);
        syy += wt(i) * (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0) throw std::invalid_argument("linear_fit: all x equal");
    LinearFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    for (std::size_t i = 0; i < m; ++i) {
        const double r = y[i] - f.intercept - f.slope * x[i];
        f.rss += wt(i) * r * r;
    }
    f.sst = syy;
    // Relative threshold so rounding noise on constant data still counts as flat.
    const double scale = std::max(1.0, my * my) * sw;
    if (syy <= 1e-24 * scale) {
        f.degenerate = true;
        f.r_squared = 1.0;
    } else {
        f.r_squared = 1.0 - f.rss / syy;
    }
    return f;
}

struct FitResult {
    /// Intercept in natural-log space.
    double alpha = 0.0;
    double beta = 0.0;
    double r_squared = 0.0;
    Region region = Region::All;
    Model model = Model::PowerLaw;
    double aic = 0.0;
    double bic = 0.0;
    std::size_t points = 0;
    bool degenerate = false;
    double rss = 0.0;
};

namespace detail {

// k = 3: intercept, slope and residual variance.
inline void information_criteria(FitResult& f, double rss, std::size_t m) {
    const double md = static_cast<double>(m);
    const double var = std::max(rss / md, std::numeric_limits<double>::min());
    const double log_l = -0.5 * md * (std::log(2.0 * std::numbers::pi * var) + 1.0);
    f.aic = 2.0 * 3.0 - 2.0 * log_l;
    f.bic = 3.0 * std::log(md) - 2.0 * log_l;
}

inline FitResult fit_model(const std::vector<FitPoint>& all, Region region, Model model, bool weighted,
                           std::size_t min_points) {
    const auto pts = select_region(all, region);
    if (pts.empty()) throw std::invalid_argument("region " + std::string(region_name(region)) + " is empty");
    if (pts.size() < min_points) {
        throw std::invalid_argument("need at least " + std::to_string(min_points) + " points in region " +
                                    std::string(region_name(region)));
    }
    std::vector<double> x, y, w;
    for (const auto& p : pts) {
        if (!(p.y > 0.0)) throw std::invalid_argument("fit needs Y > 0 (got " + std::to_string(p.y) + ")");
        if (model == Model::PowerLaw && !(p.n > 0.0)) throw std::invalid_argument("power-law fit needs N > 0");
        x.push_back(model == Model::PowerLaw ? std::log(p.n) : p.n);
        y.push_back(std::log(p.y));
        if (weighted) {
            if (!(p.sigma > 0.0)) throw std::invalid_argument("weighted fit needs sigma > 0 on every point");
            // Delta method: sd(ln Y) = sigma / Y.
            const double s = p.sigma / p.y;
            w.push_back(1.0 / (s * s));
        }
    }
    const LinearFit lf = linear_fit(x, y, w);
    FitResult f;
    f.alpha = lf.intercept;
    f.beta = lf.slope;
    f.r_squared = lf.r_squared;
    f.region = region;
    f.model = model;
    f.points = pts.size();
    f.degenerate = lf.degenerate;
    f.rss = lf.rss;
    information_criteria(f, lf.rss, pts.size());
    return f;
}

}  // namespace detail

/// ln Y = alpha + beta ln N by least squares.
inline FitResult fit_power_law(const std::vector<FitPoint>& pts, Region region = Region::All, bool weighted = false) {
    return detail::fit_model(pts, region, Model::PowerLaw, weighted, 3);
}

/// ln Y = alpha + beta N by least squares.
inline FitResult fit_exponential(const std::vector<FitPoint>& pts, Region region = Region::All,
                                 bool weighted = false) {
    return detail::fit_model(pts, region, Model::Exponential, weighted, 3);
}

/// Per-N maximum of repeated observations, for upper-envelope fits.
inline std::vector<FitPoint> envelope(const std::vector<FitPoint>& samples) {
    std::map<double, double> best;
    for (const auto& p : samples) {
        auto [it, fresh] = best.emplace(p.n, p.y);
        if (!fresh) it->second = std::max(it->second, p.y);
    }
    std::vector<FitPoint> out;
    for (const auto& [n, y] : best) out.push_back({n, y, 0.0});
    return out;
}

struct PiecewiseFit {
    FitResult below;
    FitResult above;
    double breakpoint = 0.0;
    /// 1 - (pooled RSS of both fits) / (total sum of squares of ln Y).
    double combined_r_squared = 0.0;
};

inline PiecewiseFit fit_piecewise(const std::vector<FitPoint>& pts, double breakpoint) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& p : pts) {
        lo = std::min(lo, p.n);
        hi = std::max(hi, p.n);
    }
    if (pts.empty() || breakpoint <= lo || breakpoint > hi) {
        throw std::invalid_argument("breakpoint " + std::to_string(breakpoint) + " is outside the data range");
    }
    std::vector<FitPoint> below, above;
    for (const auto& p : pts) (p.n < breakpoint ? below : above).push_back(p);
    if (below.size() < 3 || above.size() < 3) {
        throw std::invalid_argument("piecewise fit needs at least 3 points on each side of the breakpoint");
    }
    PiecewiseFit r;
    r.breakpoint = breakpoint;
    r.below = fit_power_law(below);
    r.above = fit_power_law(above);
    double mean = 0.0;
    for (const auto& p : pts) mean += std::log(p.y);
    mean /= static_cast<double>(pts.size());
    double sst = 0.0;
    for (const auto& p : pts) sst += (std::log(p.y) - mean) * (std::log(p.y) - mean);
    const double rss = r.below.rss + r.above.rss;
    r.combined_r_squared = sst > 0.0 ? 1.0 - rss / sst : 1.0;
    return r;
}

struct ModelComparison {
    FitResult power_law;
    FitResult exponential;
    /// Exponential minus power law; positive favours the power law.
    double delta_aic = 0.0;
    double delta_bic = 0.0;
    Model preferred = Model::PowerLaw;
};

inline ModelComparison compare_models(const std::vector<FitPoint>& pts, Region region = Region::All) {
    ModelComparison c;
    c.power_law = detail::fit_model(pts, region, Model::PowerLaw, false, 4);
    c.exponential = detail::fit_model(pts, region, Model::Exponential, false, 4);
    c.delta_aic = c.exponential.aic - c.power_law.aic;
    c.delta_bic = c.exponential.bic - c.power_law.bic;
    c.preferred = c.delta_aic >= 0.0 ? Model::PowerLaw : Model::Exponential;
    return c;
}

struct ConstPowerFit {
    double a = 0.0;
    double b = 0.0;
    double k = 0.0;
    double r_squared = 0.0;
    bool converged = false;
    /// Flat data: k cannot be identified.
    bool degenerate = false;
};

namespace detail {

struct ConstPowerAt {
    double a, b, rss, sst;
    bool degenerate;
};

inline ConstPowerAt const_power_at(const std::vector<FitPoint>& pts, double k) {
    std::vector<double> x, y;
    for (const auto& p : pts) {
        x.push_back(std::pow(p.n, k));
        y.push_back(p.y);
    }
    const LinearFit lf = linear_fit(x, y);
    return {lf.intercept, lf.slope, lf.rss, lf.sst, lf.degenerate};
}

}  // namespace detail

/// Y = a + b N^k. For fixed k the model is linear in (a, b), so k is chosen
/// from the grid {0.5, 1, ..., 4} and refined by golden-section search on
/// the residual sum of squares.
inline ConstPowerFit fit_const_plus_power(const std::vector<FitPoint>& pts) {
    if (pts.size() < 4) throw std::invalid_argument("const+power fit needs at least 4 points");
    for (const auto& p : pts) {
        if (!(p.y > 0.0)) throw std::invalid_argument("const+power fit needs Y > 0");
        if (!(p.n > 0.0)) throw std::invalid_argument("const+power fit needs N > 0");
    }
    ConstPowerFit f;
    const auto flat = detail::const_power_at(pts, 1.0);
    if (flat.degenerate) {
        f.a = flat.a;
        f.b = 0.0;
        f.k = std::numeric_limits<double>::quiet_NaN();
        f.r_squared = 1.0;
        f.degenerate = true;
        return f;
    }
    double best_k = 0.5, best_rss = std::numeric_limits<double>::infinity();
    for (double k = 0.5; k <= 4.0 + 1e-12; k += 0.5) {
        const double rss = detail::const_power_at(pts, k).rss;
        if (rss < best_rss) {
            best_rss = rss;
            best_k = k;
        }
    }
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double lo = std::max(0.01, best_k - 0.5), hi = best_k + 0.5;
    double c = hi - gr * (hi - lo), d = lo + gr * (hi - lo);
    double fc = detail::const_power_at(pts, c).rss, fd = detail::const_power_at(pts, d).rss;
    int iter = 0;
    for (; iter < 200 && hi - lo > 1e-10; ++iter) {
        if (fc < fd) {
            hi = d;
            d = c;
            fd = fc;
            c = hi - gr * (hi - lo);
            fc = detail::const_power_at(pts, c).rss;
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + gr * (hi - lo);
            fd = detail::const_power_at(pts, d).rss;
        }
    }
    f.k = 0.5 * (lo + hi);
    const auto at = detail::const_power_at(pts, f.k);
    f.a = at.a;
    f.b = at.b;
    f.r_squared = at.sst > 0.0 ? 1.0 - at.rss / at.sst : 1.0;
    // A minimum pinned to the search bracket edge means the grid missed it.
    const bool interior = f.k > std::max(0.01, best_k - 0.5) + 1e-6 && f.k < best_k + 0.5 - 1e-6;
    f.converged = hi - lo <= 1e-10 && interior;
    return f;
}

}  // namespace q2sim::bench
