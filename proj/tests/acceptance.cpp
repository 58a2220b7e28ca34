// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.
// Tolerances are pinned below; nothing here is tuned from the observed data.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "generators.hpp"
#include "q2sim/bench/fit.hpp"
#include "q2sim/bench/harness.hpp"
#include "q2sim/bench/stats.hpp"
#include "q2sim/bench/workloads.hpp"
#include "q2sim/graph/ent_graph.hpp"
#include "q2sim/protocols/cluster.hpp"
#include "q2sim/protocols/qlan.hpp"
#include "q2sim/protocols/swap_chain.hpp"
#include "q2sim/protocols/teleport.hpp"
#include "q2sim/quantum/ops.hpp"

using namespace q2sim;
using namespace q2sim::bench;

namespace {

// C1
constexpr double kLawMinR2 = 0.99;
constexpr double kC1MaxSeconds = 120.0;
constexpr int kLawTrials = 1000;
// C2
constexpr double kUnitFidelityTol = 1e-12;
// C3
constexpr double kCongestionSigmas = 3.0;
// C4
constexpr double kSwapFidelityTol = 1e-9;
constexpr double kC4MaxSeconds = 60.0;
// C5
constexpr double kSwapMaxBeta = 2.5;
constexpr double kSwapMinR2 = 0.95;
constexpr int kSwapRepeats = 5;
// C6
constexpr double kStabMaxExponent = 4.0;
constexpr double kStabMaxMemoryK = 2.5;
constexpr double kKetRatioLo = 1.4, kKetRatioHi = 2.6;
constexpr double kDmRatioLo = 2.4, kDmRatioHi = 5.6;
constexpr int kScalingRepeats = 9;
constexpr double kC6MaxSeconds = 15 * 60.0;
// C7
constexpr double kProbabilityTol = 1e-9;
constexpr double kShapeSigmas = 3.0;
constexpr double kShapeRelFloor = 0.10;
constexpr int kShapeTrials = 20;
// C8
constexpr double kC8MaxSeconds = 60.0;
// C9
constexpr int kQlanRuns = 200;
constexpr double kQlanLowMs = 1.0, kQlanHighMs = 4.5;
constexpr double kQlanScalingMaxSeconds = 60.0;
// C10
constexpr double kExactBetaTol = 1e-9;
constexpr double kPiecewiseTol = 0.05;
constexpr double kConstPowerRelTol = 0.05;
// C11
constexpr double kMarginFrac = 0.02;

struct Verdict {
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            pass = false;
            detail << " FAILED[" << what << "]";
        }
    }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double mean(const std::vector<double>& xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

double sample_var(const std::vector<double>& xs) {
    const double m = mean(xs);
    double s = 0.0;
    for (double x : xs) s += (x - m) * (x - m);
    return s / static_cast<double>(xs.size() - 1);
}

double median(std::vector<double> xs) {
    std::sort(xs.begin(), xs.end());
    const std::size_t m = xs.size();
    return m % 2 ? xs[m / 2] : 0.5 * (xs[m / 2 - 1] + xs[m / 2]);
}

std::string fmt(double v, int prec = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    return buf;
}

// ---- C1-C3: teleportation -------------------------------------------------

struct LawSweep {
    std::vector<double> mean_fidelity, mean_law;
    std::size_t failures = 0;
};

LawSweep teleport_law_sweep(Backend backend) {
    LawSweep s;
    for (double d : {10.0, 100.0, 200.0, 300.0}) {
        TeleportConfig cfg;
        cfg.distance_km = d;
        cfg.t_dep_ms = 5.0;
        cfg.transport = Transport::Reliable;
        cfg.backend = backend;
        std::vector<double> f, law;
        for (int seed = 1; seed <= kLawTrials; ++seed) {
            Engine e(static_cast<std::uint64_t>(seed));
            const auto r = run_teleport(cfg, e);
            if (!r.success) {
                ++s.failures;
                continue;
            }
            f.push_back(r.final_fidelity);
            law.push_back(teleport_fidelity_law(r.wait_time_ns, cfg.t_dep_ms));
        }
        s.mean_fidelity.push_back(mean(f));
        s.mean_law.push_back(mean(law));
    }
    return s;
}

// R^2 of the measured means against the law itself (unit slope, zero intercept).
double r_squared_vs_identity(const std::vector<double>& y, const std::vector<double>& x) {
    const double my = mean(y);
    double rss = 0.0, sst = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        rss += (y[i] - x[i]) * (y[i] - x[i]);
        sst += (y[i] - my) * (y[i] - my);
    }
    return 1.0 - rss / sst;
}

Verdict c1() {
    Verdict v;
    const auto t0 = std::chrono::steady_clock::now();
    for (Backend b : {Backend::DensityMatrix, Backend::Ket}) {
        const auto s = teleport_law_sweep(b);
        const double r2 = r_squared_vs_identity(s.mean_fidelity, s.mean_law);
        v.detail << " " << backend_name(b) << ": R2=" << fmt(r2, 6) << " F(10..300km)=";
        for (double f : s.mean_fidelity) v.detail << fmt(f) << " ";
        v.require(s.failures == 0, "trial failures");
        v.require(r2 >= kLawMinR2, "R2 < " + fmt(kLawMinR2));
    }
    const double secs = seconds_since(t0);
    v.detail << " runtime=" << fmt(secs) << "s";
    v.require(secs < kC1MaxSeconds, "runtime");
    return v;
}

Verdict c2() {
    Verdict v;
    double worst = 0.0;
    int runs = 0;
    for (double d : {10.0, 100.0, 200.0, 300.0}) {
        for (Transport t : {Transport::Reliable, Transport::Unreliable}) {
            for (bool congested : {false, true}) {
                TeleportConfig cfg;
                cfg.distance_km = d;
                cfg.transport = t;
                cfg.congested = congested;
                for (int seed = 1; seed <= 25; ++seed) {
                    Engine e(static_cast<std::uint64_t>(seed));
                    const auto r = run_teleport(cfg, e);
                    v.require(r.success, "run failed");
                    worst = std::max(worst, std::abs(r.final_fidelity - 1.0));
                    ++runs;
                }
            }
        }
    }
    v.detail << " runs=" << runs << " max|F-1|=" << fmt(worst);
    v.require(worst <= kUnitFidelityTol, "fidelity != 1");
    return v;
}

Verdict c3() {
    Verdict v;
    std::vector<double> fid[2];
    for (bool congested : {false, true}) {
        TeleportConfig cfg;
        cfg.distance_km = 200;
        cfg.t_dep_ms = 5.0;
        cfg.congested = congested;
        for (int seed = 1; seed <= kLawTrials; ++seed) {
            Engine e(static_cast<std::uint64_t>(seed));
            const auto r = run_teleport(cfg, e);
            v.require(r.success, "run failed");
            fid[congested].push_back(r.final_fidelity);
        }
    }
    const double n = kLawTrials;
    const double se = std::sqrt(sample_var(fid[0]) / n + sample_var(fid[1]) / n);
    const double gap = mean(fid[0]) - mean(fid[1]);
    v.detail << " idle=" << fmt(mean(fid[0]), 6) << " congested=" << fmt(mean(fid[1]), 6) << " gap=" << fmt(gap)
             << " pooled_se=" << fmt(se);
    v.require(gap >= kCongestionSigmas * se && gap > 0.0, "gap < 3 SE");
    return v;
}

// ---- C4-C5: swapping chain ------------------------------------------------

Verdict c4() {
    Verdict v;
    const auto t0 = std::chrono::steady_clock::now();
    double worst = 0.0;
    for (std::size_t n : {3, 8, 64, 512}) {
        for (Backend b : {Backend::Ket, Backend::DensityMatrix, Backend::Stabilizer}) {
            SwapConfig cfg;
            cfg.nodes = n;
            cfg.backend = b;
            Engine e(1);
            const auto r = run_swap_chain(cfg, e);
            v.require(r.success, "N=" + std::to_string(n) + " " + std::string(backend_name(b)) + ": " + r.failure);
            worst = std::max(worst, std::abs(r.final_fidelity - 1.0));
        }
    }
    const double secs = seconds_since(t0);
    v.detail << " max|F-1|=" << fmt(worst) << " runtime=" << fmt(secs) << "s";
    v.require(worst <= kSwapFidelityTol, "fidelity");
    v.require(secs < kC4MaxSeconds, "runtime");
    return v;
}

Verdict c5() {
    Verdict v;
    std::vector<FitPoint> pts;
    for (std::size_t n : {64, 128, 256, 512, 1024}) {
        const auto sc = make_scenario(Workload::Swap, Backend::Ket, n);
        std::vector<double> ms;
        for (int k = 0; k < kSwapRepeats; ++k) {
            const auto rec = time_run(n, [&] { return sc(static_cast<std::uint64_t>(k + 1)); });
            v.require(rec.ok, "N=" + std::to_string(n) + ": " + rec.error);
            ms.push_back(rec.total_ms);
        }
        pts.push_back({static_cast<double>(n), median(ms), 0.0});
    }
    const auto fit = fit_power_law(pts);
    v.detail << " beta=" << fmt(fit.beta) << " R2=" << fmt(fit.r_squared);
    v.require(fit.beta <= kSwapMaxBeta, "beta");
    v.require(fit.r_squared >= kSwapMinR2, "R2");
    for (std::size_t n : {2048, 4096}) {
        SwapConfig cfg;
        cfg.nodes = n;
        Engine e(1);
        const auto r = run_swap_chain(cfg, e);
        v.require(r.success && std::abs(r.final_fidelity - 1.0) <= kSwapFidelityTol,
                  "N=" + std::to_string(n) + " " + r.failure);
        v.detail << " N=" << n << (r.success ? ":ok" : ":fail");
    }
    return v;
}

// ---- C6: cluster-state scaling --------------------------------------------

BenchRecord isolated(Workload w, Backend b, std::size_t n, std::uint64_t seed = 1) {
    const auto sc = make_scenario(w, b, n);
    return time_run_isolated(n, [&] { return sc(seed); });
}

/// Repeats go round-robin over the sizes so slow drift in machine speed hits every size alike.
std::vector<double> median_times(Verdict& v, Workload w, Backend b, const std::vector<std::size_t>& sizes) {
    std::vector<std::vector<double>> ms(sizes.size());
    for (int k = 0; k < kScalingRepeats; ++k) {
        for (std::size_t i = 0; i < sizes.size(); ++i) {
            const auto rec = isolated(w, b, sizes[i], static_cast<std::uint64_t>(k + 1));
            v.require(rec.ok, std::string(backend_name(b)) + " n=" + std::to_string(sizes[i]) + ": " + rec.error);
            ms[i].push_back(rec.total_ms);
        }
    }
    std::vector<double> out;
    for (auto& m : ms) out.push_back(median(m));
    return out;
}

void check_ratios(Verdict& v, const char* label, const std::vector<std::size_t>& sizes, const std::vector<double>& ms,
                  double lo, double hi) {
    v.detail << " " << label << "_ratios=";
    for (std::size_t i = 0; i + 1 < sizes.size(); ++i) {
        const double r = ms[i + 1] / ms[i];
        v.detail << fmt(r, 3) << (i + 2 < sizes.size() ? "," : "");
        v.require(r >= lo && r <= hi, std::string(label) + " ratio at n=" + std::to_string(sizes[i]));
    }
}

Verdict c6() {
    Verdict v;
    const auto t0 = std::chrono::steady_clock::now();

    // Stabilizer: runtime exponent for both shapes, memory from the 1D runs.
    std::vector<FitPoint> time_1d, time_2d, mem;
    for (std::size_t n : {256, 512, 1024, 2048, 4096, 8192}) {
        const auto rec = isolated(Workload::Cluster1D, Backend::Stabilizer, n);
        v.require(rec.ok, "stab 1D n=" + std::to_string(n) + ": " + rec.error);
        time_1d.push_back({static_cast<double>(n), rec.total_ms, 0.0});
        if (n >= 512) mem.push_back({static_cast<double>(n), rec.peak_kb, 0.0});
    }
    for (std::size_t n : {256, 512, 1024, 2048, 4096}) {
        const auto rec = isolated(Workload::Cluster2D, Backend::Stabilizer, n);
        v.require(rec.ok, "stab 2D n=" + std::to_string(n) + ": " + rec.error);
        time_2d.push_back({static_cast<double>(n), rec.total_ms, 0.0});
    }
    const auto f1 = fit_power_law(time_1d), f2 = fit_power_law(time_2d);
    const auto fm = fit_const_plus_power(mem);
    v.detail << " stab_beta_1d=" << fmt(f1.beta, 3) << " stab_beta_2d=" << fmt(f2.beta, 3) << " stab_mem_k=" << fmt(fm.k, 3)
             << " (a=" << fmt(fm.a / 1024.0, 3) << "MB)";
    v.require(f1.beta <= kStabMaxExponent && f2.beta <= kStabMaxExponent, "stab runtime exponent");
    v.require(fm.converged && fm.k <= kStabMaxMemoryK, "stab memory exponent");

    const std::vector<std::size_t> ket_sizes{18, 19, 20, 21, 22, 23, 24};
    check_ratios(v, "ket", ket_sizes, median_times(v, Workload::Cluster1D, Backend::Ket, ket_sizes), kKetRatioLo,
                 kKetRatioHi);
    const std::vector<std::size_t> dm_sizes{8, 9, 10, 11, 12};
    check_ratios(v, "dm", dm_sizes, median_times(v, Workload::Cluster1D, Backend::DensityMatrix, dm_sizes), kDmRatioLo,
                 kDmRatioHi);

    const double secs = seconds_since(t0);
    v.detail << " runtime=" << fmt(secs) << "s";
    v.require(secs < kC6MaxSeconds, "runtime");
    return v;
}

// ---- C7: backend cross-validation -----------------------------------------

void cross_validate_circuits(Verdict& v) {
    RngStream rng(7007, "acceptance-circuits");
    RngStream draws(7007, "acceptance-draws");
    double worst = 0.0;
    int deterministic = 0, mismatches = 0;
    for (int circuit = 0; circuit < 200; ++circuit) {
        const std::size_t n = 1 + rng.below(8);
        const auto steps = gen::random_circuit(rng, n, 1 + rng.below(40), rng.below(5));
        KetState ket(n);
        DensityMatrixState dm(n);
        StabilizerState stab(n);
        for (const auto& s : steps) {
            if (!s.is_measure) {
                ket.apply_gate(s.gate);
                dm.apply_gate(s.gate);
                stab.apply_gate(s.gate);
                continue;
            }
            const double pk = ket.probability_zero(s.qubit, s.basis);
            const double pd = dm.probability_zero(s.qubit, s.basis);
            const double ps = stab.probability_zero(s.qubit, s.basis);
            worst = std::max(worst, std::abs(pk - pd));
            const double u = draws.uniform();
            const int ok = ket.collapse(s.qubit, s.basis, u);
            const int od = dm.collapse(s.qubit, s.basis, u);
            const int os = stab.collapse(s.qubit, s.basis, u);
            if (ps != 0.5) {
                ++deterministic;
                // A deterministic stab outcome must be certain on ket too.
                const double p_ket_outcome = ps == 1.0 ? pk : 1.0 - pk;
                if (std::abs(p_ket_outcome - 1.0) > kProbabilityTol || os != ok) ++mismatches;
            }
            if (ok != od || ok != os) ++mismatches;
        }
    }
    v.detail << " circuits=200 max|p_ket-p_dm|=" << fmt(worst) << " deterministic=" << deterministic
             << " mismatches=" << mismatches;
    v.require(worst <= kProbabilityTol, "ket/dm probability");
    v.require(mismatches == 0 && deterministic > 0, "stab deterministic outcomes");
}

// Interleaves 1D and 2D trials so machine drift hits both equally.
void cluster_shape_timing(Verdict& v, Backend b, std::size_t n) {
    const auto s1 = make_scenario(Workload::Cluster1D, b, n);
    const auto s2 = make_scenario(Workload::Cluster2D, b, n);
    for (std::uint64_t seed : {101, 102}) {
        s1(seed);
        s2(seed);
    }
    std::vector<double> t1, t2;
    for (int k = 0; k < kShapeTrials; ++k) {
        const auto seed = static_cast<std::uint64_t>(k + 1);
        t1.push_back(time_run(n, [&] { return s1(seed); }).total_ms);
        t2.push_back(time_run(n, [&] { return s2(seed); }).total_ms);
    }
    const double m1 = mean(t1), m2 = mean(t2);
    const double se = std::sqrt(sample_var(t1) / kShapeTrials + sample_var(t2) / kShapeTrials);
    const double allowed = std::max(kShapeSigmas * se, kShapeRelFloor * 0.5 * (m1 + m2));
    const auto spec = cluster_shape(Workload::Cluster2D, n);
    v.detail << " " << backend_name(b) << "(1x" << n << " vs " << spec.rows << "x" << spec.cols << "): " << fmt(m1)
             << "ms/" << fmt(m2) << "ms";
    v.require(std::abs(m1 - m2) <= allowed, std::string(backend_name(b)) + " 1D/2D differ by " + fmt(std::abs(m1 - m2)) +
                                                "ms > " + fmt(allowed) + "ms");
}

Verdict c7() {
    Verdict v;
    cross_validate_circuits(v);
    cluster_shape_timing(v, Backend::Ket, 16);
    cluster_shape_timing(v, Backend::DensityMatrix, 9);
    cluster_shape_timing(v, Backend::Stabilizer, 1024);
    return v;
}

// ---- C8: graph-state rules ------------------------------------------------

Verdict c8() {
    Verdict v;
    const auto t0 = std::chrono::steady_clock::now();
    RngStream rng(8008, "acceptance-graphs");
    RngStream draws(8008, "acceptance-outcomes");
    double worst_ket = 0.0;
    int stab_misses = 0, steps = 0;
    for (int trial = 0; trial < 200; ++trial) {
        EntGraph g = gen::random_graph(rng, 2 + rng.below(7), rng.uniform());
        auto ket = graph_to_state(g, Backend::Ket);
        auto stab = graph_to_state(g, Backend::Stabilizer);
        const std::size_t count = 1 + rng.below(g.size() - 1);
        for (std::size_t k = 0; k < count; ++k) {
            const std::size_t qi = rng.below(g.size());
            const Basis b = rng.bernoulli(0.5) ? Basis::Y : Basis::Z;
            const double u = draws.uniform();
            const int o = ket->collapse(qi, b, u);
            if (stab->collapse(qi, b, u) != o) ++stab_misses;
            ket->discard(qi);
            stab->discard(qi);
            const auto rule = measure_pauli_rule(g, g.vertices()[qi], b, o);
            for (const auto& c : rule.corrections) {
                const Gate gate{c.gate, {rule.graph.index_of(c.vertex)}};
                ket->apply_gate(gate);
                stab->apply_gate(gate);
            }
            g = rule.graph;
            const auto edges = g.index_edges();
            worst_ket = std::max(worst_ket, std::abs(1.0 - ket->fidelity(graph_state_amplitudes(g.size(), edges))));
            const auto& tab = static_cast<const StabilizerState&>(*stab);
            if (tab.fidelity_with_stabilizer_group(graph_state_generators(g.size(), edges)) != 1.0) ++stab_misses;
            ++steps;
        }
    }
    const double secs = seconds_since(t0);
    v.detail << " graphs=200 steps=" << steps << " max|1-F_ket|=" << fmt(worst_ket) << " stab_misses=" << stab_misses
             << " runtime=" << fmt(secs) << "s";
    v.require(worst_ket <= kUnitFidelityTol, "ket fidelity");
    v.require(stab_misses == 0, "stab group");
    v.require(secs < kC8MaxSeconds, "runtime");
    return v;
}

// ---- C9: QLAN -------------------------------------------------------------

Verdict c9() {
    Verdict v;
    const std::vector<double> ps{0.0, 0.3, 0.6}, ds{1.0, 50.0, 150.0};
    auto cell = [&](double p, double d) {
        QlanConfig cfg;
        cfg.loss_p = p;
        cfg.star_length_km = d;
        std::vector<double> ms;
        for (int seed = 1; seed <= kQlanRuns; ++seed) {
            Engine e(static_cast<std::uint64_t>(seed));
            const auto r = run_qlan(cfg, e);
            if (!r.success) continue;
            v.require(std::abs(r.final_fidelity - 1.0) <= kUnitFidelityTol, "fidelity p=" + fmt(p) + " d=" + fmt(d));
            ms.push_back(static_cast<double>(r.completion_time_ns) * 1e-6);
        }
        v.require(!ms.empty(), "no successful runs");
        return ms.empty() ? 0.0 : mean(ms);
    };
    std::vector<std::vector<double>> grid(ps.size(), std::vector<double>(ds.size()));
    for (std::size_t i = 0; i < ps.size(); ++i) {
        for (std::size_t j = 0; j < ds.size(); ++j) grid[i][j] = cell(ps[i], ds[j]);
    }
    v.detail << " mean_ms[p][d]=";
    for (std::size_t i = 0; i < ps.size(); ++i) {
        v.detail << "[";
        for (std::size_t j = 0; j < ds.size(); ++j) {
            v.detail << fmt(grid[i][j]) << (j + 1 < ds.size() ? " " : "]");
            if (j > 0) v.require(grid[i][j] > grid[i][j - 1], "not increasing in d");
            if (i > 0) v.require(grid[i][j] > grid[i - 1][j], "not increasing in p");
        }
    }
    const double typical = cell(0.2, 50.0);
    v.detail << " d50_p0.2=" << fmt(typical) << "ms";
    v.require(typical >= kQlanLowMs && typical <= kQlanHighMs, "d=50 p=0.2 mean out of range");

    double slowest = 0.0;
    for (std::size_t m = 10; m <= 100; m += 10) {
        QlanConfig cfg;
        cfg.clients = m;
        cfg.backend = Backend::Stabilizer;
        const auto t0 = std::chrono::steady_clock::now();
        Engine e(1);
        const auto r = run_qlan(cfg, e);
        const double secs = seconds_since(t0);
        slowest = std::max(slowest, secs);
        v.require(r.success && std::abs(r.final_fidelity - 1.0) <= kUnitFidelityTol, "M=" + std::to_string(m));
        v.require(secs < kQlanScalingMaxSeconds, "M=" + std::to_string(m) + " runtime");
    }
    v.detail << " M10..100 slowest=" << fmt(slowest) << "s";
    return v;
}

// ---- C10-C11: analysis ----------------------------------------------------

Verdict c10() {
    Verdict v;
    std::vector<FitPoint> power;
    for (double n = 8; n <= 4096; n *= 2) power.push_back({n, 2.5 * std::pow(n, 1.7), 0.0});
    const double beta = fit_power_law(power).beta;
    v.detail << " exact_beta_err=" << fmt(std::abs(beta - 1.7));
    v.require(std::abs(beta - 1.7) <= kExactBetaTol, "exact beta");

    RngStream noise(1010, "acceptance-fit");
    auto jitter = [&] { return 1.0 + 0.02 * (2.0 * noise.uniform() - 1.0); };
    std::vector<FitPoint> pw, ex;
    for (double n = 4; n <= 40; n += 4) {
        pw.push_back({n, 3.0 * std::pow(n, 2.2) * jitter(), 0.0});
        ex.push_back({n, std::pow(2.0, n) * jitter(), 0.0});
    }
    const auto cp = compare_models(pw), ce = compare_models(ex);
    v.detail << " power(dAIC=" << fmt(cp.delta_aic) << ",dBIC=" << fmt(cp.delta_bic) << ") exp(dAIC=" << fmt(ce.delta_aic)
             << ",dBIC=" << fmt(ce.delta_bic) << ")";
    v.require(cp.delta_aic > 0 && cp.delta_bic > 0, "power-law data not preferred as power law");
    v.require(ce.delta_aic < 0 && ce.delta_bic < 0, "2^N data not preferred as exponential");

    std::vector<FitPoint> kink;
    for (double n = 8; n <= 8192; n *= 2) {
        const double y = n < 128 ? std::pow(n, 0.7) : std::pow(128.0, 0.7) * std::pow(n / 128.0, 3.2);
        kink.push_back({n, y * jitter(), 0.0});
    }
    const auto pf = fit_piecewise(kink, 128);
    v.detail << " piecewise=(" << fmt(pf.below.beta) << "," << fmt(pf.above.beta) << ")";
    v.require(std::abs(pf.below.beta - 0.7) <= kPiecewiseTol && std::abs(pf.above.beta - 3.2) <= kPiecewiseTol,
              "piecewise exponents");

    const double a_kb = 17.6 * 1024.0;
    std::vector<FitPoint> mem;
    for (double n = 64; n <= 8192; n *= 2) mem.push_back({n, (a_kb + 0.02 * std::pow(n, 1.97)) * jitter(), 0.0});
    const auto cf = fit_const_plus_power(mem);
    v.detail << " const_power=(" << fmt(cf.a / 1024.0) << "MB," << fmt(cf.k) << ")";
    v.require(cf.converged, "const+power not converged");
    v.require(std::abs(cf.a - a_kb) <= kConstPowerRelTol * a_kb && std::abs(cf.k - 1.97) <= kConstPowerRelTol * 1.97,
              "const+power constants");
    return v;
}

Verdict c11() {
    Verdict v;
    CiOptions opt;
    opt.margin_frac = kMarginFrac;
    const auto flat = repeat_until_ci([] { return Sample{{"t", 42.0}}; }, opt);
    v.detail << " zero_var_trials=" << flat.trials;
    v.require(flat.converged && flat.trials == opt.min_trials, "zero variance did not stop at min_trials");

    RngStream rng(1111, "acceptance-ci");
    auto gaussian = [&] {
        // Box-Muller, mean 100, sd 10.
        const double u1 = 1.0 - rng.uniform(), u2 = rng.uniform();
        return Sample{{"t", 100.0 + 10.0 * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2)}};
    };
    const auto g = repeat_until_ci(gaussian, opt);
    const auto& s = g.at("t");
    v.detail << " gaussian_trials=" << g.trials << " margin/mean=" << fmt(s.ci95_margin / std::abs(s.mean));
    v.require(g.converged && s.ci95_margin <= kMarginFrac * std::abs(s.mean), "gaussian margin");
    return v;
}

// ---- C12: determinism -----------------------------------------------------

std::string traced(const std::function<void(TraceWriter&)>& run) {
    std::ostringstream out;
    TraceWriter w(out);
    run(w);
    return out.str();
}

std::vector<std::string> cli_logical_fields(std::vector<std::string> args) {
    args.insert(args.begin(), "q2sim");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    if (cli::run(static_cast<int>(argv.size()), argv.data(), out, err) != 0) return {"error: " + err.str()};
    std::vector<std::string> lines;
    std::istringstream in(out.str());
    for (std::string l; std::getline(in, l);) lines.push_back(l);
    if (lines.size() < 2) return {"error: short output"};
    auto split = [](const std::string& s) {
        std::vector<std::string> cells;
        std::stringstream ss(s);
        for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
        return cells;
    };
    const auto head = split(lines[lines.size() - 2]), row = split(lines.back());
    std::vector<std::string> fields;
    for (std::size_t k = 0; k < head.size() && k < row.size(); ++k) {
        if (head[k].find("_ms") == std::string::npos) fields.push_back(head[k] + "=" + row[k]);
    }
    return fields;
}

Verdict c12() {
    Verdict v;
    const std::vector<std::pair<std::string, std::function<void(TraceWriter&)>>> scenarios{
        {"teleport", [](TraceWriter& w) {
             TeleportConfig cfg;
             cfg.t_dep_ms = 5;
             cfg.congested = true;
             Engine e(11);
             run_teleport(cfg, e, &w);
         }},
        {"swap", [](TraceWriter& w) {
             SwapConfig cfg;
             cfg.nodes = 16;
             cfg.backend = Backend::Stabilizer;
             Engine e(12);
             run_swap_chain(cfg, e, &w);
         }},
        {"cluster", [](TraceWriter& w) {
             Engine e(13);
             run_cluster(ClusterSpec{3, 3}, Backend::Ket, e, &w);
         }},
        {"qlan", [](TraceWriter& w) {
             QlanConfig cfg;
             cfg.loss_p = 0.4;
             cfg.clients = 5;
             Engine e(14);
             run_qlan_detailed(cfg, e, &w);
         }},
    };
    for (const auto& [name, run] : scenarios) {
        const auto a = traced(run), b = traced(run);
        v.require(!a.empty() && a == b, name + " trace differs");
    }
    const std::vector<std::vector<std::string>> commands{
        {"teleport", "--tdep-ms", "5", "--congested", "--trials", "200", "--seed", "3"},
        {"swap", "--nodes", "32", "--trials", "3", "--seed", "4"},
        {"cluster", "--rows", "4", "--cols", "4", "--backend", "ket", "--trials", "3", "--seed", "5"},
        {"qlan", "--loss", "0.3", "--trials", "50", "--seed", "6"},
    };
    for (const auto& cmd : commands) {
        const auto a = cli_logical_fields(cmd), b = cli_logical_fields(cmd);
        v.require(a.size() > 1 && a == b, cmd[0] + " CLI fields differ");
    }
    v.detail << " traces=" << scenarios.size() << " cli_scenarios=" << commands.size();
    return v;
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
        {"C1 teleportation fidelity law", c1},  {"C2 infinite T_dep control", c2},
        {"C3 congestion effect", c3},           {"C4 swapping correctness", c4},
        {"C5 swapping runtime scaling", c5},    {"C6 cluster backend scaling", c6},
        {"C7 backend cross-validation", c7},    {"C8 graph-state rule oracle", c8},
        {"C9 QLAN", c9},                        {"C10 fitting suite", c10},
        {"C11 CI stopping", c11},               {"C12 determinism", c12},
    };
    int failed = 0;
    for (const auto& [name, check] : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = check();
        } catch (const std::exception& e) {
            v.pass = false;
            v.detail << " exception: " << e.what();
        }
        if (!v.pass) ++failed;
        std::printf("%s %s:%s [%.1f s]\n", v.pass ? "PASS" : "FAIL", name.c_str(), v.detail.str().c_str(),
                    seconds_since(t0));
        std::fflush(stdout);
    }
    std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
    return failed == 0 ? 0 : 1;
}
