#pragma once

#include <CLI11.hpp>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "q2sim/bench/fit.hpp"
#include "q2sim/bench/harness.hpp"
#include "q2sim/bench/workloads.hpp"
#include "q2sim/graph/ent_graph.hpp"
#include "q2sim/trace/synth.hpp"
#include "q2sim/trace/trace_replay.hpp"

namespace q2sim::cli {

/// Q2SIM_LOG=quiet|info|debug; only affects progress lines on stderr.
enum class Verbosity { Quiet, Info, Debug };

inline Verbosity verbosity_from_env() {
    const char* v = std::getenv("Q2SIM_LOG");
    if (!v) return Verbosity::Info;
    const std::string s(v);
    if (s == "quiet") return Verbosity::Quiet;
    if (s == "debug") return Verbosity::Debug;
    return Verbosity::Info;
}

/// Ordered (column, value) pairs for one CSV row.
using Row = std::vector<std::pair<std::string, std::string>>;

inline std::string fmt(double v) {
    std::ostringstream s;
    s << std::setprecision(12) << v;
    return s.str();
}

inline std::string fmt(std::uint64_t v) { return std::to_string(v); }

inline void write_row(std::ostream& out, const Row& row) {
    for (std::size_t k = 0; k < row.size(); ++k) out << (k ? "," : "") << row[k].first;
    out << '\n';
    for (std::size_t k = 0; k < row.size(); ++k) out << (k ? "," : "") << row[k].second;
    out << '\n';
}

struct Outputs {
    std::string csv;
    std::string trace;
};

inline std::unique_ptr<TraceWriter> open_trace(const std::string& path, std::ostream& out) {
    if (path.empty()) return nullptr;
    if (path == "-") return std::make_unique<TraceWriter>(out);
    return TraceWriter::open_file(path);
}

/// Summary line on stdout, then the CSV row to --csv or to stdout.
inline void emit(const Row& row, const std::string& summary, const Outputs& o, std::ostream& out) {
    out << summary << '\n';
    if (o.csv.empty() || o.csv == "-") {
        write_row(out, row);
        return;
    }
    std::ofstream f(o.csv, std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open CSV file '" + o.csv + "'");
    write_row(f, row);
}

inline double parse_tdep(const std::string& s) {
    if (s == "inf" || s == "infinity" || s == "Inf") return std::numeric_limits<double>::infinity();
    std::size_t used = 0;
    double v = 0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != s.size() || !(v > 0)) throw std::invalid_argument("--tdep-ms must be a positive number or 'inf'");
    return v;
}

struct Trials {
    std::uint64_t seed = 1;
    std::size_t count = 1;
};

/// Runs trials with seeds seed, seed+1, ...; a trace is only written for a
/// single-trial run.
template <class F>
std::vector<ProtocolReport> run_trials(const Trials& t, const Outputs& o, std::ostream& out, F&& one) {
    if (t.count == 0) throw std::invalid_argument("--trials must be >= 1");
    if (!o.trace.empty() && t.count != 1) throw std::invalid_argument("--trace needs --trials 1");
    std::vector<ProtocolReport> reps;
    reps.reserve(t.count);
    auto trace = open_trace(o.trace, out);
    for (std::size_t k = 0; k < t.count; ++k) {
        Engine e(t.seed + k);
        reps.push_back(one(e, trace.get()));
    }
    return reps;
}

struct Agg {
    std::size_t successes = 0;
    bench::TrialStats fidelity, completion, config_ms, sim_ms;
    std::uint64_t retransmissions = 0;
};

inline Agg aggregate(const std::vector<ProtocolReport>& reps) {
    Agg a;
    std::vector<double> f, c, cfg, sim;
    for (const auto& r : reps) {
        cfg.push_back(r.config_ms);
        sim.push_back(r.sim_ms);
        a.retransmissions += r.retransmissions;
        if (!r.success) continue;
        ++a.successes;
        f.push_back(r.final_fidelity);
        c.push_back(static_cast<double>(r.completion_time_ns));
    }
    a.fidelity = bench::summarize(f);
    a.completion = bench::summarize(c);
    a.config_ms = bench::summarize(cfg);
    a.sim_ms = bench::summarize(sim);
    return a;
}

inline std::string phase_lines(const ProtocolReport& r) {
    std::ostringstream s;
    for (const auto& p : r.phases) s << "  phase " << p.name << " " << p.start_ns << ".." << p.end_ns << " ns\n";
    if (!r.success) s << "  failed in " << r.failed_phase << ": " << r.failure << '\n';
    return s.str();
}

inline void add_outputs(CLI::App* sub, Outputs& o) {
    sub->add_option("--csv", o.csv, "CSV output path ('-' or omitted: stdout)");
    sub->add_option("--trace", o.trace, ".q2trace output path ('-' for stdout); needs --trials 1");
}

inline void add_trials(CLI::App* sub, Trials& t) {
    sub->add_option("--seed", t.seed, "base seed; trial k uses seed + k")->capture_default_str();
    sub->add_option("--trials", t.count, "number of independent runs")->capture_default_str();
}

inline CLI::Validator backend_check() {
    return CLI::IsMember({"ket", "dm", "stab"});
}

inline CLI::Validator transport_check() {
    return CLI::IsMember({"reliable", "unreliable", "tcp", "udp"});
}

inline Basis parse_graph_basis(const std::string& s) {
    const Basis b = parse_basis(s);
    if (b == Basis::X) throw std::invalid_argument("X-basis graph rule is not supported (use Y or Z)");
    return b;
}

inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"q2sim: discrete-event hybrid quantum-classical network simulator"};
    app.require_subcommand(1);
    app.set_config("--config", "", "TOML or INI file with option values (sections per subcommand)");
    const Verbosity verbosity = verbosity_from_env();

    // cluster
    auto* cluster = app.add_subcommand("cluster", "prepare an R x C cluster state and Z-measure every qubit");
    ClusterSpec cspec{1, 16};
    std::string cluster_backend = "stab";
    Trials cluster_trials;
    Outputs cluster_out;
    cluster->add_option("--rows", cspec.rows)->check(CLI::PositiveNumber)->capture_default_str();
    cluster->add_option("--cols", cspec.cols)->check(CLI::PositiveNumber)->capture_default_str();
    cluster->add_option("--backend", cluster_backend)->check(backend_check())->capture_default_str();
    add_trials(cluster, cluster_trials);
    add_outputs(cluster, cluster_out);

    // swap
    auto* swap = app.add_subcommand("swap", "entanglement swapping along an N-node chain");
    SwapConfig scfg;
    std::string swap_backend = "ket", swap_transport = "unreliable";
    Trials swap_trials;
    Outputs swap_out;
    swap->add_option("--nodes", scfg.nodes, "chain length including both ends")->capture_default_str();
    swap->add_option("--backend", swap_backend)->check(backend_check())->capture_default_str();
    swap->add_option("--transport", swap_transport)->check(transport_check())->capture_default_str();
    swap->add_option("--bus-rate-bps", scfg.bus_rate_bps)->capture_default_str();
    swap->add_option("--queue-capacity", scfg.queue_capacity, "packets per device")->capture_default_str();
    add_trials(swap, swap_trials);
    add_outputs(swap, swap_out);

    // teleport
    auto* tele = app.add_subcommand("teleport", "teleport |+> from alice to bob");
    TeleportConfig tcfg;
    std::string tdep = "inf", tele_backend = "dm", tele_transport = "reliable";
    Trials tele_trials;
    Outputs tele_out;
    tele->add_option("--distance-km", tcfg.distance_km)->check(CLI::PositiveNumber)->capture_default_str();
    tele->add_option("--tdep-ms", tdep, "depolarizing time constant, or 'inf'")->capture_default_str();
    tele->add_option("--transport", tele_transport)->check(transport_check())->capture_default_str();
    tele->add_flag("--congested", tcfg.congested, "add 100 Mbps cross traffic alice -> bob");
    tele->add_option("--backend", tele_backend)->check(backend_check())->capture_default_str();
    add_trials(tele, tele_trials);
    add_outputs(tele, tele_out);

    // qlan
    auto* qlan = app.add_subcommand("qlan", "orchestrated star network building a client cluster state");
    QlanConfig qcfg;
    std::string qlan_backend = "ket";
    Trials qlan_trials;
    Outputs qlan_out;
    qlan->add_option("--clients", qcfg.clients)->capture_default_str();
    qlan->add_option("--length-km", qcfg.star_length_km, "orchestrator-client distance")->capture_default_str();
    qlan->add_option("--client-lengths-km", qcfg.client_lengths_km, "per-client distances (overrides --length-km)");
    qlan->add_option("--loss", qcfg.loss_p, "erasure probability per qubit transmission")->capture_default_str();
    qlan->add_option("--max-attempts", qcfg.max_attempts)->capture_default_str();
    qlan->add_option("--backend", qlan_backend)->check(backend_check())->capture_default_str();
    add_trials(qlan, qlan_trials);
    add_outputs(qlan, qlan_out);

    // bench
    auto* benchc = app.add_subcommand("bench", "timing and peak-memory sweep over problem sizes");
    std::string workload = "cluster1d", bench_backend = "stab", bench_csv;
    std::vector<std::size_t> sizes;
    bench::BenchOptions bopt;
    bopt.ci.max_trials = 30;
    double timeout = 0;
    bool no_isolate = false;
    benchc->add_option("--workload", workload)
        ->check(CLI::IsMember({"cluster1d", "cluster2d", "swap", "qlan"}))
        ->capture_default_str();
    benchc->add_option("--backend", bench_backend)->check(backend_check())->capture_default_str();
    benchc->add_option("--sizes", sizes, "problem sizes")->required()->expected(1, -1);
    benchc->add_option("--min-trials", bopt.ci.min_trials)->capture_default_str();
    benchc->add_option("--max-trials", bopt.ci.max_trials)->capture_default_str();
    benchc->add_option("--margin", bopt.ci.margin_frac, "target CI half-width as a fraction of the mean")
        ->capture_default_str();
    benchc->add_option("--confidence", bopt.ci.confidence)->capture_default_str();
    auto* timeout_opt =
        benchc->add_option("--timeout", timeout, "per-trial wall-clock limit in seconds (default: none)")
            ->check(CLI::PositiveNumber);
    benchc->add_flag("--no-isolate", no_isolate, "run trials in this process (peak memory is then cumulative)");
    benchc->add_option("--csv", bench_csv, "CSV output path (default stdout)");

    // fit
    auto* fitc = app.add_subcommand("fit", "power-law and model-comparison fits of a bench CSV");
    std::string fit_csv, metric = "total";
    std::vector<std::string> regions{"all"};
    double piecewise = 0;
    bool compare = false, const_power = false, weighted = false;
    fitc->add_option("csv", fit_csv, "bench CSV file")->required();
    fitc->add_option("--metric", metric)->check(CLI::IsMember({"total", "config", "sim", "peak"}))->capture_default_str();
    fitc->add_option("--region", regions, "low, mid, high or all (repeatable)")
        ->check(CLI::IsMember({"low", "mid", "high", "all"}));
    auto* piecewise_opt = fitc->add_option("--piecewise", piecewise, "breakpoint N for a two-segment fit");
    fitc->add_flag("--compare", compare, "power law vs exponential (delta AIC/BIC) for the full range");
    fitc->add_flag("--const-power", const_power, "fit a + b N^k");
    fitc->add_flag("--weighted", weighted, "weight points by 1 / std^2");

    // trace
    auto* trace = app.add_subcommand("trace", "trace utilities");
    trace->require_subcommand(1);
    auto* synth = trace->add_subcommand("synth", "write an artificial two-node distribution trace");
    SynthOptions so;
    std::string synth_out = "-";
    synth->add_option("--alice", so.alice)->capture_default_str();
    synth->add_option("--bob", so.bob)->capture_default_str();
    synth->add_option("--kept", so.kept)->capture_default_str();
    synth->add_option("--sent", so.sent)->capture_default_str();
    synth->add_option("--t-init", so.t_init)->capture_default_str();
    synth->add_option("--t-entangle", so.t_entangle)->capture_default_str();
    synth->add_option("--t-send", so.t_send)->capture_default_str();
    synth->add_option("--delay-ns", so.link_delay_ns)->capture_default_str();
    synth->add_option("--out", synth_out, "output path ('-' for stdout)")->capture_default_str();
    auto* replay = trace->add_subcommand("replay", "fold a trace and print its entanglement graph");
    std::string replay_in;
    std::int64_t until = -1;
    replay->add_option("file", replay_in)->required()->check(CLI::ExistingFile);
    replay->add_option("--until", until, "stop after events at this time (ns)");

    // graph
    auto* graph = app.add_subcommand("graph", "apply Y/Z measurement rules to a graph");
    std::string graph_in;
    std::size_t gpath = 0, gstar = 0, gcomplete = 0;
    std::vector<std::size_t> gcluster;
    std::vector<std::string> gmeasure;
    int goutcome = 0;
    bool gsteps = false;
    auto* src = graph->add_option_group("source", "input graph");
    src->add_option("--in", graph_in, "graph JSON {vertices, edges}")->check(CLI::ExistingFile);
    src->add_option("--path", gpath, "path on N vertices");
    src->add_option("--star", gstar, "star with K leaves");
    src->add_option("--complete", gcomplete, "complete graph on N vertices");
    src->add_option("--cluster", gcluster, "R C grid")->expected(2);
    src->require_option(1);
    graph->add_option("--measure", gmeasure, "vertex:basis, basis Y or Z (repeatable, applied in order)");
    graph->add_option("--outcome", goutcome, "outcome used for the listed corrections")
        ->check(CLI::IsMember({0, 1}))
        ->capture_default_str();
    graph->add_flag("--steps", gsteps, "print each intermediate graph with its corrections");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        if (*cluster) {
            const Backend b = parse_backend(cluster_backend);
            cspec.validate();
            default_limits().check(b, cspec.size());
            const auto reps = run_trials(cluster_trials, cluster_out, out, [&](Engine& e, TraceWriter* w) {
                return run_cluster(cspec, b, e, w);
            });
            const Agg a = aggregate(reps);
            std::ostringstream sum;
            sum << "cluster " << cspec.rows << "x" << cspec.cols << " backend=" << backend_name(b)
                << " trials=" << reps.size() << " ok=" << a.successes << " config_ms=" << fmt(a.config_ms.mean)
                << " sim_ms=" << fmt(a.sim_ms.mean);
            const Row row{{"rows", fmt(std::uint64_t(cspec.rows))},
                          {"cols", fmt(std::uint64_t(cspec.cols))},
                          {"backend", std::string(backend_name(b))},
                          {"seed", fmt(cluster_trials.seed)},
                          {"trials", fmt(std::uint64_t(reps.size()))},
                          {"successes", fmt(std::uint64_t(a.successes))},
                          {"gates", fmt(reps.front().gates)},
                          {"measurements", fmt(reps.front().measurements)},
                          {"events", fmt(reps.front().events)},
                          {"mean_config_ms", fmt(a.config_ms.mean)},
                          {"mean_sim_ms", fmt(a.sim_ms.mean)}};
            emit(row, sum.str(), cluster_out, out);
            return a.successes == reps.size() ? 0 : 1;
        }
        if (*swap) {
            scfg.backend = parse_backend(swap_backend);
            scfg.transport = parse_transport(swap_transport);
            scfg.validate();
            const auto reps = run_trials(swap_trials, swap_out, out, [&](Engine& e, TraceWriter* w) {
                return run_swap_chain(scfg, e, w);
            });
            const Agg a = aggregate(reps);
            std::ostringstream sum;
            sum << "swap nodes=" << scfg.nodes << " backend=" << backend_name(scfg.backend)
                << " transport=" << transport_name(scfg.transport) << " trials=" << reps.size()
                << " ok=" << a.successes << " mean_fidelity=" << fmt(a.fidelity.mean)
                << " mean_completion_ns=" << fmt(a.completion.mean);
            if (reps.size() == 1) sum << '\n' << phase_lines(reps.front());
            const Row row{{"nodes", fmt(std::uint64_t(scfg.nodes))},
                          {"backend", std::string(backend_name(scfg.backend))},
                          {"transport", std::string(transport_name(scfg.transport))},
                          {"seed", fmt(swap_trials.seed)},
                          {"trials", fmt(std::uint64_t(reps.size()))},
                          {"successes", fmt(std::uint64_t(a.successes))},
                          {"mean_fidelity", fmt(a.fidelity.mean)},
                          {"mean_completion_ns", fmt(a.completion.mean)},
                          {"retransmissions", fmt(a.retransmissions)},
                          {"mean_config_ms", fmt(a.config_ms.mean)},
                          {"mean_sim_ms", fmt(a.sim_ms.mean)}};
            emit(row, sum.str(), swap_out, out);
            return a.successes == reps.size() ? 0 : 1;
        }
        if (*tele) {
            tcfg.t_dep_ms = parse_tdep(tdep);
            tcfg.transport = parse_transport(tele_transport);
            tcfg.backend = parse_backend(tele_backend);
            tcfg.validate();
            const auto reps = run_trials(tele_trials, tele_out, out, [&](Engine& e, TraceWriter* w) {
                return run_teleport(tcfg, e, w);
            });
            const Agg a = aggregate(reps);
            std::vector<double> waits;
            for (const auto& r : reps) {
                if (r.success) waits.push_back(static_cast<double>(r.wait_time_ns));
            }
            const auto wait = bench::summarize(waits);
            std::ostringstream sum;
            sum << "teleport distance_km=" << fmt(tcfg.distance_km) << " tdep_ms=" << tdep
                << " transport=" << transport_name(tcfg.transport) << " congested=" << tcfg.congested
                << " trials=" << reps.size() << " ok=" << a.successes << " mean_fidelity=" << fmt(a.fidelity.mean)
                << " mean_wait_ns=" << fmt(wait.mean);
            if (reps.size() == 1) sum << '\n' << phase_lines(reps.front());
            const Row row{{"distance_km", fmt(tcfg.distance_km)},
                          {"tdep_ms", tdep},
                          {"transport", std::string(transport_name(tcfg.transport))},
                          {"congested", tcfg.congested ? "1" : "0"},
                          {"backend", std::string(backend_name(tcfg.backend))},
                          {"seed", fmt(tele_trials.seed)},
                          {"trials", fmt(std::uint64_t(reps.size()))},
                          {"successes", fmt(std::uint64_t(a.successes))},
                          {"mean_fidelity", fmt(a.fidelity.mean)},
                          {"std_fidelity", fmt(a.fidelity.std)},
                          {"mean_wait_ns", fmt(wait.mean)},
                          {"std_wait_ns", fmt(wait.std)},
                          {"mean_completion_ns", fmt(a.completion.mean)},
                          {"mean_config_ms", fmt(a.config_ms.mean)},
                          {"mean_sim_ms", fmt(a.sim_ms.mean)}};
            emit(row, sum.str(), tele_out, out);
            return a.successes == reps.size() ? 0 : 1;
        }
        if (*qlan) {
            qcfg.backend = parse_backend(qlan_backend);
            qcfg.validate();
            const auto reps = run_trials(qlan_trials, qlan_out, out, [&](Engine& e, TraceWriter* w) {
                return run_qlan(qcfg, e, w);
            });
            const Agg a = aggregate(reps);
            double attempts = 0;
            for (const auto& r : reps) attempts += static_cast<double>(r.distribution_attempts);
            std::ostringstream sum;
            sum << "qlan clients=" << qcfg.clients << " loss=" << fmt(qcfg.loss_p)
                << " backend=" << backend_name(qcfg.backend) << " trials=" << reps.size() << " ok=" << a.successes
                << " mean_fidelity=" << fmt(a.fidelity.mean) << " mean_completion_ms=" << fmt(a.completion.mean / 1e6);
            if (reps.size() == 1) sum << '\n' << phase_lines(reps.front());
            const Row row{{"clients", fmt(std::uint64_t(qcfg.clients))},
                          {"length_km", fmt(qcfg.star_length_km)},
                          {"loss_p", fmt(qcfg.loss_p)},
                          {"backend", std::string(backend_name(qcfg.backend))},
                          {"seed", fmt(qlan_trials.seed)},
                          {"trials", fmt(std::uint64_t(reps.size()))},
                          {"successes", fmt(std::uint64_t(a.successes))},
                          {"mean_fidelity", fmt(a.fidelity.mean)},
                          {"mean_completion_ns", fmt(a.completion.mean)},
                          {"std_completion_ns", fmt(a.completion.std)},
                          {"mean_attempts", fmt(attempts / static_cast<double>(reps.size()))},
                          {"mean_config_ms", fmt(a.config_ms.mean)},
                          {"mean_sim_ms", fmt(a.sim_ms.mean)}};
            emit(row, sum.str(), qlan_out, out);
            return a.successes == reps.size() ? 0 : 1;
        }
        if (*benchc) {
            const auto w = bench::parse_workload(workload);
            const Backend b = parse_backend(bench_backend);
            bopt.isolate = !no_isolate;
            if (*timeout_opt) bopt.timeout_s = timeout;
            bopt.ci.validate();
            // Validate every size before running any of them.
            std::vector<bench::SeededScenario> scenarios;
            for (std::size_t n : sizes) scenarios.push_back(bench::make_scenario(w, b, n));
            std::vector<bench::BenchRow> rows;
            bool any_failed = false;
            for (std::size_t k = 0; k < sizes.size(); ++k) {
                const auto row = bench::bench_size(sizes[k], scenarios[k], bopt);
                if (row.failures) {
                    any_failed = true;
                    err << "bench " << workload << " n=" << sizes[k] << " failed: " << row.error << '\n';
                    continue;
                }
                if (verbosity != Verbosity::Quiet) {
                    err << "bench " << workload << " n=" << sizes[k] << " trials=" << row.trials
                        << " mean_total_ms=" << fmt(row.total_ms.mean) << " peak_kb=" << fmt(row.peak_kb.mean)
                        << (row.converged ? "" : " (margin not reached)") << '\n';
                }
                rows.push_back(row);
            }
            if (bench_csv.empty() || bench_csv == "-") {
                bench::write_bench_csv(out, rows);
            } else {
                std::ofstream f(bench_csv, std::ios::trunc);
                if (!f) throw std::runtime_error("cannot open CSV file '" + bench_csv + "'");
                bench::write_bench_csv(f, rows);
            }
            return any_failed ? 3 : 0;
        }
        if (*fitc) {
            std::ifstream f(fit_csv);
            if (!f) throw std::runtime_error("cannot open '" + fit_csv + "'");
            const auto rows = bench::read_bench_csv(f);
            std::vector<bench::FitPoint> pts;
            for (const auto& r : rows) {
                const bench::TrialStats& s = metric == "total"    ? r.total_ms
                                             : metric == "config" ? r.config_ms
                                             : metric == "sim"    ? r.sim_ms
                                                                  : r.peak_kb;
                pts.push_back({static_cast<double>(r.n), s.mean, s.std});
            }
            out << "metric " << metric << " points " << pts.size() << '\n';
            out << "region  points  alpha  beta  r2  aic  bic  delta_aic  delta_bic  preferred\n";
            for (const auto& rn : regions) {
                const auto region = bench::parse_region(rn);
                const auto fr = bench::fit_power_law(pts, region, weighted);
                out << rn << "  " << fr.points << "  " << fmt(fr.alpha) << "  " << fmt(fr.beta) << "  "
                    << fmt(fr.r_squared) << "  " << fmt(fr.aic) << "  " << fmt(fr.bic);
                if (fr.points >= 4) {
                    const auto c = bench::compare_models(pts, region);
                    out << "  " << fmt(c.delta_aic) << "  " << fmt(c.delta_bic) << "  " << model_name(c.preferred);
                } else {
                    out << "  -  -  -";
                }
                out << (fr.degenerate ? "  (degenerate)" : "") << '\n';
            }
            if (compare) {
                const auto c = bench::compare_models(pts);
                out << "compare power_law_aic " << fmt(c.power_law.aic) << " exponential_aic "
                    << fmt(c.exponential.aic) << " delta_aic " << fmt(c.delta_aic) << " delta_bic "
                    << fmt(c.delta_bic) << " preferred " << model_name(c.preferred) << '\n';
            }
            if (*piecewise_opt) {
                const auto pw = bench::fit_piecewise(pts, piecewise);
                out << "piecewise breakpoint " << fmt(pw.breakpoint) << " combined_r2 " << fmt(pw.combined_r_squared)
                    << '\n';
                out << "segment  points  alpha  beta  r2\n";
                out << "below  " << pw.below.points << "  " << fmt(pw.below.alpha) << "  " << fmt(pw.below.beta)
                    << "  " << fmt(pw.below.r_squared) << '\n';
                out << "above  " << pw.above.points << "  " << fmt(pw.above.alpha) << "  " << fmt(pw.above.beta)
                    << "  " << fmt(pw.above.r_squared) << '\n';
            }
            if (const_power) {
                const auto cp = bench::fit_const_plus_power(pts);
                out << "const_power a " << fmt(cp.a) << " b " << fmt(cp.b) << " k " << fmt(cp.k) << " r2 "
                    << fmt(cp.r_squared) << (cp.converged ? "" : " (not converged)")
                    << (cp.degenerate ? " (degenerate)" : "") << '\n';
            }
            return 0;
        }
        if (*synth) {
            if (synth_out == "-") {
                TraceWriter w(out);
                write_synth_trace(w, so);
            } else {
                so.validate();
                auto w = TraceWriter::open_file(synth_out);
                write_synth_trace(*w, so);
            }
            return 0;
        }
        if (*replay) {
            std::ifstream f(replay_in, std::ios::binary);
            if (!f) throw std::runtime_error("cannot open '" + replay_in + "'");
            const auto r = until >= 0 ? TraceReplay::from_stream(f, until) : TraceReplay::from_stream(f);
            out << r.entanglement_graph().dump() << '\n';
            return 0;
        }
        if (*graph) {
            EntGraph g;
            if (!graph_in.empty()) {
                std::ifstream f(graph_in);
                g = EntGraph::from_json(nlohmann::json::parse(f));
            } else if (gpath) {
                g = EntGraph::path(gpath);
            } else if (gstar) {
                g = EntGraph::star(gstar);
            } else if (gcomplete) {
                g = EntGraph::complete(gcomplete);
            } else {
                g = EntGraph::cluster(ClusterSpec{gcluster.at(0), gcluster.at(1)});
            }
            for (const auto& m : gmeasure) {
                const auto colon = m.rfind(':');
                if (colon == std::string::npos || colon == 0) {
                    throw std::invalid_argument("--measure expects vertex:basis, got '" + m + "'");
                }
                const std::string v = m.substr(0, colon);
                const auto res = measure_pauli_rule(g, v, parse_graph_basis(m.substr(colon + 1)), goutcome);
                g = res.graph;
                if (gsteps) {
                    out << "# measure " << m << " outcome " << goutcome << " corrections";
                    for (const auto& c : res.corrections) out << ' ' << gate_name(c.gate) << '@' << c.vertex;
                    out << '\n' << g.to_json().dump() << '\n';
                }
            }
            if (!gsteps) out << g.to_json().dump() << '\n';
            return 0;
        }
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}

}  // namespace q2sim::cli
