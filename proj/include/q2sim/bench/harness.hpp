#pragma once

#include <poll.h>
#include <signal.h>
#include <sys/resource.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <iomanip>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "q2sim/bench/stats.hpp"
#include "q2sim/protocols/report.hpp"

namespace q2sim::bench {

struct BenchRecord {
    std::size_t n = 0;
    double config_ms = 0.0;
    double sim_ms = 0.0;
    double total_ms = 0.0;
    double peak_kb = 0.0;
    std::uint64_t events = 0;
    bool ok = false;
    bool timed_out = false;
    std::string error;
};

/// Peak resident set of this process so far, in KiB.
inline double current_peak_kb() {
    rusage ru{};
    getrusage(RUSAGE_SELF, &ru);
    return static_cast<double>(ru.ru_maxrss);
}

using Scenario = std::function<ProtocolReport()>;

/// Runs the scenario in this process. A throwing or unsuccessful scenario
/// gives ok = false with the reason in error.
inline BenchRecord time_run(std::size_t n, const Scenario& scenario) {
    BenchRecord r;
    r.n = n;
    const auto t0 = std::chrono::steady_clock::now();
    try {
        const ProtocolReport rep = scenario();
        r.config_ms = rep.config_ms;
        r.sim_ms = rep.sim_ms;
        r.events = rep.events;
        r.ok = rep.success;
        if (!rep.success) r.error = rep.failure.empty() ? "scenario reported failure" : rep.failure;
    } catch (const std::exception& e) {
        r.error = e.what();
    }
    r.total_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    r.peak_kb = current_peak_kb();
    return r;
}

namespace detail {

struct WireRecord {
    double config_ms, sim_ms, total_ms, peak_kb;
    std::uint64_t events;
    std::uint8_t ok;
    char error[255];
};

inline void write_all(int fd, const void* p, std::size_t len) {
    const char* c = static_cast<const char*>(p);
    while (len > 0) {
        const ssize_t k = ::write(fd, c, len);
        if (k <= 0) return;
        c += k;
        len -= static_cast<std::size_t>(k);
    }
}

}  // namespace detail

/// Runs the scenario in a forked child so its peak memory is measured on
/// its own. timeout_s, when set, kills the child after that many seconds.
inline BenchRecord time_run_isolated(std::size_t n, const Scenario& scenario,
                                     std::optional<double> timeout_s = std::nullopt) {
    int fds[2];
    if (::pipe(fds) != 0) throw std::runtime_error("pipe failed");
    const pid_t pid = ::fork();
    if (pid < 0) {
        ::close(fds[0]);
        ::close(fds[1]);
        throw std::runtime_error("fork failed");
    }
    if (pid == 0) {
        ::close(fds[0]);
        const BenchRecord r = time_run(n, scenario);
        detail::WireRecord w{};
        w.config_ms = r.config_ms;
        w.sim_ms = r.sim_ms;
        w.total_ms = r.total_ms;
        w.peak_kb = r.peak_kb;
        w.events = r.events;
        w.ok = r.ok ? 1 : 0;
        std::strncpy(w.error, r.error.c_str(), sizeof(w.error) - 1);
        detail::write_all(fds[1], &w, sizeof(w));
        ::close(fds[1]);
        ::_exit(0);
    }
    ::close(fds[1]);
    BenchRecord r;
    r.n = n;
    detail::WireRecord w{};
    std::size_t got = 0;
    const auto start = std::chrono::steady_clock::now();
    while (got < sizeof(w)) {
        int wait_ms = -1;
        if (timeout_s) {
            const double left = *timeout_s * 1000.0 -
                                std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
            if (left <= 0) {
                r.timed_out = true;
                break;
            }
            wait_ms = static_cast<int>(std::ceil(left));
        }
        pollfd p{fds[0], POLLIN, 0};
        const int ready = ::poll(&p, 1, wait_ms);
        if (ready == 0) {
            r.timed_out = true;
            break;
        }
        if (ready < 0) continue;
        const ssize_t k = ::read(fds[0], reinterpret_cast<char*>(&w) + got, sizeof(w) - got);
        if (k <= 0) break;
        got += static_cast<std::size_t>(k);
    }
    ::close(fds[0]);
    if (r.timed_out) ::kill(pid, SIGKILL);
    int status = 0;
    rusage ru{};
    ::wait4(pid, &status, 0, &ru);
    r.peak_kb = static_cast<double>(ru.ru_maxrss);
    if (r.timed_out) {
        r.error = "timed out after " + std::to_string(*timeout_s) + " s";
        r.total_ms = *timeout_s * 1000.0;
        return r;
    }
    if (got < sizeof(w)) {
        r.error = "child exited without a result (status " + std::to_string(status) + ")";
        return r;
    }
    r.config_ms = w.config_ms;
    r.sim_ms = w.sim_ms;
    r.total_ms = w.total_ms;
    r.peak_kb = std::max(r.peak_kb, w.peak_kb);
    r.events = w.events;
    r.ok = w.ok != 0;
    r.error = w.error;
    return r;
}

/// One CSV row: statistics over the trials at one problem size.
struct BenchRow {
    std::size_t n = 0;
    std::size_t trials = 0;
    TrialStats config_ms, sim_ms, total_ms, peak_kb;
    bool converged = false;
    std::size_t failures = 0;
    std::string error;
};

inline constexpr const char* kBenchCsvHeader =
    "n,trials,mean_config_ms,std_config_ms,mean_sim_ms,std_sim_ms,mean_total_ms,std_total_ms,mean_peak_kb,"
    "std_peak_kb";

struct BenchOptions {
    CiOptions ci;
    bool isolate = true;
    std::optional<double> timeout_s;
};

/// Repeats the scenario (seeded by trial index) until the total time and
/// peak memory margins converge. Config and sim time are summarized but do
/// not drive stopping: they can be tiny and noisy at small sizes. Stops at
/// the first failed trial.
inline BenchRow bench_size(std::size_t n, const std::function<ProtocolReport(std::uint64_t)>& scenario,
                           const BenchOptions& opt = {}) {
    BenchRow row;
    row.n = n;
    std::uint64_t trial = 0;
    std::optional<BenchRecord> failed;
    std::vector<double> config, sim;
    CiResult ci;
    try {
        ci = repeat_until_ci(
            [&]() -> Sample {
                const std::uint64_t seed = ++trial;
                const Scenario run = [&] { return scenario(seed); };
                const BenchRecord r = opt.isolate ? time_run_isolated(n, run, opt.timeout_s) : time_run(n, run);
                if (!r.ok) {
                    failed = r;
                    throw std::runtime_error(r.error);
                }
                config.push_back(r.config_ms);
                sim.push_back(r.sim_ms);
                return {{"total_ms", r.total_ms}, {"peak_kb", r.peak_kb}};
            },
            opt.ci);
    } catch (const std::runtime_error& e) {
        if (!failed) throw;
        row.failures = 1;
        row.error = e.what();
        row.trials = trial;
        return row;
    }
    row.trials = ci.trials;
    row.converged = ci.converged;
    row.config_ms = summarize(config, opt.ci.confidence);
    row.sim_ms = summarize(sim, opt.ci.confidence);
    row.total_ms = ci.at("total_ms");
    row.peak_kb = ci.at("peak_kb");
    return row;
}

inline void write_bench_csv(std::ostream& out, const std::vector<BenchRow>& rows) {
    out << kBenchCsvHeader << '\n';
    for (const auto& r : rows) {
        out << r.n << ',' << r.trials << std::setprecision(10);
        for (const TrialStats* s : {&r.config_ms, &r.sim_ms, &r.total_ms, &r.peak_kb}) out << ',' << s->mean << ',' << s->std;
        out << '\n';
    }
}

/// Parses a CSV with exactly the bench header.
inline std::vector<BenchRow> read_bench_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("bench CSV is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kBenchCsvHeader) throw std::invalid_argument("bench CSV header mismatch: '" + line + "'");
    std::vector<BenchRow> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != 10) {
            throw std::invalid_argument("bench CSV line " + std::to_string(lineno) + ": expected 10 fields, got " +
                                        std::to_string(cells.size()));
        }
        auto num = [&](std::size_t i) {
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(cells[i], &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used != cells[i].size() || cells[i].empty()) {
                throw std::invalid_argument("bench CSV line " + std::to_string(lineno) + ": bad number '" + cells[i] +
                                            "'");
            }
            return v;
        };
        BenchRow r;
        r.n = static_cast<std::size_t>(num(0));
        r.trials = static_cast<std::size_t>(num(1));
        TrialStats* s[] = {&r.config_ms, &r.sim_ms, &r.total_ms, &r.peak_kb};
        for (std::size_t k = 0; k < 4; ++k) {
            s[k]->trials = r.trials;
            s[k]->mean = num(2 + 2 * k);
            s[k]->std = num(3 + 2 * k);
        }
        rows.push_back(r);
    }
    return rows;
}

}  // namespace q2sim::bench
