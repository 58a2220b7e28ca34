#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "q2sim/registry/state_registry.hpp"
#include "q2sim/sim/engine.hpp"
#include "q2sim/trace/trace_writer.hpp"

namespace q2sim {

/// Optional inspection points for tests and tools.
struct RunHooks {
    /// Runs after every engine event with the run's registry.
    std::function<void(const StateRegistry&)> after_event;
};

/// Installs hooks.after_event as the engine observer for one run.
class ObserverScope {
  public:
    ObserverScope(Engine& engine, const StateRegistry& reg, const RunHooks& hooks) : engine_(engine) {
        if (hooks.after_event) engine_.set_observer([&reg, f = hooks.after_event] { f(reg); });
    }
    ~ObserverScope() { engine_.set_observer({}); }
    ObserverScope(const ObserverScope&) = delete;
    ObserverScope& operator=(const ObserverScope&) = delete;

  private:
    Engine& engine_;
};

struct PhaseTiming {
    std::string name;
    SimTime start_ns = 0;
    SimTime end_ns = 0;
    SimTime duration() const { return end_ns - start_ns; }
};

struct ProtocolReport {
    std::string protocol;
    bool success = false;
    std::string failure;
    std::string failed_phase;
    double final_fidelity = 0.0;
    SimTime completion_time_ns = 0;
    /// Contiguous from t=0, so the durations add up to completion_time_ns.
    std::vector<PhaseTiming> phases;
    std::uint64_t retransmissions = 0;
    std::uint64_t handshakes = 0;
    std::uint64_t qubits_lost = 0;
    std::uint64_t distribution_attempts = 0;
    std::uint64_t events = 0;
    std::uint64_t gates = 0;
    std::uint64_t measurements = 0;
    /// Measurement outcomes in protocol order (BSM bits, cluster evaluation, ...).
    std::vector<int> outcomes;
    /// Teleportation: Bob's wait between holding his qubit and correcting it.
    SimTime wait_time_ns = 0;
    double depolarizing_p = 0.0;
    // Wall-clock split; not reproducible across runs.
    double config_ms = 0.0;
    double sim_ms = 0.0;
    std::string trace_path;

    SimTime phase_total() const {
        SimTime s = 0;
        for (const auto& p : phases) s += p.duration();
        return s;
    }

    const PhaseTiming* phase(const std::string& name) const {
        for (const auto& p : phases) {
            if (p.name == name) return &p;
        }
        return nullptr;
    }
};

/// Records back-to-back protocol phases and mirrors them into the trace.
class PhaseClock {
  public:
    PhaseClock(Engine& engine, ProtocolReport& report, TraceWriter* trace)
        : engine_(&engine), report_(&report), trace_(trace) {}

    void begin(const std::string& name) {
        close();
        report_->phases.push_back(PhaseTiming{name, engine_->now(), engine_->now()});
        open_ = true;
        if (trace_) trace_->protocol_phase(engine_->now(), report_->protocol, name);
    }

    /// Closes the open phase; completion time is its end.
    void finish() {
        close();
        report_->completion_time_ns = report_->phases.empty() ? engine_->now() : report_->phases.back().end_ns;
    }

    void fail(const std::string& why) {
        if (!report_->failure.empty()) return;
        report_->success = false;
        report_->failure = why;
        report_->failed_phase = open_ ? report_->phases.back().name : "";
        finish();
        if (trace_) trace_->protocol_phase(engine_->now(), report_->protocol, "failed");
    }

    bool open() const { return open_; }

  private:
    void close() {
        if (!open_) return;
        report_->phases.back().end_ns = engine_->now();
        open_ = false;
    }

    Engine* engine_;
    ProtocolReport* report_;
    TraceWriter* trace_;
    bool open_ = false;
};

/// Milliseconds on the monotonic clock since construction.
class WallTimer {
  public:
    WallTimer() : start_(std::chrono::steady_clock::now()) {}
    double elapsed_ms() const {
        return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
    }

  private:
    std::chrono::steady_clock::time_point start_;
};

}  // namespace q2sim
