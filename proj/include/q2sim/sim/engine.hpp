#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <queue>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "q2sim/sim/rng.hpp"

namespace q2sim {

/// Simulated time in integer nanoseconds.
using SimTime = std::int64_t;
using EventId = std::uint64_t;

inline constexpr SimTime kNanosecond = 1;
inline constexpr SimTime kMicrosecond = 1000;
inline constexpr SimTime kMillisecond = 1000 * kMicrosecond;
inline constexpr SimTime kSecond = 1000 * kMillisecond;

struct RunStats {
    std::uint64_t events_processed = 0;
    SimTime final_time = 0;
};

/// Deterministic discrete-event engine.
///
/// Events are totally ordered by (fire_at, seq); seq is the insertion
/// counter, so ties execute FIFO. The clock only moves when an event is
/// popped.
class Engine {
  public:
    explicit Engine(std::uint64_t seed = 0) : seed_(seed) {}

    Engine(const Engine&) = delete;
    Engine& operator=(const Engine&) = delete;

    SimTime now() const { return now_; }
    std::uint64_t seed() const { return seed_; }

    EventId schedule(SimTime delay, std::function<void()> action) {
        if (delay < 0) {
            throw std::invalid_argument("Engine::schedule: negative delay " + std::to_string(delay));
        }
        if (finalized_) {
            throw std::logic_error("Engine::schedule: engine is finalized");
        }
        const EventId id = next_seq_++;
        queue_.push(Event{now_ + delay, id, std::move(action)});
        return id;
    }

    /// Cancelled events are skipped when popped and do not count as processed.
    void cancel(EventId id) { cancelled_.insert(id); }

    /// Stops the current run() after the executing event returns.
    void stop() { stop_requested_ = true; }

    RunStats run(std::optional<SimTime> until = std::nullopt) {
        RunStats stats;
        stop_requested_ = false;
        while (!queue_.empty() && !stop_requested_) {
            const Event& top = queue_.top();
            if (until && top.fire_at > *until) {
                break;
            }
            if (cancelled_.erase(top.seq) > 0) {
                queue_.pop();
                continue;
            }
            // Move the action out before popping; the handler may schedule.
            auto action = std::move(const_cast<Event&>(top).action);
            now_ = top.fire_at;
            queue_.pop();
            action();
            ++stats.events_processed;
            ++total_processed_;
            if (observer_) observer_();
        }
        stats.final_time = now_;
        return stats;
    }

    /// Drops every pending event and rejects further scheduling.
    void finalize() {
        queue_ = {};
        cancelled_.clear();
        finalized_ = true;
    }

    /// Called after every processed event; pass {} to clear.
    void set_observer(std::function<void()> f) { observer_ = std::move(f); }

    std::size_t pending() const { return queue_.size(); }
    std::uint64_t total_processed() const { return total_processed_; }

    /// Named random stream, created on first use from (seed, label).
    RngStream& rng(std::string_view label) {
        auto it = streams_.find(label);
        if (it == streams_.end()) {
            it = streams_.emplace(std::string(label), RngStream(seed_, label)).first;
        }
        return it->second;
    }

  private:
    struct Event {
        SimTime fire_at;
        EventId seq;
        std::function<void()> action;
    };
    struct Later {
        bool operator()(const Event& a, const Event& b) const {
            if (a.fire_at != b.fire_at) {
                return a.fire_at > b.fire_at;
            }
            return a.seq > b.seq;
        }
    };

    std::uint64_t seed_;
    std::function<void()> observer_;
    SimTime now_ = 0;
    EventId next_seq_ = 0;
    std::uint64_t total_processed_ = 0;
    bool finalized_ = false;
    bool stop_requested_ = false;
    std::priority_queue<Event, std::vector<Event>, Later> queue_;
    std::unordered_set<EventId> cancelled_;
    std::map<std::string, RngStream, std::less<>> streams_;
};

}  // namespace q2sim
