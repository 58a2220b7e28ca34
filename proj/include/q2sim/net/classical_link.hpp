#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "q2sim/sim/engine.hpp"

namespace q2sim {

/// Default propagation delay of fibre and cable, 5 us per km.
inline constexpr SimTime kDefaultPropagationPerKm = 5 * kMicrosecond;

inline SimTime propagation_delay(double length_km, SimTime per_km = kDefaultPropagationPerKm) {
    if (!(length_km >= 0.0)) throw std::invalid_argument("link length must be >= 0 km");
    return static_cast<SimTime>(std::llround(length_km * static_cast<double>(per_km)));
}

/// Time to clock `bytes` onto a link of `rate_bps`, rounded up to whole ns.
inline SimTime serialization_delay(std::uint64_t bytes, std::uint64_t rate_bps) {
    if (rate_bps == 0) throw std::invalid_argument("link rate must be positive");
    __extension__ using U128 = unsigned __int128;
    const U128 bits_ns = static_cast<U128>(bytes) * 8u * 1'000'000'000u;
    return static_cast<SimTime>((bits_ns + rate_bps - 1) / rate_bps);
}

enum class LinkKind { P2P, SharedBus };

inline std::string_view link_kind_name(LinkKind k) { return k == LinkKind::P2P ? "p2p" : "shared_bus"; }

struct ClassicalLinkConfig {
    LinkKind kind = LinkKind::P2P;
    std::vector<std::string> nodes;
    double length_km = 0.0;
    std::uint64_t rate_bps = 50'000'000;
    /// Per-device drop-tail queue, in packets waiting to be sent.
    std::size_t queue_capacity = 100;
    /// Independent in-transit loss per packet; 0 in all paper scenarios.
    double drop_probability = 0.0;
    SimTime propagation_per_km = kDefaultPropagationPerKm;
};

enum class DropReason { QueueFull, LinkLoss };

inline std::string_view drop_reason_name(DropReason r) { return r == DropReason::QueueFull ? "queue_full" : "link_loss"; }

struct DelayBreakdown {
    SimTime queueing = 0;
    SimTime serialization = 0;
    SimTime propagation = 0;
    SimTime total() const { return queueing + serialization + propagation; }
};

struct Packet {
    std::uint64_t id = 0;
    std::string from;
    std::string to;
    std::uint64_t bytes = 0;
    std::string kind;
    bool cross_traffic = false;
    SimTime enqueued_at = 0;
    std::function<void(const Packet&, const DelayBreakdown&)> on_arrive;
    std::function<void(const Packet&, DropReason)> on_drop;
    /// Called when the packet leaves its device queue for the medium.
    std::function<void(const Packet&)> on_depart;
};

/// A classical medium. A point-to-point link has one transmitter per
/// direction; a shared bus has a single medium that serves the per-device
/// queues in global FIFO order of enqueue time (no collisions or backoff).
class ClassicalLink {
  public:
    ClassicalLink(Engine& engine, RngStream& loss_rng, ClassicalLinkConfig cfg)
        : engine_(&engine), loss_rng_(&loss_rng), cfg_(std::move(cfg)) {
        if (cfg_.kind == LinkKind::P2P && cfg_.nodes.size() != 2) {
            throw std::invalid_argument("p2p link needs exactly two nodes");
        }
        if (cfg_.kind == LinkKind::SharedBus && cfg_.nodes.size() < 2) {
            throw std::invalid_argument("shared bus needs at least two nodes");
        }
        if (cfg_.rate_bps == 0) throw std::invalid_argument("link rate must be positive");
        if (!(cfg_.drop_probability >= 0.0 && cfg_.drop_probability <= 1.0)) {
            throw std::invalid_argument("drop probability outside [0,1]");
        }
        servers_.resize(cfg_.kind == LinkKind::P2P ? 2 : 1);
        prop_ = propagation_delay(cfg_.length_km, cfg_.propagation_per_km);
    }

    const ClassicalLinkConfig& config() const { return cfg_; }
    SimTime propagation() const { return prop_; }
    SimTime serialization(std::uint64_t bytes) const { return serialization_delay(bytes, cfg_.rate_bps); }

    bool attached(std::string_view node) const {
        return std::find(cfg_.nodes.begin(), cfg_.nodes.end(), node) != cfg_.nodes.end();
    }
    bool connects(std::string_view a, std::string_view b) const { return a != b && attached(a) && attached(b); }

    /// Test hook: return true to lose a packet in transit.
    std::function<bool(const Packet&)> drop_filter;

    /// Drop-tail enqueue at the sender's device. Returns false on a full queue.
    bool enqueue(Packet p) {
        if (!connects(p.from, p.to)) throw std::invalid_argument("link does not connect " + p.from + " -> " + p.to);
        Server& s = server_for(p.from);
        std::size_t& waiting = s.waiting[p.from];
        if (waiting >= cfg_.queue_capacity) {
            ++queue_drops_;
            if (p.on_drop) p.on_drop(p, DropReason::QueueFull);
            return false;
        }
        ++waiting;
        p.enqueued_at = engine_->now();
        s.queue.push_back(std::move(p));
        if (!s.busy) start_next(s);
        return true;
    }

    std::size_t waiting_from(const std::string& node) const {
        const Server& s = const_cast<ClassicalLink*>(this)->server_for(node);
        auto it = s.waiting.find(node);
        return it == s.waiting.end() ? 0 : it->second;
    }

    std::uint64_t transmitted() const { return transmitted_; }
    std::uint64_t queue_drops() const { return queue_drops_; }
    std::uint64_t link_drops() const { return link_drops_; }

  private:
    struct Server {
        std::deque<Packet> queue;
        std::map<std::string, std::size_t> waiting;
        bool busy = false;
    };

    Server& server_for(const std::string& from) {
        if (cfg_.kind == LinkKind::SharedBus) return servers_[0];
        return servers_[from == cfg_.nodes[0] ? 0 : 1];
    }

    void start_next(Server& s) {
        if (s.queue.empty()) {
            s.busy = false;
            return;
        }
        s.busy = true;
        auto p = std::make_shared<Packet>(std::move(s.queue.front()));
        s.queue.pop_front();
        --s.waiting[p->from];
        ++transmitted_;
        DelayBreakdown d;
        d.queueing = engine_->now() - p->enqueued_at;
        d.serialization = serialization(p->bytes);
        d.propagation = prop_;
        if (p->on_depart) p->on_depart(*p);
        const bool lost = (cfg_.drop_probability > 0.0 && loss_rng_->bernoulli(cfg_.drop_probability)) ||
                          (drop_filter && drop_filter(*p));
        engine_->schedule(d.serialization, [this, &s] { start_next(s); });
        if (lost) {
            ++link_drops_;
            engine_->schedule(d.serialization + d.propagation, [p] {
                if (p->on_drop) p->on_drop(*p, DropReason::LinkLoss);
            });
        } else {
            engine_->schedule(d.serialization + d.propagation, [p, d] {
                if (p->on_arrive) p->on_arrive(*p, d);
            });
        }
    }

    Engine* engine_;
    RngStream* loss_rng_;
    ClassicalLinkConfig cfg_;
    SimTime prop_ = 0;
    std::vector<Server> servers_;
    std::uint64_t transmitted_ = 0;
    std::uint64_t queue_drops_ = 0;
    std::uint64_t link_drops_ = 0;
};

enum class CrossTrafficPattern { ConstantOnOff, Bulk };

inline CrossTrafficPattern parse_cross_traffic_pattern(std::string_view s) {
    if (s == "constant_onoff") return CrossTrafficPattern::ConstantOnOff;
    if (s == "bulk") return CrossTrafficPattern::Bulk;
    throw std::invalid_argument("unknown cross-traffic pattern '" + std::string(s) + "'");
}

/// Background load on one direction of a link, starting at t=0 with a
/// random phase. ConstantOnOff offers packets at a constant bit rate
/// regardless of drops (UDP-like). Bulk offers the same rate but keeps at
/// most half the device queue occupied by its own packets, like a
/// window-limited TCP sender.
class CrossTrafficSource {
  public:
    CrossTrafficSource(Engine& engine, ClassicalLink& link, std::string from, std::string to, std::uint64_t rate_bps,
                       CrossTrafficPattern pattern, RngStream& rng, std::uint64_t packet_bytes = 1024)
        : engine_(&engine), link_(&link), from_(std::move(from)), to_(std::move(to)), rate_bps_(rate_bps),
          pattern_(pattern), bytes_(packet_bytes) {
        if (!link.connects(from_, to_)) throw std::invalid_argument("cross traffic: link does not connect endpoints");
        if (rate_bps_ == 0) return;
        interval_ = serialization_delay(bytes_, rate_bps_);
        const auto phase = static_cast<SimTime>(rng.below(static_cast<std::uint64_t>(interval_)));
        engine_->schedule(phase, [this] { tick(); });
    }

    CrossTrafficSource(const CrossTrafficSource&) = delete;
    CrossTrafficSource& operator=(const CrossTrafficSource&) = delete;

    void stop() { stopped_ = true; }
    bool stopped() const { return stopped_; }
    std::uint64_t offered() const { return offered_; }
    std::uint64_t backlog() const { return backlog_; }

  private:
    void tick() {
        if (stopped_) return;
        const std::size_t limit = std::max<std::size_t>(1, link_->config().queue_capacity / 2);
        if (pattern_ == CrossTrafficPattern::ConstantOnOff || backlog_ < limit) {
            Packet p;
            p.from = from_;
            p.to = to_;
            p.bytes = bytes_;
            p.kind = "cross";
            p.cross_traffic = true;
            if (pattern_ == CrossTrafficPattern::Bulk) {
                p.on_depart = [this](const Packet&) { --backlog_; };
                ++backlog_;
            }
            ++offered_;
            if (!link_->enqueue(std::move(p)) && pattern_ == CrossTrafficPattern::Bulk) --backlog_;
        }
        engine_->schedule(interval_, [this] { tick(); });
    }

    Engine* engine_;
    ClassicalLink* link_;
    std::string from_;
    std::string to_;
    std::uint64_t rate_bps_;
    CrossTrafficPattern pattern_;
    std::uint64_t bytes_;
    SimTime interval_ = 0;
    bool stopped_ = false;
    std::uint64_t offered_ = 0;
    std::uint64_t backlog_ = 0;
};

}  // namespace q2sim
