#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "q2sim/net/classical_link.hpp"
#include "q2sim/registry/state_registry.hpp"

namespace q2sim {

struct GateTimings {
    SimTime single_qubit_ns = 20;
    SimTime two_qubit_ns = 40;
    SimTime measure_ns = 300;

    void validate() const {
        if (single_qubit_ns < 0 || two_qubit_ns < 0 || measure_ns < 0) {
            throw std::invalid_argument("gate timings must be >= 0");
        }
    }
};

/// One gate or one measurement on a node's processor.
struct LocalOp {
    bool is_measure = false;
    GateKind gate = GateKind::I;
    Basis basis = Basis::Z;
    std::vector<QubitId> qubits;

    static LocalOp apply(GateKind g, std::vector<QubitId> qs) { return LocalOp{false, g, Basis::Z, std::move(qs)}; }
    static LocalOp measure(QubitId q, Basis b = Basis::Z) { return LocalOp{true, GateKind::I, b, {q}}; }

    SimTime duration(const GateTimings& t) const {
        if (is_measure) return t.measure_ns;
        return gate_arity(gate) == 1 ? t.single_qubit_ns : t.two_qubit_ns;
    }
};

struct QuantumChannelConfig {
    std::string a;
    std::string b;
    double length_km = 0.0;
    SimTime prop_delay_per_km = kDefaultPropagationPerKm;
    double loss_p = 0.0;
    std::optional<NoiseMap> noise;
};

struct QuantumChannelStats {
    std::uint64_t transmitted = 0;
    std::uint64_t delivered = 0;
    std::uint64_t lost = 0;
};

enum class Transport { Unreliable, Reliable };

inline Transport parse_transport(std::string_view s) {
    if (s == "unreliable" || s == "udp") return Transport::Unreliable;
    if (s == "reliable" || s == "tcp") return Transport::Reliable;
    throw std::invalid_argument("unknown transport '" + std::string(s) + "'");
}

inline std::string_view transport_name(Transport t) { return t == Transport::Reliable ? "reliable" : "unreliable"; }

struct ClassicalMessage {
    std::string from;
    std::string to;
    std::uint64_t size_bytes = 1024;
    std::vector<std::uint8_t> payload;
    Transport transport = Transport::Unreliable;
    std::string kind = "data";
};

/// Per-packet log of protocol (non cross-traffic) packets.
struct MessageRecord {
    std::uint64_t id = 0;
    std::string from;
    std::string to;
    std::string kind;
    std::uint64_t bytes = 0;
    SimTime sent_at = 0;
    bool delivered = false;
    bool dropped = false;
    DelayBreakdown delay;
    SimTime arrived_at = 0;
};

struct TransportStats {
    std::uint64_t handshakes = 0;
    std::uint64_t retransmissions = 0;
    std::uint64_t duplicates_suppressed = 0;
    std::uint64_t messages_delivered = 0;
    std::uint64_t messages_failed = 0;
};

/// Nodes, quantum channels and classical links around one StateRegistry.
///
/// Reliable transport is a TCP-like stop-and-wait: an undirected connection
/// per node pair is opened with a SYN / SYN-ACK exchange, then each
/// direction sends one data packet at a time and waits for its ACK.
class Network {
  public:
    using DeliverFn = std::function<void(const ClassicalMessage&)>;
    using FailFn = std::function<void(const ClassicalMessage&)>;

    static constexpr std::uint64_t kControlBytes = 64;
    static constexpr int kMaxRetries = 10;

    Network(Engine& engine, StateRegistry& registry) : engine_(&engine), registry_(&registry) {}

    Network(const Network&) = delete;
    Network& operator=(const Network&) = delete;

    Engine& engine() { return *engine_; }
    StateRegistry& registry() { return *registry_; }
    TraceWriter* trace() const { return registry_->trace(); }

    // ---- topology ----

    void add_node(const std::string& name, GateTimings timings = {}) {
        timings.validate();
        if (nodes_.count(name)) throw std::invalid_argument("duplicate node '" + name + "'");
        nodes_.emplace(name, Node{timings, 0, {}});
        node_order_.push_back(name);
        registry_->register_node(name);
    }
    bool has_node(const std::string& name) const { return nodes_.count(name) > 0; }
    const std::vector<std::string>& nodes() const { return node_order_; }

    std::size_t add_quantum_channel(QuantumChannelConfig cfg) {
        require_node(cfg.a);
        require_node(cfg.b);
        if (cfg.a == cfg.b) throw std::invalid_argument("quantum channel needs two distinct nodes");
        if (!(cfg.loss_p >= 0.0 && cfg.loss_p <= 1.0)) throw std::invalid_argument("loss_p outside [0,1]");
        if (cfg.prop_delay_per_km < 0) throw std::invalid_argument("negative propagation delay");
        const SimTime delay = propagation_delay(cfg.length_km, cfg.prop_delay_per_km);
        const std::size_t idx = qchannels_.size();
        node(cfg.a).devices.push_back("qdev" + std::to_string(idx));
        node(cfg.b).devices.push_back("qdev" + std::to_string(idx));
        qchannels_.push_back(QChannel{std::move(cfg), delay, {}});
        return idx;
    }

    std::size_t add_classical_link(ClassicalLinkConfig cfg) {
        for (const auto& n : cfg.nodes) require_node(n);
        const std::size_t idx = links_.size();
        links_.push_back(std::make_unique<ClassicalLink>(*engine_, engine_->rng("classical_loss"), std::move(cfg)));
        for (const auto& n : links_.back()->config().nodes) node(n).devices.push_back("cdev" + std::to_string(idx));
        return idx;
    }

    ClassicalLink& classical_link(std::size_t idx) { return *links_.at(idx); }
    std::size_t classical_link_count() const { return links_.size(); }
    const QuantumChannelStats& quantum_channel_stats(std::size_t idx) const { return qchannels_.at(idx).stats; }
    SimTime quantum_delay(std::size_t idx) const { return qchannels_.at(idx).delay; }
    std::size_t quantum_channel_count() const { return qchannels_.size(); }
    const std::vector<std::string>& devices(const std::string& n) const { return nodes_.at(n).devices; }

    Topology topology() const {
        Topology t;
        for (const auto& n : node_order_) t.nodes.push_back({n});
        for (const auto& c : qchannels_) t.quantum_links.push_back({c.cfg.a, c.cfg.b, c.delay});
        for (const auto& l : links_) {
            t.classical_links.push_back({std::string(link_kind_name(l->config().kind)), l->config().nodes,
                                         l->propagation(), l->config().rate_bps});
        }
        return t;
    }

    void write_topology() {
        if (trace()) trace()->write_topology(topology());
    }

    // ---- local processing ----

    /// Runs `ops` back to back on the node's processor. The processor is
    /// serial, so the batch starts once earlier work is done; the registry
    /// operations take effect together at completion, when `done` receives
    /// the measurement outcomes in op order.
    SimTime local_ops(const std::string& n, std::vector<LocalOp> ops,
                      std::function<void(const std::vector<int>&)> done = {}) {
        Node& nd = node(n);
        SimTime total = 0;
        for (const auto& op : ops) {
            check_op(n, op);
            total += op.duration(nd.timings);
        }
        const SimTime start = std::max(engine_->now(), nd.busy_until);
        nd.busy_until = start + total;
        engine_->schedule(nd.busy_until - engine_->now(), [this, n, ops = std::move(ops), done = std::move(done)] {
            std::vector<int> outcomes;
            for (const auto& op : ops) {
                check_op(n, op);
                if (op.is_measure) {
                    outcomes.push_back(registry_->measure_and_release(op.qubits.front(), op.basis, engine_->rng("measure")));
                } else {
                    registry_->apply_gate(op.gate, op.qubits);
                }
            }
            if (done) done(outcomes);
        });
        return nd.busy_until;
    }

    /// Single-op form; `done` gets the outcome, or -1 for a gate.
    SimTime local_op_with_timing(const std::string& n, LocalOp op, std::function<void(int)> done = {}) {
        const bool meas = op.is_measure;
        return local_ops(n, {std::move(op)}, [meas, done = std::move(done)](const std::vector<int>& o) {
            if (done) done(meas ? o.front() : -1);
        });
    }

    SimTime busy_until(const std::string& n) const { return nodes_.at(n).busy_until; }

    // ---- quantum transmission ----

    /// Sends an owned qubit over the channel joining `from` and `to`.
    /// `arrived(true)` on delivery, `arrived(false)` if it was lost.
    void transmit_qubit(const std::string& from, const std::string& to, QubitId q,
                        std::function<void(bool)> arrived = {}) {
        const std::size_t ci = quantum_route(from, to);
        if (!registry_->owned_by(q, from)) {
            throw std::logic_error("transmit_qubit: '" + from + "' does not hold qubit " + std::to_string(q));
        }
        QChannel& ch = qchannels_[ci];
        ++ch.stats.transmitted;
        registry_->set_in_flight(q);
        const std::string label = registry_->label(q);
        if (trace()) trace()->send_qubit(engine_->now(), label, from, to);
        engine_->schedule(ch.delay, [this, ci, from, to, q, label, arrived = std::move(arrived)] {
            QChannel& c = qchannels_[ci];
            const bool lost = c.cfg.loss_p > 0.0 && engine_->rng("loss").bernoulli(c.cfg.loss_p);
            if (lost) {
                ++c.stats.lost;
                registry_->lose(q, engine_->rng("loss"));
                if (trace()) trace()->lose_qubit(engine_->now(), label, from, to);
            } else {
                ++c.stats.delivered;
                registry_->set_owner(q, to);
                if (c.cfg.noise) registry_->apply_noise(q, *c.cfg.noise, engine_->rng("noise"));
                if (trace()) trace()->deliver_qubit(engine_->now(), label, from, to);
            }
            if (arrived) arrived(!lost);
        });
    }

    // ---- classical transmission ----

    /// Unreliable: one packet, `on_fail` if it is dropped. Reliable: opens
    /// the pair's connection if needed; `on_deliver` runs exactly once at the
    /// receiver, `on_fail` only if the retry budget runs out.
    void send_classical(ClassicalMessage msg, DeliverFn on_deliver, FailFn on_fail = {}) {
        require_node(msg.from);
        require_node(msg.to);
        if (msg.size_bytes < msg.payload.size()) throw std::invalid_argument("message smaller than its payload");
        classical_route(msg.from, msg.to);
        if (msg.transport == Transport::Unreliable) {
            auto m = std::make_shared<ClassicalMessage>(std::move(msg));
            send_packet(m->from, m->to, m->size_bytes, m->kind,
                        [this, m, on_deliver = std::move(on_deliver)] {
                            ++tstats_.messages_delivered;
                            if (on_deliver) on_deliver(*m);
                        },
                        [this, m, on_fail = std::move(on_fail)] {
                            ++tstats_.messages_failed;
                            if (on_fail) on_fail(*m);
                        });
            return;
        }
        Connection& c = connection(msg.from, msg.to);
        Direction& d = c.dir(msg.from);
        d.outbox.push_back(Outgoing{std::move(msg), std::move(on_deliver), std::move(on_fail)});
        if (c.state == ConnState::Failed) {
            fail_direction(d);
        } else if (c.state == ConnState::Idle) {
            c.initiator = d.outbox.back().msg.from;
            c.state = ConnState::Connecting;
            send_syn(c);
        } else if (c.state == ConnState::Open) {
            pump(c, d);
        }
    }

    /// Opens the reliable connection between `a` and `b` without sending data.
    void connect(const std::string& a, const std::string& b, std::function<void()> established,
                 std::function<void()> failed = {}) {
        require_node(a);
        require_node(b);
        classical_route(a, b);
        Connection& c = connection(a, b);
        if (c.state == ConnState::Open) {
            engine_->schedule(0, std::move(established));
            return;
        }
        if (c.state == ConnState::Failed) {
            if (failed) engine_->schedule(0, std::move(failed));
            return;
        }
        c.waiters.push_back({std::move(established), std::move(failed)});
        if (c.state == ConnState::Idle) {
            c.initiator = a;
            c.state = ConnState::Connecting;
            send_syn(c);
        }
    }

    bool connected(const std::string& a, const std::string& b) const {
        auto it = conns_.find(key(a, b));
        return it != conns_.end() && it->second->state == ConnState::Open;
    }

    /// Background load on the link joining `from` -> `to`. Returns a source id.
    std::size_t start_cross_traffic(const std::string& from, const std::string& to, std::uint64_t rate_bps,
                                    CrossTrafficPattern pattern, std::uint64_t packet_bytes = 1024) {
        ClassicalLink& l = *links_.at(classical_route(from, to));
        cross_.push_back(std::make_unique<CrossTrafficSource>(*engine_, l, from, to, rate_bps, pattern,
                                                              engine_->rng("cross"), packet_bytes));
        return cross_.size() - 1;
    }
    void stop_cross_traffic(std::size_t id) { cross_.at(id)->stop(); }
    void stop_all_cross_traffic() {
        for (auto& s : cross_) s->stop();
    }

    const std::vector<MessageRecord>& message_records() const { return records_; }
    const TransportStats& transport_stats() const { return tstats_; }

    SimTime retransmit_timeout(const std::string& from, const std::string& to, std::uint64_t bytes) const {
        const ClassicalLink& l = *links_.at(classical_route(from, to));
        return 2 * (l.serialization(bytes) + 2 * l.propagation());
    }

  private:
    struct Node {
        GateTimings timings;
        SimTime busy_until = 0;
        std::vector<std::string> devices;
    };

    struct QChannel {
        QuantumChannelConfig cfg;
        SimTime delay = 0;
        QuantumChannelStats stats;
    };

    struct Outgoing {
        ClassicalMessage msg;
        DeliverFn on_deliver;
        FailFn on_fail;
    };

    struct Direction {
        std::string from;
        std::string to;
        std::deque<Outgoing> outbox;
        bool awaiting_ack = false;
        std::uint64_t next_seq = 0;   // sender side
        std::uint64_t expected = 0;   // receiver side, for packets arriving at `to`
        int attempts = 0;
        EventId timer = 0;
        bool timer_armed = false;
    };

    enum class ConnState { Idle, Connecting, Open, Failed };

    struct Connection {
        std::string a;  // lexicographically smaller endpoint
        std::string b;
        std::string initiator;
        ConnState state = ConnState::Idle;
        Direction ab;
        Direction ba;
        bool responder_open = false;
        int syn_attempts = 0;
        EventId syn_timer = 0;
        bool syn_timer_armed = false;
        std::vector<std::pair<std::function<void()>, std::function<void()>>> waiters;

        Direction& dir(const std::string& from) { return from == a ? ab : ba; }
        const std::string& peer(const std::string& n) const { return n == a ? b : a; }
    };

    static std::pair<std::string, std::string> key(const std::string& x, const std::string& y) {
        return x < y ? std::make_pair(x, y) : std::make_pair(y, x);
    }

    Node& node(const std::string& n) {
        auto it = nodes_.find(n);
        if (it == nodes_.end()) throw std::invalid_argument("unknown node '" + n + "'");
        return it->second;
    }
    void require_node(const std::string& n) const {
        if (!nodes_.count(n)) throw std::invalid_argument("unknown node '" + n + "'");
    }

    void check_op(const std::string& n, const LocalOp& op) const {
        if (op.qubits.empty()) throw std::invalid_argument("local op without qubits");
        if (op.is_measure && op.qubits.size() != 1) throw std::invalid_argument("measurement takes one qubit");
        for (QubitId q : op.qubits) {
            if (!registry_->owned_by(q, n)) {
                throw std::logic_error("ownership violation: node '" + n + "' does not hold qubit " +
                                       std::to_string(q));
            }
        }
    }

    std::size_t quantum_route(const std::string& from, const std::string& to) const {
        require_node(from);
        require_node(to);
        for (std::size_t i = 0; i < qchannels_.size(); ++i) {
            const auto& c = qchannels_[i].cfg;
            if ((c.a == from && c.b == to) || (c.a == to && c.b == from)) return i;
        }
        throw std::invalid_argument("no quantum channel between '" + from + "' and '" + to + "'");
    }

    std::size_t classical_route(const std::string& from, const std::string& to) const {
        for (std::size_t i = 0; i < links_.size(); ++i) {
            if (links_[i]->connects(from, to)) return i;
        }
        throw std::invalid_argument("no classical link between '" + from + "' and '" + to + "'");
    }

    Connection& connection(const std::string& x, const std::string& y) {
        auto k = key(x, y);
        auto it = conns_.find(k);
        if (it == conns_.end()) {
            auto c = std::make_unique<Connection>();
            c->a = k.first;
            c->b = k.second;
            c->ab.from = c->a;
            c->ab.to = c->b;
            c->ba.from = c->b;
            c->ba.to = c->a;
            it = conns_.emplace(k, std::move(c)).first;
        }
        return *it->second;
    }

    /// One packet on the routed link, with trace and record keeping.
    void send_packet(const std::string& from, const std::string& to, std::uint64_t bytes, const std::string& kind,
                     std::function<void()> arrive, std::function<void()> dropped) {
        ClassicalLink& l = *links_.at(classical_route(from, to));
        const std::uint64_t id = next_packet_++;
        const std::size_t rec = records_.size();
        records_.push_back(MessageRecord{id, from, to, kind, bytes, engine_->now(), false, false, {}, 0});
        if (trace()) trace()->classical_send(engine_->now(), id, from, to, bytes, kind);
        Packet p;
        p.id = id;
        p.from = from;
        p.to = to;
        p.bytes = bytes;
        p.kind = kind;
        p.on_arrive = [this, rec, arrive = std::move(arrive)](const Packet& pk, const DelayBreakdown& d) {
            MessageRecord& r = records_[rec];
            r.delivered = true;
            r.delay = d;
            r.arrived_at = engine_->now();
            if (trace()) trace()->classical_deliver(engine_->now(), pk.id, pk.from, pk.to);
            if (arrive) arrive();
        };
        p.on_drop = [this, rec, dropped = std::move(dropped)](const Packet& pk, DropReason why) {
            records_[rec].dropped = true;
            if (trace()) trace()->classical_drop(engine_->now(), pk.id, pk.from, pk.to, drop_reason_name(why));
            if (dropped) dropped();
        };
        l.enqueue(std::move(p));
    }

    // ---- reliable transport internals ----

    void send_syn(Connection& c) {
        if (c.syn_attempts == 0) ++tstats_.handshakes;
        const std::string from = c.initiator;
        const std::string to = c.peer(from);
        Connection* cp = &c;
        send_packet(from, to, kControlBytes, "syn", [this, cp] { on_syn(*cp); }, {});
        const SimTime rto = retransmit_timeout(from, to, kControlBytes) << c.syn_attempts;
        c.syn_timer = engine_->schedule(rto, [this, cp] { on_syn_timeout(*cp); });
        c.syn_timer_armed = true;
    }

    void on_syn(Connection& c) {
        if (c.state == ConnState::Failed) return;
        const std::string responder = c.peer(c.initiator);
        Connection* cp = &c;
        send_packet(responder, c.initiator, kControlBytes, "syn_ack", [this, cp] { on_syn_ack(*cp); }, {});
        // The responder can send as soon as it has seen the SYN.
        c.responder_open = true;
        pump(c, c.dir(responder));
    }

    void on_syn_ack(Connection& c) {
        if (c.state != ConnState::Connecting) return;
        if (c.syn_timer_armed) {
            engine_->cancel(c.syn_timer);
            c.syn_timer_armed = false;
        }
        c.state = ConnState::Open;
        auto waiters = std::move(c.waiters);
        c.waiters.clear();
        for (auto& w : waiters) {
            if (w.first) w.first();
        }
        pump(c, c.ab);
        pump(c, c.ba);
    }

    void on_syn_timeout(Connection& c) {
        c.syn_timer_armed = false;
        if (c.state != ConnState::Connecting) return;
        if (c.syn_attempts >= kMaxRetries) {
            fail_connection(c);
            return;
        }
        ++c.syn_attempts;
        ++tstats_.retransmissions;
        send_syn(c);
    }

    bool may_send(Connection& c, const Direction& d) {
        if (c.state == ConnState::Open) return true;
        // A responder that has received the SYN is established on its side.
        return c.state == ConnState::Connecting && d.from != c.initiator && c.responder_open;
    }

    void pump(Connection& c, Direction& d) {
        if (d.awaiting_ack || d.outbox.empty() || !may_send(c, d)) return;
        d.awaiting_ack = true;
        d.attempts = 0;
        transmit_data(c, d);
    }

    void transmit_data(Connection& c, Direction& d) {
        const Outgoing& o = d.outbox.front();
        const std::uint64_t seq = d.next_seq;
        Connection* cp = &c;
        Direction* dp = &d;
        send_packet(d.from, d.to, o.msg.size_bytes, o.msg.kind, [this, cp, dp, seq] { on_data(*cp, *dp, seq); },
                    {});
        const SimTime rto = retransmit_timeout(d.from, d.to, o.msg.size_bytes) << d.attempts;
        d.timer = engine_->schedule(rto, [this, cp, dp, seq] { on_data_timeout(*cp, *dp, seq); });
        d.timer_armed = true;
    }

    void on_data(Connection& c, Direction& d, std::uint64_t seq) {
        if (c.state == ConnState::Failed) return;
        if (seq == d.expected) {
            ++d.expected;
            const Outgoing& o = d.outbox.front();
            ++tstats_.messages_delivered;
            if (o.on_deliver) o.on_deliver(o.msg);
        } else {
            ++tstats_.duplicates_suppressed;
        }
        Connection* cp = &c;
        Direction* dp = &d;
        send_packet(d.to, d.from, kControlBytes, "ack", [this, cp, dp, seq] { on_ack(*cp, *dp, seq); }, {});
    }

    void on_ack(Connection& c, Direction& d, std::uint64_t seq) {
        if (!d.awaiting_ack || seq != d.next_seq) return;
        if (d.timer_armed) {
            engine_->cancel(d.timer);
            d.timer_armed = false;
        }
        d.awaiting_ack = false;
        ++d.next_seq;
        d.outbox.pop_front();
        pump(c, d);
    }

    void on_data_timeout(Connection& c, Direction& d, std::uint64_t seq) {
        d.timer_armed = false;
        if (!d.awaiting_ack || seq != d.next_seq) return;
        if (d.attempts >= kMaxRetries) {
            fail_connection(c);
            return;
        }
        ++d.attempts;
        ++tstats_.retransmissions;
        transmit_data(c, d);
    }

    void fail_direction(Direction& d) {
        if (d.timer_armed) {
            engine_->cancel(d.timer);
            d.timer_armed = false;
        }
        d.awaiting_ack = false;
        auto pending = std::move(d.outbox);
        d.outbox.clear();
        for (auto& o : pending) {
            ++tstats_.messages_failed;
            if (o.on_fail) o.on_fail(o.msg);
        }
    }

    void fail_connection(Connection& c) {
        c.state = ConnState::Failed;
        if (c.syn_timer_armed) {
            engine_->cancel(c.syn_timer);
            c.syn_timer_armed = false;
        }
        auto waiters = std::move(c.waiters);
        c.waiters.clear();
        for (auto& w : waiters) {
            if (w.second) w.second();
        }
        fail_direction(c.ab);
        fail_direction(c.ba);
    }

    Engine* engine_;
    StateRegistry* registry_;
    std::map<std::string, Node> nodes_;
    std::vector<std::string> node_order_;
    std::vector<QChannel> qchannels_;
    std::vector<std::unique_ptr<ClassicalLink>> links_;
    std::vector<std::unique_ptr<CrossTrafficSource>> cross_;
    std::map<std::pair<std::string, std::string>, std::unique_ptr<Connection>> conns_;
    std::vector<MessageRecord> records_;
    TransportStats tstats_;
    std::uint64_t next_packet_ = 0;
};

}  // namespace q2sim
