#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "dense_oracle.hpp"
#include "q2sim/registry/state_registry.hpp"
#include "q2sim/trace/trace_replay.hpp"

using namespace q2sim;

namespace {

struct Fixture {
    Engine engine{1};
    StateRegistry reg;
    explicit Fixture(Backend b = Backend::Ket) : reg(engine, b) {
        reg.register_node("Alice");
        reg.register_node("Bob");
    }
};

}  // namespace

TEST(Registry, CreateQubitMakesSingletonPartition) {
    Fixture f;
    const QubitId q = f.reg.create_qubit("Alice", "aliceHalf", InitialState::Plus);
    const auto snap = f.reg.partition_of(q);
    EXPECT_EQ(snap.size, 1u);
    EXPECT_EQ(snap.member_labels, std::vector<std::string>{"aliceHalf"});
    const double r = 1 / std::sqrt(2.0);
    EXPECT_NEAR(f.reg.fidelity({q}, std::vector<Complex>{r, r}), 1.0, 1e-12);
}

TEST(Registry, TwoCreatesAreDistinctPartitions) {
    Fixture f;
    const QubitId a = f.reg.create_qubit("Alice", "a");
    const QubitId b = f.reg.create_qubit("Alice", "b");
    EXPECT_NE(f.reg.partition_of(a).id, f.reg.partition_of(b).id);
    EXPECT_EQ(f.reg.partition_count(), 2u);
}

TEST(Registry, DuplicateLabelRejected) {
    Fixture f;
    f.reg.create_qubit("Alice", "x");
    EXPECT_THROW(f.reg.create_qubit("Alice", "x"), std::invalid_argument);
}

TEST(Registry, LabelReusableAfterRelease) {
    Fixture f;
    RngStream rng(1, "m");
    const QubitId a = f.reg.create_qubit("Alice", "x");
    f.reg.measure_and_release(a, Basis::Z, rng);
    const QubitId b = f.reg.create_qubit("Alice", "x");
    EXPECT_NE(a, b);
}

TEST(Registry, UnknownNodeRejected) {
    Fixture f;
    EXPECT_THROW(f.reg.create_qubit("Carol", "c"), std::invalid_argument);
}

TEST(Registry, CrossPartitionGateMerges) {
    Fixture f;
    const QubitId a = f.reg.create_qubit("Alice", "a", InitialState::Plus);
    const QubitId b = f.reg.create_qubit("Alice", "b", InitialState::Plus);
    f.reg.apply_gate(GateKind::CZ, {a, b});
    EXPECT_EQ(f.reg.partition_count(), 1u);
    EXPECT_EQ(f.reg.partition_of(a).id, f.reg.partition_of(b).id);
    EXPECT_EQ(f.reg.partition_of(a).size, 2u);
    f.reg.check_invariants();
}

TEST(Registry, GateWithinPartitionDoesNotMerge) {
    Fixture f;
    const auto ids = f.reg.create_register("Alice", {"a", "b", "c", "d", "e"});
    f.reg.apply_gate(GateKind::CZ, {ids[0], ids[1]});
    f.reg.apply_gate(GateKind::H, {ids[3]});
    EXPECT_EQ(f.reg.partition_of(ids[3]).size, 5u);
    EXPECT_EQ(f.reg.partition_count(), 1u);
}

TEST(Registry, MeasureHalfOfBellLeavesSingleton) {
    Fixture f;
    RngStream rng(3, "m");
    const QubitId a = f.reg.create_qubit("Alice", "a");
    const QubitId b = f.reg.create_qubit("Alice", "b");
    f.reg.apply_gate(GateKind::H, {a});
    f.reg.apply_gate(GateKind::CNOT, {a, b});
    const int m = f.reg.measure_and_release(a, Basis::Z, rng);
    EXPECT_EQ(f.reg.partition_of(b).size, 1u);
    std::vector<Complex> ref(2);
    ref[static_cast<std::size_t>(m)] = 1.0;
    EXPECT_NEAR(f.reg.fidelity({b}, ref), 1.0, 1e-12);
    f.reg.check_invariants();
}

TEST(Registry, MeasuringLoneQubitRemovesPartition) {
    Fixture f;
    RngStream rng(3, "m");
    const QubitId a = f.reg.create_qubit("Alice", "a");
    f.reg.measure_and_release(a, Basis::Z, rng);
    EXPECT_EQ(f.reg.partition_count(), 0u);
    EXPECT_EQ(f.reg.live_qubits(), 0u);
}

TEST(Registry, DeadHandleRejected) {
    Fixture f;
    RngStream rng(3, "m");
    const QubitId a = f.reg.create_qubit("Alice", "a");
    const QubitId b = f.reg.create_qubit("Alice", "b");
    f.reg.measure_and_release(a, Basis::Z, rng);
    EXPECT_THROW(f.reg.measure_and_release(a, Basis::Z, rng), DeadQubitError);
    EXPECT_THROW(f.reg.apply_gate(GateKind::CZ, {a, b}), DeadQubitError);
    EXPECT_THROW(f.reg.partition_of(a), DeadQubitError);
}

TEST(Registry, PartitionOfAfterPartnerReleased) {
    Fixture f;
    RngStream rng(3, "m");
    const QubitId a = f.reg.create_qubit("Alice", "a", InitialState::Plus);
    const QubitId b = f.reg.create_qubit("Alice", "b", InitialState::Plus);
    EXPECT_EQ(f.reg.partition_of(a).size, 1u);
    f.reg.apply_gate(GateKind::CZ, {a, b});
    EXPECT_EQ(f.reg.partition_of(a).id, f.reg.partition_of(b).id);
    f.reg.measure_and_release(b, Basis::Z, rng);
    EXPECT_EQ(f.reg.partition_of(a).size, 1u);
}

TEST(Registry, MergeCapacityEnforced) {
    Engine e;
    BackendLimits lim;
    lim.ket_max_qubits = 3;
    StateRegistry reg(e, Backend::Ket, lim);
    reg.register_node("A");
    const auto x = reg.create_register("A", {"a", "b"});
    const auto y = reg.create_register("A", {"c", "d"});
    EXPECT_THROW(reg.apply_gate(GateKind::CZ, {x[0], y[0]}), CapacityError);
}

// Merging A,B then CZ equals merging B,A then CZ, up to qubit order.
TEST(RegistryProperty, MergeOrderDoesNotMatter) {
    RngStream rng(8, "circuits");
    const GateKind ones[] = {GateKind::H, GateKind::S, GateKind::X, GateKind::Y};
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t na = 1 + rng.below(2), nb = 1 + rng.below(2);
        std::vector<std::pair<GateKind, std::size_t>> prep;
        for (int g = 0; g < 6; ++g) prep.emplace_back(ones[rng.below(4)], rng.below(na + nb));
        const std::size_t ua = rng.below(na), ub = rng.below(nb);
        std::unique_ptr<QuantumState> results[2];
        for (int order = 0; order < 2; ++order) {
            Engine e;
            StateRegistry reg(e, Backend::Ket);
            reg.register_node("N");
            std::vector<QubitId> a, b;
            // The partition created first gets the lower id and leads the merge.
            if (order == 0) {
                for (std::size_t k = 0; k < na; ++k) a.push_back(reg.create_qubit("N", "a" + std::to_string(k)));
                for (std::size_t k = 0; k < nb; ++k) b.push_back(reg.create_qubit("N", "b" + std::to_string(k)));
            } else {
                for (std::size_t k = 0; k < nb; ++k) b.push_back(reg.create_qubit("N", "b" + std::to_string(k)));
                for (std::size_t k = 0; k < na; ++k) a.push_back(reg.create_qubit("N", "a" + std::to_string(k)));
            }
            std::vector<QubitId> all = a;
            all.insert(all.end(), b.begin(), b.end());
            for (auto [g, q] : prep) reg.apply_gate(g, {all[q]});
            // Join each side internally, then the cross CZ.
            for (std::size_t k = 1; k < na; ++k) reg.apply_gate(GateKind::CNOT, {a[0], a[k]});
            for (std::size_t k = 1; k < nb; ++k) reg.apply_gate(GateKind::CNOT, {b[0], b[k]});
            reg.apply_gate(GateKind::CZ, {a[ua], b[ub]});
            reg.check_invariants();
            results[order] = reg.ordered_state(all);
        }
        const auto& k0 = static_cast<const KetState&>(*results[0]);
        EXPECT_NEAR(results[1]->fidelity(k0.amplitudes()), 1.0, 1e-9);
    }
}

// Measuring in one partition leaves every other partition bit-identical.
TEST(RegistryProperty, NoCrossPartitionLeakage) {
    for (Backend b : {Backend::Ket, Backend::DensityMatrix, Backend::Stabilizer}) {
        Engine e;
        StateRegistry reg(e, b);
        reg.register_node("N");
        RngStream rng(4, "m");
        const auto p = reg.create_register("N", {"p0", "p1", "p2"});
        const auto q = reg.create_register("N", {"q0", "q1"});
        reg.apply_gate(GateKind::H, {p[0]});
        reg.apply_gate(GateKind::CNOT, {p[0], p[1]});
        reg.apply_gate(GateKind::H, {q[0]});
        reg.apply_gate(GateKind::CNOT, {q[0], q[1]});
        reg.apply_gate(GateKind::S, {q[1]});
        const auto before = reg.ordered_state(q);
        reg.measure_and_release(p[0], Basis::X, rng);
        reg.measure_and_release(p[2], Basis::Y, rng);
        const auto after = reg.ordered_state(q);
        if (b == Backend::Ket) {
            const auto& x = static_cast<const KetState&>(*before);
            const auto& y = static_cast<const KetState&>(*after);
            for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(x.amplitudes()[i], y.amplitudes()[i]);
        } else if (b == Backend::DensityMatrix) {
            const auto& x = static_cast<const DensityMatrixState&>(*before);
            const auto& y = static_cast<const DensityMatrixState&>(*after);
            for (std::size_t r = 0; r < 4; ++r)
                for (std::size_t c = 0; c < 4; ++c) EXPECT_EQ(x.element(r, c), y.element(r, c));
        } else {
            const auto& x = static_cast<const StabilizerState&>(*before);
            const auto& y = static_cast<const StabilizerState&>(*after);
            for (std::size_t k = 0; k < 2; ++k) {
                EXPECT_EQ(x.stabilizer(k).ops, y.stabilizer(k).ops);
                EXPECT_EQ(x.stabilizer(k).negative, y.stabilizer(k).negative);
            }
        }
    }
}

// Random operation sequences keep sum of partition sizes == live qubits.
TEST(RegistryProperty, PartitionInvariantUnderRandomOperations) {
    for (Backend b : {Backend::Ket, Backend::Stabilizer}) {
        Engine e;
        StateRegistry reg(e, b);
        reg.register_node("N");
        RngStream rng(12, "ops");
        std::vector<QubitId> live;
        int created = 0;
        for (int step = 0; step < 2000; ++step) {
            const auto op = rng.below(4);
            if (op == 0 || live.size() < 2) {
                live.push_back(reg.create_qubit("N", "x" + std::to_string(created++), InitialState::Plus));
            } else if (op == 1 && reg.largest_partition() < 10) {
                const auto i = rng.below(live.size());
                auto j = rng.below(live.size() - 1);
                if (j >= i) ++j;
                reg.apply_gate(GateKind::CZ, {live[i], live[j]});
            } else if (op == 2) {
                reg.apply_gate(GateKind::H, {live[rng.below(live.size())]});
            } else {
                const auto i = rng.below(live.size());
                if (rng.bernoulli(0.5)) {
                    reg.measure_and_release(live[i], static_cast<Basis>(rng.below(3)), rng);
                } else {
                    reg.lose(live[i], rng);
                }
                live.erase(live.begin() + static_cast<std::ptrdiff_t>(i));
            }
            reg.check_invariants();
            ASSERT_EQ(reg.live_qubits(), live.size());
        }
    }
}

TEST(Registry, GraphStateFidelityMatchesAcrossBackends) {
    const std::vector<Edge> edges{{0, 1}, {1, 2}, {0, 2}};
    for (Backend b : {Backend::Ket, Backend::DensityMatrix, Backend::Stabilizer}) {
        Engine e;
        StateRegistry reg(e, b);
        reg.register_node("N");
        const auto ids = reg.create_register("N", {"a", "b", "c"}, InitialState::Plus);
        reg.apply_cz_layer(ids, edges);
        EXPECT_NEAR(reg.graph_state_fidelity(ids, edges), 1.0, 1e-9);
        // Reordered handles see the relabelled graph.
        EXPECT_NEAR(reg.graph_state_fidelity({ids[2], ids[0], ids[1]}, edges), 1.0, 1e-9);
        EXPECT_NEAR(reg.graph_state_fidelity(ids, {{0, 1}}), 0.25, 1e-9) << backend_name(b);
    }
}

TEST(Registry, OrderedStateRequiresWholePartition) {
    Fixture f;
    const auto ids = f.reg.create_register("Alice", {"a", "b"});
    EXPECT_THROW(f.reg.ordered_state({ids[0]}), std::invalid_argument);
}

TEST(Registry, TraceEventsAndReplayAgree) {
    std::ostringstream out;
    TraceWriter w(out);
    Engine e;
    StateRegistry reg(e, Backend::Ket, default_limits(), &w);
    reg.register_node("Alice");
    RngStream rng(1, "m");
    const QubitId a = reg.create_qubit("Alice", "aliceHalf");
    const QubitId b = reg.create_qubit("Alice", "bobHalf");
    reg.apply_gate(GateKind::H, {a});
    reg.apply_gate(GateKind::CNOT, {a, b});
    reg.measure_and_release(a, Basis::Z, rng);
    const std::string text = out.str();
    EXPECT_NE(text.find(R"({"t":0,"ev":"init_qubit","node":"Alice","qubit":"aliceHalf"})"), std::string::npos);
    EXPECT_NE(text.find(R"({"t":0,"ev":"entangle","qubits":["aliceHalf","bobHalf"]})"), std::string::npos);
    std::istringstream in(text);
    const auto replay = TraceReplay::from_stream(in);
    EXPECT_EQ(replay.partitions(), (std::vector<std::vector<std::string>>{{"bobHalf"}}));
}
