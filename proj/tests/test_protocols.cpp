#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "dense_oracle.hpp"
#include "q2sim/protocols/cluster.hpp"
#include "q2sim/protocols/qlan.hpp"
#include "q2sim/protocols/swap_chain.hpp"
#include "q2sim/protocols/teleport.hpp"
#include "q2sim/trace/trace_replay.hpp"

using namespace q2sim;

namespace {

struct Bench {
    Engine engine;
    StateRegistry reg;
    Network net;
    explicit Bench(std::uint64_t seed, Backend b = Backend::Ket) : engine(seed), reg(engine, b), net(engine, reg) {
        net.add_node("n");
    }
};

std::pair<int, int> run_bsm(Bench& t, QubitId h1, QubitId h2) {
    std::pair<int, int> got{-1, -1};
    bsm(t.net, "n", h1, h2, [&](int a, int b) { got = {a, b}; });
    t.engine.run();
    return got;
}

std::vector<QubitId> make_bell(Bench& t, const std::string& a, const std::string& b) {
    const QubitId x = t.reg.create_qubit("n", a);
    const QubitId y = t.reg.create_qubit("n", b);
    t.reg.apply_gate(GateKind::H, {x});
    t.reg.apply_gate(GateKind::CNOT, {x, y});
    return {x, y};
}

void expect_phases_consistent(const ProtocolReport& r) {
    ASSERT_FALSE(r.phases.empty());
    EXPECT_EQ(r.phases.front().start_ns, 0);
    for (std::size_t k = 1; k < r.phases.size(); ++k) EXPECT_EQ(r.phases[k].start_ns, r.phases[k - 1].end_ns);
    for (const auto& p : r.phases) EXPECT_GE(p.duration(), 0) << p.name;
    EXPECT_EQ(r.phase_total(), r.completion_time_ns);
}

oracle::Mat matmul(const oracle::Mat& a, const oracle::Mat& b) {
    oracle::Mat c(2, std::vector<oracle::C>(2, 0.0));
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            for (int k = 0; k < 2; ++k) c[i][j] += a[i][k] * b[k][j];
        }
    }
    return c;
}

oracle::Mat correction_matrix(int b1, int b2) {
    oracle::Mat m = oracle::identity(2);
    for (GateKind g : pauli_correction(b1, b2)) m = matmul(oracle::one_qubit(std::string(gate_name(g)).c_str()), m);
    return m;
}

// True when a = c * b for a unit-modulus c.
bool equal_up_to_phase(const oracle::Mat& a, const oracle::Mat& b) {
    oracle::C ratio = 0.0;
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            if (std::abs(b[i][j]) > 1e-12) ratio = a[i][j] / b[i][j];
        }
    }
    if (std::abs(std::abs(ratio) - 1.0) > 1e-12) return false;
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            if (std::abs(a[i][j] - ratio * b[i][j]) > 1e-12) return false;
        }
    }
    return true;
}

}  // namespace

TEST(Bsm, FreshPhiPlusGivesZeroZero) {
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        Bench t(seed);
        auto p = make_bell(t, "x", "y");
        EXPECT_EQ(run_bsm(t, p[0], p[1]), std::make_pair(0, 0));
    }
}

TEST(Bsm, PsiPlusGivesZeroOne) {
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        Bench t(seed, Backend::Stabilizer);
        auto p = make_bell(t, "x", "y");
        t.reg.apply_gate(GateKind::X, {p[1]});
        EXPECT_EQ(run_bsm(t, p[0], p[1]), std::make_pair(0, 1));
    }
}

TEST(Bsm, HalvesOfTwoPairsAreUniform) {
    std::map<std::pair<int, int>, int> counts;
    const int trials = 4000;
    for (int k = 0; k < trials; ++k) {
        Bench t(static_cast<std::uint64_t>(k) + 1);
        auto p = make_bell(t, "a0", "b0");
        auto q = make_bell(t, "a1", "b1");
        ++counts[run_bsm(t, p[1], q[0])];
    }
    for (int b1 = 0; b1 < 2; ++b1) {
        for (int b2 = 0; b2 < 2; ++b2) EXPECT_NEAR(counts[std::make_pair(b1, b2)] / double(trials), 0.25, 0.03);
    }
}

TEST(Bsm, TakesGateTimes) {
    Bench t(1);
    auto p = make_bell(t, "x", "y");
    const SimTime end = bsm(t.net, "n", p[0], p[1], {});
    EXPECT_EQ(end, 40 + 20 + 300 + 300);
    Bench u(1);
    u.net.add_node("m");
    const QubitId x = u.reg.create_qubit("m", "x");
    const QubitId y = u.reg.create_qubit("n", "y");
    EXPECT_THROW(bsm(u.net, "n", x, y, {}), std::logic_error);
}

TEST(PauliCorrection, Table) {
    EXPECT_TRUE(pauli_correction(0, 0).empty());
    EXPECT_EQ(pauli_correction(0, 1), std::vector<GateKind>{GateKind::X});
    EXPECT_EQ(pauli_correction(1, 0), std::vector<GateKind>{GateKind::Z});
    EXPECT_EQ(pauli_correction(1, 1), (std::vector<GateKind>{GateKind::Z, GateKind::X}));
    EXPECT_THROW(pauli_correction(2, 0), std::invalid_argument);
}

// XOR of two frames equals applying both corrections in sequence, for all 16 outcome pairs.
TEST(PauliCorrection, XorAccumulationComposes) {
    for (int b1 = 0; b1 < 2; ++b1) {
        for (int b2 = 0; b2 < 2; ++b2) {
            for (int c1 = 0; c1 < 2; ++c1) {
                for (int c2 = 0; c2 < 2; ++c2) {
                    const auto seq = matmul(correction_matrix(c1, c2), correction_matrix(b1, b2));
                    EXPECT_TRUE(equal_up_to_phase(correction_matrix(b1 ^ c1, b2 ^ c2), seq));
                }
            }
        }
    }
}

// Teleporting through the bsm convention with the table gives |+> exactly.
TEST(PauliCorrection, TeleportFidelityOneForEveryOutcome) {
    std::set<std::pair<int, int>> seen;
    for (std::uint64_t seed = 1; seed <= 64; ++seed) {
        TeleportConfig cfg;
        cfg.distance_km = 1.0;
        cfg.backend = Backend::Ket;
        Engine e(seed);
        auto r = run_teleport(cfg, e);
        ASSERT_TRUE(r.success);
        EXPECT_NEAR(r.final_fidelity, 1.0, 1e-12);
        seen.emplace(r.outcomes[0], r.outcomes[1]);
    }
    EXPECT_EQ(seen.size(), 4u);
}

TEST(Teleport, InfiniteTdepAlwaysPerfect) {
    for (double km : {10.0, 100.0, 200.0, 300.0}) {
        for (Transport tr : {Transport::Reliable, Transport::Unreliable}) {
            for (bool congested : {false, true}) {
                TeleportConfig cfg;
                cfg.distance_km = km;
                cfg.transport = tr;
                cfg.congested = congested;
                for (std::uint64_t seed = 1; seed <= 5; ++seed) {
                    Engine e(seed);
                    auto r = run_teleport(cfg, e);
                    if (!r.success) continue;
                    EXPECT_NEAR(r.final_fidelity, 1.0, 1e-12);
                    expect_phases_consistent(r);
                }
            }
        }
    }
}

TEST(Teleport, IdleWaitArithmetic) {
    TeleportConfig cfg;
    cfg.distance_km = 100.0;
    cfg.transport = Transport::Unreliable;
    Engine e(3);
    auto r = run_teleport(cfg, e);
    ASSERT_TRUE(r.success);
    // Qubit leaves after the 80 ns prep batch; bits leave after the 660 ns BSM.
    EXPECT_EQ(r.wait_time_ns, (740 + 163'840 + 500'000) - (80 + 500'000));
    cfg.transport = Transport::Reliable;
    Engine e2(3);
    auto r2 = run_teleport(cfg, e2);
    EXPECT_EQ(r2.wait_time_ns, r.wait_time_ns + 2 * (10'240 + 500'000));
    EXPECT_EQ(r2.handshakes, 1u);
}

TEST(Teleport, FidelityDecreasesWithDistance) {
    double prev = 2.0;
    for (double km : {10.0, 100.0, 200.0, 300.0}) {
        TeleportConfig cfg;
        cfg.distance_km = km;
        cfg.t_dep_ms = 5.0;
        Engine e(1);
        auto r = run_teleport(cfg, e);
        ASSERT_TRUE(r.success);
        EXPECT_LT(r.final_fidelity, prev);
        prev = r.final_fidelity;
    }
}

TEST(Teleport, DensityMatrixFollowsLawPerTrial) {
    for (bool congested : {false, true}) {
        for (std::uint64_t seed = 1; seed <= 30; ++seed) {
            TeleportConfig cfg;
            cfg.distance_km = 50.0 + 10.0 * static_cast<double>(seed);
            cfg.t_dep_ms = 5.0;
            cfg.congested = congested;
            Engine e(seed);
            auto r = run_teleport(cfg, e);
            ASSERT_TRUE(r.success);
            EXPECT_NEAR(r.final_fidelity, 0.5 * (1.0 + std::exp(-r.wait_time_ns / 5e6)), 1e-12);
        }
    }
}

TEST(Teleport, CongestionDelaysCorrections) {
    double idle = 0, congested = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        TeleportConfig cfg;
        cfg.distance_km = 200.0;
        Engine e1(seed), e2(seed);
        idle += static_cast<double>(run_teleport(cfg, e1).wait_time_ns);
        cfg.congested = true;
        congested += static_cast<double>(run_teleport(cfg, e2).wait_time_ns);
    }
    EXPECT_GT(congested, idle);
}

TEST(Teleport, RejectsBadConfig) {
    TeleportConfig cfg;
    cfg.distance_km = 0.0;
    Engine e(1);
    EXPECT_THROW(run_teleport(cfg, e), std::invalid_argument);
    cfg.distance_km = 1.0;
    cfg.t_dep_ms = -1.0;
    EXPECT_THROW(run_teleport(cfg, e), std::invalid_argument);
}

TEST(SwapChain, NoiselessFidelityOneOnAllBackends) {
    for (std::size_t n : {3u, 8u, 64u}) {
        for (Backend b : {Backend::Ket, Backend::DensityMatrix, Backend::Stabilizer}) {
            SwapConfig cfg;
            cfg.nodes = n;
            cfg.backend = b;
            Engine e(17);
            auto r = run_swap_chain(cfg, e);
            ASSERT_TRUE(r.success) << r.failure;
            EXPECT_NEAR(r.final_fidelity, 1.0, 1e-9) << backend_name(b) << " N=" << n;
            EXPECT_EQ(r.outcomes.size(), 2 * (n - 2));
            expect_phases_consistent(r);
        }
    }
}

TEST(SwapChain, KetAndStabilizerSeeSameOutcomes) {
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        SwapConfig cfg;
        cfg.nodes = 20;
        cfg.backend = Backend::Ket;
        Engine e1(seed), e2(seed);
        auto a = run_swap_chain(cfg, e1);
        cfg.backend = Backend::Stabilizer;
        auto b = run_swap_chain(cfg, e2);
        EXPECT_EQ(a.outcomes, b.outcomes);
        EXPECT_EQ(a.completion_time_ns, b.completion_time_ns);
    }
}

TEST(SwapChain, SkippingCorrectionsBreaksFidelity) {
    int zero_frames = 0;
    double sum = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        SwapConfig cfg;
        cfg.nodes = 4;
        cfg.apply_corrections = false;
        Engine e(seed);
        auto r = run_swap_chain(cfg, e);
        ASSERT_TRUE(r.success);
        int z = 0, x = 0;
        for (std::size_t k = 0; k < r.outcomes.size(); k += 2) {
            z ^= r.outcomes[k];
            x ^= r.outcomes[k + 1];
        }
        // Any residual Pauli frame maps |Phi+> to an orthogonal Bell state.
        EXPECT_NEAR(r.final_fidelity, (z == 0 && x == 0) ? 1.0 : 0.0, 1e-12);
        zero_frames += (z == 0 && x == 0);
        sum += r.final_fidelity;
    }
    EXPECT_LT(sum / 100.0, 1.0);
    EXPECT_NEAR(sum / 100.0, zero_frames / 100.0, 1e-12);
}

TEST(SwapChain, TraceReplaysToBellPairBetweenEnds) {
    std::ostringstream out;
    TraceWriter w(out);
    SwapConfig cfg;
    cfg.nodes = 5;
    Engine e(2);
    auto r = run_swap_chain(cfg, e, &w);
    ASSERT_TRUE(r.success);
    std::istringstream in(out.str());
    auto replay = TraceReplay::from_stream(in);
    EXPECT_EQ(replay.partitions(), (std::vector<std::vector<std::string>>{{"a0", "b3"}}));
    EXPECT_EQ(replay.entanglement_graph().dump(),
              R"({"vertices":["n0","n1","n2","n3","n4"],"edges":[["n0","n4"]]})");
}

TEST(Cluster, TwoQubitKetOutcomesUniform) {
    std::map<std::vector<int>, int> counts;
    for (std::uint64_t seed = 1; seed <= 4000; ++seed) {
        Engine e(seed);
        ++counts[run_cluster(ClusterSpec{1, 2}, Backend::Ket, e).outcomes];
    }
    ASSERT_EQ(counts.size(), 4u);
    for (const auto& [k, c] : counts) EXPECT_NEAR(c / 4000.0, 0.25, 0.03);
}

TEST(Cluster, Counts) {
    Engine e(1);
    auto r = run_cluster(ClusterSpec{2, 2}, Backend::Stabilizer, e);
    EXPECT_TRUE(r.success);
    EXPECT_EQ(r.gates, 4u);
    EXPECT_EQ(r.measurements, 4u);
    expect_phases_consistent(r);
}

TEST(Cluster, LargeStabilizerLine) {
    Engine e(1);
    auto r = run_cluster(ClusterSpec{1, 4096}, Backend::Stabilizer, e);
    EXPECT_TRUE(r.success);
    EXPECT_EQ(r.measurements, 4096u);
    Engine e2(1);
    EXPECT_THROW(run_cluster(ClusterSpec{1, 16}, Backend::DensityMatrix, e2), CapacityError);
}

TEST(Qlan, ThreeClientsNoLossAllBackends) {
    for (Backend b : {Backend::Ket, Backend::DensityMatrix, Backend::Stabilizer}) {
        QlanConfig cfg;
        cfg.clients = 3;
        cfg.backend = b;
        Engine e(5);
        auto res = run_qlan_detailed(cfg, e);
        ASSERT_TRUE(res.report.success) << res.report.failure;
        EXPECT_NEAR(res.report.final_fidelity, 1.0, 1e-9) << backend_name(b);
        EXPECT_EQ(res.report.outcomes.size(), 2u);
        expect_phases_consistent(res.report);
        std::vector<std::string> names;
        for (const auto& p : res.report.phases) names.push_back(p.name);
        EXPECT_EQ(names, (std::vector<std::string>{"session", "distribution", "cluster", "measure", "correct"}));
    }
}

// The symbolic graph after the Y measurements is the client path, and the
// registry state of the clients matches it.
TEST(Qlan, SymbolicGraphMatchesState) {
    for (std::size_t m = 2; m <= 6; ++m) {
        for (std::uint64_t seed = 1; seed <= 4; ++seed) {
            QlanConfig cfg;
            cfg.clients = m;
            cfg.loss_p = 0.2;
            Engine e(seed);
            auto res = run_qlan_detailed(cfg, e);
            ASSERT_TRUE(res.report.success);
            EntGraph expect;
            for (std::size_t k = 0; k < m; ++k) expect.add_vertex(std::to_string(2 * k));
            for (std::size_t k = 0; k + 1 < m; ++k) expect.add_edge(std::to_string(2 * k), std::to_string(2 * k + 2));
            EXPECT_EQ(res.final_graph, expect);
            EXPECT_NEAR(res.report.final_fidelity, 1.0, 1e-9);
        }
    }
}

TEST(Qlan, LossIncreasesCompletionTime) {
    double t0 = 0, t3 = 0;
    int ok3 = 0;
    for (std::uint64_t seed = 1; seed <= 200; ++seed) {
        QlanConfig cfg;
        cfg.star_length_km = 50.0;
        Engine e0(seed), e3(seed);
        auto a = run_qlan(cfg, e0);
        ASSERT_TRUE(a.success);
        t0 += static_cast<double>(a.completion_time_ns);
        cfg.loss_p = 0.3;
        auto b = run_qlan(cfg, e3);
        if (b.success) {
            t3 += static_cast<double>(b.completion_time_ns);
            ++ok3;
        }
    }
    EXPECT_GT(t3 / ok3, t0 / 200.0);
}

TEST(Qlan, DistanceIncreasesCompletionTime) {
    QlanConfig cfg;
    Engine e1(1), e2(1);
    cfg.star_length_km = 1.0;
    const auto near = run_qlan(cfg, e1);
    cfg.star_length_km = 150.0;
    const auto far = run_qlan(cfg, e2);
    EXPECT_GT(far.completion_time_ns, near.completion_time_ns);
}

TEST(Qlan, RetryExhaustionReportsPhase) {
    QlanConfig cfg;
    cfg.loss_p = 0.9;
    cfg.max_attempts = 1;
    Engine e(3);
    auto r = run_qlan(cfg, e);
    EXPECT_FALSE(r.success);
    EXPECT_EQ(r.failed_phase, "distribution");
    EXPECT_NE(r.failure.find("retries exhausted"), std::string::npos);
}

TEST(Qlan, SessionPhaseEndsAtLastSynAck) {
    std::ostringstream out;
    TraceWriter w(out);
    QlanConfig cfg;
    cfg.client_lengths_km = {1.0, 7.0, 3.0};
    Engine e(9);
    auto r = run_qlan(cfg, e, &w);
    ASSERT_TRUE(r.success);
    SimTime last_syn_ack = 0;
    std::map<std::uint64_t, std::string> kinds;
    std::istringstream in(out.str());
    std::string line;
    std::vector<std::pair<SimTime, std::string>> phases;
    while (std::getline(in, line)) {
        auto j = nlohmann::json::parse(line);
        const std::string ev = j.at("ev");
        if (ev == "classical_send") kinds[j.at("id")] = j.at("kind");
        if (ev == "classical_deliver" && kinds[j.at("id")] == "syn_ack") last_syn_ack = j.at("t");
        if (ev == "protocol_phase") phases.emplace_back(j.at("t"), j.at("phase"));
    }
    ASSERT_NE(r.phase("session"), nullptr);
    EXPECT_EQ(r.phase("session")->end_ns, last_syn_ack);
    EXPECT_EQ(last_syn_ack, 2 * (10'240 + 35'000));
    ASSERT_EQ(phases.size(), r.phases.size());
    for (std::size_t k = 0; k < phases.size(); ++k) {
        EXPECT_EQ(phases[k].first, r.phases[k].start_ns);
        EXPECT_EQ(phases[k].second, r.phases[k].name);
    }
}

TEST(Qlan, Validation) {
    QlanConfig cfg;
    cfg.clients = 1;
    Engine e(1);
    EXPECT_THROW(run_qlan(cfg, e), std::invalid_argument);
    cfg.clients = 3;
    cfg.client_lengths_km = {1.0};
    EXPECT_THROW(run_qlan(cfg, e), std::invalid_argument);
}
