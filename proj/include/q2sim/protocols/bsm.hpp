#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "q2sim/net/network.hpp"

namespace q2sim {

/// Bell-state measurement on the node's processor: CNOT(h1 -> h2), H(h1),
/// then Z on both. `done(b1, b2)` gets the outcomes of h1 and h2. Returns
/// the completion time.
inline SimTime bsm(Network& net, const std::string& node, QubitId h1, QubitId h2,
                   std::function<void(int, int)> done) {
    return net.local_ops(node,
                         {LocalOp::apply(GateKind::CNOT, {h1, h2}), LocalOp::apply(GateKind::H, {h1}),
                          LocalOp::measure(h1), LocalOp::measure(h2)},
                         [done = std::move(done)](const std::vector<int>& o) {
                             if (done) done(o[0], o[1]);
                         });
}

/// Gates that undo the Pauli frame a BSM with outcome (b1, b2) leaves on the
/// far qubit, in application order.
inline std::vector<GateKind> pauli_correction(int b1, int b2) {
    if ((b1 != 0 && b1 != 1) || (b2 != 0 && b2 != 1)) throw std::invalid_argument("BSM bits must be 0 or 1");
    std::vector<GateKind> out;
    if (b1) out.push_back(GateKind::Z);
    if (b2) out.push_back(GateKind::X);
    return out;
}

/// LocalOps applying pauli_correction(b1, b2) to q.
inline std::vector<LocalOp> correction_ops(QubitId q, int b1, int b2) {
    std::vector<LocalOp> ops;
    for (GateKind g : pauli_correction(b1, b2)) ops.push_back(LocalOp::apply(g, {q}));
    return ops;
}

}  // namespace q2sim
