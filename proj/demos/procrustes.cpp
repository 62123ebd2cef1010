// Minimal usage example: unbalanced orthogonal Procrustes, followed by the
// KKT residual and the second-order optimality check at the solution.

#include <iostream>

#include "stiefelflow/stiefelflow.hpp"

using namespace stiefelflow;

int main() {
    VectorR svals(6);
    for (int i = 0; i < 6; ++i) svals(i) = 0.5 + 0.3 * i;
    ProcrustesProblem prob = ProcrustesProblem::random(8, 6, 2, svals, /*seed=*/11);

    SolverConfig cfg;
    cfg.set_eta(2.0);
    cfg.stop_tol_residual = 1e-9;
    cfg.seed = 3;

    RunResult res = run(Engine::Projected, prob, cfg);
    std::cout << "projected: " << to_string(res.reason) << " after " << res.trace.back().k
              << " iterations, F = " << res.trace.back().F << "\n";

    StiefelPoint xhat(res.state.X);
    KktResidual kkt = kkt_residual(prob.gradient(xhat.matrix()), xhat.matrix(), res.M);
    std::cout << "KKT: stationarity " << kkt.stationarity << ", feasibility " << kkt.feasibility
              << ", projected " << kkt.projected << "\n";

    SecondOrderCheck soc = procrustes_second_order_check(prob, xhat, res.M);
    std::cout << "second-order: " << (soc.pass ? "pass" : "fail")
              << ", min(lambda_j + mu_i) = " << soc.min_value << "\n";
    return 0;
}
