// Minimal usage example: compute the eigenspace of the 3 smallest eigenvalues
// of a random SPD matrix with both engines and compare against the direct
// eigensolver.

#include <iostream>

#include "stiefelflow/stiefelflow.hpp"

using namespace stiefelflow;

int main() {
    VectorR spectrum(12);
    for (int i = 0; i < 12; ++i) spectrum(i) = 1.0 + i;
    EigProblem prob = EigProblem::with_spectrum(spectrum, 3, /*seed=*/7);
    EigReference ref = eig_reference(prob);

    SolverConfig cfg;
    cfg.set_eta(8.0);
    cfg.seed = 1;

    for (Engine engine : {Engine::Lagrange, Engine::Projected}) {
        RunResult res = run(engine, prob, cfg, &ref.basis);
        std::cout << to_string(engine) << ": " << to_string(res.reason) << " after "
                  << res.trace.back().k << " iterations\n"
                  << "  F = " << res.trace.back().F << "  (reference " << ref.objective << ")\n"
                  << "  subspace distance = " << res.trace.back().subspace_dist << "\n";
    }
    return 0;
}
