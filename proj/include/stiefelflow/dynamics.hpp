#pragma once

#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "stiefelflow/manifold.hpp"
#include "stiefelflow/matrix_io.hpp"
#include "stiefelflow/problems.hpp"
#include "stiefelflow/random.hpp"
#include "stiefelflow/sylvester.hpp"
#include "stiefelflow/types.hpp"

namespace stiefelflow {

enum class Engine { Lagrange, Projected };

inline const char* to_string(Engine e) {
    return e == Engine::Lagrange ? "lagrange" : "projected";
}

enum class TerminationReason { Converged, MaxIterations, Diverged, SylvesterSingular, RankDeficient };

inline const char* to_string(TerminationReason r) {
    switch (r) {
        case TerminationReason::Converged: return "Converged";
        case TerminationReason::MaxIterations: return "MaxIterations";
        case TerminationReason::Diverged: return "Diverged";
        case TerminationReason::SylvesterSingular: return "SylvesterSingular";
        case TerminationReason::RankDeficient: return "RankDeficient";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Solver configuration. The damped systems are
//   Xdd + eta_x Xd = -G - X M         (Lagrange, M from the Sylvester solve)
//   Cdd + eta_c Cd + K (.) C = 0      (constraint dynamic, Hadamard K)
//   Xdd + eta   Xd = -P(G)            (projected, with per-step retraction)
// K is either the constant nu (the case the stability theory covers) or a
// full p x p positive matrix applied elementwise.
// ---------------------------------------------------------------------------
struct SolverConfig {
    double h = 0.05;
    double eta_x = 5.0;
    double eta_c = 5.0;
    double nu = 10.0;
    std::optional<MatrixR> K;  // overrides nu when set
    long max_iters = 50000;
    double stop_tol_residual = 1e-8;
    double stop_tol_constraint = 1e-9;
    std::uint64_t seed = 0;
    double init_range = 100.0;
    ManifoldTolerances manifold_tol{};
    double sylvester_sing_tol = 1e-12;

    SolverConfig& set_eta(double eta) {
        eta_x = eta;
        eta_c = eta;
        return *this;
    }

    void validate(Index p = -1) const {
        if (!(h > 0.0)) throw ConfigError("SolverConfig: h must be > 0");
        if (!(eta_x > 0.0) || !(eta_c > 0.0)) throw ConfigError("SolverConfig: damping must be > 0");
        if (K) {
            if (p >= 0 && (K->rows() != p || K->cols() != p))
                throw ConfigError("SolverConfig: K must be p x p");
            if (K->minCoeff() <= 0.0) throw ConfigError("SolverConfig: K entries must be > 0");
        } else if (!(nu > 0.0)) {
            throw ConfigError("SolverConfig: nu must be > 0");
        }
        if (max_iters < 0) throw ConfigError("SolverConfig: max_iters must be >= 0");
        if (!(init_range > 0.0)) throw ConfigError("SolverConfig: init_range must be > 0");
    }

    MatrixR stiffness(Index p) const {
        if (K) {
            if (K->rows() != p || K->cols() != p) throw ConfigError("SolverConfig: K must be p x p");
            return *K;
        }
        return MatrixR::Constant(p, p, nu);
    }
};

struct SolverState {
    MatrixR X;
    MatrixR V;
    long k = 0;
    double t = 0.0;
};

struct TraceRecord {
    long k = 0;
    double F = 0.0;
    double norm_C = 0.0;
    double norm_stat = 0.0;  // |G + X M| (Lagrange) or |P(G)| (projected)
    double subspace_dist = std::numeric_limits<double>::quiet_NaN();
    double wall_time = 0.0;  // seconds since run start; in-memory diagnostic only
};

struct RunResult {
    SolverState state;            // final state; projected engine: X retracted
    MultiplierMatrix M;           // last multiplier (projected: -sym(X^T G))
    std::vector<TraceRecord> trace;
    TerminationReason reason = TerminationReason::MaxIterations;
};

/// Right-hand side of the multiplier Sylvester equation,
///   T = K (.) (X^T X - I) - G^T X - X^T G + 2 V^T V
/// plus (eta_c - eta_x)(V^T X + X^T V) when the dampings differ.
inline MatrixR assemble_T(const MatrixR& x, const MatrixR& v, const MatrixR& g,
                          const SolverConfig& cfg) {
    const Index p = x.cols();
    MatrixR xtx = x.transpose() * x;
    xtx.diagonal().array() -= 1.0;
    MatrixR t = cfg.stiffness(p).cwiseProduct(xtx);
    t.noalias() -= g.transpose() * x;
    t.noalias() -= x.transpose() * g;
    t.noalias() += 2.0 * v.transpose() * v;
    if (cfg.eta_c != cfg.eta_x) {
        MatrixR vtx = v.transpose() * x;
        t += (cfg.eta_c - cfg.eta_x) * (vtx + vtx.transpose());
    }
    return symPart(t);
}

namespace detail {

inline void check_finite(const MatrixR& x, const MatrixR& v) {
    if (!x.allFinite() || !v.allFinite()) throw NonFinite("solver state has non-finite entries");
}

// One Lagrange evaluation at the current state: gradient, multiplier and the
// residual norms used for the stop test and the trace.
template <StiefelProblem P>
struct LagrangeEval {
    MatrixR G;
    MultiplierMatrix M;
    MatrixR Psi;  // G + X M
    double norm_stat;
    double norm_C;

    LagrangeEval(const SolverState& s, const P& prob, const SolverConfig& cfg) {
        G = prob.gradient(s.X);
        MatrixR T = assemble_T(s.X, s.V, G, cfg);
        M = solve_symmetric_sylvester(s.X.transpose() * s.X, T, cfg.sylvester_sing_tol);
        Psi = G + s.X * M;
        norm_stat = Psi.norm();
        norm_C = constraint(s.X).norm();
    }
};

// One projected evaluation: the state is first replaced by its polar
// retraction (the discrete system lists the retraction first), the gradient
// is taken at the retracted point and projected.
template <StiefelProblem P>
struct ProjectedEval {
    MatrixR G;
    MatrixR Psi;  // projected gradient at the retracted point
    double norm_stat;
    double norm_C;

    ProjectedEval(SolverState& s, const P& prob, const SolverConfig& cfg) {
        StiefelPoint xr = polar_retract(s.X, cfg.manifold_tol);
        s.X = xr.matrix();
        G = prob.gradient(s.X);
        if constexpr (P::uses_full_projection) {
            Psi = tangent_project(xr, G);
        } else {
            Psi = G - s.X * (s.X.transpose() * G);
        }
        norm_stat = Psi.norm();
        norm_C = constraint(s.X).norm();
    }
};

// Symplectic Euler update: velocity first, then position with the new
// velocity.
inline void advance(SolverState& s, const MatrixR& psi, double eta, double h) {
    s.V -= h * (psi + eta * s.V);
    s.X += h * s.V;
    s.k += 1;
    s.t = static_cast<double>(s.k) * h;
    check_finite(s.X, s.V);
}

}  // namespace detail

/// One symplectic Euler step of the Lagrange system. Position update uses the
/// new velocity. Trajectories are free to leave the manifold; the constraint
/// dynamic pulls them back.
template <StiefelProblem P>
SolverState lagrange_step(const SolverState& state, const P& prob, const SolverConfig& cfg) {
    SolverState s = state;
    detail::LagrangeEval<P> eval(s, prob, cfg);
    detail::advance(s, eval.Psi, cfg.eta_x, cfg.h);
    return s;
}

/// One symplectic Euler step of the projected system: retract, evaluate the
/// gradient at the retracted point, project, update.
template <StiefelProblem P>
SolverState projected_step(const SolverState& state, const P& prob, const SolverConfig& cfg) {
    SolverState s = state;
    detail::ProjectedEval<P> eval(s, prob, cfg);
    detail::advance(s, eval.Psi, cfg.eta_x, cfg.h);
    return s;
}

template <StiefelProblem P>
void record(std::vector<TraceRecord>& trace, const SolverState& s, const P& prob,
            double norm_stat, double norm_C, const MatrixR* reference_basis, double wall) {
    TraceRecord r;
    r.k = s.k;
    r.F = prob.objective(s.X);
    r.norm_C = norm_C;
    r.norm_stat = norm_stat;
    if (reference_basis) r.subspace_dist = subspace_distance(s.X, *reference_basis);
    r.wall_time = wall;
    trace.push_back(r);
}

// Observer invoked once per recorded iterate; for the projected engine the
// state passed in holds the retracted X.
using IterateObserver = std::function<void(const SolverState&, const TraceRecord&)>;

/// Run one engine from an explicit initial state. Records one TraceRecord per
/// iterate (including the initial one) and stops when both the stationarity
/// and constraint norms are below their thresholds, on divergence, or at
/// max_iters. Failure modes are encoded in the termination reason.
template <StiefelProblem P>
RunResult run_from(Engine engine, const P& prob, SolverState state, const SolverConfig& cfg,
                   const MatrixR* reference_basis = nullptr,
                   const IterateObserver& observer = {}) {
    cfg.validate(prob.cols());
    require(state.X.rows() == prob.rows() && state.X.cols() == prob.cols(),
            "run_from: X0 shape mismatch");
    require(state.V.rows() == prob.rows() && state.V.cols() == prob.cols(),
            "run_from: V0 shape mismatch");

    RunResult out;
    out.reason = TerminationReason::MaxIterations;
    out.trace.reserve(static_cast<std::size_t>(std::min<long>(cfg.max_iters + 1, 1 << 20)));
    const auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&t0] {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    };

    try {
        for (long k = 0;; ++k) {
            double norm_stat = 0.0, norm_C = 0.0;
            if (engine == Engine::Lagrange) {
                detail::LagrangeEval<P> eval(state, prob, cfg);
                out.M = eval.M;
                norm_stat = eval.norm_stat;
                norm_C = eval.norm_C;
                record(out.trace, state, prob, norm_stat, norm_C, reference_basis, elapsed());
                if (observer) observer(state, out.trace.back());
                if (norm_stat <= cfg.stop_tol_residual && norm_C <= cfg.stop_tol_constraint) {
                    out.reason = TerminationReason::Converged;
                    break;
                }
                if (k >= cfg.max_iters) break;
                detail::advance(state, eval.Psi, cfg.eta_x, cfg.h);
            } else {
                detail::ProjectedEval<P> eval(state, prob, cfg);  // retracts state.X
                out.M = -symPart(state.X.transpose() * eval.G);
                norm_stat = eval.norm_stat;
                norm_C = eval.norm_C;
                record(out.trace, state, prob, norm_stat, norm_C, reference_basis, elapsed());
                if (observer) observer(state, out.trace.back());
                if (norm_stat <= cfg.stop_tol_residual && norm_C <= cfg.stop_tol_constraint) {
                    out.reason = TerminationReason::Converged;
                    break;
                }
                if (k >= cfg.max_iters) break;
                detail::advance(state, eval.Psi, cfg.eta_x, cfg.h);
            }
        }
    } catch (const NonFinite&) {
        out.reason = TerminationReason::Diverged;
    } catch (const SylvesterSingular&) {
        out.reason = TerminationReason::SylvesterSingular;
    } catch (const RankDeficient&) {
        out.reason = TerminationReason::RankDeficient;
    }

    out.state = std::move(state);
    return out;
}

/// Run with the standard initialization: X0 entries uniform in
/// [-init_range, init_range] drawn from cfg.seed, V0 = 0.
template <StiefelProblem P>
RunResult run(Engine engine, const P& prob, const SolverConfig& cfg,
              const MatrixR* reference_basis = nullptr) {
    Rng rng(cfg.seed);
    SolverState s;
    s.X = uniform_matrix(prob.rows(), prob.cols(), cfg.init_range, rng);
    s.V = MatrixR::Zero(prob.rows(), prob.cols());
    return run_from(engine, prob, std::move(s), cfg, reference_basis);
}

// ---------------------------------------------------------------------------
// Trace output. One CSV row per iteration, 17 significant digits. The
// wall_time_s column is kept for schema stability but always written as 0 so
// that reruns of the same seed produce byte-identical files.
// ---------------------------------------------------------------------------
inline void write_trace_csv(const std::string& path, const std::vector<TraceRecord>& trace) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write trace file: " + path);
    out << "k,F,norm_C,norm_stat,subspace_dist,wall_time_s\n";
    for (const TraceRecord& r : trace) {
        out << r.k << ',' << format_double(r.F) << ',' << format_double(r.norm_C) << ','
            << format_double(r.norm_stat) << ',' << format_double(r.subspace_dist) << ",0\n";
    }
}

struct ParsedTrace {
    std::vector<TraceRecord> records;
};

inline ParsedTrace read_trace_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read trace file: " + path);
    std::string line;
    if (!std::getline(in, line) || line != "k,F,norm_C,norm_stat,subspace_dist,wall_time_s")
        throw ConfigError("bad trace header in " + path);
    ParsedTrace t;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::istringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() != 6) throw ConfigError("bad trace row in " + path + ": " + line);
        try {
            TraceRecord r;
            r.k = std::stol(fields[0]);
            r.F = std::stod(fields[1]);          // stod accepts nan/inf, iostreams do not
            r.norm_C = std::stod(fields[2]);
            r.norm_stat = std::stod(fields[3]);
            r.subspace_dist = std::stod(fields[4]);
            r.wall_time = std::stod(fields[5]);
            t.records.push_back(r);
        } catch (const std::exception&) {
            throw ConfigError("bad trace row in " + path + ": " + line);
        }
    }
    return t;
}

// ---------------------------------------------------------------------------
// Log-envelope slope of a decaying oscillatory series. Fits a line through
// log(value) at the local maxima (the envelope); falls back to all samples
// above the floor when fewer than two peaks exist (monotone decay).
// ---------------------------------------------------------------------------
struct EnvelopeFit {
    double slope = std::numeric_limits<double>::quiet_NaN();
    int peaks_used = 0;
    bool from_peaks = false;
};

inline EnvelopeFit fit_log_envelope_slope(const std::vector<double>& times,
                                          const std::vector<double>& values,
                                          double floor = 1e-12) {
    require(times.size() == values.size(), "fit_log_envelope_slope: size mismatch");
    std::vector<std::size_t> idx;
    for (std::size_t i = 1; i + 1 < values.size(); ++i)
        if (values[i] >= values[i - 1] && values[i] >= values[i + 1] && values[i] > floor)
            idx.push_back(i);

    EnvelopeFit fit;
    fit.from_peaks = idx.size() >= 2;
    if (!fit.from_peaks) {
        idx.clear();
        for (std::size_t i = 0; i < values.size(); ++i)
            if (values[i] > floor) idx.push_back(i);
    }
    fit.peaks_used = static_cast<int>(idx.size());
    if (idx.size() < 2) return fit;

    // least squares for log(v) = a + slope * t
    double st = 0, sl = 0, stt = 0, stl = 0;
    for (std::size_t i : idx) {
        const double t = times[i], l = std::log(values[i]);
        st += t;
        sl += l;
        stt += t * t;
        stl += t * l;
    }
    const double m = static_cast<double>(idx.size());
    const double denom = m * stt - st * st;
    if (denom <= 0) return fit;
    fit.slope = (m * stl - st * sl) / denom;
    return fit;
}

}  // namespace stiefelflow
