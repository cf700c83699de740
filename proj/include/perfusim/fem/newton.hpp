#ifndef PERFUSIM_FEM_NEWTON_HPP
#define PERFUSIM_FEM_NEWTON_HPP

#include <vector>

#include "perfusim/fem/assembly.hpp"
#include "perfusim/fem/system.hpp"

namespace perfusim::fem {

struct NewtonSettings {
    double abs_tol = 1e-9;
    double rel_tol = 1e-8;
    int max_iterations = 50;
    int max_line_search = 40;
    /// Block scales used to nondimensionalize the residual norm; callers set
    /// them from problem data (momentum ~ E * measure^((d-1)/d), pressure
    /// ~ total inflow) to keep tolerances mesh- and unit-robust.
    double residual_scale_u = 1.0;
    double residual_scale_p = 1.0;
    int threads = 1;
    LinearSolverSettings linear;
};

struct NewtonIterate {
    int iteration = 0;
    double residual_norm = 0.0;  ///< scaled norm before the step
    double step = 0.0;           ///< accepted line-search fraction
};

struct NewtonResult {
    State state;
    std::vector<NewtonIterate> history;
    bool converged = false;
    double final_residual = 0.0;
};

/// Monolithic Newton on (u, p) with backtracking line search. Steps that
/// produce det F <= 0 or fail to reduce the scaled residual are halved.
/// Dirichlet values are imposed on the initial state; increments keep them.
/// Throws SolverError with the iteration history if not converged within
/// max_iterations.
NewtonResult newton_solve(const PoroProblem& problem, State initial,
                          const NewtonSettings& settings = {});

}  // namespace perfusim::fem

#endif
