#include "perfusim/fem/newton.hpp"

#include <cmath>
#include <sstream>

namespace perfusim::fem {

namespace {

double scaled_norm(const Eigen::VectorXd& residual, const std::vector<char>& constrained,
                   int n_u, const NewtonSettings& settings) {
    double su = 0.0, sp = 0.0;
    for (int i = 0; i < residual.size(); ++i) {
        if (constrained[i]) continue;
        const double v = residual[i];
        if (i < n_u)
            su += v * v;
        else
            sp += v * v;
    }
    return std::sqrt(su) / settings.residual_scale_u +
           std::sqrt(sp) / settings.residual_scale_p;
}

void add_scaled(State& state, const State& base, const Eigen::VectorXd& direction, double s,
                int n_u) {
    state.displacement = base.displacement + s * direction.head(n_u);
    state.pressure = base.pressure + s * direction.tail(direction.size() - n_u);
}

}  // namespace

NewtonResult newton_solve(const PoroProblem& problem, State initial,
                          const NewtonSettings& settings) {
    const int n_u = problem.n_u_dofs();
    const int n = problem.n_dofs();
    if (initial.displacement.size() != n_u)
        initial.displacement = Eigen::VectorXd::Zero(n_u);
    if (initial.pressure.size() != problem.n_p_dofs())
        initial.pressure = Eigen::VectorXd::Zero(problem.n_p_dofs());

    std::vector<int> bc_dofs;
    std::vector<double> bc_values;
    problem.collect_constraints(initial, bc_dofs, bc_values);
    std::vector<char> constrained(n, 0);
    for (std::size_t k = 0; k < bc_dofs.size(); ++k) {
        constrained[bc_dofs[k]] = 1;
        if (bc_dofs[k] < n_u)
            initial.displacement[bc_dofs[k]] = bc_values[k];
        else
            initial.pressure[bc_dofs[k] - n_u] = bc_values[k];
    }
    const std::vector<double> zeros(bc_dofs.size(), 0.0);

    NewtonResult result;
    result.state = std::move(initial);

    if (min_det_f(problem, result.state) <= 0.0)
        throw SolverError("newton_solve: initial state is inadmissible (det F <= 0)");

    Eigen::SparseMatrix<double> jacobian;
    Eigen::VectorXd residual;
    assemble_system(problem, result.state, jacobian, residual, settings.threads);
    double norm = scaled_norm(residual, constrained, n_u, settings);
    const double initial_norm = norm;

    for (int it = 0; it < settings.max_iterations; ++it) {
        if (norm <= settings.abs_tol || norm <= settings.rel_tol * initial_norm) {
            result.converged = true;
            result.final_residual = norm;
            return result;
        }

        FemSystem system{std::move(jacobian), -residual};
        apply_dirichlet(system, bc_dofs, zeros);
        const Eigen::VectorXd direction =
            linear_solve(system.matrix, system.rhs, settings.linear);

        double step = 1.0;
        State candidate;
        double candidate_norm = std::numeric_limits<double>::infinity();
        bool accepted = false;
        for (int ls = 0; ls < settings.max_line_search; ++ls) {
            add_scaled(candidate, result.state, direction, step, n_u);
            if (min_det_f(problem, candidate) > 0.0) {
                assemble_system(problem, candidate, jacobian, residual, settings.threads);
                candidate_norm = scaled_norm(residual, constrained, n_u, settings);
                if (std::isfinite(candidate_norm) && candidate_norm < norm) {
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if (!accepted)
            throw SolverError("newton_solve: line search failed at iteration " +
                              std::to_string(it) + " (residual " + std::to_string(norm) + ")");

        result.history.push_back({it, norm, step});
        result.state = std::move(candidate);
        norm = candidate_norm;
    }

    if (norm <= settings.abs_tol || norm <= settings.rel_tol * initial_norm) {
        result.converged = true;
        result.final_residual = norm;
        return result;
    }

    std::ostringstream msg;
    msg << "newton_solve: no convergence after " << settings.max_iterations
        << " iterations; residual history:";
    for (const auto& h : result.history) msg << " " << h.residual_norm;
    msg << " " << norm;
    throw SolverError(msg.str());
}

}  // namespace perfusim::fem
