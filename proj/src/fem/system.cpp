#include "perfusim/fem/system.hpp"

#include <Eigen/SparseLU>
#include <cmath>
#include <unsupported/Eigen/IterativeSolvers>

#include "perfusim/errors.hpp"

namespace perfusim::fem {

namespace {

double relative_residual(const Eigen::SparseMatrix<double>& a, const Eigen::VectorXd& x,
                         const Eigen::VectorXd& b) {
    const double bn = b.norm();
    if (bn == 0.0) return x.norm() == 0.0 ? 0.0 : 1.0;
    return (a * x - b).norm() / bn;
}

Eigen::VectorXd solve_direct(const Eigen::SparseMatrix<double>& a, const Eigen::VectorXd& b,
                             const LinearSolverSettings& settings, LinearSolveInfo* info) {
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(a);
    if (lu.info() != Eigen::Success)
        throw SolverError("sparse LU factorization failed (matrix singular or structurally "
                          "deficient)");
    Eigen::VectorXd x = lu.solve(b);
    // Iterative refinement recovers the last digits on ill-scaled systems.
    for (int pass = 0; pass < 3 && relative_residual(a, x, b) > settings.tolerance; ++pass) {
        const Eigen::VectorXd correction = lu.solve(b - a * x);
        if (!correction.allFinite()) break;
        x += correction;
    }
    const double rel = relative_residual(a, x, b);
    if (!x.allFinite() || rel > std::max(settings.tolerance * 100.0, 1e-8))
        throw SolverError("direct solve produced residual " + std::to_string(rel));
    if (info) {
        info->iterations = 0;
        info->relative_residual = rel;
        info->method = "sparse-lu";
    }
    return x;
}

template <typename Solver>
Eigen::VectorXd solve_krylov(Solver& solver, const Eigen::SparseMatrix<double>& a,
                             const Eigen::VectorXd& b, const LinearSolverSettings& settings,
                             LinearSolveInfo* info, const char* name) {
    solver.setTolerance(settings.tolerance);
    solver.setMaxIterations(settings.max_iterations);
    solver.preconditioner().setFillfactor(settings.ilut_fill);
    solver.preconditioner().setDroptol(settings.ilut_drop);
    solver.compute(a);
    if (solver.info() != Eigen::Success)
        throw SolverError(std::string(name) + ": preconditioner setup failed");
    const Eigen::VectorXd x = solver.solve(b);
    if (solver.info() != Eigen::Success || relative_residual(a, x, b) > settings.tolerance * 10.0)
        throw SolverError(std::string(name) + " stalled after " +
                          std::to_string(solver.iterations()) + " iterations, residual " +
                          std::to_string(solver.error()));
    if (info) {
        info->iterations = static_cast<int>(solver.iterations());
        info->relative_residual = relative_residual(a, x, b);
        info->method = name;
    }
    return x;
}

}  // namespace

Eigen::VectorXd linear_solve(const Eigen::SparseMatrix<double>& matrix,
                             const Eigen::VectorXd& rhs, const LinearSolverSettings& settings,
                             LinearSolveInfo* info) {
    if (matrix.rows() != matrix.cols() || matrix.rows() != rhs.size())
        throw SolverError("linear_solve: dimension mismatch");
    if (rhs.norm() == 0.0) {
        if (info) *info = {0, 0.0, "trivial"};
        return Eigen::VectorXd::Zero(rhs.size());
    }

    using Method = LinearSolverSettings::Method;
    Method method = settings.method;
    if (method == Method::Auto)
        method = matrix.rows() <= settings.direct_dof_limit ? Method::DirectLU : Method::Gmres;

    switch (method) {
        case Method::DirectLU:
            return solve_direct(matrix, rhs, settings, info);
        case Method::Gmres: {
            try {
                Eigen::GMRES<Eigen::SparseMatrix<double>, Eigen::IncompleteLUT<double>> gmres;
                gmres.set_restart(200);
                return solve_krylov(gmres, matrix, rhs, settings, info, "gmres-ilut");
            } catch (const SolverError&) {
                if (settings.method == Method::Auto)
                    return solve_direct(matrix, rhs, settings, info);
                throw;
            }
        }
        case Method::BiCgStab: {
            Eigen::BiCGSTAB<Eigen::SparseMatrix<double>, Eigen::IncompleteLUT<double>> bicg;
            return solve_krylov(bicg, matrix, rhs, settings, info, "bicgstab-ilut");
        }
        default:
            throw SolverError("linear_solve: unknown method");
    }
}

void apply_dirichlet(FemSystem& system, const std::vector<int>& dofs,
                     const std::vector<double>& values) {
    const Eigen::Index n = system.matrix.rows();
    if (dofs.size() != values.size())
        throw ConstraintError("apply_dirichlet: dof/value count mismatch");

    std::vector<char> constrained(n, 0);
    std::vector<double> value(n, 0.0);
    for (std::size_t k = 0; k < dofs.size(); ++k) {
        const int d = dofs[k];
        if (d < 0 || d >= n) throw ConstraintError("apply_dirichlet: dof out of range");
        if (constrained[d] && value[d] != values[k])
            throw ConstraintError("apply_dirichlet: dof " + std::to_string(d) +
                                  " constrained to two different values");
        constrained[d] = 1;
        value[d] = values[k];
    }

    // Right-hand-side correction from eliminated columns.
    for (Eigen::Index col = 0; col < n; ++col) {
        if (!constrained[col] || value[col] == 0.0) continue;
        for (Eigen::SparseMatrix<double>::InnerIterator it(system.matrix, col); it; ++it) {
            if (!constrained[it.row()]) system.rhs[it.row()] -= it.value() * value[col];
        }
    }

    std::vector<Eigen::Triplet<double>> triplets;
    triplets.reserve(system.matrix.nonZeros() + dofs.size());
    for (Eigen::Index col = 0; col < n; ++col) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(system.matrix, col); it; ++it) {
            if (!constrained[it.row()] && !constrained[col])
                triplets.emplace_back(it.row(), col, it.value());
        }
    }
    for (Eigen::Index d = 0; d < n; ++d) {
        if (constrained[d]) {
            triplets.emplace_back(d, d, 1.0);
            system.rhs[d] = value[d];
        }
    }
    Eigen::SparseMatrix<double> reduced(n, n);
    reduced.setFromTriplets(triplets.begin(), triplets.end());
    system.matrix.swap(reduced);
}

}  // namespace perfusim::fem
