#ifndef PERFUSIM_FEM_SYSTEM_HPP
#define PERFUSIM_FEM_SYSTEM_HPP

#include <Eigen/Sparse>
#include <vector>

namespace perfusim::fem {

struct FemSystem {
    Eigen::SparseMatrix<double> matrix;
    Eigen::VectorXd rhs;
};

struct LinearSolverSettings {
    enum class Method { Auto, DirectLU, Gmres, BiCgStab };
    Method method = Method::Auto;
    double tolerance = 1e-10;    ///< relative residual target
    int max_iterations = 4000;   ///< Krylov iteration cap
    int direct_dof_limit = 600000;  ///< Auto picks the direct solver below this size
    int ilut_fill = 40;
    double ilut_drop = 1e-6;
};

struct LinearSolveInfo {
    int iterations = 0;          ///< 0 for direct solves
    double relative_residual = 0.0;
    const char* method = "";
};

/// Solve A x = b to the requested relative residual. Direct solves are
/// polished with iterative refinement if needed. Throws SolverError on a
/// singular matrix or stagnated iteration, reporting the iteration count.
Eigen::VectorXd linear_solve(const Eigen::SparseMatrix<double>& matrix,
                             const Eigen::VectorXd& rhs,
                             const LinearSolverSettings& settings = {},
                             LinearSolveInfo* info = nullptr);

/// Constrain dofs to fixed values by symmetric elimination: constrained rows
/// and columns are removed, the diagonal set to 1, and the right-hand side
/// corrected so free equations see the prescribed values. Duplicate
/// constraints must agree, otherwise ConstraintError.
void apply_dirichlet(FemSystem& system, const std::vector<int>& dofs,
                     const std::vector<double>& values);

}  // namespace perfusim::fem

#endif
