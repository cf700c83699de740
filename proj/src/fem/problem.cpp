#include "perfusim/fem/problem.hpp"

#include <set>

namespace perfusim::fem {

void PoroProblem::collect_constraints(const State& state, std::vector<int>& dofs,
                                      std::vector<double>& values) const {
    dofs.clear();
    values.clear();
    if (freeze_displacement) {
        for (int d = 0; d < n_u_dofs(); ++d) {
            dofs.push_back(d);
            values.push_back(state.displacement[d]);
        }
    } else {
        for (std::size_t k = 0; k < displacement_dirichlet_dofs.size(); ++k) {
            dofs.push_back(displacement_dirichlet_dofs[k]);
            values.push_back(displacement_dirichlet_values.empty()
                                 ? 0.0
                                 : displacement_dirichlet_values[k]);
        }
    }
    for (std::size_t k = 0; k < pressure_dirichlet_nodes.size(); ++k) {
        dofs.push_back(p_dof(pressure_dirichlet_nodes[k]));
        values.push_back(pressure_dirichlet_values.empty() ? 0.0
                                                           : pressure_dirichlet_values[k]);
    }
}

std::vector<int> outer_boundary_displacement_dofs(const msh::Mesh& mesh) {
    std::set<int> vertices;
    for (const auto& facet : mesh.boundary) {
        if (facet.kind != msh::BoundaryKind::Outer) continue;
        for (int i = 0; i < mesh.dim; ++i) vertices.insert(facet.vertices[i]);
    }
    std::vector<int> dofs;
    dofs.reserve(vertices.size() * mesh.dim);
    for (int v : vertices)
        for (int c = 0; c < mesh.dim; ++c) dofs.push_back(v * mesh.dim + c);
    return dofs;
}

}  // namespace perfusim::fem
