#ifndef PERFUSIM_COUPLING_HPP
#define PERFUSIM_COUPLING_HPP

#include <string>
#include <vector>

#include "perfusim/fem/problem.hpp"
#include "perfusim/mesh.hpp"
#include "perfusim/vascular_tree.hpp"

namespace perfusim::coupling {

/// Bell-shaped volumetric inflow attached to one supplying terminal:
///   theta_i(x) = gamma_i exp(-|x - x_i|^2 / (b r_i)^2).
struct InletSource {
    Vec3 center{Vec3::Zero()};
    double radius = 0.0;     ///< terminal vessel radius r_i [m]
    double flow = 0.0;       ///< Q_i [m^3/s]
    double width_factor = 3.0;  ///< b
    double amplitude = 0.0;  ///< gamma_i [1/s]
};

/// Pressure outlet at a draining terminal: quadratic pressure nodes within
/// capture_factor * r_i of the terminal get a homogeneous Dirichlet value.
struct OutletPort {
    Vec3 center{Vec3::Zero()};
    double radius = 0.0;
    double capture_factor = 3.0;
    std::vector<int> pressure_nodes;
};

/// One source per leaf segment of the supplying tree. The closed-form
/// amplitude integrates theta_i over the whole plane/space to Q_i:
///   gamma_i = Q_i / (pi b^2 r_i^2)        (2D)
///   gamma_i = Q_i / (pi b^2 r_i^2)^(3/2)  (3D)
std::vector<InletSource> build_sources(const vascular::VascularTree& tree, double width_factor);

/// Pointwise superposition theta(x) = sum_i theta_i(x).
double source_field(const std::vector<InletSource>& sources, const Vec3& x);

/// Rescale each amplitude so the discrete mesh-quadrature integral of
/// theta_i equals Q_i (corrects boundary truncation of the bell tails).
/// Throws DomainError if a source is effectively outside the mesh
/// (discrete integral < 1e-6 Q_i).
std::vector<InletSource> normalize_sources(std::vector<InletSource> sources,
                                           const msh::Mesh& mesh);

/// Capture quadratic pressure nodes within capture_factor * r_i of each
/// draining leaf. Overlapping captures are resolved by nearest center.
/// When the mesh carries Outflow-tagged facets, those facets' P2 nodes are
/// bound to the matching port id instead of using the radius search.
/// Throws DomainError if any port captures no node.
std::vector<OutletPort> bind_outlets(const vascular::VascularTree& tree, const msh::Mesh& mesh,
                                     const msh::P2Numbering& p2, double capture_factor);

struct MassBalance {
    double inflow = 0.0;            ///< discrete integral of theta
    double port_outflow = 0.0;      ///< Galerkin flux absorbed by the ports
    double boundary_leakage = 0.0;  ///< quadrature of w . n over Gamma_outer
    std::vector<double> per_port;
    double imbalance() const {
        const double scale = std::abs(inflow) > 0.0 ? std::abs(inflow) : 1.0;
        return std::abs(inflow - port_outflow - boundary_leakage) / scale;
    }
};

/// Discrete conservation report for a converged state: the residual entries
/// at constrained pressure dofs equal the flux each port absorbs.
MassBalance mass_balance_report(const fem::PoroProblem& problem, const fem::State& state,
                                const std::vector<InletSource>& sources,
                                const std::vector<OutletPort>& ports);

void write_mass_balance_csv(const MassBalance& balance, const std::string& path);

/// Sources and ports exported for reproducibility next to the tree files.
void write_coupling_json(const std::vector<InletSource>& sources,
                         const std::vector<OutletPort>& ports, const std::string& path);

}  // namespace perfusim::coupling

#endif
