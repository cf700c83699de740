#include "perfusim/coupling.hpp"

#include <cmath>
#include <fstream>
#include <json.hpp>
#include <numbers>

#include "perfusim/errors.hpp"
#include "perfusim/fem/assembly.hpp"
#include "perfusim/fem/fields.hpp"

namespace perfusim::coupling {

namespace {
constexpr double kPi = std::numbers::pi;
}

std::vector<InletSource> build_sources(const vascular::VascularTree& tree,
                                       double width_factor) {
    if (width_factor <= 0.0) throw DomainError("build_sources: width factor must be positive");
    const vascular::TreeAdjacency adj = vascular::build_adjacency(tree);
    std::vector<InletSource> sources;
    for (const auto& node : tree.nodes) {
        if (node.kind != vascular::NodeKind::Leaf) continue;
        const int seg = adj.parent_segment[node.id];
        if (seg < 0) throw StateError("build_sources: leaf without a parent segment");
        const auto& segment = tree.segments[seg];
        if (segment.radius <= 0.0 || segment.flow <= 0.0)
            throw StateError("build_sources: leaf segment lacks radius or flow");

        InletSource s;
        s.center = node.position;
        s.radius = segment.radius;
        s.flow = segment.flow;
        s.width_factor = width_factor;
        const double br2 = kPi * width_factor * width_factor * segment.radius * segment.radius;
        s.amplitude = tree.dim == 2 ? segment.flow / br2 : segment.flow / std::pow(br2, 1.5);
        sources.push_back(s);
    }
    return sources;
}

double source_field(const std::vector<InletSource>& sources, const Vec3& x) {
    double theta = 0.0;
    for (const auto& s : sources) {
        const double w = s.width_factor * s.radius;
        theta += s.amplitude * std::exp(-(x - s.center).squaredNorm() / (w * w));
    }
    return theta;
}

std::vector<InletSource> normalize_sources(std::vector<InletSource> sources,
                                           const msh::Mesh& mesh) {
    for (auto& s : sources) {
        const double discrete = fem::integrate(mesh, [&](const Vec3& x) {
            const double w = s.width_factor * s.radius;
            return s.amplitude * std::exp(-(x - s.center).squaredNorm() / (w * w));
        });
        if (discrete < 1e-6 * s.flow)
            throw DomainError("normalize_sources: source at (" + std::to_string(s.center.x()) +
                              ", " + std::to_string(s.center.y()) +
                              ") integrates to nearly zero on the mesh");
        s.amplitude *= s.flow / discrete;
    }
    return sources;
}

std::vector<OutletPort> bind_outlets(const vascular::VascularTree& tree, const msh::Mesh& mesh,
                                     const msh::P2Numbering& p2, double capture_factor) {
    if (capture_factor <= 0.0) throw DomainError("bind_outlets: capture factor must be positive");
    const vascular::TreeAdjacency adj = vascular::build_adjacency(tree);

    std::vector<OutletPort> ports;
    for (const auto& node : tree.nodes) {
        if (node.kind != vascular::NodeKind::Leaf) continue;
        const int seg = adj.parent_segment[node.id];
        if (seg < 0) throw StateError("bind_outlets: leaf without a parent segment");
        OutletPort port;
        port.center = node.position;
        port.radius = tree.segments[seg].radius;
        port.capture_factor = capture_factor;
        ports.push_back(port);
    }

    bool has_outflow_facets = false;
    for (const auto& facet : mesh.boundary)
        if (facet.kind == msh::BoundaryKind::Outflow) has_outflow_facets = true;

    if (has_outflow_facets) {
        // Resolved voids: consume the tagged facets; port ids index the ports.
        for (const auto& facet : mesh.boundary) {
            if (facet.kind != msh::BoundaryKind::Outflow) continue;
            if (facet.port_id < 0 || facet.port_id >= static_cast<int>(ports.size()))
                throw DomainError("bind_outlets: outflow facet references port " +
                                  std::to_string(facet.port_id) + " but the tree has " +
                                  std::to_string(ports.size()) + " leaves");
            for (int n : facet_p2_nodes(mesh, p2, facet))
                ports[facet.port_id].pressure_nodes.push_back(n);
        }
        for (auto& port : ports) {
            std::sort(port.pressure_nodes.begin(), port.pressure_nodes.end());
            port.pressure_nodes.erase(
                std::unique(port.pressure_nodes.begin(), port.pressure_nodes.end()),
                port.pressure_nodes.end());
        }
    } else {
        // Nodal ports: every P2 node within reach, nearest center wins.
        for (int n = 0; n < p2.node_count; ++n) {
            const Vec3 x = p2.node_position(mesh, n);
            int best = -1;
            double best_dist = std::numeric_limits<double>::max();
            for (std::size_t p = 0; p < ports.size(); ++p) {
                const double dist = (x - ports[p].center).norm();
                if (dist <= ports[p].capture_factor * ports[p].radius && dist < best_dist) {
                    best = static_cast<int>(p);
                    best_dist = dist;
                }
            }
            if (best >= 0) ports[best].pressure_nodes.push_back(n);
        }
    }

    for (std::size_t p = 0; p < ports.size(); ++p) {
        if (ports[p].pressure_nodes.empty())
            throw DomainError("bind_outlets: port " + std::to_string(p) + " at (" +
                              std::to_string(ports[p].center.x()) + ", " +
                              std::to_string(ports[p].center.y()) +
                              ") captured no pressure node; refine the mesh or increase the "
                              "capture factor");
    }
    return ports;
}

MassBalance mass_balance_report(const fem::PoroProblem& problem, const fem::State& state,
                                const std::vector<InletSource>& sources,
                                const std::vector<OutletPort>& ports) {
    MassBalance balance;
    balance.inflow = sources.empty() ? 0.0 : fem::integrate(*problem.mesh, [&](const Vec3& x) {
        return source_field(sources, x);
    });

    // Raw residual entries at the constrained pressure dofs carry the
    // discrete flux each port absorbs: R_i = int K grad p . grad N_i - int
    // theta N_i, and summing over all i gives exactly -inflow.
    const Eigen::VectorXd residual = fem::assemble_residual(problem, state);
    balance.per_port.resize(ports.size(), 0.0);
    for (std::size_t p = 0; p < ports.size(); ++p) {
        double flux = 0.0;
        for (int n : ports[p].pressure_nodes) flux -= residual[problem.p_dof(n)];
        balance.per_port[p] = flux;
        balance.port_outflow += flux;
    }
    balance.boundary_leakage = fem::outer_boundary_flux(problem, state);
    return balance;
}

void write_mass_balance_csv(const MassBalance& balance, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot open '" + path + "' for writing");
    out << "quantity,value\n";
    char buf[128];
    std::snprintf(buf, sizeof(buf), "inflow,%.17g\n", balance.inflow);
    out << buf;
    std::snprintf(buf, sizeof(buf), "port_outflow,%.17g\n", balance.port_outflow);
    out << buf;
    std::snprintf(buf, sizeof(buf), "boundary_leakage,%.17g\n", balance.boundary_leakage);
    out << buf;
    std::snprintf(buf, sizeof(buf), "relative_imbalance,%.17g\n", balance.imbalance());
    out << buf;
    for (std::size_t p = 0; p < balance.per_port.size(); ++p) {
        std::snprintf(buf, sizeof(buf), "port_%zu_outflow,%.17g\n", p, balance.per_port[p]);
        out << buf;
    }
}

void write_coupling_json(const std::vector<InletSource>& sources,
                         const std::vector<OutletPort>& ports, const std::string& path) {
    nlohmann::ordered_json j;
    j["sources"] = nlohmann::ordered_json::array();
    for (const auto& s : sources) {
        nlohmann::ordered_json js;
        js["x"] = {s.center.x(), s.center.y(), s.center.z()};
        js["radius"] = s.radius;
        js["flow"] = s.flow;
        js["width_factor"] = s.width_factor;
        js["amplitude"] = s.amplitude;
        j["sources"].push_back(js);
    }
    j["ports"] = nlohmann::ordered_json::array();
    for (const auto& p : ports) {
        nlohmann::ordered_json jp;
        jp["x"] = {p.center.x(), p.center.y(), p.center.z()};
        jp["radius"] = p.radius;
        jp["capture_factor"] = p.capture_factor;
        jp["captured_nodes"] = p.pressure_nodes.size();
        j["ports"].push_back(jp);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot open '" + path + "' for writing");
    out << j.dump(2) << "\n";
}

}  // namespace perfusim::coupling
