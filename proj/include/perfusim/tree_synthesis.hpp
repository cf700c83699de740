#ifndef PERFUSIM_TREE_SYNTHESIS_HPP
#define PERFUSIM_TREE_SYNTHESIS_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "perfusim/rng.hpp"
#include "perfusim/vascular_tree.hpp"

namespace perfusim::synth {

/// Perfusion territory with an inside predicate and a bounding box for
/// rejection sampling.
struct PerfusionDomain {
    enum class Shape { Disk, Sphere, Polygon };
    Shape shape = Shape::Disk;
    int dim = 2;
    Vec3 center{Vec3::Zero()};
    double radius = 1.0;
    std::vector<Vec3> polygon;  // CCW vertex loop, z = 0

    bool inside(const Vec3& x) const;
    Aabb bounding_box() const;

    static PerfusionDomain disk(const Vec3& center, double radius);
    static PerfusionDomain sphere(const Vec3& center, double radius);
    static PerfusionDomain polygon2d(std::vector<Vec3> vertices);
};

struct SaSchedule {
    double initial_temperature_factor = 0.1;  ///< T0 = factor * initial cost
    double cooling = 0.95;                    ///< geometric factor per level
    int proposals_per_level_factor = 2;       ///< proposals per level = factor * N
    int stall_levels = 3;     ///< stop after this many levels without improvement
    int max_levels = 400;
};

struct GeometrySettings {
    int max_iterations = 200;
    double gradient_tolerance = 1e-6;  ///< relative to the mean edge tension
    double smoothing_eps = 1e-9;       ///< [m] smooths |x_u - x_v| near zero
    int local_relax_iterations = 10;
};

struct SegmentBounds {
    double min_length = 1e-6;
    double max_length = 1.0;
    double min_radius = 1e-7;
    double max_radius = 1.0;
};

struct SynthesisConfig {
    int terminals = 50;
    std::uint64_t seed = 1;
    double q_perf = 800e-9;  ///< [m^3/s]
    vascular::HemoParams hemo;
    SaSchedule sa;
    GeometrySettings geometry;
    double clearance_factor = 1.0;  ///< trees collide when centerline distance
                                    ///< < clearance * (r_a + r_b)
    SegmentBounds bounds;
};

/// N points uniform in the domain by rejection from the bounding box;
/// deterministic for a given seed. Throws DomainError if the acceptance
/// ratio degenerates (< 1e-3).
std::vector<Vec3> sample_terminals(const PerfusionDomain& domain, int count,
                                   std::uint64_t seed);

/// Star tree connecting the root to every terminal, with flows propagated
/// and radii assigned.
vascular::VascularTree init_fan(const Vec3& root, const std::vector<Vec3>& terminals,
                                vascular::TreeRole role, double q_perf,
                                const vascular::HemoParams& hemo, int dim);

/// Simulated-annealing acceptance: improvements always pass, increases pass
/// with probability exp(-delta/T); T = 0 is greedy.
bool sa_accept(double delta_cost, double temperature, Rng& rng);

/// True if any segment pair between the trees comes closer than
/// clearance * (r_a + r_b) (exact finite-segment distances).
bool trees_intersect(const vascular::VascularTree& a, const vascular::VascularTree& b,
                     double clearance_factor);

/// One random swap: detach a non-root node, re-attach it onto a segment
/// outside its own subtree through a new branching node. Returns nullopt if
/// no valid move exists. Flows and radii of the candidate are recomputed.
struct SwapCandidate {
    vascular::VascularTree tree;
    int detached_node = -1;
};
std::optional<SwapCandidate> propose_swap(const vascular::VascularTree& tree, Rng& rng,
                                          const vascular::HemoParams& hemo);

/// Minimize the total power over branching-node positions (root and leaves
/// fixed) with L-BFGS and backtracking; lengths are |x_u - x_v| (smoothed
/// near zero), radii follow from the flows. Never returns a worse tree.
vascular::VascularTree geometry_optimize(const vascular::VascularTree& tree,
                                         const GeometrySettings& settings,
                                         const vascular::HemoParams& hemo);

struct SynthesisLogEntry {
    long proposal = 0;
    int level = 0;
    double temperature = 0.0;
    double cost_supplying = 0.0;
    double cost_draining = 0.0;
    int violations = 0;
    bool accepted = false;
};

struct SynthesisResult {
    vascular::VascularTree supplying;
    vascular::VascularTree draining;
    double fan_cost_supplying = 0.0;
    double fan_cost_draining = 0.0;
    int bound_clamps = 0;   ///< radius/length clamps applied to the output
    bool converged = true;  ///< false when budgets ran out (best-so-far returned)
    std::vector<SynthesisLogEntry> log;
};

/// Full pipeline: sample terminals for both trees (the draining set keeps a
/// clearance-derived separation from the supplying terminals and both roots,
/// so a non-intersecting pair exists), build fans, run the swap/SA search
/// with mutual intersection rejection, polish geometry per level, and
/// finish with greedy sweeps until no improving swap remains.
SynthesisResult synthesize_pair(const PerfusionDomain& domain, const Vec3& root_supplying,
                                const Vec3& root_draining, const SynthesisConfig& config);

void write_synthesis_log_csv(const std::vector<SynthesisLogEntry>& log,
                             const std::string& path);

}  // namespace perfusim::synth

#endif
