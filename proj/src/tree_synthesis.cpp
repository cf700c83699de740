#include "perfusim/tree_synthesis.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <limits>
#include <numbers>
#include <unordered_map>

#include "perfusim/errors.hpp"

namespace perfusim::synth {

namespace {

constexpr double kPi = std::numbers::pi;

// ---------------------------------------------------------------------------
// L-BFGS with backtracking line search (two-loop recursion, history m = 8).
// Minimizes f over x given a combined value+gradient callback.

template <typename ValueGrad>
void lbfgs_minimize(Eigen::VectorXd& x, ValueGrad&& fg, int max_iterations,
                    double gradient_tolerance) {
    const int m = 8;
    std::deque<Eigen::VectorXd> s_hist, y_hist;
    std::deque<double> rho_hist;

    Eigen::VectorXd grad(x.size()), grad_new(x.size());
    double f = fg(x, grad);

    for (int it = 0; it < max_iterations; ++it) {
        if (grad.template lpNorm<Eigen::Infinity>() <= gradient_tolerance) break;

        Eigen::VectorXd q = grad;
        std::vector<double> alpha(s_hist.size());
        for (int i = static_cast<int>(s_hist.size()) - 1; i >= 0; --i) {
            alpha[i] = rho_hist[i] * s_hist[i].dot(q);
            q -= alpha[i] * y_hist[i];
        }
        if (!s_hist.empty()) {
            const double gamma = s_hist.back().dot(y_hist.back()) /
                                 y_hist.back().squaredNorm();
            q *= gamma;
        }
        for (std::size_t i = 0; i < s_hist.size(); ++i) {
            const double beta = rho_hist[i] * y_hist[i].dot(q);
            q += (alpha[i] - beta) * s_hist[i];
        }
        Eigen::VectorXd direction = -q;
        double descent = grad.dot(direction);
        if (descent >= 0.0) {  // fall back to steepest descent
            direction = -grad;
            descent = -grad.squaredNorm();
        }

        double step = 1.0;
        double f_new = f;
        bool ok = false;
        for (int ls = 0; ls < 50; ++ls) {
            const Eigen::VectorXd x_new = x + step * direction;
            f_new = fg(x_new, grad_new);
            if (std::isfinite(f_new) && f_new <= f + 1e-4 * step * descent) {
                if (s_hist.size() == static_cast<std::size_t>(m)) {
                    s_hist.pop_front();
                    y_hist.pop_front();
                    rho_hist.pop_front();
                }
                Eigen::VectorXd s = x_new - x;
                Eigen::VectorXd y = grad_new - grad;
                const double sy = s.dot(y);
                if (sy > 1e-300) {
                    s_hist.push_back(std::move(s));
                    y_hist.push_back(std::move(y));
                    rho_hist.push_back(1.0 / sy);
                }
                x = x_new;
                f = f_new;
                grad = grad_new;
                ok = true;
                break;
            }
            step *= 0.5;
        }
        if (!ok) break;
    }
}

// ---------------------------------------------------------------------------
// Mutable arborescence used by the topology search. Edges are identified by
// their head node (edge = parent[v] -> v). Slots of removed nodes are reused.

struct WorkTree {
    int dim = 2;
    double q_term = 0.0;
    int root = 0;
    std::vector<Vec3> pos;
    std::vector<int> parent;  // -1 at root
    std::vector<std::vector<int>> kids;
    std::vector<int> leaves_below;
    std::vector<char> alive;
    std::vector<char> terminal;
    std::vector<int> free_slots;

    // scratch for subtree marking
    mutable std::vector<int> stamp;
    mutable int stamp_value = 0;

    int add_node(const Vec3& x, bool is_terminal) {
        int id;
        if (!free_slots.empty()) {
            id = free_slots.back();
            free_slots.pop_back();
            pos[id] = x;
            parent[id] = -1;
            kids[id].clear();
            leaves_below[id] = 0;
            alive[id] = 1;
            terminal[id] = is_terminal;
        } else {
            id = static_cast<int>(pos.size());
            pos.push_back(x);
            parent.push_back(-1);
            kids.emplace_back();
            leaves_below.push_back(0);
            alive.push_back(1);
            terminal.push_back(is_terminal);
            stamp.push_back(0);
        }
        return id;
    }

    int peek_slot() const {
        return free_slots.empty() ? static_cast<int>(pos.size()) : free_slots.back();
    }

    void bump_leaves(int from, int delta) {
        for (int v = from; v >= 0; v = parent[v]) leaves_below[v] += delta;
    }

    void mark_subtree(int node) const {
        ++stamp_value;
        std::vector<int> stack{node};
        while (!stack.empty()) {
            const int v = stack.back();
            stack.pop_back();
            stamp[v] = stamp_value;
            for (int k : kids[v]) stack.push_back(k);
        }
    }
    bool marked(int node) const { return stamp[node] == stamp_value; }

    std::vector<int> alive_nonroot() const {
        std::vector<int> out;
        for (std::size_t v = 0; v < pos.size(); ++v)
            if (alive[v] && static_cast<int>(v) != root) out.push_back(static_cast<int>(v));
        return out;
    }

    int edge_count() const {
        int n = 0;
        for (std::size_t v = 0; v < pos.size(); ++v)
            if (alive[v] && static_cast<int>(v) != root) ++n;
        return n;
    }
};

WorkTree work_from_tree(const vascular::VascularTree& tree) {
    WorkTree wt;
    wt.dim = tree.dim;
    wt.q_term = tree.q_term;
    const vascular::TreeAdjacency adj = vascular::build_adjacency(tree);
    wt.root = adj.root;
    const int n = static_cast<int>(tree.nodes.size());
    wt.pos.resize(n);
    wt.parent.assign(n, -1);
    wt.kids.assign(n, {});
    wt.leaves_below.assign(n, 0);
    wt.alive.assign(n, 1);
    wt.terminal.assign(n, 0);
    wt.stamp.assign(n, 0);
    for (int v = 0; v < n; ++v) {
        wt.pos[v] = tree.nodes[v].position;
        wt.terminal[v] = tree.nodes[v].kind == vascular::NodeKind::Leaf;
    }
    for (const auto& seg : tree.segments) {
        wt.parent[seg.head] = seg.tail;
        wt.kids[seg.tail].push_back(seg.head);
    }
    // leaf counts bottom-up along the topological order
    for (auto it = adj.topo_order.rbegin(); it != adj.topo_order.rend(); ++it) {
        const int v = *it;
        if (wt.terminal[v]) {
            wt.leaves_below[v] = 1;
        } else {
            int sum = 0;
            for (int k : wt.kids[v]) sum += wt.leaves_below[k];
            wt.leaves_below[v] = sum;
        }
    }
    return wt;
}

// Per-leaf-count carry cost (power per meter) and radius, with bound clamps.
struct CostModel {
    std::vector<double> radius;  // [0] unused
    std::vector<double> carry;
    int clamped = 0;

    CostModel(int max_leaves, double q_term, const vascular::HemoParams& hemo,
              const SegmentBounds& bounds) {
        radius.resize(max_leaves + 1, 0.0);
        carry.resize(max_leaves + 1, 0.0);
        for (int n = 1; n <= max_leaves; ++n) {
            const double q = n * q_term;
            double r = vascular::optimal_radius(q, hemo);
            if (r < bounds.min_radius) {
                r = bounds.min_radius;
                ++clamped;
            } else if (r > bounds.max_radius) {
                r = bounds.max_radius;
                ++clamped;
            }
            radius[n] = r;
            carry[n] = hemo.metabolic_demand * kPi * r * r +
                       8.0 * hemo.viscosity / kPi * q * q / (r * r * r * r);
        }
    }
};

double work_cost(const WorkTree& wt, const CostModel& model) {
    double total = 0.0;
    for (std::size_t v = 0; v < wt.pos.size(); ++v) {
        if (!wt.alive[v] || static_cast<int>(v) == wt.root) continue;
        total += model.carry[wt.leaves_below[v]] * (wt.pos[v] - wt.pos[wt.parent[v]]).norm();
    }
    return total;
}

// Weiszfeld sweeps over a small node set; monotone on the smoothed cost.
void local_relax(WorkTree& wt, const CostModel& model, const std::vector<int>& nodes,
                 const GeometrySettings& geo) {
    const double eps = geo.smoothing_eps;
    for (int sweep = 0; sweep < geo.local_relax_iterations; ++sweep) {
        for (int v : nodes) {
            if (!wt.alive[v] || v == wt.root || wt.terminal[v]) continue;
            Vec3 weighted = Vec3::Zero();
            double wsum = 0.0;
            auto accumulate = [&](const Vec3& other, double carry) {
                const double d = smooth_norm(wt.pos[v] - other, eps);
                weighted += carry / d * other;
                wsum += carry / d;
            };
            accumulate(wt.pos[wt.parent[v]], model.carry[wt.leaves_below[v]]);
            for (int k : wt.kids[v]) accumulate(wt.pos[k], model.carry[wt.leaves_below[k]]);
            if (wsum > 0.0) wt.pos[v] = weighted / wsum;
        }
    }
}

// Global position polish: L-BFGS over all branching nodes.
void polish_geometry(WorkTree& wt, const CostModel& model, const GeometrySettings& geo) {
    std::vector<int> movable;
    for (std::size_t v = 0; v < wt.pos.size(); ++v)
        if (wt.alive[v] && static_cast<int>(v) != wt.root && !wt.terminal[v])
            movable.push_back(static_cast<int>(v));
    if (movable.empty()) return;

    const int dim = wt.dim;
    std::vector<int> slot(wt.pos.size(), -1);
    for (std::size_t i = 0; i < movable.size(); ++i) slot[movable[i]] = static_cast<int>(i);

    Eigen::VectorXd x(movable.size() * dim);
    for (std::size_t i = 0; i < movable.size(); ++i)
        for (int d = 0; d < dim; ++d) x[i * dim + d] = wt.pos[movable[i]][d];

    double tension = 0.0;
    int edges = 0;
    for (std::size_t v = 0; v < wt.pos.size(); ++v) {
        if (!wt.alive[v] || static_cast<int>(v) == wt.root) continue;
        tension += model.carry[wt.leaves_below[v]];
        ++edges;
    }
    const double grad_tol = geo.gradient_tolerance * (edges > 0 ? tension / edges : 1.0);

    auto node_pos = [&](int v, const Eigen::VectorXd& vars) {
        Vec3 p = wt.pos[v];
        if (slot[v] >= 0)
            for (int d = 0; d < dim; ++d) p[d] = vars[slot[v] * dim + d];
        return p;
    };

    auto fg = [&](const Eigen::VectorXd& vars, Eigen::VectorXd& grad) {
        grad.setZero();
        double f = 0.0;
        for (std::size_t v = 0; v < wt.pos.size(); ++v) {
            if (!wt.alive[v] || static_cast<int>(v) == wt.root) continue;
            const int u = wt.parent[v];
            const Vec3 pv = node_pos(static_cast<int>(v), vars);
            const Vec3 pu = node_pos(u, vars);
            const double carry = model.carry[wt.leaves_below[v]];
            const Vec3 diff = pv - pu;
            const double d = smooth_norm(diff, geo.smoothing_eps);
            f += carry * d;
            const Vec3 g = carry / d * diff;
            if (slot[v] >= 0)
                for (int k = 0; k < dim; ++k) grad[slot[v] * dim + k] += g[k];
            if (slot[u] >= 0)
                for (int k = 0; k < dim; ++k) grad[slot[u] * dim + k] -= g[k];
        }
        return f;
    };

    const double before = work_cost(wt, model);
    const Eigen::VectorXd x0 = x;
    lbfgs_minimize(x, fg, geo.max_iterations, grad_tol);

    std::vector<Vec3> saved;
    saved.reserve(movable.size());
    for (int v : movable) saved.push_back(wt.pos[v]);
    for (std::size_t i = 0; i < movable.size(); ++i)
        for (int d = 0; d < dim; ++d) wt.pos[movable[i]][d] = x[i * dim + d];
    if (work_cost(wt, model) > before) {  // keep the strictly better geometry
        for (std::size_t i = 0; i < movable.size(); ++i) wt.pos[movable[i]] = saved[i];
    }
}

// ---------------------------------------------------------------------------
// Swap move with exact undo.

struct SwapMove {
    int moved = -1;
    int old_parent = -1;
    int u_index = -1;
    int spliced = -1;
    int splice_child = -1;
    int splice_grandpa = -1;
    int p_index = -1;
    int target_head = -1;
    int target_tail = -1;  // parent of head after any splice
    int b_index = -1;
    int new_node = -1;
    bool new_node_fresh = false;
    std::vector<std::pair<int, Vec3>> saved_positions;
};

int index_of(const std::vector<int>& v, int value) {
    for (std::size_t i = 0; i < v.size(); ++i)
        if (v[i] == value) return static_cast<int>(i);
    return -1;
}

// Detach `u`, splice a left-over pass-through parent, and re-attach onto the
// edge ending at `b` via a fresh branching node. Caller guarantees b is alive,
// outside subtree(u), not the root, and not the spliced parent.
void apply_swap(WorkTree& wt, int u, int b, SwapMove& mv) {
    const int p = wt.parent[u];
    mv.moved = u;
    mv.old_parent = p;
    const int lc = wt.leaves_below[u];

    mv.u_index = index_of(wt.kids[p], u);
    wt.kids[p].erase(wt.kids[p].begin() + mv.u_index);
    wt.bump_leaves(p, -lc);

    mv.spliced = -1;
    if (p != wt.root && wt.kids[p].size() == 1) {
        const int c = wt.kids[p][0];
        const int pp = wt.parent[p];
        mv.spliced = p;
        mv.splice_child = c;
        mv.splice_grandpa = pp;
        mv.p_index = index_of(wt.kids[pp], p);
        wt.kids[pp][mv.p_index] = c;
        wt.parent[c] = pp;
        wt.alive[p] = 0;
    }

    const int a = wt.parent[b];
    mv.target_head = b;
    mv.target_tail = a;

    // Split point: projection of the moved node onto the target segment,
    // kept off the endpoints.
    const Vec3 pa = wt.pos[a], pb = wt.pos[b];
    const Vec3 dir = pb - pa;
    double t = 0.5;
    const double len2 = dir.squaredNorm();
    if (len2 > 0.0) t = std::clamp((wt.pos[u] - pa).dot(dir) / len2, 0.1, 0.9);

    mv.new_node_fresh = wt.free_slots.empty();
    const int w = wt.add_node(pa + t * dir, false);
    mv.new_node = w;
    wt.parent[w] = a;
    mv.b_index = index_of(wt.kids[a], b);
    wt.kids[a][mv.b_index] = w;
    wt.kids[w] = {b, u};
    wt.parent[b] = w;
    wt.parent[u] = w;
    wt.leaves_below[w] = wt.leaves_below[b] + lc;
    wt.bump_leaves(a, lc);
}

void undo_swap(WorkTree& wt, const SwapMove& mv) {
    for (const auto& [node, saved] : mv.saved_positions) wt.pos[node] = saved;

    const int u = mv.moved;
    const int w = mv.new_node;
    const int b = mv.target_head;
    const int a = mv.target_tail;
    const int lc = wt.leaves_below[u];

    wt.bump_leaves(a, -lc);
    wt.kids[a][mv.b_index] = b;
    wt.parent[b] = a;
    wt.alive[w] = 0;
    if (mv.new_node_fresh) {
        wt.pos.pop_back();
        wt.parent.pop_back();
        wt.kids.pop_back();
        wt.leaves_below.pop_back();
        wt.alive.pop_back();
        wt.terminal.pop_back();
        wt.stamp.pop_back();
    } else {
        wt.free_slots.push_back(w);
    }

    const int p = mv.old_parent;
    if (mv.spliced >= 0) {
        wt.alive[p] = 1;
        wt.kids[mv.splice_grandpa][mv.p_index] = p;
        wt.parent[mv.splice_child] = p;
        // kids[p] still holds {splice_child}
    }
    wt.kids[p].insert(wt.kids[p].begin() + mv.u_index, u);
    wt.parent[u] = p;
    wt.bump_leaves(p, lc);
}

void commit_swap(WorkTree& wt, const SwapMove& mv) {
    if (mv.spliced >= 0) wt.free_slots.push_back(mv.spliced);
}

// ---------------------------------------------------------------------------
// Uniform grid over segments of one tree, for clearance queries.

struct SegmentGrid {
    double cell = 1.0;
    Vec3 origin{Vec3::Zero()};
    double max_radius = 0.0;
    std::unordered_map<std::uint64_t, std::vector<int>> bins;
    const WorkTree* tree = nullptr;
    const CostModel* model = nullptr;

    static std::uint64_t key(int i, int j, int k) {
        const auto u = [](int v) { return static_cast<std::uint64_t>(v + (1 << 20)); };
        return (u(i) << 42) | (u(j) << 21) | u(k);
    }

    void build(const WorkTree& wt, const CostModel& cm, const Aabb& box) {
        tree = &wt;
        model = &cm;
        bins.clear();
        origin = box.lo;
        const double diag = (box.hi - box.lo).norm();
        cell = std::max(diag / 24.0, 1e-12);
        max_radius = 0.0;
        for (std::size_t v = 0; v < wt.pos.size(); ++v) {
            if (!wt.alive[v] || static_cast<int>(v) == wt.root) continue;
            max_radius = std::max(max_radius, cm.radius[wt.leaves_below[v]]);
            insert(static_cast<int>(v));
        }
    }

    void insert(int edge) {
        const WorkTree& wt = *tree;
        const Vec3& a = wt.pos[edge];
        const Vec3& b = wt.pos[wt.parent[edge]];
        Vec3 lo = a.cwiseMin(b), hi = a.cwiseMax(b);
        int i0[3], i1[3];
        for (int d = 0; d < 3; ++d) {
            i0[d] = static_cast<int>(std::floor((lo[d] - origin[d]) / cell));
            i1[d] = static_cast<int>(std::floor((hi[d] - origin[d]) / cell));
        }
        for (int i = i0[0]; i <= i1[0]; ++i)
            for (int j = i0[1]; j <= i1[1]; ++j)
                for (int k = i0[2]; k <= i1[2]; ++k) bins[key(i, j, k)].push_back(edge);
    }

    /// Count other-tree segments within clearance of the given segment.
    int violations(const Vec3& a, const Vec3& b, double radius, double clearance,
                   std::vector<int>& scratch_seen) const {
        const double margin = clearance * (radius + max_radius);
        Vec3 lo = a.cwiseMin(b).array() - margin;
        Vec3 hi = a.cwiseMax(b).array() + margin;
        int i0[3], i1[3];
        for (int d = 0; d < 3; ++d) {
            i0[d] = static_cast<int>(std::floor((lo[d] - origin[d]) / cell));
            i1[d] = static_cast<int>(std::floor((hi[d] - origin[d]) / cell));
        }
        scratch_seen.clear();
        int count = 0;
        for (int i = i0[0]; i <= i1[0]; ++i) {
            for (int j = i0[1]; j <= i1[1]; ++j) {
                for (int k = i0[2]; k <= i1[2]; ++k) {
                    const auto it = bins.find(key(i, j, k));
                    if (it == bins.end()) continue;
                    for (int e : it->second) {
                        if (std::find(scratch_seen.begin(), scratch_seen.end(), e) !=
                            scratch_seen.end())
                            continue;
                        scratch_seen.push_back(e);
                        const WorkTree& wt = *tree;
                        const double limit =
                            clearance * (radius + model->radius[wt.leaves_below[e]]);
                        const double dist = segment_segment_distance(
                            a, b, wt.pos[e], wt.pos[wt.parent[e]]);
                        if (dist < limit) ++count;
                    }
                }
            }
        }
        return count;
    }
};

int edge_violations(const WorkTree& wt, const CostModel& cm, int edge,
                    const SegmentGrid& other, double clearance, std::vector<int>& scratch) {
    return other.violations(wt.pos[edge], wt.pos[wt.parent[edge]],
                            cm.radius[wt.leaves_below[edge]], clearance, scratch);
}

int total_violations(const WorkTree& wt, const CostModel& cm, const SegmentGrid& other,
                     double clearance) {
    std::vector<int> scratch;
    int total = 0;
    for (std::size_t v = 0; v < wt.pos.size(); ++v)
        if (wt.alive[v] && static_cast<int>(v) != wt.root)
            total += edge_violations(wt, cm, static_cast<int>(v), other, clearance, scratch);
    return total;
}

vascular::VascularTree tree_from_work(const WorkTree& wt, vascular::TreeRole role,
                                      const vascular::HemoParams& hemo,
                                      const SegmentBounds& bounds, int* clamp_count) {
    vascular::VascularTree tree;
    tree.dim = wt.dim;
    tree.role = role;
    tree.q_term = wt.q_term;

    std::vector<int> renumber(wt.pos.size(), -1);
    std::vector<int> order{wt.root};
    renumber[wt.root] = 0;
    for (std::size_t k = 0; k < order.size(); ++k)
        for (int c : wt.kids[order[k]]) {
            renumber[c] = static_cast<int>(order.size());
            order.push_back(c);
        }

    for (std::size_t k = 0; k < order.size(); ++k) {
        const int v = order[k];
        vascular::VesselNode node;
        node.id = static_cast<int>(k);
        node.position = wt.pos[v];
        node.kind = v == wt.root ? vascular::NodeKind::Root
                    : wt.terminal[v] ? vascular::NodeKind::Leaf
                                     : vascular::NodeKind::Branching;
        tree.nodes.push_back(node);
    }
    for (std::size_t k = 1; k < order.size(); ++k) {
        const int v = order[k];
        vascular::VesselSegment seg;
        seg.tail = renumber[wt.parent[v]];
        seg.head = renumber[v];
        tree.segments.push_back(seg);
    }
    tree = vascular::propagate_flows(std::move(tree));
    tree = vascular::assign_radii(std::move(tree), hemo);
    for (auto& seg : tree.segments) {
        if (seg.radius < bounds.min_radius) {
            seg.radius = bounds.min_radius;
            if (clamp_count) ++*clamp_count;
        } else if (seg.radius > bounds.max_radius) {
            seg.radius = bounds.max_radius;
            if (clamp_count) ++*clamp_count;
        }
        if (clamp_count && (seg.length < bounds.min_length || seg.length > bounds.max_length))
            ++*clamp_count;
    }
    return tree;
}

}  // namespace

// ---------------------------------------------------------------------------
// PerfusionDomain

bool PerfusionDomain::inside(const Vec3& x) const {
    switch (shape) {
        case Shape::Disk:
            return x.z() == 0.0 && (x - center).norm() < radius;
        case Shape::Sphere:
            return (x - center).norm() < radius;
        case Shape::Polygon: {
            // even-odd crossing rule
            bool in = false;
            const std::size_t n = polygon.size();
            for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
                const Vec3& pi = polygon[i];
                const Vec3& pj = polygon[j];
                if ((pi.y() > x.y()) != (pj.y() > x.y()) &&
                    x.x() < (pj.x() - pi.x()) * (x.y() - pi.y()) / (pj.y() - pi.y()) + pi.x())
                    in = !in;
            }
            return in;
        }
    }
    return false;
}

Aabb PerfusionDomain::bounding_box() const {
    Aabb box;
    switch (shape) {
        case Shape::Disk:
            box.lo = center - Vec3(radius, radius, 0.0);
            box.hi = center + Vec3(radius, radius, 0.0);
            break;
        case Shape::Sphere:
            box.lo = center - Vec3(radius, radius, radius);
            box.hi = center + Vec3(radius, radius, radius);
            break;
        case Shape::Polygon:
            box.lo = box.hi = polygon.at(0);
            for (const auto& p : polygon) {
                box.lo = box.lo.cwiseMin(p);
                box.hi = box.hi.cwiseMax(p);
            }
            break;
    }
    return box;
}

PerfusionDomain PerfusionDomain::disk(const Vec3& center, double radius) {
    if (radius <= 0.0) throw DomainError("disk domain needs a positive radius");
    PerfusionDomain d;
    d.shape = Shape::Disk;
    d.dim = 2;
    d.center = center;
    d.radius = radius;
    return d;
}

PerfusionDomain PerfusionDomain::sphere(const Vec3& center, double radius) {
    if (radius <= 0.0) throw DomainError("sphere domain needs a positive radius");
    PerfusionDomain d;
    d.shape = Shape::Sphere;
    d.dim = 3;
    d.center = center;
    d.radius = radius;
    return d;
}

PerfusionDomain PerfusionDomain::polygon2d(std::vector<Vec3> vertices) {
    if (vertices.size() < 3) throw DomainError("polygon domain needs at least 3 vertices");
    PerfusionDomain d;
    d.shape = Shape::Polygon;
    d.dim = 2;
    d.polygon = std::move(vertices);
    return d;
}

// ---------------------------------------------------------------------------

std::vector<Vec3> sample_terminals(const PerfusionDomain& domain, int count,
                                   std::uint64_t seed) {
    if (count < 1) throw DomainError("sample_terminals: count must be >= 1");
    Rng rng(seed);
    const Aabb box = domain.bounding_box();
    std::vector<Vec3> points;
    points.reserve(count);
    long draws = 0;
    while (static_cast<int>(points.size()) < count) {
        Vec3 x = Vec3::Zero();
        for (int d = 0; d < domain.dim; ++d) x[d] = rng.uniform(box.lo[d], box.hi[d]);
        ++draws;
        if (domain.inside(x)) points.push_back(x);
        if (draws >= 10000 && static_cast<double>(points.size()) / draws < 1e-3)
            throw DomainError("sample_terminals: acceptance ratio below 1e-3; "
                              "degenerate domain");
    }
    return points;
}

vascular::VascularTree init_fan(const Vec3& root, const std::vector<Vec3>& terminals,
                                vascular::TreeRole role, double q_perf,
                                const vascular::HemoParams& hemo, int dim) {
    if (terminals.empty()) throw DomainError("init_fan: no terminals");
    if (q_perf <= 0.0) throw DomainError("init_fan: perfusion flow must be positive");
    for (const auto& t : terminals)
        if ((t - root).norm() < 1e-14)
            throw DomainError("init_fan: terminal coincides with the root");

    vascular::VascularTree tree;
    tree.dim = dim;
    tree.role = role;
    tree.q_term = q_perf / static_cast<double>(terminals.size());

    tree.nodes.push_back({0, root, vascular::NodeKind::Root});
    for (std::size_t i = 0; i < terminals.size(); ++i)
        tree.nodes.push_back({static_cast<int>(i) + 1, terminals[i], vascular::NodeKind::Leaf});
    for (std::size_t i = 0; i < terminals.size(); ++i) {
        vascular::VesselSegment seg;
        seg.tail = 0;
        seg.head = static_cast<int>(i) + 1;
        tree.segments.push_back(seg);
    }
    tree = vascular::propagate_flows(std::move(tree));
    return vascular::assign_radii(std::move(tree), hemo);
}

bool sa_accept(double delta_cost, double temperature, Rng& rng) {
    if (temperature < 0.0) throw DomainError("sa_accept: temperature must be >= 0");
    if (delta_cost <= 0.0) return true;
    if (temperature == 0.0) return false;
    return rng.uniform() < std::exp(-delta_cost / temperature);
}

bool trees_intersect(const vascular::VascularTree& a, const vascular::VascularTree& b,
                     double clearance_factor) {
    if (a.dim != b.dim) throw DomainError("trees_intersect: mixed ambient dimensions");
    for (const auto& sa : a.segments) {
        const Vec3& a0 = a.nodes[sa.tail].position;
        const Vec3& a1 = a.nodes[sa.head].position;
        for (const auto& sb : b.segments) {
            const double dist = segment_segment_distance(a0, a1, b.nodes[sb.tail].position,
                                                         b.nodes[sb.head].position);
            if (dist < clearance_factor * (sa.radius + sb.radius)) return true;
        }
    }
    return false;
}

std::optional<SwapCandidate> propose_swap(const vascular::VascularTree& tree, Rng& rng,
                                          const vascular::HemoParams& hemo) {
    if (tree.segments.size() < 2) return std::nullopt;
    WorkTree wt = work_from_tree(tree);

    for (int attempt = 0; attempt < 64; ++attempt) {
        const std::vector<int> nodes = wt.alive_nonroot();
        const int u = nodes[rng.uniform_index(nodes.size())];

        const int p = wt.parent[u];
        const bool will_splice = p != wt.root && wt.kids[p].size() == 2;
        wt.mark_subtree(u);
        std::vector<int> targets;
        for (int v : nodes) {
            if (wt.marked(v)) continue;
            if (will_splice && v == p) continue;
            targets.push_back(v);
        }
        if (targets.empty()) continue;
        const int b = targets[rng.uniform_index(targets.size())];

        SwapMove mv;
        apply_swap(wt, u, b, mv);
        commit_swap(wt, mv);
        SwapCandidate out;
        out.detached_node = u;
        SegmentBounds loose;
        loose.min_radius = 0.0;
        loose.max_radius = std::numeric_limits<double>::max();
        loose.min_length = 0.0;
        loose.max_length = std::numeric_limits<double>::max();
        out.tree = tree_from_work(wt, tree.role, hemo, loose, nullptr);
        return out;
    }
    return std::nullopt;
}

vascular::VascularTree geometry_optimize(const vascular::VascularTree& tree,
                                         const GeometrySettings& settings,
                                         const vascular::HemoParams& hemo) {
    WorkTree wt = work_from_tree(tree);
    const int leaves = tree.leaf_count();
    SegmentBounds loose;
    loose.min_radius = 0.0;
    loose.max_radius = std::numeric_limits<double>::max();
    loose.min_length = 0.0;
    loose.max_length = std::numeric_limits<double>::max();
    const CostModel model(leaves, wt.q_term, hemo, loose);

    const double before = work_cost(wt, model);
    polish_geometry(wt, model, settings);
    if (!std::isfinite(work_cost(wt, model)))
        throw SolverError("geometry_optimize: non-finite cost after optimization");

    vascular::VascularTree out = tree_from_work(wt, tree.role, hemo, loose, nullptr);
    if (vascular::tree_cost(out, hemo) > before + 1e-12) return tree;
    return out;
}

// ---------------------------------------------------------------------------

namespace {

/// Draining terminals are rejected when they sit closer to a supplying
/// terminal (or either root) than the clearance between two terminal vessels
/// allows; otherwise no swap sequence can separate the trees.
std::vector<Vec3> sample_separated(const PerfusionDomain& domain, int count, Rng& rng,
                                   const std::vector<Vec3>& keep_out_points,
                                   double keep_out_distance) {
    const Aabb box = domain.bounding_box();
    std::vector<Vec3> points;
    long draws = 0;
    while (static_cast<int>(points.size()) < count) {
        Vec3 x = Vec3::Zero();
        for (int d = 0; d < domain.dim; ++d) x[d] = rng.uniform(box.lo[d], box.hi[d]);
        ++draws;
        if (draws > 200000L * count)
            throw DomainError("synthesize_pair: cannot place separated terminals; "
                              "domain too crowded for this terminal count");
        if (!domain.inside(x)) continue;
        bool ok = true;
        for (const auto& q : keep_out_points) {
            if ((x - q).norm() < keep_out_distance) {
                ok = false;
                break;
            }
        }
        if (ok) points.push_back(x);
    }
    return points;
}

struct SaTree {
    WorkTree work;
    double cost = 0.0;
};

}  // namespace

SynthesisResult synthesize_pair(const PerfusionDomain& domain, const Vec3& root_supplying,
                                const Vec3& root_draining, const SynthesisConfig& config) {
    if (config.terminals < 1) throw DomainError("synthesize_pair: terminals must be >= 1");
    if (config.q_perf <= 0.0) throw DomainError("synthesize_pair: q_perf must be positive");

    Rng master(config.seed);
    Rng rng_a = master.split(1);
    Rng rng_b = master.split(2);
    Rng rng_sa = master.split(3);

    const double q_term = config.q_perf / config.terminals;
    const double r_term = vascular::optimal_radius(q_term, config.hemo);
    const double r_root = vascular::optimal_radius(config.q_perf, config.hemo);
    const double terminal_sep = 2.10 * config.clearance_factor * r_term;
    const double root_sep = 1.10 * config.clearance_factor * (r_root + r_term);

    // Supplying terminals avoid both roots; draining terminals additionally
    // keep clear of the supplying ones.
    std::vector<Vec3> roots{root_supplying, root_draining};
    std::vector<Vec3> terminals_a =
        sample_separated(domain, config.terminals, rng_a, roots, root_sep);
    std::vector<Vec3> keep_out = terminals_a;
    keep_out.push_back(root_supplying);
    keep_out.push_back(root_draining);
    // one rejection distance must satisfy both rules
    std::vector<Vec3> terminals_b = sample_separated(
        domain, config.terminals, rng_b, keep_out, std::max(terminal_sep, root_sep));

    SynthesisResult result;
    vascular::VascularTree fan_a =
        init_fan(root_supplying, terminals_a, vascular::TreeRole::Supplying, config.q_perf,
                 config.hemo, domain.dim);
    vascular::VascularTree fan_b =
        init_fan(root_draining, terminals_b, vascular::TreeRole::Draining, config.q_perf,
                 config.hemo, domain.dim);
    result.fan_cost_supplying = vascular::tree_cost(fan_a, config.hemo);
    result.fan_cost_draining = vascular::tree_cost(fan_b, config.hemo);

    SaTree trees[2];
    trees[0].work = work_from_tree(fan_a);
    trees[1].work = work_from_tree(fan_b);
    const CostModel model(config.terminals, q_term, config.hemo, config.bounds);
    trees[0].cost = work_cost(trees[0].work, model);
    trees[1].cost = work_cost(trees[1].work, model);

    Aabb box = domain.bounding_box();
    box.lo -= Vec3::Constant(1e-12);
    box.hi += Vec3::Constant(1e-12);

    SegmentGrid grid[2];  // grid[k] indexes tree k's segments
    grid[0].build(trees[0].work, model, box);
    grid[1].build(trees[1].work, model, box);
    int violations = total_violations(trees[0].work, model, grid[1],
                                      config.clearance_factor);

    long proposal_counter = 0;
    std::vector<int> scratch, edge_set;
    std::vector<char> in_set;

    auto collect_edge_set = [&](const WorkTree& wt, int u, int b, int w_peek) {
        edge_set.clear();
        if (in_set.size() < wt.pos.size() + 1) in_set.assign(wt.pos.size() + 1, 0);
        auto add = [&](int e) {
            if (e < 0 || e == wt.root) return;
            if (static_cast<std::size_t>(e) >= in_set.size()) in_set.resize(e + 1, 0);
            if (!in_set[e]) {
                in_set[e] = 1;
                edge_set.push_back(e);
            }
        };
        const int p = wt.parent[u];
        add(u);
        add(b);
        add(w_peek);
        for (int v = p; v >= 0; v = wt.parent[v]) {
            add(v);
            for (int k : wt.kids[v]) add(k);
        }
        for (int v = wt.parent[b]; v >= 0; v = wt.parent[v]) {
            add(v);
            for (int k : wt.kids[v]) add(k);
        }
        for (int e : edge_set) in_set[e] = 0;
    };

    auto set_violations = [&](const WorkTree& wt, const SegmentGrid& other) {
        int total = 0;
        for (int e : edge_set) {
            if (static_cast<std::size_t>(e) >= wt.alive.size()) continue;
            if (!wt.alive[e] || e == wt.root || wt.parent[e] < 0) continue;
            total += edge_violations(wt, model, e, other, config.clearance_factor, scratch);
        }
        return total;
    };

    // One SA level: N proposals on each tree against the other's static grid.
    auto run_level = [&](int level, double temperature, bool feasibility_mode) {
        int accepted_improvements = 0;
        const int per_tree =
            std::max(1, config.sa.proposals_per_level_factor * config.terminals / 2);
        for (int active = 0; active < 2; ++active) {
            WorkTree& wt = trees[active].work;
            const SegmentGrid& other_grid = grid[1 - active];
            for (int k = 0; k < per_tree; ++k) {
                ++proposal_counter;
                SynthesisLogEntry entry;
                entry.proposal = proposal_counter;
                entry.level = level;
                entry.temperature = temperature;

                bool accepted = false;
                do {
                    if (wt.edge_count() < 2) break;
                    const std::vector<int> nodes = wt.alive_nonroot();
                    const int u = nodes[rng_sa.uniform_index(nodes.size())];
                    const int p = wt.parent[u];
                    const bool will_splice = p != wt.root && wt.kids[p].size() == 2;
                    wt.mark_subtree(u);
                    std::vector<int> targets;
                    for (int v : nodes) {
                        if (wt.marked(v)) continue;
                        if (will_splice && v == p) continue;
                        targets.push_back(v);
                    }
                    if (targets.empty()) break;
                    const int b = targets[rng_sa.uniform_index(targets.size())];

                    collect_edge_set(wt, u, b, wt.peek_slot());
                    const int v_before = set_violations(wt, other_grid);
                    const double cost_before = trees[active].cost;

                    SwapMove mv;
                    apply_swap(wt, u, b, mv);

                    // local geometry update around the new junction
                    std::vector<int> relax{mv.new_node, mv.target_tail,
                                           mv.spliced >= 0 ? mv.splice_grandpa
                                                           : mv.old_parent};
                    std::sort(relax.begin(), relax.end());
                    relax.erase(std::unique(relax.begin(), relax.end()), relax.end());
                    mv.saved_positions.clear();
                    for (int v : relax)
                        if (v >= 0 && wt.alive[v]) mv.saved_positions.emplace_back(v, wt.pos[v]);
                    local_relax(wt, model, relax, config.geometry);

                    bool too_short = false;
                    for (int e : edge_set) {
                        if (static_cast<std::size_t>(e) >= wt.alive.size() || !wt.alive[e] ||
                            e == wt.root || wt.parent[e] < 0)
                            continue;
                        if ((wt.pos[e] - wt.pos[wt.parent[e]]).norm() <
                            config.bounds.min_length) {
                            too_short = true;
                            break;
                        }
                    }
                    if (too_short) {
                        undo_swap(wt, mv);
                        break;
                    }

                    const int v_after = set_violations(wt, other_grid);
                    if (v_after > v_before) {  // never create new intersections
                        undo_swap(wt, mv);
                        break;
                    }

                    const double cost_after = work_cost(wt, model);
                    const double delta = cost_after - cost_before;
                    bool take;
                    if (v_after < v_before)
                        take = true;  // separation progress outranks cost
                    else if (feasibility_mode)
                        take = delta < 0.0;
                    else
                        take = sa_accept(delta, temperature, rng_sa);

                    if (!take) {
                        undo_swap(wt, mv);
                        break;
                    }
                    commit_swap(wt, mv);
                    violations += v_after - v_before;
                    trees[active].cost = cost_after;
                    if (delta < 0.0) ++accepted_improvements;
                    accepted = true;
                } while (false);

                entry.cost_supplying = trees[0].cost;
                entry.cost_draining = trees[1].cost;
                entry.violations = violations;
                entry.accepted = accepted;
                result.log.push_back(entry);
            }
            // accepted swaps on `active` moved its segments
            grid[active].build(wt, model, box);
        }
        return accepted_improvements;
    };

    auto polish_both = [&] {
        for (int t = 0; t < 2; ++t) {
            std::vector<Vec3> saved = trees[t].work.pos;
            polish_geometry(trees[t].work, model, config.geometry);
            grid[t].build(trees[t].work, model, box);
            const int now = total_violations(trees[0].work, model, grid[1],
                                             config.clearance_factor);
            if (now > violations) {
                trees[t].work.pos = std::move(saved);
                grid[t].build(trees[t].work, model, box);
            } else {
                violations = now;
            }
            trees[t].cost = work_cost(trees[t].work, model);
        }
    };

    double temperature = config.sa.initial_temperature_factor *
                         (trees[0].cost + trees[1].cost);
    int stalled = 0;
    int level = 0;
    for (; level < config.sa.max_levels && config.terminals > 1; ++level) {
        const int improvements = run_level(level, temperature, false);
        polish_both();
        temperature *= config.sa.cooling;
        stalled = improvements == 0 ? stalled + 1 : 0;
        if (stalled >= config.sa.stall_levels) break;
    }

    // Greedy tail: keep sweeping at T = 0 until a whole level yields nothing.
    for (int extra = 0; extra < config.sa.max_levels && config.terminals > 1; ++extra) {
        ++level;
        const int improvements = run_level(level, 0.0, true);
        polish_both();
        if (improvements == 0 && violations == 0) break;
        if (improvements == 0 && violations > 0 && extra > 20) break;
    }

    result.converged = violations == 0;
    result.supplying = tree_from_work(trees[0].work, vascular::TreeRole::Supplying,
                                      config.hemo, config.bounds, &result.bound_clamps);
    result.draining = tree_from_work(trees[1].work, vascular::TreeRole::Draining, config.hemo,
                                     config.bounds, &result.bound_clamps);
    return result;
}

void write_synthesis_log_csv(const std::vector<SynthesisLogEntry>& log,
                             const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot open '" + path + "' for writing");
    out << "proposal,level,temperature,cost_supplying,cost_draining,violations,accepted\n";
    char buf[192];
    for (const auto& e : log) {
        std::snprintf(buf, sizeof(buf), "%ld,%d,%.17g,%.17g,%.17g,%d,%d\n", e.proposal,
                      e.level, e.temperature, e.cost_supplying, e.cost_draining, e.violations,
                      e.accepted ? 1 : 0);
        out << buf;
    }
}

}  // namespace perfusim::synth
