#include "perfusim/tree_io.hpp"

#include <fstream>
#include <json.hpp>
#include <sstream>

#include "perfusim/errors.hpp"

namespace perfusim::vascular {

namespace {

using Json = nlohmann::ordered_json;

const char* kind_name(NodeKind kind) {
    switch (kind) {
        case NodeKind::Root: return "root";
        case NodeKind::Leaf: return "leaf";
        case NodeKind::Branching: return "branching";
    }
    return "branching";
}

NodeKind kind_from(const std::string& name) {
    if (name == "root") return NodeKind::Root;
    if (name == "leaf") return NodeKind::Leaf;
    if (name == "branching") return NodeKind::Branching;
    throw ParseError("unknown node kind '" + name + "'");
}

}  // namespace

std::string tree_to_json(const VascularTree& tree) {
    Json j;
    j["nodes"] = Json::array();
    for (const auto& n : tree.nodes) {
        Json jn;
        jn["id"] = n.id;
        Json x = Json::array();
        for (int d = 0; d < tree.dim; ++d) x.push_back(n.position[d]);
        jn["x"] = x;
        jn["kind"] = kind_name(n.kind);
        j["nodes"].push_back(jn);
    }
    j["segments"] = Json::array();
    for (const auto& s : tree.segments) {
        Json js;
        js["tail"] = s.tail;
        js["head"] = s.head;
        js["l"] = s.length;
        js["r"] = s.radius;
        js["q"] = s.flow;
        j["segments"].push_back(js);
    }
    j["role"] = tree.role == TreeRole::Supplying ? "supplying" : "draining";
    j["q_perf"] = tree.q_perf;
    return j.dump(2) + "\n";
}

VascularTree tree_from_json(const std::string& text) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const std::exception& e) {
        throw ParseError(std::string("tree JSON: ") + e.what());
    }
    VascularTree tree;
    tree.dim = 0;
    for (const auto& jn : j.at("nodes")) {
        VesselNode n;
        n.id = jn.at("id").get<int>();
        const auto& x = jn.at("x");
        if (tree.dim == 0) tree.dim = static_cast<int>(x.size());
        for (std::size_t d = 0; d < x.size() && d < 3; ++d)
            n.position[static_cast<int>(d)] = x[d].get<double>();
        n.kind = kind_from(jn.at("kind").get<std::string>());
        tree.nodes.push_back(n);
    }
    for (const auto& js : j.at("segments")) {
        VesselSegment s;
        s.tail = js.at("tail").get<int>();
        s.head = js.at("head").get<int>();
        s.length = js.at("l").get<double>();
        s.radius = js.at("r").get<double>();
        s.flow = js.at("q").get<double>();
        tree.segments.push_back(s);
    }
    const std::string role = j.at("role").get<std::string>();
    tree.role = role == "draining" ? TreeRole::Draining : TreeRole::Supplying;
    tree.q_perf = j.at("q_perf").get<double>();
    const int leaves = tree.leaf_count();
    tree.q_term = leaves > 0 ? tree.q_perf / leaves : 0.0;
    return tree;
}

void write_tree_json(const VascularTree& tree, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot open '" + path + "' for writing");
    out << tree_to_json(tree);
}

VascularTree read_tree_json(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return tree_from_json(buf.str());
}

void write_tree_csv(const VascularTree& tree, const HemoParams& params, std::ostream& out) {
    out << "tail,head,length,radius,flow,pressure_drop,mean_velocity\n";
    char line[256];
    for (const auto& s : tree.segments) {
        const double res = segment_resistance(s.length, s.radius, params.viscosity);
        const double dp = segment_pressure_drop(res, s.flow);
        const double v = mean_velocity(s.flow, s.radius);
        std::snprintf(line, sizeof(line), "%d,%d,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                      s.tail, s.head, s.length, s.radius, s.flow, dp, v);
        out << line;
    }
}

void write_tree_csv(const VascularTree& tree, const HemoParams& params, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot open '" + path + "' for writing");
    write_tree_csv(tree, params, out);
}

}  // namespace perfusim::vascular
