#include "perfusim/mesh_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "perfusim/errors.hpp"

namespace perfusim::msh {

namespace {

std::string next_line(std::istream& in, long& line_no) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("unexpected end of mesh file", line_no);
    ++line_no;
    return line;
}

}  // namespace

Mesh read_mesh(std::istream& in) {
    long line_no = 0;
    Mesh mesh;
    {
        std::istringstream header(next_line(in, line_no));
        std::string magic;
        int version = 0;
        if (!(header >> magic >> version >> mesh.dim) || magic != "pmesh" || version != 1)
            throw ParseError("bad mesh header, expected 'pmesh 1 <dim>'", line_no);
        if (mesh.dim != 2 && mesh.dim != 3)
            throw ParseError("mesh dimension must be 2 or 3", line_no);
    }
    long nv = 0, nc = 0, nf = 0;
    {
        std::istringstream counts(next_line(in, line_no));
        if (!(counts >> nv >> nc >> nf) || nv < 0 || nc < 0 || nf < 0)
            throw ParseError("bad count line, expected '<V> <C> <F>'", line_no);
    }

    mesh.vertices.reserve(nv);
    for (long i = 0; i < nv; ++i) {
        std::istringstream ls(next_line(in, line_no));
        Vec3 p = Vec3::Zero();
        for (int d = 0; d < mesh.dim; ++d)
            if (!(ls >> p[d])) throw ParseError("bad vertex coordinates", line_no);
        mesh.vertices.push_back(p);
    }

    std::vector<char> referenced(nv, 0);
    mesh.cells.reserve(static_cast<std::size_t>(nc) * (mesh.dim + 1));
    for (long i = 0; i < nc; ++i) {
        std::istringstream ls(next_line(in, line_no));
        for (int k = 0; k <= mesh.dim; ++k) {
            long v = -1;
            if (!(ls >> v)) throw ParseError("bad cell line", line_no);
            if (v < 0 || v >= nv)
                throw ParseError("cell references vertex " + std::to_string(v) +
                                     " outside [0, " + std::to_string(nv) + ")",
                                 line_no);
            referenced[v] = 1;
            mesh.cells.push_back(static_cast<int>(v));
        }
    }
    for (long v = 0; v < nv; ++v)
        if (!referenced[v])
            throw ParseError("vertex " + std::to_string(v) + " is not referenced by any cell");

    mesh.boundary.reserve(nf);
    for (long i = 0; i < nf; ++i) {
        std::istringstream ls(next_line(in, line_no));
        BoundaryFacet facet;
        for (int k = 0; k < mesh.dim; ++k) {
            long v = -1;
            if (!(ls >> v)) throw ParseError("bad facet line", line_no);
            if (v < 0 || v >= nv)
                throw ParseError("facet references vertex " + std::to_string(v) +
                                     " outside [0, " + std::to_string(nv) + ")",
                                 line_no);
            facet.vertices[k] = static_cast<int>(v);
        }
        std::string tag;
        if (!(ls >> tag)) throw ParseError("facet is missing its tag", line_no);
        if (tag == "outer") {
            facet.kind = BoundaryKind::Outer;
        } else if (tag.rfind("outflow:", 0) == 0) {
            facet.kind = BoundaryKind::Outflow;
            try {
                facet.port_id = std::stoi(tag.substr(8));
            } catch (const std::exception&) {
                throw ParseError("bad outflow port id in tag '" + tag + "'", line_no);
            }
        } else {
            throw ParseError("unknown facet tag '" + tag + "'", line_no);
        }
        mesh.boundary.push_back(facet);
    }
    return mesh;
}

Mesh read_mesh(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open mesh file '" + path + "'");
    return read_mesh(in);
}

void write_mesh(const Mesh& mesh, std::ostream& out) {
    out << "pmesh 1 " << mesh.dim << "\n";
    out << mesh.vertices.size() << " " << mesh.cell_count() << " " << mesh.boundary.size()
        << "\n";
    char buf[96];
    for (const auto& v : mesh.vertices) {
        if (mesh.dim == 2)
            std::snprintf(buf, sizeof(buf), "%.17g %.17g\n", v.x(), v.y());
        else
            std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g\n", v.x(), v.y(), v.z());
        out << buf;
    }
    for (int c = 0; c < mesh.cell_count(); ++c) {
        const int* v = mesh.cell(c);
        for (int i = 0; i <= mesh.dim; ++i) out << v[i] << (i == mesh.dim ? "\n" : " ");
    }
    for (const auto& facet : mesh.boundary) {
        for (int i = 0; i < mesh.dim; ++i) out << facet.vertices[i] << " ";
        if (facet.kind == BoundaryKind::Outer)
            out << "outer\n";
        else
            out << "outflow:" << facet.port_id << "\n";
    }
}

void write_mesh(const Mesh& mesh, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ParseError("cannot open '" + path + "' for writing");
    write_mesh(mesh, out);
}

}  // namespace perfusim::msh
