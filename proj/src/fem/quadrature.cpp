#include "perfusim/fem/quadrature.hpp"

#include <cmath>

#include "perfusim/errors.hpp"

namespace perfusim::fem {

namespace {

QuadratureRule make_triangle_rule() {
    QuadratureRule rule;
    const double a1 = 0.059715871789769820;
    const double b1 = 0.470142064105115090;
    const double w1 = 0.132394152788506181;  // (155 + sqrt(15)) / 1200
    const double a2 = 0.797426985353087322;
    const double b2 = 0.101286507323456339;
    const double w2 = 0.125939180544827153;  // (155 - sqrt(15)) / 1200

    rule.points.push_back({1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 0.0});
    rule.weights.push_back(9.0 / 40.0);
    const double sets[2][2] = {{a1, b1}, {a2, b2}};
    const double ws[2] = {w1, w2};
    for (int s = 0; s < 2; ++s) {
        const double a = sets[s][0], b = sets[s][1];
        rule.points.push_back({a, b, b, 0.0});
        rule.points.push_back({b, a, b, 0.0});
        rule.points.push_back({b, b, a, 0.0});
        for (int k = 0; k < 3; ++k) rule.weights.push_back(ws[s]);
    }
    return rule;
}

QuadratureRule make_tet_rule() {
    // 14-point degree-5 rule with positive weights.
    QuadratureRule rule;
    const double b1 = 0.3108859192633005;
    const double a1 = 1.0 - 3.0 * b1;
    const double w1 = 0.1126879257180162;
    const double b2 = 0.0927352503108912;
    const double a2 = 1.0 - 3.0 * b2;
    const double w2 = 0.0734930431163619;
    const double c = 0.0455037041256497;
    const double d = 0.5 - c;
    const double w3 = 0.0425460207770812;

    const double sets[2][2] = {{a1, b1}, {a2, b2}};
    const double ws[2] = {w1, w2};
    for (int s = 0; s < 2; ++s) {
        const double a = sets[s][0], b = sets[s][1];
        rule.points.push_back({a, b, b, b});
        rule.points.push_back({b, a, b, b});
        rule.points.push_back({b, b, a, b});
        rule.points.push_back({b, b, b, a});
        for (int k = 0; k < 4; ++k) rule.weights.push_back(ws[s]);
    }
    const int pairs[6][2] = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
    for (const auto& pr : pairs) {
        std::array<double, 4> pt{d, d, d, d};
        pt[pr[0]] = c;
        pt[pr[1]] = c;
        rule.points.push_back(pt);
        rule.weights.push_back(w3);
    }
    return rule;
}

QuadratureRule make_edge_rule() {
    QuadratureRule rule;
    const double g = std::sqrt(3.0 / 5.0);
    const double pts[3] = {0.5 * (1.0 - g), 0.5, 0.5 * (1.0 + g)};
    const double ws[3] = {5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0};
    for (int i = 0; i < 3; ++i) {
        rule.points.push_back({1.0 - pts[i], pts[i], 0.0, 0.0});
        rule.weights.push_back(ws[i]);
    }
    return rule;
}

}  // namespace

const QuadratureRule& simplex_rule(int dim) {
    static const QuadratureRule tri = make_triangle_rule();
    static const QuadratureRule tet = make_tet_rule();
    if (dim == 2) return tri;
    if (dim == 3) return tet;
    throw DomainError("simplex_rule: dim must be 2 or 3");
}

const QuadratureRule& edge_rule() {
    static const QuadratureRule rule = make_edge_rule();
    return rule;
}

const QuadratureRule& facet_rule(int mesh_dim) {
    return mesh_dim == 2 ? edge_rule() : simplex_rule(2);
}

}  // namespace perfusim::fem
