#pragma once

// Shared encoded surfaces used across the test suites.

#include "kdiff/flat_surface.hpp"

namespace fixtures {

using namespace kdiff;

// Flat torus from the unit square, trivial rotations; valid for any k.
inline FlatSurface square_torus(int k) {
    std::vector<cplx> P{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    std::vector<Gluing> gl{{{0, 0}, {0, 2}, 0}, {{0, 3}, {0, 1}, 0}};
    return FlatSurface(k, {P}, gl, {}, {});
}

// Torus from a parallelogram with horizontal side 1 and slant side
// alpha + i; vertical trajectories see the rotation x -> x - alpha.
inline FlatSurface twisted_torus(int k, double alpha) {
    std::vector<cplx> P{{0, 0}, {1, 0}, {1 + alpha, 1}, {alpha, 1}};
    std::vector<Gluing> gl{{{0, 0}, {0, 2}, 0}, {{0, 3}, {0, 1}, 0}};
    return FlatSurface(k, {P}, gl, {}, {});
}

// Cubic differential surface: parallelogram with a corner fold at B and two
// half-infinite cylinders; one zero of order 2 (A), one pole of order -2
// (B), two poles of order -3 at the cylinder ends.
inline FlatSurface fig2_cubic() {
    cplx z6 = std::polar(1.0, pi / 3.0);
    std::vector<cplx> P{cplx(0, 0), cplx(1, 0), cplx(1, 0) + z6, z6};  // A B A' A''
    std::vector<Gluing> gl{{{0, 0}, {0, 1}, 2}};                       // fold at B
    std::vector<VertexMark> marks{{0, 0, "A", 2}, {0, 1, "B", -2}};
    std::vector<InfiniteCylinder> cyls{{1.0, {{0, 3}}, "P1"}, {1.0, {{0, 2}}, "P2"}};
    return FlatSurface(3, {P}, gl, marks, cyls);
}

// Quartic differential surface: cross-shaped polygon, corner folds at the
// four order -3 poles, side tabs closed into tubes, two cylinders; the six
// I-vertices identify to a single zero of order 12.
inline FlatSurface fig5_quartic() {
    std::vector<cplx> P{{1, 0}, {2, 0}, {3, 0}, {3, 1}, {4, 1}, {4, 2}, {3, 2},
                        {3, 3}, {2, 3}, {1, 3}, {1, 2}, {0, 2}, {0, 1}, {1, 1}};
    std::vector<Gluing> gl{
        {{0, 13}, {0, 0}, 3},  // fold at A=(1,0)
        {{0, 1}, {0, 2}, 3},   // fold at B=(3,0)
        {{0, 6}, {0, 7}, 3},   // fold at C=(3,3)
        {{0, 8}, {0, 9}, 3},   // fold at D=(1,3)
        {{0, 12}, {0, 10}, 0}, // left tab tube
        {{0, 3}, {0, 5}, 0},   // right tab tube
    };
    std::vector<VertexMark> marks{{0, 0, "A", -3}, {0, 2, "B", -3}, {0, 7, "C", -3},
                                  {0, 9, "D", -3}, {0, 1, "I", 12}};
    std::vector<InfiniteCylinder> cyls{{1.0, {{0, 11}}, "P1"}, {1.0, {{0, 4}}, "P2"}};
    return FlatSurface(4, {P}, gl, marks, cyls);
}

// Quartic differential surface: side-3 square with a corner fold at each of
// the four order -3 poles; the edge midpoints identify to a zero of order 4.
inline FlatSurface fig6_quartic() {
    std::vector<cplx> P{{0, 0}, {1.5, 0}, {3, 0}, {3, 1.5}, {3, 3}, {1.5, 3}, {0, 3}, {0, 1.5}};
    std::vector<Gluing> gl{
        {{0, 7}, {0, 0}, 3},  // fold at A=(0,0)
        {{0, 1}, {0, 2}, 3},  // fold at B=(3,0)
        {{0, 3}, {0, 4}, 3},  // fold at C=(3,3)
        {{0, 5}, {0, 6}, 3},  // fold at D=(0,3)
    };
    std::vector<VertexMark> marks{{0, 0, "A", -3}, {0, 2, "B", -3}, {0, 4, "C", -3},
                                  {0, 6, "D", -3}, {0, 1, "I", 4}};
    return FlatSurface(4, {P}, gl, marks, {});
}

// Double of a 60-degree rhombus with sides a (direction 1) and b (direction
// e^{i pi/3}); a genus-0 cubic surface with two order -2 and two order -1
// poles.  Period ratios contain (b/a) e^{i pi/3}.
inline FlatSurface doubled_rhombus_k3(double a, double b) {
    cplx z6 = std::polar(1.0, pi / 3.0);
    cplx w6 = std::conj(z6);
    std::vector<cplx> P{cplx(0, 0), cplx(a, 0), cplx(a, 0) + b * z6, b * z6};
    std::vector<cplx> M{cplx(0, 0), b * w6, cplx(a, 0) + b * w6, cplx(a, 0)};
    std::vector<Gluing> gl{
        {{0, 0}, {1, 3}, 0},
        {{0, 1}, {1, 2}, 2},
        {{0, 2}, {1, 1}, 0},
        {{0, 3}, {1, 0}, 2},
    };
    std::vector<VertexMark> marks{{0, 0, "P0", -2}, {0, 1, "P1", -1}, {0, 2, "P2", -2},
                                  {0, 3, "P3", -1}};
    return FlatSurface(3, {P, M}, gl, marks, {});
}

// Double of an a x b rectangle (k = 4) with the top/bottom identification
// twisted by shift s: a torus carrying a zero of order 4 and two poles of
// order -2, with holonomy group {+-1}.  Irrational s/a makes the vertical
// direction minimal.
inline FlatSurface doubled_twisted_rectangle_k4(double a, double b, double s) {
    std::vector<cplx> P{{0, 0}, {a, 0}, {a, b}, {a - s, b}, {0, b}};
    std::vector<cplx> Q{{0, 0}, {0, -b}, {s, -b}, {a, -b}, {a, 0}};
    std::vector<Gluing> gl{
        {{0, 0}, {1, 4}, 0},  // bottoms
        {{0, 1}, {1, 3}, 2},  // right sides
        {{0, 2}, {1, 1}, 0},  // top [a-s,a] -> bottom-line [0,s]
        {{0, 3}, {1, 2}, 0},  // top [0,a-s] -> bottom-line [s,a]
        {{0, 4}, {1, 0}, 2},  // left sides
    };
    std::vector<VertexMark> marks{{0, 0, "p", -2}, {0, 1, "q", -2}, {0, 2, "z", 4}};
    return FlatSurface(4, {P, Q}, gl, marks, {});
}

}  // namespace fixtures
