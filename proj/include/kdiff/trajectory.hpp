#pragma once

#include <variant>

#include "kdiff/flat_surface.hpp"
#include "kdiff/integrate.hpp"

namespace kdiff {

struct CylinderPoint {
    int cyl = -1;
    cplx w{0.0};  // strip coordinate: u along the circle, v >= 0 toward the pole
};

using Place = std::variant<SurfacePoint, CylinderPoint>;

struct ClosedPeriodic {
    double period = 0.0;
};
struct HitSingularity {
    std::string label;
};
struct EnteredCylinder {
    std::string label;
};
struct DenseDetected {
    std::vector<int> domain;  // polygons the trajectory is spread over
};
struct LengthBudgetExhausted {};
struct HitBoundary {};  // free boundary of a truncated model (outside Lemma-B scope)

using Termination = std::variant<ClosedPeriodic, HitSingularity, EnteredCylinder,
                                 DenseDetected, LengthBudgetExhausted, HitBoundary>;

struct TrajSegment {
    int poly = -1;  // -1: segment lives on a cylinder strip
    int cyl = -1;
    cplx a{0.0}, b{0.0};
    double cum_length = 0.0;  // cumulative canonical length at the segment end
};

struct Trajectory {
    Place seed;
    int branch = 0;
    std::vector<TrajSegment> polyline;
    Termination termination = LengthBudgetExhausted{};
    double total_length = 0.0;
};

struct TraceOptions {
    double budget = -1.0;        // < 0: 1000 x surface scale
    double close_tol = -1.0;     // < 0: 1e-9 x scale
    double snap_tol = -1.0;      // < 0: 1e-8 x scale
    bool detect_density = true;
    int density_grid = 64;       // delta = scale / density_grid
    int max_segments = 2000000;
};

namespace trace_detail {

struct VertexArrival {
    int cls;
    VertexRef at;
    cplx incoming;  // direction pointing into the vertex, in `at`'s chart
};

// Straight continuation through a vertex fan: rotate by pi in the cone.
// Returns the outgoing corner and chart direction, or nothing when the
// continuation leaves through a cylinder wedge.
struct FanExit {
    VertexRef corner;
    cplx dir;
    bool into_cylinder = false;
    int wedge_ring = -1;
};

inline std::optional<FanExit> continue_through_vertex(const FlatSurface& s,
                                                      const VertexClass& cls,
                                                      VertexRef at, cplx incoming) {
    // locate the arrival ray in the fan
    const FanCorner* here = nullptr;
    for (const auto& fc : cls.fan)
        if (fc.at == at) {
            here = &fc;
            break;
        }
    if (!here) return std::nullopt;
    const auto& P = s.polygon(at.poly);
    int n = int(P.size());
    cplx out_edge = P[(at.vertex + 1) % n] - P[at.vertex];
    cplx back = -incoming;
    double rel = std::arg(back / out_edge);
    if (rel < -1e-12) rel += two_pi;
    if (rel > here->angle + 1e-9) return std::nullopt;  // arrival ray not in this corner
    rel = std::clamp(rel, 0.0, here->angle);
    double theta_out = std::fmod(here->cone_offset + rel + pi, cls.total_angle);
    // find the target corner (or cylinder wedge) at cone coordinate theta_out
    double acc = 0.0;
    for (const auto& fc : cls.fan) {
        if (fc.cylinder_before) {
            if (theta_out < acc + pi) {
                FanExit ex;
                ex.into_cylinder = true;
                return ex;
            }
            acc += pi;
        }
        if (theta_out <= acc + fc.angle + 1e-12) {
            const auto& Q = s.polygon(fc.at.poly);
            int m = int(Q.size());
            cplx oe = Q[(fc.at.vertex + 1) % m] - Q[fc.at.vertex];
            cplx dir = oe / std::abs(oe) * std::polar(1.0, theta_out - acc);
            return FanExit{fc.at, dir, false, -1};
        }
        acc += fc.angle;
    }
    // wrap-around wedge before the first corner
    if (!cls.fan.empty() && cls.fan.front().cylinder_before) {
        FanExit ex;
        ex.into_cylinder = true;
        return ex;
    }
    return std::nullopt;
}

// visit bookkeeping for the density heuristic
struct DensityGrid {
    double delta = 0.0;
    struct Cell {
        int visits = 0;
        double last_param = -1e300;
    };
    // per polygon: bbox origin, stride, cells
    struct PolyGrid {
        cplx origin;
        int nx = 0, ny = 0;
        std::vector<Cell> cells;
        std::vector<bool> interior;
        int interior_count = 0;
        int saturated = 0;
    };
    std::vector<PolyGrid> polys;
    std::set<int> visited;

    void init(const FlatSurface& s, int grid) {
        delta = s.scale() / grid;
        polys.resize(s.num_polygons());
        for (int p = 0; p < s.num_polygons(); ++p) {
            const auto& P = s.polygon(p);
            double x0 = 1e300, x1 = -1e300, y0 = 1e300, y1 = -1e300;
            for (cplx v : P) {
                x0 = std::min(x0, v.real());
                x1 = std::max(x1, v.real());
                y0 = std::min(y0, v.imag());
                y1 = std::max(y1, v.imag());
            }
            auto& G = polys[p];
            G.origin = cplx(x0, y0);
            G.nx = std::max(1, int(std::ceil((x1 - x0) / delta)));
            G.ny = std::max(1, int(std::ceil((y1 - y0) / delta)));
            G.cells.resize(size_t(G.nx) * G.ny);
            G.interior.resize(G.cells.size(), false);
            for (int iy = 0; iy < G.ny; ++iy)
                for (int ix = 0; ix < G.nx; ++ix) {
                    cplx c = G.origin + cplx((ix + 0.5) * delta, (iy + 0.5) * delta);
                    bool in = s.contains(p, c, -1e-12);
                    G.interior[size_t(iy) * G.nx + ix] = in;
                    if (in) ++G.interior_count;
                }
        }
    }
    void mark(int p, cplx a, cplx b, double param) {
        auto& G = polys[p];
        visited.insert(p);
        double L = std::abs(b - a);
        int steps = std::max(1, int(std::ceil(L / (0.5 * delta))));
        for (int i = 0; i <= steps; ++i) {
            cplx z = a + (b - a) * (double(i) / steps);
            int ix = int((z.real() - G.origin.real()) / delta);
            int iy = int((z.imag() - G.origin.imag()) / delta);
            if (ix < 0 || iy < 0 || ix >= G.nx || iy >= G.ny) continue;
            auto& cell = G.cells[size_t(iy) * G.nx + ix];
            if (!G.interior[size_t(iy) * G.nx + ix]) continue;
            double local = param + double(i) / steps * L;
            if (local - cell.last_param > 3.0 * delta) {
                cell.last_param = local;
                if (++cell.visits == 3) ++G.saturated;
            } else {
                cell.last_param = local;
            }
        }
    }
    bool dense() const {
        if (visited.empty()) return false;
        for (int p : visited) {
            const auto& G = polys[p];
            if (G.interior_count == 0) return false;
            if (G.saturated < G.interior_count) return false;
        }
        return true;
    }
};

}  // namespace trace_detail

// Traces the horizontal trajectory of direction-field index `branch` from a
// point until it closes, hits a singularity, enters an infinite cylinder, is
// flagged dense, or exhausts the length budget.
inline Trajectory trace(const FlatSurface& s, Place start, int branch,
                        TraceOptions opt = TraceOptions()) {
    using namespace trace_detail;
    const int k = s.k();
    const double scale = s.scale();
    const double budget = opt.budget > 0 ? opt.budget : 1000.0 * scale;
    const double close_tol = opt.close_tol > 0 ? opt.close_tol : 1e-9 * scale;
    const double snap = opt.snap_tol > 0 ? opt.snap_tol : 1e-8 * scale;

    Trajectory out;
    out.seed = start;
    out.branch = mod_k(branch, k);

    DensityGrid grid;
    if (opt.detect_density && s.num_polygons() > 0) grid.init(s, opt.density_grid);

    // seed data
    int poly = -1, cyl = -1;
    cplx z{0.0};
    cplx dir = unit_root(out.branch, k);
    int cur_branch = out.branch;
    if (std::holds_alternative<SurfacePoint>(start)) {
        auto sp = std::get<SurfacePoint>(start);
        poly = sp.poly;
        z = sp.pos;
        if (poly < 0 || poly >= s.num_polygons())
            throw std::invalid_argument("trace: seed polygon out of range");
    } else {
        auto cp = std::get<CylinderPoint>(start);
        cyl = cp.cyl;
        z = cp.w;
    }

    double cum = 0.0;
    auto push_seg = [&](int p, int c, cplx a, cplx b) {
        cum += std::abs(b - a);
        out.polyline.push_back({p, c, a, b, cum});
        if (p >= 0 && opt.detect_density && s.num_polygons() > 0)
            grid.mark(p, a, b, cum - std::abs(b - a));
    };

    const SurfacePoint seed_sp =
        std::holds_alternative<SurfacePoint>(start) ? std::get<SurfacePoint>(start) : SurfacePoint{};
    const bool seeded_on_poly = std::holds_alternative<SurfacePoint>(start);

    for (int iter = 0; iter < opt.max_segments; ++iter) {
        if (cum > budget) {
            out.termination = LengthBudgetExhausted{};
            break;
        }
        if (cyl >= 0) {
            // strip dynamics: w = u + iv, identification u ~ u + C, v >= 0
            const auto& C = s.cylinders()[cyl];
            if (std::abs(dir.imag()) < 1e-12) {
                // circumferential: closes after one circumference
                push_seg(-1, cyl, z, z + dir * C.circumference);
                out.termination = ClosedPeriodic{C.circumference};
                break;
            }
            if (dir.imag() > 0) {
                // runs up the strip toward the order -k pole
                push_seg(-1, cyl, z, z + dir * (0.25 * std::max(scale, C.circumference)));
                out.termination = EnteredCylinder{C.label};
                break;
            }
            if (C.edges.empty()) {
                // purely symbolic (bi-infinite) cylinder: spirals forever
                push_seg(-1, cyl, z, z + dir * (0.25 * std::max(scale, C.circumference)));
                out.termination = LengthBudgetExhausted{};
                break;
            }
            // descending: hits v = 0 at u_hit
            double t = -z.imag() / dir.imag();
            cplx hit = z + dir * t;
            push_seg(-1, cyl, z, hit);
            double C0 = C.circumference;
            double u = std::fmod(hit.real(), C0);
            if (u < 0) u += C0;
            int chain_idx = s.chain_edge_at(cyl, u);
            auto sm = s.strip_map(cyl, chain_idx);
            EdgeRef e = C.edges[chain_idx];
            cplx zp = sm.invert(cplx(u, 0.0));
            cplx dp = dir / sm.rot;
            poly = e.poly;
            z = zp;
            dir = dp;
            cyl = -1;
            cur_branch = mod_k(llround(std::arg(dir) * k / two_pi), k);
            continue;
        }

        // polygon ray step
        const auto& P = s.polygon(poly);
        int n = int(P.size());
        double best_t = 1e300;
        int best_edge = -1;
        double best_s = 0.0;
        for (int e = 0; e < n; ++e) {
            cplx A = P[e], B = P[(e + 1) % n];
            cplx ev = B - A;
            double denom = (std::conj(dir) * ev).imag();  // cross(dir, ev)
            cplx rel = A - z;
            if (std::abs(denom) < 1e-15 * std::abs(ev)) {
                // parallel: collinear along-edge travel handled via vertex hits
                continue;
            }
            double t = (std::conj(rel) * ev).imag() / denom;
            double sp = (std::conj(rel) * dir).imag() / denom;
            if (t > 1e-12 * scale && sp > -1e-9 && sp < 1.0 + 1e-9) {
                if (t < best_t) {
                    best_t = t;
                    best_edge = e;
                    best_s = std::clamp(sp, 0.0, 1.0);
                }
            }
        }
        // vertex hits: the nearest vertex forward along the ray within snap
        {
            double vt = 1e300;
            int vidx = -1;
            for (int vi = 0; vi < n; ++vi) {
                cplx rel = P[vi] - z;
                double t = (rel * std::conj(dir)).real();
                double d = std::abs(rel - t * dir);
                if (t > 1e-12 * scale && d < snap && t < vt) {
                    vt = t;
                    vidx = vi;
                }
            }
            if (vidx >= 0 && vt < best_t + snap) {
                // vertex event
                cplx vz = P[vidx];
                push_seg(poly, -1, z, vz);
                VertexRef vr{poly, vidx};
                const VertexClass& cls = s.vertex_classes()[s.class_of(vr)];
                if (cls.marked && cls.order != 0) {
                    out.termination = HitSingularity{cls.label};
                    out.total_length = cum;
                    return out;
                }
                if (cls.on_boundary) {
                    out.termination = HitBoundary{};
                    out.total_length = cum;
                    return out;
                }
                auto ex = continue_through_vertex(s, cls, vr, dir);
                if (!ex) {
                    // arrival corner ambiguity: retry against every member
                    for (const auto& m : cls.members) {
                        if (m.poly != poly) continue;
                        ex = continue_through_vertex(s, cls, m, dir);
                        if (ex) break;
                    }
                }
                if (!ex) {
                    out.termination = HitBoundary{};
                    out.total_length = cum;
                    return out;
                }
                if (ex->into_cylinder) {
                    out.termination = EnteredCylinder{"(vertex wedge)"};
                    out.total_length = cum;
                    return out;
                }
                poly = ex->corner.poly;
                z = s.polygon(poly)[ex->corner.vertex];
                dir = ex->dir / std::abs(ex->dir);
                cur_branch = mod_k(llround(std::arg(dir) * k / two_pi), k);
                continue;
            }
        }
        if (best_edge < 0) {
            out.termination = HitBoundary{};  // numerically stuck; should not happen on closed surfaces
            break;
        }
        cplx hit = z + dir * best_t;

        // closure test against the seed
        if (seeded_on_poly && poly == seed_sp.poly && cur_branch == out.branch) {
            cplx rel = seed_sp.pos - z;
            double t = (rel * std::conj(dir)).real();
            if (t > -close_tol && t < best_t + close_tol) {
                double d = std::abs(rel - t * dir);
                if (d < close_tol && cum + t > 1e-6 * scale) {
                    push_seg(poly, -1, z, seed_sp.pos);
                    out.termination = ClosedPeriodic{cum};
                    out.total_length = cum;
                    return out;
                }
            }
        }

        push_seg(poly, -1, z, hit);
        EdgeRef e{poly, best_edge};
        if (auto ci = s.cylinder_of_edge(e)) {
            out.termination = EnteredCylinder{s.cylinders()[*ci].label};
            out.total_length = cum;
            return out;
        }
        auto cr = s.crossing(e);
        if (!cr) {
            out.termination = HitBoundary{};
            out.total_length = cum;
            return out;
        }
        z = unit_root(cr->rot, k) * hit + cr->trans;
        dir = unit_root(cr->rot, k) * dir;
        poly = cr->other.poly;
        cur_branch = mod_k(cur_branch + cr->rot, k);

        if (opt.detect_density && iter % 64 == 63 && grid.dense()) {
            std::vector<int> dom(grid.visited.begin(), grid.visited.end());
            out.termination = DenseDetected{dom};
            break;
        }
    }
    out.total_length = cum;
    return out;
}

// ---- critical trajectories ---------------------------------------------------

struct CriticalGerm {
    int cls = -1;          // vertex class id
    VertexRef corner;      // corner whose chart carries the germ
    cplx dir{1.0};         // chart direction (a k-th root of unity)
    bool along_edge = false;
    int edge = -1;             // when along_edge: the polygon edge the germ runs along
    bool into_cylinder = false;  // ray leaves through a cylinder wedge
};

// Enumerates the m+k outgoing horizontal rays at every conical singularity
// by sweeping the cone: the oriented-horizontal directions sit 2pi/k apart
// in cone coordinates, landing in polygon corners (traceable rays), along
// edges, or inside cylinder wedges.
inline std::vector<CriticalGerm> critical_germs(const FlatSurface& s) {
    std::vector<CriticalGerm> out;
    int k = s.k();
    const double step = two_pi / double(k);
    for (size_t ci = 0; ci < s.vertex_classes().size(); ++ci) {
        const auto& cls = s.vertex_classes()[ci];
        if (!cls.marked || cls.order == 0) continue;
        if (cls.order <= -k) continue;
        if (cls.fan.empty()) continue;

        auto out_dir = [&](const FanCorner& fc) {
            const auto& P = s.polygon(fc.at.poly);
            int n = int(P.size());
            cplx oe = P[(fc.at.vertex + 1) % n] - P[fc.at.vertex];
            return oe / std::abs(oe);
        };
        // anchor: cone coordinate of the horizontal ray nearest the first
        // corner's out-edge
        double theta0;
        {
            cplx u = out_dir(cls.fan.front());
            double a = std::arg(u);
            double snapped = std::round(a / step) * step;
            theta0 = cls.fan.front().cone_offset + (snapped - a);
            // normalize to [0, step)
            theta0 = std::fmod(std::fmod(theta0, step) + step, step);
        }
        int count = int(std::llround(cls.total_angle / step));
        int found = 0;
        for (int j = 0; j < count; ++j) {
            double theta = theta0 + j * step;
            if (theta >= cls.total_angle - 1e-9) break;
            // locate theta in the fan (corners and cylinder wedges)
            bool placed = false;
            for (const auto& fc : cls.fan) {
                double off = fc.cone_offset;
                if (fc.cylinder_before) {
                    double woff = off - pi;
                    if (theta >= woff - 1e-9 && theta < off - 1e-9) {
                        // ray strictly inside a cylinder wedge
                        CriticalGerm g;
                        g.cls = int(ci);
                        g.corner = fc.at;
                        g.into_cylinder = true;
                        out.push_back(g);
                        ++found;
                        placed = true;
                        break;
                    }
                }
                if (theta >= off - 1e-9 && theta < off + fc.angle - 1e-9) {
                    cplx u = out_dir(fc);
                    cplx d = u * std::polar(1.0, theta - off);
                    int b = mod_k(llround(std::arg(d) * k / two_pi), k);
                    d = unit_root(b, k);  // snap exactly onto the root of unity
                    CriticalGerm g;
                    g.cls = int(ci);
                    g.corner = fc.at;
                    g.dir = d;
                    g.along_edge = theta - off < 1e-9;
                    g.edge = g.along_edge ? fc.at.vertex : -1;
                    out.push_back(g);
                    ++found;
                    placed = true;
                    break;
                }
                // boundary between a corner and a following wedge: the ray
                // runs along the corner's in-edge (a cylinder chain edge)
                if (theta >= off + fc.angle - 1e-9 && theta < off + fc.angle + 1e-9) {
                    const auto& P = s.polygon(fc.at.poly);
                    int n = int(P.size());
                    int prev_edge = (fc.at.vertex + n - 1) % n;
                    cplx ie = P[prev_edge] - P[fc.at.vertex];
                    CriticalGerm g;
                    g.cls = int(ci);
                    g.corner = fc.at;
                    g.dir = ie / std::abs(ie);
                    {
                        int b = mod_k(llround(std::arg(g.dir) * k / two_pi), k);
                        g.dir = unit_root(b, k);
                    }
                    g.along_edge = true;
                    g.edge = prev_edge;
                    out.push_back(g);
                    ++found;
                    placed = true;
                    break;
                }
            }
            if (!placed && !cls.fan.empty() && cls.fan.front().cylinder_before) {
                // wrap-around wedge ahead of the first corner
                CriticalGerm g;
                g.cls = int(ci);
                g.corner = cls.fan.front().at;
                g.into_cylinder = true;
                out.push_back(g);
                ++found;
                placed = true;
            }
            if (!placed)
                throw std::logic_error("critical_germs: failed to place a ray in the fan of '" +
                                       cls.label + "'");
        }
        if (!cls.on_boundary && found != cls.order + k)
            throw std::logic_error("critical_germs: ray count does not match order+k for '" +
                                   cls.label + "'");
    }
    return out;
}

// Launches every critical germ and traces it under the budget.  Rays leaving
// through a cylinder wedge are reported as immediately entering it.
inline std::vector<Trajectory> critical_graph(const FlatSurface& s,
                                              TraceOptions opt = TraceOptions()) {
    std::vector<Trajectory> out;
    double eps = 1e-9 * s.scale();
    for (const auto& g : critical_germs(s)) {
        cplx origin = s.vertex(g.corner);
        if (g.into_cylinder) {
            Trajectory t;
            t.seed = SurfacePoint{g.corner.poly, origin};
            t.termination = EnteredCylinder{"(wedge at " + s.vertex_classes()[g.cls].label + ")"};
            out.push_back(std::move(t));
            continue;
        }
        SurfacePoint sp{g.corner.poly, origin + eps * g.dir};
        Trajectory t = trace(s, sp, mod_k(llround(std::arg(g.dir) * s.k() / two_pi), s.k()), opt);
        // restore the exact origin on the recorded polyline
        if (!t.polyline.empty()) t.polyline.front().a = origin;
        out.push_back(std::move(t));
    }
    return out;
}

// ---- holonomy ------------------------------------------------------------------

struct HolonomyElement {
    int index = 0;  // zeta^index
};

// Branch change of the tracked k-th root along a chart loop.  Consecutive
// points in different polygons must sit on a common glued edge.
inline HolonomyElement holonomy_of_loop(const FlatSurface& s,
                                        const std::vector<SurfacePoint>& loop) {
    if (loop.size() < 2) return {0};
    int k = s.k();
    long long idx = 0;
    for (size_t i = 0; i + 1 < loop.size(); ++i) {
        const auto& a = loop[i];
        const auto& b = loop[i + 1];
        if (a.poly == b.poly) continue;
        bool matched = false;
        for (int e = 0; e < int(s.polygon(a.poly).size()) && !matched; ++e) {
            auto cr = s.crossing({a.poly, e});
            if (!cr || cr->other.poly != b.poly) continue;
            cplx mapped = unit_root(cr->rot, k) * a.pos + cr->trans;
            if (std::abs(mapped - b.pos) < 1e-6 * s.scale()) {
                idx -= cr->rot;  // root branch shift is minus the direction rotation
                matched = true;
            }
        }
        if (!matched)
            throw std::invalid_argument("holonomy_of_loop: consecutive points not on a shared edge");
    }
    return {mod_k(idx, k)};
}

// Holonomy of the peripheral loop around a vertex class: sum of fan
// transport rotations.
inline HolonomyElement holonomy_around_class(const FlatSurface& s, int cls_id) {
    const auto& cls = s.vertex_classes()[cls_id];
    long long idx = 0;
    for (const auto& fc : cls.fan) idx += fc.rot_before;
    return {mod_k(idx, s.k())};
}

struct HolonomySubgroup {
    int generator = 0;  // gcd index g: the subgroup is {zeta^(g j)}; g = k means trivial
    int order = 1;      // subgroup size k/g
    bool trivial() const { return order == 1; }
    bool plus_minus_one(int k) const { return order == 2 && generator * 2 == k; }
};

// Subgroup of G_k generated by holonomies of loops inside the domain (all
// polygons when domain is empty): co-tree gluing loops plus peripheral loops
// of interior vertex classes.
inline HolonomySubgroup holonomy_group(const FlatSurface& s,
                                       const std::vector<int>& domain = {}) {
    int k = s.k();
    std::set<int> dom(domain.begin(), domain.end());
    if (dom.empty())
        for (int p = 0; p < s.num_polygons(); ++p) dom.insert(p);

    // develop a spanning tree: rotation index of each polygon placement
    std::map<int, int> rot_idx;
    std::queue<int> bfs;
    if (!dom.empty()) {
        rot_idx[*dom.begin()] = 0;
        bfs.push(*dom.begin());
    }
    std::vector<long long> gens;
    while (!bfs.empty()) {
        int p = bfs.front();
        bfs.pop();
        for (int e = 0; e < int(s.polygon(p).size()); ++e) {
            auto cr = s.crossing({p, e});
            if (!cr || !dom.count(cr->other.poly)) continue;
            int q = cr->other.poly;
            int expect = mod_k(rot_idx[p] - cr->rot, k);  // transport placement
            auto it = rot_idx.find(q);
            if (it == rot_idx.end()) {
                rot_idx[q] = expect;
                bfs.push(q);
            } else {
                gens.push_back(mod_k(expect - it->second, k));  // co-tree loop holonomy
            }
        }
    }
    // peripheral loops of classes entirely inside the domain
    for (size_t ci = 0; ci < s.vertex_classes().size(); ++ci) {
        const auto& cls = s.vertex_classes()[ci];
        bool interior = !cls.on_boundary;
        for (const auto& m : cls.members)
            if (!dom.count(m.poly)) interior = false;
        if (cls.on_cylinder) {
            // the wedge loop passes through the cylinder; include it only for
            // full-surface domains
            if (int(dom.size()) != s.num_polygons()) interior = false;
        }
        if (interior) gens.push_back(holonomy_around_class(s, int(ci)).index);
    }
    long long g = k;
    for (long long x : gens) g = std::gcd(g, mod_k(x, k) == 0 ? k : (long long)mod_k(x, k));
    HolonomySubgroup sub;
    sub.generator = int(g);
    sub.order = int(k / g);
    return sub;
}

// ---- power reduction -----------------------------------------------------------

enum class PowerReduction { FullForm, HalfForm, None };

inline PowerReduction power_reduction_from_group(const HolonomySubgroup& g, int k) {
    if (g.trivial()) return PowerReduction::FullForm;
    if (k % 2 == 0 && g.plus_minus_one(k)) return PowerReduction::HalfForm;
    return PowerReduction::None;
}

inline PowerReduction power_reduction(const FlatSurface& s) {
    return power_reduction_from_group(holonomy_group(s), s.k());
}

inline PowerReduction power_reduction(const RationalKDifferential& psi) {
    int k = psi.k();
    long long g = k;
    auto fold = [&](int m) {
        int r = mod_k(m, k);
        g = std::gcd(g, r == 0 ? (long long)k : (long long)r);
    };
    for (const auto& d : psi.divisor()) fold(d.order);
    fold(psi.order_at_infinity());
    HolonomySubgroup sub{int(g), int(k / g)};
    return power_reduction_from_group(sub, k);
}

// ---- plane tracing of a differential --------------------------------------------

struct PlaneTrajectory {
    std::vector<cplx> points;
    Termination termination = LengthBudgetExhausted{};
    double total_length = 0.0;
    double max_root_residual = 0.0;  // max relative |root^k - R| seen while tracking
};

// Traces the horizontal trajectory of a rational differential directly in
// the z-chart at unit canonical speed; used for seeds and invariance checks.
inline PlaneTrajectory trace_differential(const RationalKDifferential& psi, cplx z0, int branch,
                                          double budget, double step = 1e-3,
                                          double sing_snap = 1e-8) {
    int k = psi.k();
    PlaneTrajectory out;
    cplx root = principal_root(psi.eval(z0), k) * unit_root(branch, k);
    double spread = 1.0;
    for (const auto& d : psi.divisor()) spread = std::max(spread, std::abs(d.position));
    auto vel = [&](cplx z, cplx& track) {
        auto br = nearest_root_angular(psi.eval(z), k, track);
        track = br.value;
        return 1.0 / br.value;
    };
    cplx z = z0;
    out.points.push_back(z);
    double s = 0.0;
    double ds = step;
    int iters = int(budget / ds) + 8;
    for (int it = 0; it < iters; ++it) {
        cplx t1 = root, t2 = root, t3 = root, t4 = root;
        cplx k1 = vel(z, t1);
        cplx k2 = vel(z + 0.5 * ds * k1, t2);
        cplx k3 = vel(z + 0.5 * ds * k2, t3);
        cplx k4 = vel(z + ds * k3, t4);
        cplx znew = z + ds / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        root = t4;
        double rr = std::abs(std::pow(root, k) - psi.eval(znew)) /
                    std::max(1e-300, std::abs(psi.eval(znew)));
        out.max_root_residual = std::max(out.max_root_residual, rr);
        s += ds;
        out.points.push_back(znew);
        for (const auto& d : psi.divisor())
            if (std::abs(znew - d.position) < sing_snap * std::max(1.0, spread)) {
                out.termination = HitSingularity{"divisor"};
                out.total_length = s;
                return out;
            }
        if (std::abs(znew) > 50.0 * (spread + 1.0)) {
            out.termination = EnteredCylinder{"inf"};
            out.total_length = s;
            return out;
        }
        if (s > 3.0 * step && std::abs(znew - z0) < 0.5 * ds) {
            out.termination = ClosedPeriodic{s};
            out.total_length = s;
            return out;
        }
        if (s > budget) break;
        z = znew;
    }
    out.total_length = s;
    return out;
}

}  // namespace kdiff
