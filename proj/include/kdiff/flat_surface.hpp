#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>

#include "kdiff/complex_util.hpp"

namespace kdiff {

struct EdgeRef {
    int poly = -1;
    int edge = -1;  // edge i runs from vertex i to vertex i+1 (mod n)
    auto operator<=>(const EdgeRef&) const = default;
};

// Transition g(z) = zeta^rot * z + t maps a collar of `from` onto a collar of
// `to`, sending from-start to to-end and from-end to to-start (counter-
// clockwise polygons meet along opposite edge orientations).
struct Gluing {
    EdgeRef from, to;
    int rot = 0;
};

struct VertexMark {
    int poly = 0;
    int vertex = 0;
    std::string label;
    int order = 0;  // 0 = regular
};

// Half-infinite flat cylinder attached along a closed chain of polygon
// edges; stored symbolically (never meshed).  `edges` lists the attachment
// chain in polygon-boundary order: the end vertex of each edge is identified
// with the start vertex of the next.
struct InfiniteCylinder {
    double circumference = 0.0;
    std::vector<EdgeRef> edges;
    std::string label;
};

struct VertexRef {
    int poly = -1;
    int vertex = -1;
    auto operator<=>(const VertexRef&) const = default;
};

// One corner of the fan around an identified vertex, in cyclic CCW order.
struct FanCorner {
    VertexRef at;
    double angle = 0.0;          // interior corner angle
    double cone_offset = 0.0;    // cumulated cone angle at the corner's first ray
    bool cylinder_before = false;  // a cylinder wedge (angle pi) precedes this corner
    // Parallel-transport rotation index picked up entering this corner (CCW
    // walk); the pull-back of the crossing, i.e. minus the tracer rotation.
    int rot_before = 0;
};

struct VertexClass {
    std::vector<VertexRef> members;
    std::vector<FanCorner> fan;
    double total_angle = 0.0;
    bool on_boundary = false;   // fan interrupted by unglued edges
    bool on_cylinder = false;   // fan passes through a cylinder wedge
    std::string label;          // from marks; empty = unmarked
    int order = 0;              // 0 = regular
    bool marked = false;
};

struct SurfacePoint {
    int poly = -1;
    cplx pos{0.0};
};

class FlatSurface {
  public:
    struct Options {
        double rel_tol = 1e-9;        // glued-edge length agreement
        bool allow_boundary = false;  // permit unglued edges (truncated models)
        bool check_marks = true;
    };

    FlatSurface(int k, std::vector<std::vector<cplx>> polygons, std::vector<Gluing> gluings,
                std::vector<VertexMark> marks, std::vector<InfiniteCylinder> cylinders)
        : FlatSurface(k, std::move(polygons), std::move(gluings), std::move(marks),
                      std::move(cylinders), Options{}) {}

    FlatSurface(int k, std::vector<std::vector<cplx>> polygons, std::vector<Gluing> gluings,
                std::vector<VertexMark> marks, std::vector<InfiniteCylinder> cylinders,
                Options opts)
        : k_(k),
          polys_(std::move(polygons)),
          gluings_(std::move(gluings)),
          marks_(std::move(marks)),
          cylinders_(std::move(cylinders)),
          opts_(opts) {
        if (k_ < 2) throw std::invalid_argument("surface order k must be >= 2");
        build_indices();
        validate();
        build_vertex_classes();
        if (opts_.check_marks) check_mark_consistency();
    }

    int k() const { return k_; }
    int num_polygons() const { return int(polys_.size()); }
    const std::vector<cplx>& polygon(int p) const { return polys_[p]; }
    const std::vector<std::vector<cplx>>& polygons() const { return polys_; }
    const std::vector<Gluing>& gluings() const { return gluings_; }
    const std::vector<VertexMark>& marks() const { return marks_; }
    const std::vector<InfiniteCylinder>& cylinders() const { return cylinders_; }
    const std::vector<VertexClass>& vertex_classes() const { return classes_; }

    cplx vertex(VertexRef v) const { return polys_[v.poly][v.vertex]; }
    cplx edge_start(EdgeRef e) const { return polys_[e.poly][e.edge]; }
    cplx edge_end(EdgeRef e) const {
        const auto& P = polys_[e.poly];
        return P[(e.edge + 1) % P.size()];
    }
    cplx edge_vector(EdgeRef e) const { return edge_end(e) - edge_start(e); }

    int class_of(VertexRef v) const { return class_id_.at(v); }

    // Gluing crossing data seen from one side.
    struct Crossing {
        EdgeRef other;
        int rot = 0;   // signed: direction multiplies by zeta^rot when crossing
        cplx trans{0.0};  // g(z) = zeta^rot z + trans maps this chart to the other chart
    };
    std::optional<Crossing> crossing(EdgeRef e) const {
        auto it = glue_lookup_.find(e);
        if (it == glue_lookup_.end()) return std::nullopt;
        const Gluing& g = gluings_[it->second.first];
        bool forward = it->second.second;
        EdgeRef a = forward ? g.from : g.to;
        EdgeRef b = forward ? g.to : g.from;
        int rot = forward ? g.rot : mod_k(-g.rot, k_);
        // forward: map sends start(a) -> end(b)
        cplx t = edge_start(b) + edge_vector(b) - unit_root(rot, k_) * edge_start(a);
        return Crossing{b, rot, t};
    }

    std::optional<int> cylinder_of_edge(EdgeRef e) const {
        auto it = cyl_lookup_.find(e);
        if (it == cyl_lookup_.end()) return std::nullopt;
        return it->second;
    }

    bool edge_is_free(EdgeRef e) const {
        return !crossing(e).has_value() && !cylinder_of_edge(e).has_value();
    }

    double polygon_area(int p) const {
        const auto& P = polys_[p];
        double a = 0.0;
        for (size_t i = 0; i < P.size(); ++i) {
            cplx u = P[i], v = P[(i + 1) % P.size()];
            a += u.real() * v.imag() - v.real() * u.imag();
        }
        return 0.5 * a;
    }

    double total_polygon_area() const {
        double a = 0.0;
        for (int p = 0; p < num_polygons(); ++p) a += polygon_area(p);
        return a;
    }

    bool has_infinite_cylinder() const { return !cylinders_.empty(); }

    // Chart-scale used for tolerances and budgets.
    double scale() const {
        double d = 0.0;
        for (const auto& P : polys_)
            for (size_t i = 0; i < P.size(); ++i)
                for (size_t j = i + 1; j < P.size(); ++j) d = std::max(d, std::abs(P[i] - P[j]));
        for (const auto& c : cylinders_) d = std::max(d, c.circumference);
        return d > 0.0 ? d : 1.0;
    }

    bool contains(int p, cplx z, double tol = 0.0) const {
        const auto& P = polys_[p];
        int n = int(P.size());
        bool inside = true;
        for (int i = 0; i < n; ++i) {
            cplx a = P[i], b = P[(i + 1) % n];
            // CCW polygon: interior is left of every edge
            double cr = (b.real() - a.real()) * (z.imag() - a.imag()) -
                        (b.imag() - a.imag()) * (z.real() - a.real());
            if (cr < -tol) inside = false;
        }
        return inside;
    }

    std::optional<SurfacePoint> locate(cplx z, double tol = 1e-12) const {
        for (int p = 0; p < num_polygons(); ++p)
            if (contains(p, z, tol)) return SurfacePoint{p, z};
        return std::nullopt;
    }

    // Interior angle at a polygon corner.
    double corner_angle(VertexRef v) const {
        const auto& P = polys_[v.poly];
        int n = int(P.size());
        cplx at = P[v.vertex];
        cplx out = P[(v.vertex + 1) % n] - at;        // edge v -> v+1
        cplx in = P[(v.vertex + n - 1) % n] - at;     // edge v -> v-1
        double a = std::arg(in / out);
        if (a <= 0) a += two_pi;
        return a;
    }

    // chi = classes - edges + polygons + cylinders (compactified poles).
    int euler_characteristic() const {
        if (boundary_edge_count_ > 0)
            throw std::logic_error("euler_characteristic: surface has free boundary");
        int edges = int(gluings_.size());
        for (const auto& c : cylinders_) edges += int(c.edges.size());
        return int(classes_.size()) - edges + num_polygons() + int(cylinders_.size());
    }

    // Gauss-Bonnet residual: sum over classes (2pi - angle) + 2pi per
    // cylinder pole (cone angle 0) minus 2 pi chi; ~0 on any valid closed
    // surface.
    double gauss_bonnet_residual() const {
        double s = 0.0;
        for (const auto& c : classes_) s += two_pi - c.total_angle;
        s += two_pi * double(cylinders_.size());
        return s - two_pi * double(euler_characteristic());
    }

    int boundary_edge_count() const { return boundary_edge_count_; }

    // Walks the corner fan counterclockwise around a vertex, crossing glued
    // edges and cylinder wedges, until it closes or hits free boundary both
    // ways.  Also used by the trace code to pass through regular vertices.
    VertexClass walk_fan(VertexRef start) const;

    // Cylinder strip atlas: the attachment chain parameterized by arclength
    // with the cylinder at Im w >= 0, u period = circumference.  Returns the
    // affine map chart -> strip for one attachment edge.
    struct StripMap {
        cplx rot{1.0};  // unit
        cplx trans{0.0};
        cplx apply(cplx z) const { return rot * z + trans; }
        cplx invert(cplx w) const { return (w - trans) / rot; }
    };
    StripMap strip_map(int cyl, int chain_index) const;
    // Which chain edge covers strip coordinate u (mod circumference).
    int chain_edge_at(int cyl, double u) const;

  private:
    void build_indices() {
        for (size_t gi = 0; gi < gluings_.size(); ++gi) {
            glue_lookup_[gluings_[gi].from] = {int(gi), true};
            glue_lookup_[gluings_[gi].to] = {int(gi), false};
        }
        for (size_t ci = 0; ci < cylinders_.size(); ++ci)
            for (const auto& e : cylinders_[ci].edges) cyl_lookup_[e] = int(ci);
    }

    void validate();
    void build_vertex_classes();
    void check_mark_consistency();

    int k_;
    std::vector<std::vector<cplx>> polys_;
    std::vector<Gluing> gluings_;
    std::vector<VertexMark> marks_;
    std::vector<InfiniteCylinder> cylinders_;
    Options opts_;

    std::map<EdgeRef, std::pair<int, bool>> glue_lookup_;
    std::map<EdgeRef, int> cyl_lookup_;
    std::map<VertexRef, int> class_id_;
    std::vector<VertexClass> classes_;
    int boundary_edge_count_ = 0;
};

inline void FlatSurface::validate() {
    for (const auto& P : polys_) {
        if (P.size() < 3) throw std::invalid_argument("polygon with fewer than 3 vertices");
        double a = 0.0;
        for (size_t i = 0; i < P.size(); ++i) {
            cplx u = P[i], v = P[(i + 1) % P.size()];
            a += u.real() * v.imag() - v.real() * u.imag();
            if (std::abs(v - u) == 0.0) throw std::invalid_argument("degenerate polygon edge");
        }
        if (a <= 0.0) throw std::invalid_argument("polygon must be counterclockwise");
    }
    auto edge_ok = [&](EdgeRef e) {
        return e.poly >= 0 && e.poly < num_polygons() && e.edge >= 0 &&
               e.edge < int(polys_[e.poly].size());
    };
    std::set<EdgeRef> used;
    for (const auto& g : gluings_) {
        if (!edge_ok(g.from) || !edge_ok(g.to)) throw std::invalid_argument("gluing edge out of range");
        if (g.rot < 0 || g.rot >= k_) throw std::invalid_argument("rotation index out of range");
        if (used.count(g.from) || used.count(g.to) || g.from == g.to)
            throw std::invalid_argument("edge glued more than once");
        used.insert(g.from);
        used.insert(g.to);
        cplx va = edge_vector(g.from), vb = edge_vector(g.to);
        // consistency of g(a0)=b1, g(a1)=b0: vb = -zeta^rot va
        double mismatch = std::abs(vb + unit_root(g.rot, k_) * va);
        if (mismatch > opts_.rel_tol * std::max(std::abs(va), std::abs(vb)))
            throw std::invalid_argument("glued edges mismatch (length or rotation)");
    }
    for (const auto& c : cylinders_) {
        if (c.edges.empty()) continue;  // purely symbolic cylinder (no finite part)
        double len = 0.0;
        for (const auto& e : c.edges) {
            if (!edge_ok(e)) throw std::invalid_argument("cylinder edge out of range");
            if (used.count(e)) throw std::invalid_argument("edge glued more than once");
            used.insert(e);
            len += std::abs(edge_vector(e));
        }
        if (std::abs(len - c.circumference) > opts_.rel_tol * std::max(1.0, c.circumference))
            throw std::invalid_argument("cylinder circumference does not match attachment length");
        // chain endpoints must be identified in turn (checked via vertex walk later);
        // directions along the chain must differ by G_k rotations
    }
    boundary_edge_count_ = 0;
    for (int p = 0; p < num_polygons(); ++p)
        for (int e = 0; e < int(polys_[p].size()); ++e)
            if (!used.count({p, e})) ++boundary_edge_count_;
    if (boundary_edge_count_ > 0 && !opts_.allow_boundary)
        throw std::invalid_argument("surface has unglued edges");
}

inline VertexClass FlatSurface::walk_fan(VertexRef start) const {
    VertexClass cls;
    auto prev_edge = [&](VertexRef v) {
        int n = int(polys_[v.poly].size());
        return EdgeRef{v.poly, (v.vertex + n - 1) % n};
    };
    auto next_edge = [&](VertexRef v) { return EdgeRef{v.poly, v.vertex}; };

    // step CCW across the edge arriving at v (the fan rotates v->v-1 ray past it)
    auto step_ccw = [&](VertexRef v, bool& through_cyl) -> std::optional<VertexRef> {
        EdgeRef e = prev_edge(v);
        if (auto cr = crossing(e)) {
            // our vertex is the end of e; partner start of the image = other.end's start
            return VertexRef{cr->other.poly, cr->other.edge};  // g(a1)=b0
        }
        if (auto ci = cylinder_of_edge(e)) {
            // enter the strip at the chain junction: emerge on the next chain
            // edge (whose start vertex is identified with our vertex)
            const auto& ch = cylinders_[*ci].edges;
            for (size_t i = 0; i < ch.size(); ++i)
                if (ch[i] == e) {
                    through_cyl = true;
                    EdgeRef nxt = ch[(i + 1) % ch.size()];
                    return VertexRef{nxt.poly, nxt.edge};
                }
        }
        return std::nullopt;
    };
    auto step_cw = [&](VertexRef v, bool& through_cyl) -> std::optional<VertexRef> {
        EdgeRef e = next_edge(v);
        if (auto cr = crossing(e)) {
            int n = int(polys_[cr->other.poly].size());
            return VertexRef{cr->other.poly, (cr->other.edge + 1) % n};  // g(a0)=b1
        }
        if (auto ci = cylinder_of_edge(e)) {
            const auto& ch = cylinders_[*ci].edges;
            for (size_t i = 0; i < ch.size(); ++i)
                if (ch[i] == e) {
                    through_cyl = true;
                    EdgeRef prv = ch[(i + ch.size() - 1) % ch.size()];
                    int n = int(polys_[prv.poly].size());
                    return VertexRef{prv.poly, (prv.edge + 1) % n};
                }
        }
        return std::nullopt;
    };

    std::vector<FanCorner> fan;
    std::vector<VertexRef> members;
    bool closed = false;
    VertexRef cur = start;
    bool pending_cyl = false;
    for (int guard = 0; guard < 100000; ++guard) {
        fan.push_back({cur, corner_angle(cur), 0.0, pending_cyl});
        members.push_back(cur);
        pending_cyl = false;
        bool through = false;
        auto nxt = step_ccw(cur, through);
        if (!nxt) break;  // boundary
        if (through) {
            cls.on_cylinder = true;
            pending_cyl = true;
        }
        if (*nxt == start) {
            closed = true;
            if (pending_cyl) fan.front().cylinder_before = true;
            break;
        }
        cur = *nxt;
    }
    if (!closed) {
        cls.on_boundary = true;
        // extend clockwise from the start
        cur = start;
        std::vector<FanCorner> pre;
        for (int guard = 0; guard < 100000; ++guard) {
            bool through = false;
            auto nxt = step_cw(cur, through);
            if (!nxt) break;
            cur = *nxt;
            FanCorner fc{cur, corner_angle(cur), 0.0, false};
            if (through) {
                cls.on_cylinder = true;
                // wedge sits between this corner and the one after it
                fc.cylinder_before = false;
                if (!pre.empty()) pre.back().cylinder_before = true;
                else fan.front().cylinder_before = true;
            }
            pre.push_back(fc);
            members.push_back(cur);
        }
        std::reverse(pre.begin(), pre.end());
        fan.insert(fan.begin(), pre.begin(), pre.end());
    }
    double acc = 0.0;
    for (auto& fc : fan) {
        if (fc.cylinder_before) acc += pi;
        fc.cone_offset = acc;
        acc += fc.angle;
    }
    cls.total_angle = acc;
    // signed rotation indices crossed between consecutive corners
    auto chain_rot = [&](int cyl, EdgeRef e) {
        const auto& ch = cylinders_[cyl].edges;
        for (size_t i = 0; i < ch.size(); ++i)
            if (ch[i] == e) {
                cplx d0 = edge_vector(ch[i]);
                cplx d1 = edge_vector(ch[(i + 1) % ch.size()]);
                double idx = std::arg((d1 / std::abs(d1)) / (d0 / std::abs(d0))) * double(k_) / two_pi;
                return mod_k(llround(idx), k_);
            }
        return 0;
    };
    int m = int(fan.size());
    for (int i = (closed ? 0 : 1); i < m; ++i) {
        const FanCorner& prevc = fan[(i + m - 1) % m];
        EdgeRef e = prev_edge(prevc.at);
        if (auto cr = crossing(e))
            fan[i].rot_before = mod_k(-cr->rot, k_);
        else if (auto ci = cylinder_of_edge(e))
            fan[i].rot_before = mod_k(-chain_rot(*ci, e), k_);
    }
    cls.fan = std::move(fan);
    cls.members = std::move(members);
    return cls;
}

inline void FlatSurface::build_vertex_classes() {
    std::set<VertexRef> seen;
    classes_.clear();
    class_id_.clear();
    for (int p = 0; p < num_polygons(); ++p) {
        for (int v = 0; v < int(polys_[p].size()); ++v) {
            VertexRef vr{p, v};
            if (seen.count(vr)) continue;
            VertexClass cls = walk_fan(vr);
            int id = int(classes_.size());
            for (const auto& m : cls.members) {
                seen.insert(m);
                class_id_[m] = id;
            }
            classes_.push_back(std::move(cls));
        }
    }
    // attach marks
    for (const auto& mk : marks_) {
        auto it = class_id_.find({mk.poly, mk.vertex});
        if (it == class_id_.end()) throw std::invalid_argument("mark references unknown vertex");
        VertexClass& c = classes_[it->second];
        if (c.marked && (c.order != mk.order || c.label != mk.label))
            throw std::invalid_argument("conflicting marks on one vertex class");
        c.marked = true;
        c.label = mk.label;
        c.order = mk.order;
    }
}

inline void FlatSurface::check_mark_consistency() {
    for (const auto& c : classes_) {
        if (c.on_boundary) continue;  // wedges on truncated models are unconstrained
        double expect = c.marked ? double(c.order + k_) * two_pi / double(k_) : two_pi;
        double tol = 1e-7 * std::max(1.0, expect);
        if (std::abs(c.total_angle - expect) > tol) {
            if (c.marked)
                throw std::invalid_argument("cone angle does not match marked order '" + c.label +
                                            "': got " + std::to_string(c.total_angle) +
                                            ", expected " + std::to_string(expect));
            throw std::invalid_argument(
                "unmarked vertex class has cone angle " + std::to_string(c.total_angle) +
                " (expected 2*pi); add a singularity mark");
        }
        // a closed fan developed around the vertex must return rotated by the
        // cone angle, so the crossed rotation indices must agree with it mod k
        long long rots = 0;
        for (const auto& fc : c.fan) rots += fc.rot_before;
        double mism = angle_to_grid(c.total_angle - double(rots) * two_pi / double(k_), two_pi);
        if (mism > 1e-7)
            throw std::invalid_argument("gluing rotations around vertex class '" + c.label +
                                        "' contradict its cone angle");
    }
}

inline FlatSurface::StripMap FlatSurface::strip_map(int cyl, int chain_index) const {
    const auto& ch = cylinders_[cyl].edges;
    // reversed-chain arclength offsets: the strip +u direction runs against
    // the polygon boundary orientation so that Im w > 0 is the cylinder side
    double U = 0.0;
    int n = int(ch.size());
    for (int step = 0; step < n; ++step) {
        int idx = (n - 1 - step + n) % n;
        cplx ev = edge_vector(ch[idx]);
        if (idx == chain_index) {
            cplx dir = ev / std::abs(ev);
            StripMap m;
            m.rot = -1.0 / dir;
            m.trans = U - m.rot * edge_end(ch[idx]);
            return m;
        }
        U += std::abs(ev);
    }
    throw std::logic_error("strip_map: chain index out of range");
}

inline int FlatSurface::chain_edge_at(int cyl, double u) const {
    const auto& ch = cylinders_[cyl].edges;
    double C = cylinders_[cyl].circumference;
    double uu = std::fmod(u, C);
    if (uu < 0) uu += C;
    int n = int(ch.size());
    double U = 0.0;
    for (int step = 0; step < n; ++step) {
        int idx = (n - 1 - step + n) % n;
        double L = std::abs(edge_vector(ch[idx]));
        if (uu <= U + L || step == n - 1) return idx;
        U += L;
    }
    return (n > 0) ? 0 : -1;
}

}  // namespace kdiff
