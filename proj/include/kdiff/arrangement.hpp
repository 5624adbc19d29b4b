#pragma once

#include <map>
#include <set>

#include "kdiff/complex_util.hpp"

namespace kdiff {

// Planar subdivision of a simple polygon by straight cut segments (which may
// cross each other and end on the boundary, on other segments, or at
// vertices).  Produces the bounded faces with per-edge provenance: polygon
// boundary pieces remember their edge index, interior pieces are cuts.
class Arrangement {
  public:
    struct FaceEdge {
        cplx a, b;
        int poly_edge = -1;  // >= 0: lies on that input polygon edge
    };
    struct Face {
        std::vector<FaceEdge> edges;  // counterclockwise
        std::vector<cplx> verts() const {
            std::vector<cplx> v;
            for (const auto& e : edges) v.push_back(e.a);
            return v;
        }
        double area() const {
            double s = 0.0;
            for (const auto& e : edges)
                s += e.a.real() * e.b.imag() - e.b.real() * e.a.imag();
            return 0.5 * s;
        }
    };

    Arrangement(const std::vector<cplx>& polygon, const std::vector<std::pair<cplx, cplx>>& cuts,
                double snap)
        : snap_(snap) {
        build(polygon, cuts);
    }

    const std::vector<Face>& faces() const { return faces_; }
    const std::vector<cplx>& nodes() const { return nodes_; }

  private:
    int node_of(cplx z) {
        for (size_t i = 0; i < nodes_.size(); ++i)
            if (std::abs(nodes_[i] - z) <= snap_) return int(i);
        nodes_.push_back(z);
        return int(nodes_.size()) - 1;
    }

    static std::optional<cplx> seg_intersection(cplx a, cplx b, cplx c, cplx d, double tol) {
        cplx r = b - a, s = d - c;
        double denom = (std::conj(r) * s).imag();
        if (std::abs(denom) < 1e-14 * std::abs(r) * std::abs(s)) return std::nullopt;
        double t = (std::conj(c - a) * s).imag() / denom;
        double u = (std::conj(c - a) * r).imag() / denom;
        double tl = -tol / std::abs(r), th = 1.0 + tol / std::abs(r);
        double ul = -tol / std::abs(s), uh = 1.0 + tol / std::abs(s);
        if (t < tl || t > th || u < ul || u > uh) return std::nullopt;
        return a + std::clamp(t, 0.0, 1.0) * r;
    }

    void build(const std::vector<cplx>& polygon, const std::vector<std::pair<cplx, cplx>>& cuts) {
        int n = int(polygon.size());
        struct Raw {
            cplx a, b;
            int poly_edge;
        };
        std::vector<Raw> raws;
        for (int e = 0; e < n; ++e) raws.push_back({polygon[e], polygon[(e + 1) % n], e});
        for (const auto& c : cuts) raws.push_back({c.first, c.second, -1});

        // split points per raw segment: endpoints, mutual intersections,
        // nodes lying on it
        std::vector<std::vector<cplx>> pts(raws.size());
        for (size_t i = 0; i < raws.size(); ++i) {
            pts[i].push_back(raws[i].a);
            pts[i].push_back(raws[i].b);
        }
        for (size_t i = 0; i < raws.size(); ++i)
            for (size_t j = i + 1; j < raws.size(); ++j) {
                auto x = seg_intersection(raws[i].a, raws[i].b, raws[j].a, raws[j].b, snap_);
                if (x) {
                    pts[i].push_back(*x);
                    pts[j].push_back(*x);
                }
            }
        // endpoints of one segment lying on another (T junctions)
        auto on_seg = [&](cplx p, const Raw& r) {
            cplx d = r.b - r.a;
            double L = std::abs(d);
            double t = ((p - r.a) * std::conj(d)).real() / (L * L);
            if (t < -snap_ / L || t > 1.0 + snap_ / L) return false;
            return std::abs(p - (r.a + t * d)) <= snap_;
        };
        for (size_t i = 0; i < raws.size(); ++i)
            for (size_t j = 0; j < raws.size(); ++j) {
                if (i == j) continue;
                if (on_seg(raws[j].a, raws[i])) pts[i].push_back(raws[j].a);
                if (on_seg(raws[j].b, raws[i])) pts[i].push_back(raws[j].b);
            }

        // build directed half-edges between consecutive split points
        struct Half {
            int from, to;
            int raw;
            int twin = -1;
            int next = -1;
            bool used = false;
        };
        std::vector<Half> halves;
        std::map<std::pair<int, int>, int> by_pair;
        for (size_t i = 0; i < raws.size(); ++i) {
            cplx d = raws[i].b - raws[i].a;
            double L = std::abs(d);
            auto& v = pts[i];
            std::sort(v.begin(), v.end(), [&](cplx x, cplx y) {
                return ((x - raws[i].a) * std::conj(d)).real() < ((y - raws[i].a) * std::conj(d)).real();
            });
            std::vector<int> ids;
            for (cplx p : v) {
                double t = ((p - raws[i].a) * std::conj(d)).real() / (L * L);
                if (t < -snap_ / L || t > 1.0 + snap_ / L) continue;
                int id = node_of(raws[i].a + std::clamp(t, 0.0, 1.0) * d);
                if (ids.empty() || ids.back() != id) ids.push_back(id);
            }
            for (size_t s = 0; s + 1 < ids.size(); ++s) {
                int a = ids[s], b = ids[s + 1];
                if (a == b) continue;
                if (by_pair.count({a, b}) || by_pair.count({b, a})) {
                    // overlapping collinear input (e.g. a cut along an edge):
                    // keep the first; provenance prefers the polygon edge
                    continue;
                }
                int h1 = int(halves.size());
                halves.push_back({a, b, int(i)});
                int h2 = int(halves.size());
                halves.push_back({b, a, int(i)});
                halves[h1].twin = h2;
                halves[h2].twin = h1;
                by_pair[{a, b}] = h1;
                by_pair[{b, a}] = h2;
            }
        }

        // angular order around nodes: next(h) = clockwise neighbor of twin(h)
        std::map<int, std::vector<int>> out_edges;
        for (size_t h = 0; h < halves.size(); ++h) out_edges[halves[h].from].push_back(int(h));
        auto angle_of = [&](int h) {
            return std::arg(nodes_[halves[h].to] - nodes_[halves[h].from]);
        };
        for (auto& [node, list] : out_edges)
            std::sort(list.begin(), list.end(),
                      [&](int x, int y) { return angle_of(x) < angle_of(y); });
        for (size_t h = 0; h < halves.size(); ++h) {
            int tw = halves[h].twin;
            const auto& list = out_edges[halves[tw].from];
            int pos = int(std::find(list.begin(), list.end(), tw) - list.begin());
            int nxt = list[(pos + int(list.size()) - 1) % list.size()];  // clockwise neighbor
            halves[h].next = nxt;
        }

        // trace faces
        for (size_t h0 = 0; h0 < halves.size(); ++h0) {
            if (halves[h0].used) continue;
            std::vector<int> cyc;
            int h = int(h0);
            for (int guard = 0; guard < int(halves.size()) + 2; ++guard) {
                halves[h].used = true;
                cyc.push_back(h);
                h = halves[h].next;
                if (h == int(h0)) break;
            }
            Face f;
            for (int hh : cyc) {
                FaceEdge fe;
                fe.a = nodes_[halves[hh].from];
                fe.b = nodes_[halves[hh].to];
                fe.poly_edge = raws[halves[hh].raw].poly_edge;
                f.edges.push_back(fe);
            }
            if (f.area() > snap_ * snap_) faces_.push_back(std::move(f));
        }
    }

    double snap_;
    std::vector<cplx> nodes_;
    std::vector<Face> faces_;
};

}  // namespace kdiff
