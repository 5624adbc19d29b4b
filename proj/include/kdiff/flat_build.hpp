#pragma once

#include <array>
#include <queue>
#include <random>
#include <set>

#include "kdiff/integrate.hpp"
#include "kdiff/flat_surface.hpp"
#include "kdiff/periods.hpp"

namespace kdiff {

struct BuildOptions {
    // 0 = build the closed model (requires admissible input); > 0 = truncated
    // disk model with free boundary at |z - centroid| = truncation_radius.
    double truncation_radius = 0.0;
    int ring_samples = 48;      // vertices sampled on each cylinder core loop
    double ring_fraction = 0.3; // core-loop start radius vs nearest singularity
    double far_factor = 12.0;   // far ring radius vs largest singularity radius
    int loop_steps = 8192;      // RK4 steps per core loop
    IntegrateOptions integ{};
};

namespace build_detail {

// Traces the closed horizontal core loop of an admissible order -k pole of
// `loc` at p, starting at p + r0, counterclockwise.  The distinguished
// parameter grows exactly with arclength along it, so the loop is W-straight
// and its samples attach a cylinder strip with flat junctions.
struct CoreLoop {
    std::vector<cplx> samples;
    double circumference = 0.0;
};

inline CoreLoop trace_core_loop(const RationalKDifferential& loc, cplx p, double r0,
                                double circ_estimate, int steps, int keep) {
    int k = loc.k();
    cplx z0 = p + r0;
    cplx tangent = cplx(0, 1) * (z0 - p) / std::abs(z0 - p);
    cplx pr = principal_root(loc.eval(z0), k);
    cplx root = pr;
    double best = -2.0;
    for (int b = 0; b < k; ++b) {
        cplx cand = pr * unit_root(b, k);
        cplx dir = 1.0 / cand;
        double a = (dir / std::abs(dir) * std::conj(tangent)).real();
        if (a > best) {
            best = a;
            root = cand;
        }
    }
    auto vel = [&](cplx z, cplx& track) {
        auto br = nearest_root_angular(loc.eval(z), k, track);
        track = br.value;
        return 1.0 / br.value;
    };
    double ds = 1.25 * circ_estimate / steps;
    CoreLoop out;
    cplx z = z0;
    double s = 0.0;
    int stride = std::max(1, steps / std::max(4, keep));
    for (int it = 0; it < 2 * steps; ++it) {
        if (it % stride == 0) out.samples.push_back(z);
        cplx t1 = root, t2 = root, t3 = root, t4 = root;
        cplx k1 = vel(z, t1);
        cplx k2 = vel(z + 0.5 * ds * k1, t2);
        cplx k3 = vel(z + 0.5 * ds * k2, t3);
        cplx k4 = vel(z + ds * k3, t4);
        cplx znew = z + ds / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        root = t4;
        s += ds;
        if (s > 0.5 * circ_estimate &&
            std::abs(znew - z0) < std::max(1e-6 * r0, 0.75 * ds)) {
            out.circumference = s;
            return out;
        }
        z = znew;
    }
    throw BudgetError("trace_core_loop: core trajectory failed to close");
}

struct Tri {
    std::array<int, 3> v;
};

// Bowyer-Watson with a deterministic micro-jitter breaking cocircular ties.
inline std::vector<Tri> delaunay(const std::vector<cplx>& pts_in) {
    std::vector<cplx> pts = pts_in;
    double scale = 1.0;
    for (cplx p : pts) scale = std::max(scale, std::abs(p));
    std::mt19937_64 rng(0x5eed);
    std::uniform_real_distribution<double> jit(-2e-9, 2e-9);
    for (auto& p : pts) p += cplx(jit(rng), jit(rng)) * scale;

    int n = int(pts.size());
    std::vector<cplx> all = pts;
    double R = 8.0 * scale + 1.0;
    all.push_back(cplx(-3 * R, -R));
    all.push_back(cplx(3 * R, -R));
    all.push_back(cplx(0, 3 * R));

    auto orient_ccw = [&](const Tri& t) {
        cplx a = all[t.v[0]], b = all[t.v[1]], c = all[t.v[2]];
        return (std::conj(b - a) * (c - a)).imag() > 0;
    };
    auto in_circumcircle = [&](const Tri& t, cplx p) {
        cplx a = all[t.v[0]] - p, b = all[t.v[1]] - p, c = all[t.v[2]] - p;
        double a2 = std::norm(a), b2 = std::norm(b), c2 = std::norm(c);
        double det = a2 * (b.real() * c.imag() - b.imag() * c.real()) -
                     b2 * (a.real() * c.imag() - a.imag() * c.real()) +
                     c2 * (a.real() * b.imag() - a.imag() * b.real());
        return orient_ccw(t) ? det > 0 : det < 0;
    };

    std::vector<Tri> tris{{{n, n + 1, n + 2}}};
    for (int ip = 0; ip < n; ++ip) {
        cplx p = all[ip];
        std::vector<Tri> keep, bad;
        for (const auto& t : tris)
            (in_circumcircle(t, p) ? bad : keep).push_back(t);
        std::map<std::pair<int, int>, int> edge_count;
        for (const auto& t : bad)
            for (int e = 0; e < 3; ++e) {
                int a = t.v[e], b = t.v[(e + 1) % 3];
                edge_count[{std::min(a, b), std::max(a, b)}]++;
            }
        for (const auto& t : bad)
            for (int e = 0; e < 3; ++e) {
                int a = t.v[e], b = t.v[(e + 1) % 3];
                if (edge_count[{std::min(a, b), std::max(a, b)}] == 1)
                    keep.push_back({{a, b, ip}});
            }
        tris = std::move(keep);
    }
    std::vector<Tri> out;
    for (const auto& t : tris) {
        if (t.v[0] >= n || t.v[1] >= n || t.v[2] >= n) continue;
        Tri tt = t;
        cplx a = pts_in[tt.v[0]], b = pts_in[tt.v[1]], c = pts_in[tt.v[2]];
        if ((std::conj(b - a) * (c - a)).imag() < 0) std::swap(tt.v[1], tt.v[2]);
        out.push_back(tt);
    }
    return out;
}

inline bool point_in_loop(const std::vector<cplx>& loop, cplx z) {
    bool in = false;
    int n = int(loop.size());
    for (int i = 0, jj = n - 1; i < n; jj = i++) {
        cplx a = loop[i], b = loop[jj];
        if ((a.imag() > z.imag()) != (b.imag() > z.imag())) {
            double xi = a.real() + (z.imag() - a.imag()) / (b.imag() - a.imag()) * (b.real() - a.real());
            if (z.real() < xi) in = !in;
        }
    }
    return in;
}

}  // namespace build_detail

// Builds the flat model of a rational k-differential: geodesic triangulation
// seeded by a Euclidean Delaunay of the singularity set, branch-tracked
// W-charts per triangle, G_k gluings recovered from branch bookkeeping, and
// symbolic half-infinite cylinders at order -k poles attached along traced
// core trajectories.
inline FlatSurface build_flat_model(const RationalKDifferential& psi,
                                    const BuildOptions& opts = BuildOptions()) {
    using namespace build_detail;
    const int k = psi.k();
    const bool truncated = opts.truncation_radius > 0.0;
    if (!truncated) {
        auto rep = is_admissible(psi);
        if (!rep.admissible) {
            std::string msg = "build_flat_model: differential is not admissible";
            for (const auto& r : rep.reasons) msg += "; " + r;
            throw RefusalError(msg);
        }
    }
    auto sing = analyze_singularities(psi);

    struct Pole {
        std::optional<cplx> pos;
        cplx residue;
        std::string label;
    };
    std::vector<std::pair<cplx, Singularity>> conical_finite;
    std::vector<Pole> cyl_poles;
    bool inf_conical = psi.order_at_infinity() > -k;
    bool inf_cylinder = psi.order_at_infinity() == -k;
    {
        int idx = 0;
        for (const auto& s : sing) {
            std::string lab = "s" + std::to_string(idx++);
            if (s.at_infinity()) continue;
            if (s.conical) conical_finite.push_back({*s.position, s});
            else if (s.order == -k) cyl_poles.push_back({s.position, *s.residue, lab});
        }
    }
    if (inf_cylinder)
        cyl_poles.push_back({std::nullopt, residue_at_pole(psi.at_infinity_chart(), cplx(0.0)), "inf"});

    // degenerate bi-infinite cylinder: no conical singularity anywhere
    if (conical_finite.empty() && !inf_conical && !truncated) {
        double circ = cyl_poles.empty()
                          ? 0.0
                          : two_pi * std::pow(std::abs(cyl_poles[0].residue), 1.0 / double(k));
        std::string lab = cyl_poles.empty() ? "cyl" : cyl_poles[0].label;
        return FlatSurface(k, {}, {}, {}, {{circ, {}, lab}});
    }

    double spread = 1.0;
    cplx centroid(0.0);
    {
        int cnt = 0;
        for (const auto& d : psi.divisor()) {
            centroid += d.position;
            ++cnt;
        }
        if (cnt) centroid /= double(cnt);
        for (const auto& d : psi.divisor())
            spread = std::max(spread, std::abs(d.position - centroid));
    }

    struct BV {
        cplx z;
        int sing = -1;  // index into conical_finite; -1 for ring/steiner points
        int ring = -1;
    };
    std::vector<BV> verts;
    for (size_t i = 0; i < conical_finite.size(); ++i)
        verts.push_back({conical_finite[i].first, int(i), -1});

    auto nearest_other = [&](cplx p) {
        double d = 4.0 * spread + 1.0;
        for (const auto& e : psi.divisor())
            if (std::abs(e.position - p) > 1e-14) d = std::min(d, std::abs(e.position - p));
        return d;
    };

    struct Ring {
        std::vector<cplx> loop;
        std::string label;
        bool at_infinity = false;
        bool free_boundary = false;
    };
    std::vector<Ring> rings;
    auto add_ring = [&](const std::vector<cplx>& samples, const std::string& label,
                        bool at_inf, bool invert, bool free_b) {
        Ring r;
        for (cplx w : samples) r.loop.push_back(invert ? 1.0 / w : w);
        r.label = label;
        r.at_infinity = at_inf;
        r.free_boundary = free_b;
        for (cplx z : r.loop) verts.push_back({z, -1, int(rings.size())});
        rings.push_back(std::move(r));
    };

    for (const auto& pole : cyl_poles) {
        if (!pole.pos.has_value()) continue;
        double r0 = opts.ring_fraction * nearest_other(*pole.pos);
        double circ_est = two_pi * std::pow(std::abs(pole.residue), 1.0 / double(k));
        auto loop = trace_core_loop(psi, *pole.pos, r0, circ_est, opts.loop_steps,
                                    opts.ring_samples);
        add_ring(loop.samples, pole.label, false, false, false);
    }
    if (inf_cylinder) {
        auto psi_w = psi.at_infinity_chart();
        double rfar = opts.far_factor * (spread + std::abs(centroid) + 1.0);
        cplx res = cyl_poles.back().residue;
        double circ_est = two_pi * std::pow(std::abs(res), 1.0 / double(k));
        auto loop = trace_core_loop(psi_w, cplx(0.0), 1.0 / rfar, circ_est, opts.loop_steps,
                                    opts.ring_samples);
        add_ring(loop.samples, "inf", true, true, false);
    }
    if (truncated) {
        std::vector<cplx> circle;
        for (int i = 0; i < opts.ring_samples; ++i)
            circle.push_back(centroid + std::polar(opts.truncation_radius, two_pi * i / opts.ring_samples));
        add_ring(circle, "boundary", true, false, true);
    }

    // degenerate seeds (all vertices collinear) get two regular Steiner points
    std::vector<int> steiner;
    {
        bool degenerate = verts.size() < 3;
        if (!degenerate && rings.empty()) {
            double area = 0.0;
            for (size_t i = 1; i + 1 < verts.size(); ++i)
                area = std::max(area, std::abs((std::conj(verts[i].z - verts[0].z) *
                                                (verts[i + 1].z - verts[0].z))
                                                   .imag()));
            degenerate = area < 1e-12 * spread * spread;
        }
        if (degenerate) {
            for (double sgn : {1.0, -1.0}) {
                cplx cand = centroid + cplx(0.0, sgn * 0.75 * spread);
                while (psi.order_at(cand) != 0) cand += cplx(0.013, 0.017) * spread;
                steiner.push_back(int(verts.size()));
                verts.push_back({cand, -1, -1});
            }
        }
    }

    std::vector<cplx> pts;
    for (const auto& v : verts) pts.push_back(v.z);
    auto tris = delaunay(pts);

    {
        std::vector<Tri> keep;
        for (const auto& t : tris) {
            cplx c = (pts[t.v[0]] + pts[t.v[1]] + pts[t.v[2]]) / 3.0;
            bool drop = false;
            for (const auto& r : rings) {
                bool inside = point_in_loop(r.loop, c);
                if (r.at_infinity || r.free_boundary) {
                    if (!inside) drop = true;
                } else if (inside) {
                    drop = true;
                }
            }
            if (!drop) keep.push_back(t);
        }
        tris = std::move(keep);
    }
    if (tris.empty())
        throw BudgetError("build_flat_model: triangulation degenerated to nothing");

    int inf_vertex = -1;
    std::vector<Tri> inf_tris;
    if (inf_conical && !truncated) {
        inf_vertex = int(verts.size());
        std::map<std::pair<int, int>, int> count;
        for (const auto& t : tris)
            for (int e = 0; e < 3; ++e) {
                int a = t.v[e], b = t.v[(e + 1) % 3];
                count[{std::min(a, b), std::max(a, b)}]++;
            }
        for (const auto& t : tris)
            for (int e = 0; e < 3; ++e) {
                int a = t.v[e], b = t.v[(e + 1) % 3];
                if (count[{std::min(a, b), std::max(a, b)}] == 1)
                    inf_tris.push_back({{b, a, inf_vertex}});  // exterior wedge, CCW
            }
    }

    const auto psi_w = psi.at_infinity_chart();
    const int m_inf = psi.order_at_infinity();
    const int nt = int(tris.size()), ni = int(inf_tris.size());
    const int total = nt + ni;
    std::vector<cplx> base_z(total), base_root(total), base_W(total);
    std::vector<std::array<cplx, 3>> W(total);

    auto tri_at = [&](int i) -> const Tri& { return i < nt ? tris[i] : inf_tris[i - nt]; };
    auto ordinary_base = [&](int i) {
        const Tri& t = tri_at(i);
        if (i < nt) return (pts[t.v[0]] + pts[t.v[1]] + pts[t.v[2]]) / 3.0;
        cplx b = pts[t.v[0]], a = pts[t.v[1]];  // stored [b, a, inf]; hull edge runs a->b
        cplx outward = cplx(0, -1) * (b - a) / std::abs(b - a);
        return 0.5 * (a + b) + 0.35 * std::abs(b - a) * outward;
    };

    std::map<std::pair<int, int>, std::vector<std::pair<int, int>>> finite_edge_uses;
    for (int i = 0; i < total; ++i) {
        const Tri& t = tri_at(i);
        for (int e = 0; e < 3; ++e) {
            int a = t.v[e], b = t.v[(e + 1) % 3];
            if (a == inf_vertex || b == inf_vertex) continue;
            finite_edge_uses[{std::min(a, b), std::max(a, b)}].push_back({i, e});
        }
    }

    std::vector<bool> placed(total, false);
    std::queue<int> bfs;
    base_z[0] = ordinary_base(0);
    base_root[0] = principal_root(psi.eval(base_z[0]), k);
    base_W[0] = 0.0;
    placed[0] = true;
    bfs.push(0);
    while (!bfs.empty()) {
        int i = bfs.front();
        bfs.pop();
        const Tri& t = tri_at(i);
        for (int e = 0; e < 3; ++e) {
            int a = t.v[e], b = t.v[(e + 1) % 3];
            if (a == inf_vertex || b == inf_vertex) continue;
            for (auto [j, slot] : finite_edge_uses[{std::min(a, b), std::max(a, b)}]) {
                (void)slot;
                if (j == i || placed[j]) continue;
                cplx mid = 0.5 * (pts[a] + pts[b]);
                cplx zj = ordinary_base(j);
                int b1 = nearest_root_angular(psi.eval(base_z[i]), k, base_root[i]).shift;
                auto r1 = integrate_root(psi, {straight_segment(base_z[i], mid)}, b1, opts.integ);
                int b2 = nearest_root_angular(psi.eval(mid), k, r1.end_root).shift;
                auto r2 = integrate_root(psi, {straight_segment(mid, zj)}, b2, opts.integ);
                base_z[j] = zj;
                base_root[j] = r2.end_root;
                base_W[j] = base_W[i] + r1.W + r2.W;
                placed[j] = true;
                bfs.push(j);
            }
        }
    }
    for (int i = 0; i < total; ++i)
        if (!placed[i]) throw BudgetError("build_flat_model: chart graph is disconnected");

    for (int i = 0; i < total; ++i) {
        const Tri& t = tri_at(i);
        for (int e = 0; e < 3; ++e) {
            int vi = t.v[e];
            if (vi == inf_vertex) {
                cplx zb = base_z[i];
                cplx wb = 1.0 / zb;
                cplx target = base_root[i] / (wb * wb);
                int bw = nearest_root_angular(psi_w.eval(wb), k, target).shift;
                auto res = integrate_root(
                    psi_w, {segment_into_singularity(psi_w, wb, cplx(0.0))}, bw, opts.integ);
                W[i][e] = base_W[i] - res.W;
                continue;
            }
            const BV& bv = verts[vi];
            std::vector<PathSeg> path;
            if (bv.sing >= 0)
                path.push_back(segment_into_singularity(psi, base_z[i], bv.z));
            else
                path.push_back(straight_segment(base_z[i], bv.z));
            int b0 = nearest_root_angular(psi.eval(base_z[i]), k, base_root[i]).shift;
            auto res = integrate_root(psi, path, b0, opts.integ);
            W[i][e] = base_W[i] + res.W;
        }
    }

    std::vector<std::vector<cplx>> polys(total);
    for (int i = 0; i < total; ++i) polys[i] = {W[i][0], W[i][1], W[i][2]};

    std::map<std::pair<int, int>, std::vector<std::pair<int, int>>> all_edge_uses;
    for (int i = 0; i < total; ++i) {
        const Tri& t = tri_at(i);
        for (int e = 0; e < 3; ++e) {
            int a = t.v[e], b = t.v[(e + 1) % 3];
            all_edge_uses[{std::min(a, b), std::max(a, b)}].push_back({i, e});
        }
    }
    std::vector<Gluing> gluings;
    for (const auto& [key, uses] : all_edge_uses) {
        if (uses.size() != 2) continue;
        auto [i, e] = uses[0];
        auto [j, f] = uses[1];
        cplx va = polys[i][(e + 1) % 3] - polys[i][e];
        cplx vb = polys[j][(f + 1) % 3] - polys[j][f];
        if (std::abs(std::abs(va) - std::abs(vb)) > 1e-6 * std::abs(va))
            throw BudgetError(
                "build_flat_model: glued edge lengths disagree beyond tolerance (|va|=" +
                std::to_string(std::abs(va)) + ", |vb|=" + std::to_string(std::abs(vb)) +
                ", verts " + std::to_string(key.first) + "," + std::to_string(key.second) + ")");
        double idx = std::arg(-vb / va) * double(k) / two_pi;
        long long r = llround(idx);
        if (std::abs(idx - double(r)) > 1e-4)
            throw BudgetError("build_flat_model: gluing rotation failed to snap to G_k");
        gluings.push_back({{i, e}, {j, f}, mod_k(r, k)});
    }

    std::vector<VertexMark> marks;
    for (int i = 0; i < total; ++i) {
        const Tri& t = tri_at(i);
        for (int e = 0; e < 3; ++e) {
            int vi = t.v[e];
            if (vi == inf_vertex) {
                marks.push_back({i, e, "inf", m_inf});
            } else if (verts[vi].sing >= 0) {
                marks.push_back({i, e, "s" + std::to_string(verts[vi].sing),
                                 conical_finite[verts[vi].sing].second.order});
            }
        }
    }

    std::vector<InfiniteCylinder> cylinders;
    for (size_t ri = 0; ri < rings.size(); ++ri) {
        const Ring& r = rings[ri];
        if (r.free_boundary) continue;
        std::map<int, EdgeRef> by_start;
        double total_len = 0.0;
        for (const auto& [key, uses] : all_edge_uses) {
            if (uses.size() != 1) continue;
            auto [i, e] = uses[0];
            const Tri& t = tri_at(i);
            int a = t.v[e], b = t.v[(e + 1) % 3];
            if (a == inf_vertex || b == inf_vertex) continue;
            if (a < int(verts.size()) && b < int(verts.size()) && verts[a].ring == int(ri) &&
                verts[b].ring == int(ri)) {
                by_start[a] = EdgeRef{i, e};
                total_len += std::abs(polys[i][(e + 1) % 3] - polys[i][e]);
            }
        }
        if (by_start.empty())
            throw BudgetError("build_flat_model: cylinder attachment chain not found for " + r.label);
        std::vector<EdgeRef> chain;
        int start_vertex = by_start.begin()->first;
        int cur = start_vertex;
        for (size_t guard = 0; guard <= by_start.size(); ++guard) {
            auto it = by_start.find(cur);
            if (it == by_start.end())
                throw BudgetError("build_flat_model: broken cylinder chain for " + r.label);
            chain.push_back(it->second);
            const Tri& t = tri_at(it->second.poly);
            cur = t.v[(it->second.edge + 1) % 3];
            if (cur == start_vertex) break;
        }
        cylinders.push_back({total_len, chain, r.label});
    }

    FlatSurface::Options sopt;
    sopt.rel_tol = 1e-6;
    sopt.allow_boundary = truncated;
    return FlatSurface(k, std::move(polys), std::move(gluings), std::move(marks),
                       std::move(cylinders), sopt);
}

}  // namespace kdiff
