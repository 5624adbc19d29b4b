#pragma once

#include <queue>

#include "kdiff/flat_surface.hpp"

namespace kdiff {

struct Period {
    std::string from, to;
    cplx value{0.0};
    int branch = 0;
};

namespace detail {

// Chart-to-developed-frame placements over a spanning tree of the polygon
// adjacency graph.  dev(z) = rot * z + trans.
struct Placement {
    cplx rot{1.0};
    cplx trans{0.0};
    cplx apply(cplx z) const { return rot * z + trans; }
};

inline std::vector<Placement> develop_polygons(const FlatSurface& s) {
    int n = s.num_polygons();
    std::vector<Placement> place(n);
    std::vector<bool> seen(n, false);
    if (n == 0) return place;
    std::queue<int> bfs;
    bfs.push(0);
    seen[0] = true;
    while (!bfs.empty()) {
        int p = bfs.front();
        bfs.pop();
        for (int e = 0; e < int(s.polygon(p).size()); ++e) {
            auto cr = s.crossing({p, e});
            if (!cr || seen[cr->other.poly]) continue;
            int q = cr->other.poly;
            // g maps p-chart to q-chart; place q by dev_q = dev_p o g^{-1}
            cplx grot = unit_root(cr->rot, s.k());
            Placement inv{1.0 / grot, -cr->trans / grot};
            place[q] = {place[p].rot * inv.rot, place[p].rot * inv.trans + place[p].trans};
            seen[q] = true;
            bfs.push(q);
        }
    }
    return place;
}

}  // namespace detail

// Periods of the tracked k-th root between conical singularity classes:
// developed-position differences against the first conical class, for the
// given global branch.
inline std::vector<Period> periods(const FlatSurface& s, int branch = 0) {
    auto place = detail::develop_polygons(s);
    struct Anchor {
        std::string label;
        cplx pos;
    };
    std::vector<Anchor> anchors;
    for (const auto& c : s.vertex_classes()) {
        if (!c.marked) continue;
        if (c.order <= -s.k()) continue;  // only conical singularities anchor periods
        VertexRef v = c.members.front();
        anchors.push_back({c.label, place[v.poly].apply(s.vertex(v))});
    }
    if (anchors.size() < 2)
        throw std::invalid_argument("periods: need at least two conical singularity classes");
    std::vector<Period> out;
    cplx zb = unit_root(branch, s.k());
    for (size_t i = 1; i < anchors.size(); ++i)
        out.push_back({anchors[0].label, anchors[i].label,
                       zb * (anchors[i].pos - anchors[0].pos), branch});
    return out;
}

// ---- integer-relation detection in Q[zeta_k] --------------------------------

struct PeriodFieldOptions {
    double tol = 1e-10;        // absolute residual |q x - sum a_i zeta^i|
    double denom_bound = 1e6;  // |q| cap
};

struct RationalCoords {
    std::vector<long long> numerators;  // coordinates over 1, zeta, ..., zeta^{phi-1}
    long long denominator = 1;
};

struct PeriodFieldVerdict {
    bool detected = false;
    cplx common_factor{1.0};
    std::vector<RationalCoords> coords;  // one per input period (first is 1)
    std::string reason;
};

namespace detail {

inline int euler_totient(int k) {
    int result = k, n = k;
    for (int p = 2; p * p <= n; ++p) {
        if (n % p == 0) {
            while (n % p == 0) n /= p;
            result -= result / p;
        }
    }
    if (n > 1) result -= result / n;
    return result;
}

// Textbook LLL (delta = 0.99) on row vectors with double arithmetic; plenty
// for the small dimensions used here (phi(k)+1 <= 7).
inline void lll_reduce(std::vector<std::vector<double>>& b) {
    int n = int(b.size());
    if (n == 0) return;
    int dim = int(b[0].size());
    auto dot = [&](const std::vector<double>& x, const std::vector<double>& y) {
        double s = 0;
        for (int i = 0; i < dim; ++i) s += x[i] * y[i];
        return s;
    };
    std::vector<std::vector<double>> gs = b;
    std::vector<std::vector<double>> mu(n, std::vector<double>(n, 0.0));
    std::vector<double> B(n, 0.0);
    auto recompute = [&]() {
        for (int i = 0; i < n; ++i) {
            gs[i] = b[i];
            for (int j = 0; j < i; ++j) {
                mu[i][j] = dot(b[i], gs[j]) / B[j];
                for (int d = 0; d < dim; ++d) gs[i][d] -= mu[i][j] * gs[j][d];
            }
            B[i] = dot(gs[i], gs[i]);
        }
    };
    recompute();
    int kidx = 1;
    int guard = 0;
    while (kidx < n && guard++ < 10000) {
        for (int j = kidx - 1; j >= 0; --j) {
            double r = std::round(mu[kidx][j]);
            if (r != 0.0)
                for (int d = 0; d < dim; ++d) b[kidx][d] -= r * b[j][d];
        }
        recompute();
        if (B[kidx] >= (0.99 - mu[kidx][kidx - 1] * mu[kidx][kidx - 1]) * B[kidx - 1]) {
            ++kidx;
        } else {
            std::swap(b[kidx], b[kidx - 1]);
            recompute();
            kidx = std::max(1, kidx - 1);
        }
    }
}

}  // namespace detail

// Tests whether every period, after dividing by the first one, lies in
// Q[zeta_k] with denominator within the bound.  Floating input can only
// *detect* membership, never certify it; the verdict records which.
inline PeriodFieldVerdict check_period_field(const std::vector<cplx>& values, int k,
                                             PeriodFieldOptions opt = PeriodFieldOptions()) {
    PeriodFieldVerdict v;
    if (values.empty()) throw std::invalid_argument("check_period_field: empty period list");
    v.common_factor = values[0];
    if (std::abs(values[0]) == 0.0) {
        v.reason = "first period vanishes";
        return v;
    }
    int phi = detail::euler_totient(k);
    std::vector<cplx> basis(phi);
    for (int i = 0; i < phi; ++i) basis[i] = unit_root(i, k);

    const double M = 1e9;  // embedding weight: residual tol*M ~ 0.1 stays short
    for (const cplx& period : values) {
        cplx x = period / values[0];
        // lattice rows: [a_0..a_{phi-1}, q] plus weighted embedding rows
        int n = phi + 1;
        std::vector<std::vector<double>> rows(n, std::vector<double>(n + 2, 0.0));
        for (int i = 0; i < phi; ++i) {
            rows[i][i] = 1.0;
            rows[i][n] = M * basis[i].real();
            rows[i][n + 1] = M * basis[i].imag();
        }
        rows[phi][phi] = 1.0;
        rows[phi][n] = -M * x.real();
        rows[phi][n + 1] = -M * x.imag();
        detail::lll_reduce(rows);

        bool found = false;
        RationalCoords best;
        for (const auto& r : rows) {
            long long q = llround(r[phi]);
            if (q == 0) continue;
            std::vector<long long> as(phi);
            cplx lhs(0.0);
            bool integral = true;
            for (int i = 0; i < phi; ++i) {
                as[i] = llround(r[i]);
                if (std::abs(r[i] - double(as[i])) > 1e-6) integral = false;
                lhs += double(as[i]) * basis[i];
            }
            if (!integral) continue;
            if (std::abs(double(q)) > opt.denom_bound) continue;
            if (std::abs(lhs - double(q) * x) > opt.tol) continue;
            if (q < 0) {
                q = -q;
                for (auto& a : as) a = -a;
            }
            if (!found || q < best.denominator) {
                best = {as, q};
                found = true;
            }
        }
        if (!found) {
            v.detected = false;
            v.coords.clear();
            v.reason = "a period ratio has no small relation over the zeta basis";
            return v;
        }
        v.coords.push_back(best);
    }
    v.detected = true;
    return v;
}

// ---- metric reports ----------------------------------------------------------

inline double measure_path_length(const std::vector<cplx>& chart_polyline) {
    double L = 0.0;
    for (size_t i = 1; i < chart_polyline.size(); ++i)
        L += std::abs(chart_polyline[i] - chart_polyline[i - 1]);
    return L;
}

struct MetricReport {
    double length = 0.0;
    double area = 0.0;
    bool finite = true;  // false marks +infinity (cylinder included)
};

inline MetricReport measure_surface(const FlatSurface& s) {
    MetricReport r;
    r.area = s.total_polygon_area();
    r.finite = !s.has_infinite_cylinder();
    return r;
}

}  // namespace kdiff
