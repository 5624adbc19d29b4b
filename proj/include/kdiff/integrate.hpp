#pragma once

#include <functional>
#include <memory>

#include "kdiff/differential.hpp"

namespace kdiff {

// One parameterized path piece, t in [0,1].  The integrand contributed by a
// piece is  root_k(basis(z(t))) * mult(t),  where `basis` defaults to the
// differential being integrated and `mult` defaults to dz/dt.  Segments that
// end at a singularity factor the singular power out of the basis and fold
// it analytically into `mult`; this keeps the tracked root smooth and avoids
// cancellation in z - v near the endpoint.
struct PathSeg {
    std::function<cplx(double)> z;
    std::function<cplx(double)> mult;
    std::shared_ptr<const RationalKDifferential> basis;  // null = the integrated differential
    cplx ref_factor{1.0};  // root_basis reference at t=0 = incoming root ref / ref_factor
    bool singular_end = false;
};

inline PathSeg straight_segment(cplx a, cplx b) {
    PathSeg s;
    s.z = [a, b](double t) { return a + t * (b - a); };
    s.mult = [a, b](double) { return b - a; };
    return s;
}

namespace detail {
inline std::shared_ptr<RationalKDifferential> drop_divisor_entry(
    const RationalKDifferential& psi, cplx v) {
    std::vector<DivisorEntry> div;
    for (const auto& d : psi.divisor())
        if (d.position != v) div.push_back(d);
    return std::make_shared<RationalKDifferential>(psi.k(), psi.leading(), div);
}
}  // namespace detail

// Straight segment from a regular point a into a conical singularity v of
// psi, using the power substitution z = v + (a-v)(1-t)^beta with
// beta = k/(m+k); the combined integrand is bounded and smooth at t = 1.
inline PathSeg segment_into_singularity(const RationalKDifferential& psi, cplx a, cplx v) {
    int k = psi.k();
    int m = psi.order_at(v);
    if (m <= -k) throw std::invalid_argument("segment_into_singularity: endpoint not conical");
    if (m == 0) return straight_segment(a, v);
    double beta = double(k) / double(m + k);
    cplx d = a - v;
    // principal (a-v)^{m/k}: fixed branch along the ray
    cplx dm = std::polar(std::pow(std::abs(d), double(m) / k), std::arg(d) * double(m) / k);
    PathSeg s;
    s.z = [v, d, beta](double t) { return v + d * std::pow(1.0 - t, beta); };
    // mult = (z-v)^{m/k} * dz/dt; the powers of (1-t) cancel exactly
    // (beta*m/k + beta - 1 = 0), leaving a constant
    cplx mult_const = dm * (-beta) * d;
    s.mult = [mult_const](double) { return mult_const; };
    s.basis = detail::drop_divisor_entry(psi, v);
    s.ref_factor = dm;  // at t=0, (z-v)^{m/k} = dm
    s.singular_end = true;
    return s;
}

inline std::vector<PathSeg> circle_path(cplx center, double radius, double turns = 1.0,
                                        double start_angle = 0.0) {
    std::vector<PathSeg> segs;
    int pieces = std::max(4, int(std::ceil(std::abs(turns) * 8)));
    for (int i = 0; i < pieces; ++i) {
        double a0 = start_angle + two_pi * turns * double(i) / pieces;
        double a1 = start_angle + two_pi * turns * double(i + 1) / pieces;
        PathSeg s;
        s.z = [center, radius, a0, a1](double t) {
            return center + std::polar(radius, a0 + t * (a1 - a0));
        };
        s.mult = [center, radius, a0, a1](double t) {
            return cplx(0.0, 1.0) * std::polar(radius, a0 + t * (a1 - a0)) * (a1 - a0);
        };
        segs.push_back(std::move(s));
    }
    return segs;
}

struct IntegrateOptions {
    double tol = 1e-11;       // per-step tolerance relative to the running value
    double min_step = 1e-12;  // parameter-space step underflow threshold
    int max_evals = 400000;
};

struct IntegrateResult {
    cplx W{0.0};          // int of the tracked k-th root
    double length = 0.0;  // int |R|^{1/k} |dz|  (canonical length)
    int end_branch = 0;   // tracked root = principal * zeta^end_branch at the endpoint
    cplx end_root{0.0};   // meaningful only when the last piece ends at a regular point
};

// Integrates the branch-tracked k-th root along a chain of path pieces.
// Branch continuity picks the root nearest in angle to the previous
// evaluation; a step is rejected and halved when the root turns by more than
// pi/k across it.  Embedded Cash-Karp 4(5) weights drive the step control
// (the integrand does not depend on the accumulated value, so this is
// adaptive quadrature marching left to right, which the tracking needs).
inline IntegrateResult integrate_root(const RationalKDifferential& psi,
                                      const std::vector<PathSeg>& path, int branch,
                                      const IntegrateOptions& opt = IntegrateOptions()) {
    static const double c[6] = {0.0, 0.2, 0.3, 0.6, 1.0, 0.875};
    static const double b5[6] = {37.0 / 378, 0.0, 250.0 / 621, 125.0 / 594, 0.0, 512.0 / 1771};
    static const double b4[6] = {2825.0 / 27648, 0.0, 18575.0 / 48384, 13525.0 / 55296,
                                 277.0 / 14336, 0.25};
    const int k = psi.k();
    IntegrateResult res;
    int evals = 0;

    cplx ref_rootR{0.0};  // root of psi's R at the current junction
    bool have_ref = false;

    for (const auto& seg : path) {
        const RationalKDifferential& basis = seg.basis ? *seg.basis : psi;
        if (!have_ref) {
            // the chain must start at a regular point of psi; the branch index
            // is always relative to psi's principal root there
            cplx z0 = seg.z(0.0);
            ref_rootR = principal_root(psi.eval(z0), k) * unit_root(branch, k);
            have_ref = true;
        }
        cplx track = ref_rootR / seg.ref_factor;
        {
            // snap the reference onto an actual root of the basis at the start
            auto br = nearest_root_angular(basis.eval(seg.z(0.0)), k, track);
            track = br.value;
        }
        double t = 0.0;
        double h = 0.125;
        while (t < 1.0) {
            h = std::min(h, 1.0 - t);
            cplx nodes_root[6];
            cplx nodes_mult[6];
            bool reject = false;
            cplx ref = track;
            for (int i = 0; i < 6 && !reject; ++i) {
                double ti = t + c[i] * h;
                cplx zv = seg.z(ti);
                cplx rv = basis.eval(zv);
                auto br = nearest_root_angular(rv, k, ref);
                if (std::abs(ref) > 0.0 && std::abs(br.value) > 0.0) {
                    double turn = std::abs(wrap_angle(std::arg(br.value) - std::arg(ref)));
                    if (turn > pi / double(k)) reject = true;
                }
                nodes_root[i] = br.value;
                nodes_mult[i] = seg.mult(ti);
                if (i < 5 && c[i + 1] >= c[i]) ref = br.value;
                ++evals;
            }
            if (evals > opt.max_evals)
                throw BudgetError("integrate_root: evaluation budget exhausted");
            if (!reject) {
                cplx i5(0.0), i4(0.0);
                double len5 = 0.0;
                for (int i = 0; i < 6; ++i) {
                    cplx g = nodes_root[i] * nodes_mult[i];
                    i5 += b5[i] * g;
                    i4 += b4[i] * g;
                    len5 += b5[i] * std::abs(nodes_root[i]) * std::abs(nodes_mult[i]);
                }
                i5 *= h;
                i4 *= h;
                double err = std::abs(i5 - i4);
                double scale = std::max(1.0, std::abs(res.W));
                if (err <= opt.tol * scale) {
                    res.W += i5;
                    res.length += len5 * h;
                    t += h;
                    track = nodes_root[4];  // node at c = 1
                    if (err < 0.25 * opt.tol * scale) h *= 1.7;
                    continue;
                }
            }
            h *= 0.5;
            if (h < opt.min_step)
                throw BudgetError("integrate_root: step underflow near a singularity");
        }
        if (seg.singular_end) {
            have_ref = false;  // no root-of-R reference survives a singular endpoint
        } else if (seg.basis) {
            ref_rootR = track * seg.ref_factor;  // only valid when the factor is global
        } else {
            ref_rootR = track;
        }
    }
    if (have_ref) {
        const auto& last = path.back();
        cplx zend = last.z(1.0);
        auto br = nearest_root_angular(psi.eval(zend), k, ref_rootR);
        res.end_branch = br.shift;
        res.end_root = ref_rootR;
    }
    return res;
}

// Branch shift of analytic continuation of the k-th root along a closed loop
// (holonomy index): continue around and compare with the starting branch.
inline int continuation_branch_shift(const RationalKDifferential& psi,
                                     const std::vector<PathSeg>& loop, int branch,
                                     const IntegrateOptions& opt = IntegrateOptions()) {
    IntegrateResult r = integrate_root(psi, loop, branch, opt);
    return mod_k(r.end_branch - branch, psi.k());
}

}  // namespace kdiff
