#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <vector>

#include "kdiff/complex_util.hpp"

namespace kdiff {

// Dense univariate polynomial with complex coefficients, stored low -> high.
// The zero polynomial is an empty coefficient vector.
class Poly {
  public:
    Poly() = default;
    explicit Poly(std::vector<cplx> coeffs) : c_(std::move(coeffs)) { trim(); }
    Poly(std::initializer_list<cplx> coeffs) : c_(coeffs) { trim(); }

    static Poly constant(cplx a) { return Poly(std::vector<cplx>{a}); }
    static Poly monomial(int deg, cplx a = 1.0) {
        std::vector<cplx> v(deg + 1, cplx(0.0));
        v[deg] = a;
        return Poly(std::move(v));
    }
    // Monic polynomial with the given roots.
    static Poly from_roots(const std::vector<cplx>& roots) {
        Poly p = constant(1.0);
        for (cplx r : roots) p = p * Poly({-r, cplx(1.0)});
        return p;
    }

    int degree() const { return int(c_.size()) - 1; }  // -1 for the zero polynomial
    bool is_zero() const { return c_.empty(); }
    cplx coeff(int i) const { return (i >= 0 && i < int(c_.size())) ? c_[i] : cplx(0.0); }
    cplx leading() const { return c_.empty() ? cplx(0.0) : c_.back(); }
    const std::vector<cplx>& coeffs() const { return c_; }

    cplx operator()(cplx z) const {
        cplx acc(0.0);
        for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * z + *it;
        return acc;
    }

    Poly derivative(int order = 1) const {
        Poly d = *this;
        for (int n = 0; n < order; ++n) {
            if (d.c_.size() <= 1) return Poly();
            std::vector<cplx> v(d.c_.size() - 1);
            for (size_t i = 1; i < d.c_.size(); ++i) v[i - 1] = d.c_[i] * double(i);
            d = Poly(std::move(v));
        }
        return d;
    }

    friend Poly operator+(const Poly& a, const Poly& b) {
        std::vector<cplx> v(std::max(a.c_.size(), b.c_.size()), cplx(0.0));
        for (size_t i = 0; i < a.c_.size(); ++i) v[i] += a.c_[i];
        for (size_t i = 0; i < b.c_.size(); ++i) v[i] += b.c_[i];
        return Poly(std::move(v));
    }
    friend Poly operator-(const Poly& a, const Poly& b) { return a + (b * cplx(-1.0)); }
    friend Poly operator*(const Poly& a, const Poly& b) {
        if (a.is_zero() || b.is_zero()) return Poly();
        std::vector<cplx> v(a.c_.size() + b.c_.size() - 1, cplx(0.0));
        for (size_t i = 0; i < a.c_.size(); ++i)
            for (size_t j = 0; j < b.c_.size(); ++j) v[i + j] += a.c_[i] * b.c_[j];
        return Poly(std::move(v));
    }
    friend Poly operator*(const Poly& a, cplx s) {
        std::vector<cplx> v = a.c_;
        for (auto& x : v) x *= s;
        return Poly(std::move(v));
    }

    double max_coeff_abs() const {
        double m = 0.0;
        for (cplx x : c_) m = std::max(m, std::abs(x));
        return m;
    }

    Poly monic() const {
        if (is_zero()) return *this;
        return *this * (1.0 / leading());
    }

  private:
    void trim() {
        while (!c_.empty() && c_.back() == cplx(0.0)) c_.pop_back();
    }
    std::vector<cplx> c_;
};

// Roots via the companion matrix, each polished by one or two Newton steps.
// Degrees beyond 512 are outside the supported range.
inline std::vector<cplx> poly_roots(const Poly& p) {
    int n = p.degree();
    if (n < 1) return {};
    if (n > 512) throw std::invalid_argument("poly_roots: degree cap 512 exceeded");
    Eigen::MatrixXcd C = Eigen::MatrixXcd::Zero(n, n);
    cplx lead = p.leading();
    for (int i = 0; i < n; ++i) {
        C(i, n - 1) = -p.coeff(i) / lead;
        if (i + 1 < n) C(i + 1, i) = 1.0;
    }
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(C, false);
    std::vector<cplx> roots(n);
    Poly dp = p.derivative();
    for (int i = 0; i < n; ++i) {
        cplx z = es.eigenvalues()(i);
        for (int it = 0; it < 2; ++it) {
            cplx d = dp(z);
            if (std::abs(d) == 0.0) break;
            cplx step = p(z) / d;
            if (!std::isfinite(step.real()) || !std::isfinite(step.imag())) break;
            if (std::abs(step) > 1.0 + std::abs(z)) break;
            z -= step;
        }
        roots[i] = z;
    }
    std::sort(roots.begin(), roots.end(), [](cplx a, cplx b) {
        return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
    });
    return roots;
}

// Convex hull (counterclockwise, Andrew monotone chain).  Collinear points
// are dropped; degenerate inputs give back the extreme points.
inline std::vector<cplx> convex_hull(std::vector<cplx> pts) {
    std::sort(pts.begin(), pts.end(), [](cplx a, cplx b) {
        return a.real() != b.real() ? a.real() < b.real() : a.imag() < b.imag();
    });
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    int n = int(pts.size());
    if (n <= 2) return pts;
    auto cross = [](cplx o, cplx a, cplx b) {
        return (a.real() - o.real()) * (b.imag() - o.imag()) -
               (a.imag() - o.imag()) * (b.real() - o.real());
    };
    std::vector<cplx> h(2 * n);
    int m = 0;
    for (int i = 0; i < n; ++i) {
        while (m >= 2 && cross(h[m - 2], h[m - 1], pts[i]) <= 0) --m;
        h[m++] = pts[i];
    }
    for (int i = n - 2, t = m + 1; i >= 0; --i) {
        while (m >= t && cross(h[m - 2], h[m - 1], pts[i]) <= 0) --m;
        h[m++] = pts[i];
    }
    h.resize(m - 1);
    return h;
}

// Signed distance from z to the hull: <= 0 inside or on the boundary.
// For degenerate hulls (point / segment) the plain distance is returned.
inline double hull_distance(const std::vector<cplx>& hull, cplx z) {
    auto seg_dist = [](cplx a, cplx b, cplx p) {
        cplx d = b - a;
        double L2 = std::norm(d);
        if (L2 == 0.0) return std::abs(p - a);
        double t = std::clamp(((p - a) * std::conj(d)).real() / L2, 0.0, 1.0);
        return std::abs(p - (a + t * d));
    };
    int n = int(hull.size());
    if (n == 0) return std::numeric_limits<double>::infinity();
    if (n == 1) return std::abs(z - hull[0]);
    if (n == 2) return seg_dist(hull[0], hull[1], z);
    bool inside = true;
    double dmin = std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) {
        cplx a = hull[i], b = hull[(i + 1) % n];
        // CCW hull: interior has (b-a) x (z-a) >= 0
        double s = (b.real() - a.real()) * (z.imag() - a.imag()) -
                   (b.imag() - a.imag()) * (z.real() - a.real());
        if (s < 0) inside = false;
        dmin = std::min(dmin, seg_dist(a, b, z));
    }
    return inside ? -dmin : dmin;
}

}  // namespace kdiff
