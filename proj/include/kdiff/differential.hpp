#pragma once

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "kdiff/poly.hpp"

namespace kdiff {

// Rational k-differential Psi = R(z) dz^k on the sphere, R = leading *
// prod (z - zero_i)^{m_i} / prod (z - pole_j)^{n_j}.  Zero orders are kept
// positive and pole orders negative; the point at infinity is implicit with
// ord_inf = -2k - (sum of finite orders).
struct DivisorEntry {
    cplx position;
    int order;  // positive for zeros, negative for poles
};

class RationalKDifferential {
  public:
    RationalKDifferential(int k, cplx leading, std::vector<DivisorEntry> divisor)
        : k_(k), leading_(leading), divisor_(std::move(divisor)) {
        if (k_ < 2) throw std::invalid_argument("differential order k must be >= 2");
        if (leading_ == cplx(0.0)) throw std::invalid_argument("leading coefficient must be nonzero");
        for (size_t i = 0; i < divisor_.size(); ++i) {
            if (divisor_[i].order == 0)
                throw std::invalid_argument("divisor orders must be nonzero");
            for (size_t j = i + 1; j < divisor_.size(); ++j)
                if (divisor_[i].position == divisor_[j].position)
                    throw std::invalid_argument("duplicate position in divisor");
        }
    }

    int k() const { return k_; }
    cplx leading() const { return leading_; }
    const std::vector<DivisorEntry>& divisor() const { return divisor_; }

    int finite_order_sum() const {
        int s = 0;
        for (const auto& d : divisor_) s += d.order;
        return s;
    }
    int order_at_infinity() const { return -2 * k_ - finite_order_sum(); }

    // R(z); diverges at poles, vanishes at zeros.
    cplx eval(cplx z) const {
        cplx v = leading_;
        for (const auto& d : divisor_) v *= std::pow(z - d.position, double(d.order));
        return v;
    }

    // d/dz log R = sum m_i / (z - p_i); handy for Newton-type corrections.
    cplx dlog(cplx z) const {
        cplx v(0.0);
        for (const auto& d : divisor_) v += double(d.order) / (z - d.position);
        return v;
    }

    // Numerator/denominator form; exact integer exponents.
    Poly numerator() const {
        Poly p = Poly::constant(leading_);
        for (const auto& d : divisor_)
            if (d.order > 0)
                for (int i = 0; i < d.order; ++i) p = p * Poly({-d.position, cplx(1.0)});
        return p;
    }
    Poly denominator() const {
        Poly p = Poly::constant(1.0);
        for (const auto& d : divisor_)
            if (d.order < 0)
                for (int i = 0; i < -d.order; ++i) p = p * Poly({-d.position, cplx(1.0)});
        return p;
    }

    // The differential in the w = 1/z chart: R(1/w) w^{-2k} dw^k, returned as
    // a fresh rational differential (used to work near infinity).
    RationalKDifferential at_infinity_chart() const;

    // Psi* = i Psi; divisor untouched.
    RationalKDifferential dual() const {
        return RationalKDifferential(k_, leading_ * cplx(0.0, 1.0), divisor_);
    }

    RationalKDifferential scaled(cplx s) const {
        if (s == cplx(0.0)) throw std::invalid_argument("scale factor must be nonzero");
        return RationalKDifferential(k_, leading_ * s, divisor_);
    }

    int order_at(cplx p) const {
        for (const auto& d : divisor_)
            if (d.position == p) return d.order;
        return 0;
    }

  private:
    int k_;
    cplx leading_;
    std::vector<DivisorEntry> divisor_;
};

struct Singularity {
    std::optional<cplx> position;  // nullopt marks the point at infinity
    int order = 0;
    bool conical = false;              // order > -k
    double cone_angle = 0.0;           // (order + k) * 2 pi / k, when conical
    std::optional<cplx> residue;       // defined when order == -k
    bool at_infinity() const { return !position.has_value(); }
};

// Laurent coefficient of (z-p)^{-k} of R at a pole of order exactly -k,
// extracted by a contour integral (1/2pi i) * int R(z) (z-p)^{k-1} dz over a
// small circle.  Trapezoid quadrature on a circle converges spectrally, so a
// modest node count reaches full precision on rational data.
inline cplx residue_at_pole(const RationalKDifferential& psi, cplx p, int nodes = 512) {
    int ord = psi.order_at(p);
    if (ord != -psi.k())
        throw std::invalid_argument("residue_at_pole: point is not a pole of order exactly -k");
    double rad = 0.5;
    for (const auto& d : psi.divisor())
        if (d.position != p) rad = std::min(rad, 0.45 * std::abs(d.position - p));
    // (1/2pi i) int R (z-p)^{k-1} dz reduces on the circle to the mean of
    // R(z) (z-p)^k over equally spaced nodes.
    cplx acc(0.0);
    for (int j = 0; j < nodes; ++j) {
        double t = two_pi * double(j) / nodes;
        cplx dz = std::polar(rad, t);  // z - p
        acc += psi.eval(p + dz) * std::pow(dz, psi.k());
    }
    return acc / double(nodes);
}

inline RationalKDifferential RationalKDifferential::at_infinity_chart() const {
    // R(1/w) w^{-2k}: each factor (1/w - a)^m = (1 - a w)^m w^{-m}.
    std::vector<DivisorEntry> div;
    cplx lead = leading_;
    int pow_w = -2 * k_;
    for (const auto& d : divisor_) {
        if (d.position == cplx(0.0)) {
            pow_w -= d.order;
        } else {
            // (1 - a w)^m = (-a)^m (w - 1/a)^m
            div.push_back({1.0 / d.position, d.order});
            lead *= std::pow(-d.position, double(d.order));
            pow_w -= d.order;
        }
    }
    if (pow_w != 0) div.push_back({cplx(0.0), pow_w});
    return RationalKDifferential(k_, lead, div);
}

inline std::vector<Singularity> analyze_singularities(const RationalKDifferential& psi) {
    std::vector<Singularity> out;
    int k = psi.k();
    auto fill = [&](Singularity& s) {
        s.conical = s.order > -k;
        if (s.conical) s.cone_angle = double(s.order + k) * two_pi / double(k);
    };
    for (const auto& d : psi.divisor()) {
        Singularity s;
        s.position = d.position;
        s.order = d.order;
        fill(s);
        if (d.order == -k) s.residue = residue_at_pole(psi, d.position);
        out.push_back(s);
    }
    int oi = psi.order_at_infinity();
    if (oi != 0) {
        Singularity s;
        s.order = oi;
        fill(s);
        if (oi == -k) s.residue = residue_at_pole(psi.at_infinity_chart(), cplx(0.0));
        out.push_back(s);
    }
    return out;
}

struct AdmissibilityReport {
    bool admissible = true;
    std::vector<std::string> reasons;
};

// Admissible: no pole of order < -k, and every order -k pole has residue in
// i^k * R.  The argument test uses |sin(arg(residue / i^k))| against tol,
// since inputs are floating point.
inline AdmissibilityReport is_admissible(const RationalKDifferential& psi, double tol = 1e-9) {
    AdmissibilityReport rep;
    int k = psi.k();
    for (const auto& s : analyze_singularities(psi)) {
        std::string where = s.at_infinity() ? "infinity" : "z=" + std::to_string(s.position->real()) +
                                                               (s.position->imag() < 0 ? "-" : "+") +
                                                               std::to_string(std::abs(s.position->imag())) + "i";
        if (s.order < -k) {
            rep.admissible = false;
            rep.reasons.push_back("pole of order " + std::to_string(s.order) + " < -k at " + where);
        } else if (s.order == -k) {
            cplx a = *s.residue / i_pow(k);
            if (std::abs(a) == 0.0 || std::abs(std::sin(std::arg(a))) > tol) {
                rep.admissible = false;
                rep.reasons.push_back("residue at order -k pole at " + where + " is not in i^k*R");
            }
        }
    }
    return rep;
}

// Local models near a singular point: z^m dz^k when m > -k or k does not
// divide m; (r / z^k) dz^k when m = -k; (z^{m/k} + s/z)^k dz^k with s^k = r
// when m < -k and k | m.  s is pinned to the principal k-th root of r.
struct PowerForm { int m; };
struct ResidueForm { cplx r; };
struct HigherPoleForm { cplx s; };
using NormalForm = std::variant<PowerForm, ResidueForm, HigherPoleForm>;

inline NormalForm classify_normal_form(const RationalKDifferential& psi,
                                       const std::optional<cplx>& p) {
    int k = psi.k();
    int m = p.has_value() ? psi.order_at(*p) : psi.order_at_infinity();
    if (m == 0) throw std::invalid_argument("classify_normal_form: regular point");
    if (m == -k) {
        cplx r = p.has_value() ? residue_at_pole(psi, *p)
                               : residue_at_pole(psi.at_infinity_chart(), cplx(0.0));
        return ResidueForm{r};
    }
    if (m > -k || (m % k) != 0) return PowerForm{m};
    // m < -k and k | m: the invariant is the residue of the k-th root 1-form
    // (single-valued around the pole since k | m); s^k = r and s is
    // canonicalized to the principal k-th root of r.
    RationalKDifferential local = p.has_value() ? psi : psi.at_infinity_chart();
    cplx pos = p.has_value() ? *p : cplx(0.0);
    double rad = 0.5;
    for (const auto& d : local.divisor())
        if (d.position != pos) rad = std::min(rad, 0.45 * std::abs(d.position - pos));
    int nodes = 2048;
    cplx acc(0.0);
    cplx prev = principal_root(local.eval(pos + cplx(rad, 0.0)), k);
    for (int j = 0; j < nodes; ++j) {
        double t = two_pi * double(j) / nodes;
        cplx dz = std::polar(rad, t);
        auto br = nearest_root_angular(local.eval(pos + dz), k, prev);
        prev = br.value;
        acc += br.value * dz * cplx(0.0, 1.0);  // root * dz/dt with dz/dt = i(z-p)
    }
    cplx s_loop = acc * (two_pi / double(nodes)) / cplx(0.0, two_pi);
    cplx r = std::pow(s_loop, k);
    return HigherPoleForm{principal_root(r, k)};
}

// zeta^branch times the principal k-th root of R(z): the integrand of the
// distinguished parameter W = int root dz.
inline cplx kth_root_branch(const RationalKDifferential& psi, cplx z, int branch) {
    if (psi.order_at(z) != 0)
        throw std::invalid_argument("kth_root_branch: z is a singularity");
    return principal_root(psi.eval(z), psi.k()) * unit_root(branch, psi.k());
}

}  // namespace kdiff
