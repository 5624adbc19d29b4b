#pragma once

#include <complex>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace kdiff {

using cplx = std::complex<double>;

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

// e^{2*pi*i*j/k}, the j-th element of the rotation group G_k.
inline cplx unit_root(int j, int k) {
    int r = ((j % k) + k) % k;
    return std::polar(1.0, two_pi * double(r) / double(k));
}

inline int mod_k(long long j, int k) {
    long long r = j % k;
    if (r < 0) r += k;
    return int(r);
}

// i^k as an exact unit (avoids rounding from std::pow on the axis).
inline cplx i_pow(int k) {
    switch (mod_k(k, 4)) {
        case 0: return {1.0, 0.0};
        case 1: return {0.0, 1.0};
        case 2: return {-1.0, 0.0};
        default: return {0.0, -1.0};
    }
}

// Smallest signed representative of an angle, in (-pi, pi].
inline double wrap_angle(double a) {
    a = std::fmod(a, two_pi);
    if (a <= -pi) a += two_pi;
    if (a > pi) a -= two_pi;
    return a;
}

// Angular distance from a to the nearest multiple of period.
inline double angle_to_grid(double a, double period) {
    double r = std::remainder(a, period);
    return std::abs(r);
}

// Principal k-th root: |z|^{1/k} e^{i Arg(z)/k}, Arg in (-pi, pi].
inline cplx principal_root(cplx z, int k) {
    if (z == cplx(0.0, 0.0)) return {0.0, 0.0};
    return std::polar(std::pow(std::abs(z), 1.0 / double(k)),
                      std::arg(z) / double(k));
}

// Among the k roots w * zeta^j of w^k = z, the one nearest to ref.
// Returns the root and the branch shift j relative to the principal root.
struct BranchedRoot {
    cplx value;
    int shift;  // value = principal_root(z,k) * zeta^shift
};

inline BranchedRoot nearest_root(cplx z, int k, cplx ref) {
    cplx pr = principal_root(z, k);
    BranchedRoot best{pr, 0};
    double bd = std::abs(pr - ref);
    for (int j = 1; j < k; ++j) {
        cplx cand = pr * unit_root(j, k);
        double d = std::abs(cand - ref);
        if (d < bd) {
            bd = d;
            best = {cand, j};
        }
    }
    return best;
}

// Root of value nearest in *angle* to the reference direction; robust when
// magnitudes swing (near zeros and poles).  Returns the branch shift against
// the principal root.
inline BranchedRoot nearest_root_angular(cplx value, int k, cplx ref) {
    cplx pr = principal_root(value, k);
    if (std::abs(pr) == 0.0 || std::abs(ref) == 0.0) return {pr, 0};
    double ra = std::arg(ref);
    BranchedRoot best{pr, 0};
    double bd = std::abs(wrap_angle(std::arg(pr) - ra));
    for (int j = 1; j < k; ++j) {
        cplx cand = pr * unit_root(j, k);
        double d = std::abs(wrap_angle(std::arg(cand) - ra));
        if (d < bd) {
            bd = d;
            best = {cand, j};
        }
    }
    return best;
}

// True when dir^k is a positive real, i.e. dir points along one of the k
// oriented horizontal directions, within an angular tolerance.
inline bool is_horizontal_direction(cplx dir, int k, double tol = 1e-9) {
    if (std::abs(dir) == 0.0) return false;
    double a = std::arg(dir) * double(k);
    return angle_to_grid(a, two_pi) <= tol * double(k);
}

// Switching segments of a piecewise-standard level function run where two
// distinct branches of Im(zeta^b W) agree.  Such a line has direction d with
// d^k in i^k * R; this covers both plain trajectory directions and the
// bisector directions between adjacent roots of unity.
inline bool is_switching_direction(cplx dir, int k, double tol = 1e-9) {
    if (std::abs(dir) == 0.0) return false;
    cplx w = std::pow(dir / std::abs(dir), double(k)) / i_pow(k);
    return std::abs(w.imag()) <= tol;  // |w| = 1, so Im w is the sine of the angle off the real axis
}

// Exact-ish check helpers used all over the numeric code.
inline bool close(double a, double b, double tol) { return std::abs(a - b) <= tol; }
inline bool close(cplx a, cplx b, double tol) { return std::abs(a - b) <= tol; }

// Thrown when an operation declines an input for a documented mathematical
// reason (e.g. the odd-order arithmetic gate); the CLI maps it to exit 4.
struct RefusalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Thrown when an iterative procedure runs out of its configured budget;
// the CLI maps it to exit 3.
struct BudgetError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace kdiff
