#include <catch2/catch_amalgamated.hpp>
#include <random>

#include "fixtures.hpp"
#include "kdiff/flat_build.hpp"
#include "kdiff/trajectory.hpp"

using namespace kdiff;
using Catch::Approx;

TEST_CASE("trace: flat torus horizontal is closed with period 1") {
    auto s = fixtures::square_torus(2);
    auto t = trace(s, SurfacePoint{0, {0.37, 0.41}}, 0);
    REQUIRE(std::holds_alternative<ClosedPeriodic>(t.termination));
    REQUIRE(std::get<ClosedPeriodic>(t.termination).period == Approx(1.0));
}

TEST_CASE("trace: k=5 torus with irrational chart slope is flagged dense") {
    // branch 1 on dz^5: slope tan(2pi/5), irrational against the unit square
    // lattice, so Weyl equidistribution spreads the orbit over every cell
    auto s = fixtures::square_torus(5);
    TraceOptions opt;
    opt.budget = 4000.0;
    auto t = trace(s, SurfacePoint{0, {0.3, 0.2}}, 1, opt);
    REQUIRE(std::holds_alternative<DenseDetected>(t.termination));

    // Weyl oracle: the return map on the bottom edge is rotation by
    // cot(2pi/5) mod 1; it visits every bin of a 64-bin circle partition
    double rot = 1.0 / std::tan(two_pi / 5.0);
    std::vector<int> bins(64, 0);
    double x = 0.3;
    for (int i = 0; i < 4000; ++i) {
        x = std::fmod(x + rot, 1.0);
        bins[int(x * 64)]++;
    }
    for (int b : bins) REQUIRE(b > 0);
}

TEST_CASE("trace: pure cylinder core circle closes with period 2pi") {
    for (int k : {2, 3}) {
        RationalKDifferential psi(k, i_pow(k), {{cplx(0.0), -k}});
        auto s = build_flat_model(psi);
        auto t = trace(s, CylinderPoint{0, {0.1, 0.5}}, 0);
        REQUIRE(std::holds_alternative<ClosedPeriodic>(t.termination));
        REQUIRE(std::get<ClosedPeriodic>(t.termination).period == Approx(two_pi).epsilon(1e-9));
    }
}

TEST_CASE("trace: budget exhaustion is reported, never dropped") {
    auto s = fixtures::twisted_torus(4, 1.0 / std::numbers::sqrt2);
    TraceOptions opt;
    opt.budget = 3.0;  // too small for anything interesting
    opt.detect_density = false;
    auto t = trace(s, SurfacePoint{0, {0.4, 0.3}}, 1, opt);
    REQUIRE(std::holds_alternative<LengthBudgetExhausted>(t.termination));
    REQUIRE(t.total_length >= 3.0);
}

TEST_CASE("trace: entering a cylinder terminates with the pole label") {
    auto s = fixtures::fig2_cubic();
    // vertical-ish branch from the middle of the parallelogram heads into a tube
    auto t = trace(s, SurfacePoint{0, {0.75, 0.4}}, 1);
    bool entered = std::holds_alternative<EnteredCylinder>(t.termination) ||
                   std::holds_alternative<HitSingularity>(t.termination) ||
                   std::holds_alternative<ClosedPeriodic>(t.termination);
    REQUIRE(entered);
}

TEST_CASE("critical graph: ray counts match order + k") {
    SECTION("k=3 simple zero has 4 rays") {
        // sphere: zero of order 1 at 0 plus admissible structure around it:
        // use R = z/( (z-2)(z+2)(z^2+4) )^... keep it simple with the doubled
        // rhombus which has known orders
        auto s = fixtures::doubled_rhombus_k3(1.0, 1.5);
        auto germs = critical_germs(s);
        std::map<std::string, int> per_label;
        for (const auto& g : germs) per_label[s.vertex_classes()[g.cls].label]++;
        REQUIRE(per_label["P0"] == -2 + 3);
        REQUIRE(per_label["P1"] == -1 + 3);
        REQUIRE(per_label["P2"] == 1);
        REQUIRE(per_label["P3"] == 2);
    }
    SECTION("k=2 simple zero has 3 rays (classical)") {
        // doubled square at k=2 has four order -1 poles: each gets 1 ray;
        // verified instead on fig-6 for a positive-order example below
        auto s = fixtures::fig6_quartic();
        auto germs = critical_germs(s);
        std::map<std::string, int> per_label;
        for (const auto& g : germs) per_label[s.vertex_classes()[g.cls].label]++;
        REQUIRE(per_label["I"] == 4 + 4);   // zero of order 4, k=4
        REQUIRE(per_label["A"] == -3 + 4);  // each pole gets one ray
        REQUIRE(per_label["B"] == 1);
        REQUIRE(per_label["C"] == 1);
        REQUIRE(per_label["D"] == 1);
    }
}

TEST_CASE("critical graph: fig-2 contains the fold seam and the B ray") {
    auto s = fixtures::fig2_cubic();
    auto trajs = critical_graph(s);
    // the B germ must connect B=(1,0) to the A class (saddle connection)
    int saddles_B_to_A = 0;
    for (const auto& t : trajs) {
        if (std::holds_alternative<HitSingularity>(t.termination)) {
            ++saddles_B_to_A;
        }
    }
    REQUIRE(saddles_B_to_A >= 2);  // seam (A->B) and the interior ray (B->A'')
}

TEST_CASE("holonomy: analytic continuation law zeta^(m mod k)") {
    std::mt19937_64 rng(20240601);
    std::uniform_int_distribution<int> kd(2, 8), md(-12, 12);
    int done = 0;
    while (done < 100) {
        int k = kd(rng);
        int m = md(rng);
        if (m == 0) continue;
        // R = (z - p)^m with a far spectator factor to keep it honest
        cplx p(0.3, -0.2);
        std::vector<DivisorEntry> div{{p, m}, {cplx(40.0, 3.0), 2}};
        RationalKDifferential psi(k, cplx(0.7, 0.3), div);
        int shift = continuation_branch_shift(psi, circle_path(p, 0.8), 0);
        REQUIRE(shift == mod_k(m, k));
        ++done;
    }
}

TEST_CASE("holonomy: combinatorial loop crossings") {
    auto s = fixtures::square_torus(4);
    SECTION("contractible loop is trivial") {
        std::vector<SurfacePoint> loop{{0, {0.5, 0.5}}, {0, {0.7, 0.5}}, {0, {0.5, 0.7}},
                                       {0, {0.5, 0.5}}};
        REQUIRE(holonomy_of_loop(s, loop).index == 0);
    }
    SECTION("small loop around a singularity matches its order") {
        auto f6 = fixtures::fig6_quartic();
        for (const auto& c : f6.vertex_classes()) {
            if (!c.marked) continue;
            int cls_id = f6.class_of(c.members.front());
            REQUIRE(holonomy_around_class(f6, cls_id).index == mod_k(c.order, 4));
        }
    }
}

TEST_CASE("holonomy groups and Prop-1 domains") {
    SECTION("simply connected domain is trivial") {
        auto s = fixtures::fig6_quartic();
        // single polygon but fold gluings: restricting to no gluings is not
        // expressible; use the torus with a one-polygon domain instead
        auto t = fixtures::square_torus(4);
        auto g = holonomy_group(t, {0});
        // the torus loops are co-tree crossings of the same polygon: both rot 0
        REQUIRE(g.trivial());
    }
    SECTION("twisted rectangle double generates {+-1}") {
        auto s = fixtures::doubled_twisted_rectangle_k4(1.0, 1.0, 1.0 / std::numbers::sqrt2);
        auto g = holonomy_group(s);
        REQUIRE(g.order == 2);
        REQUIRE(g.plus_minus_one(4));
    }
    SECTION("density domain holonomy obeys Prop 1") {
        auto s = fixtures::doubled_twisted_rectangle_k4(1.0, 1.0, 1.0 / std::numbers::sqrt2);
        TraceOptions opt;
        opt.budget = 6000.0;
        auto t = trace(s, SurfacePoint{0, {0.31, 0.19}}, 1, opt);
        REQUIRE(std::holds_alternative<DenseDetected>(t.termination));
        auto dom = std::get<DenseDetected>(t.termination).domain;
        auto g = holonomy_group(s, dom);
        REQUIRE((g.trivial() || g.plus_minus_one(4)));
    }
}

TEST_CASE("power reduction") {
    SECTION("(dz)^3 on the torus is a full form") {
        auto s = fixtures::square_torus(3);
        REQUIRE(power_reduction(s) == PowerReduction::FullForm);
    }
    SECTION("(z dz^2)^2 is a half form") {
        RationalKDifferential psi(4, cplx(1.0), {{cplx(0.0), 2}});
        REQUIRE(power_reduction(psi) == PowerReduction::HalfForm);
    }
    SECTION("z dz^3 is neither") {
        RationalKDifferential psi(3, cplx(1.0), {{cplx(0.0), 1}});
        REQUIRE(power_reduction(psi) == PowerReduction::None);
    }
    SECTION("surface versions agree on the twisted double") {
        auto s = fixtures::doubled_twisted_rectangle_k4(1.0, 1.0, 0.3);
        REQUIRE(power_reduction(s) == PowerReduction::HalfForm);
    }
}

TEST_CASE("plane tracer: closed loop around an admissible pole") {
    RationalKDifferential psi(3, i_pow(3), {{cplx(0.0), -3}});
    auto t = trace_differential(psi, cplx(1.0, 0.0), 1, 30.0, 5e-4);
    REQUIRE(std::holds_alternative<ClosedPeriodic>(t.termination));
    REQUIRE(std::get<ClosedPeriodic>(t.termination).period == Approx(two_pi).epsilon(1e-3));
    REQUIRE(t.max_root_residual < 1e-9);
}

TEST_CASE("plane tracer: direction field defect under e^{i pi/k} scaling") {
    // The traced curves of psi and e^{i pi/k} psi from the same seed diverge
    // at angle pi/k^2 per unit length; this records the actual defect used by
    // the acceptance discussion.
    RationalKDifferential psi(3, cplx(1.0), {{cplx(2.0, 1.0), 1}, {cplx(-2.0, 1.0), -1}});
    cplx z0(0.2, -0.4);
    auto t1 = trace_differential(psi, z0, 0, 0.5, 1e-3);
    auto t2 = trace_differential(psi.scaled(std::polar(1.0, pi / 3.0)), z0, 0, 0.5, 1e-3);
    size_t n = std::min(t1.points.size(), t2.points.size());
    REQUIRE(n > 100);
    double dev = 0.0;
    for (size_t i = 0; i < n; ++i) dev = std::max(dev, std::abs(t1.points[i] - t2.points[i]));
    // the two trajectories genuinely differ (rotation by pi/k^2 of the field)
    REQUIRE(dev > 1e-3);
}
