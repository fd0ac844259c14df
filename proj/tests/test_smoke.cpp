#include <catch2/catch_amalgamated.hpp>

#include "vieh/bifurcation.hpp"

using namespace vieh;

static ParamSet set1(double mu) {
    ParamSet ps;
    ps.base.mu_k = mu;
    ps.axis = SweepAxis::Amplitude;
    return ps;
}

TEST_CASE("nondimensionalization goldens") {
    PhysicalParams p;
    p.A = 3.1;
    CHECK(nondimensionalize(p).d == Catch::Approx(0.502).margin(1e-3));
    p.A = 6.9;
    CHECK(nondimensionalize(p).d == Catch::Approx(0.2255).margin(1e-3));
    p.A = 6.4;
    NondimParams n = nondimensionalize(p);
    CHECK(n.L_plus == Catch::Approx(-0.06740).margin(1e-5));
    CHECK(n.L_minus == Catch::Approx(-0.20221).margin(1e-5));
}

TEST_CASE("1:1 solve at d=0.30 matches simulation") {
    ParamSet ps = set1(0.5);
    NondimParams p = ps.at(0.30);
    SteadyStateResult ss = steady_state_impacts(p, {0.0, 0.0, 0.3, Region::SigmaPlus}, 200, 10);
    REQUIRE(ss.status == SimStatus::Completed);
    auto guess = orbit_guess_from_events(itineraries::one_one(), ss.events, p);
    REQUIRE(guess.has_value());
    OrbitSolution sol = solve_orbit(itineraries::one_one(), *guess, p);
    REQUIRE(sol.converged);
    CHECK(sol.residual_norm < 1e-10);
    CHECK(sol.Zdot_init == Catch::Approx(0.73357).margin(1e-4));
    CHECK(sol.feasible);
    CHECK(sol.physical);
    // paper-form residual vanishes on the same root
    Eigen::Vector3d x3(sol.Zdot_init, sol.phi, sol.durations[0]);
    CHECK(residual_1_1(x3, p).lpNorm<Eigen::Infinity>() < 1e-9);
    // monodromy eigenvalues
    StabilityReport rep = stability_of(sol, p);
    CHECK(rep.classification == StabilityClass::Stable);
    CHECK(rep.min_real_eig() == Catch::Approx(-0.96785).margin(2e-4));
}

TEST_CASE("set-1 ladder core values") {
    ParamSet ps = set1(0.5);
    NondimParams p45 = ps.at(0.45);
    SteadyStateResult ss = steady_state_impacts(p45, {0.0, 0.0, 0.3, Region::SigmaPlus}, 200, 10);
    auto guess = orbit_guess_from_events(itineraries::one_one(), ss.events, p45);
    REQUIRE(guess.has_value());
    Branch br = continue_branch(itineraries::one_one(), ps, 0.45, 0.242, *guess,
                                []{ ContinueOptions o; o.stop_on_unphysical = false; o.step = 2e-3; return o; }());
    REQUIRE(br.points.size() > 10);
    BifurcationPoint pd = find_pd(br, itineraries::one_one(), ps);
    CHECK(pd.d_star == Catch::Approx(0.29316).margin(2e-4));
    BifurcationPoint gs = find_grazing_sliding(br, itineraries::one_one(), ps, 0);
    REQUIRE(gs.found);
    CHECK(gs.d_star == Catch::Approx(0.24350).margin(2e-4));
    CHECK(std::abs(gs.d_star - gs.d_bisect) < 1e-4);
}
