#pragma once

// Continuation of orbit branches over d, detection and refinement of smooth
// (PD, fold) and nonsmooth (grazing-sliding, switching-sliding,
// crossing-sliding, impact-grazing) bifurcations, and the numeric
// bifurcation-diagram sweep with attractor labeling.

#include "vieh/orbit.hpp"
#include "vieh/stability.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <sstream>

namespace vieh {

// ---------------------------------------------------------------------------
// Branches
// ---------------------------------------------------------------------------

enum class TerminationReason {
    PD,
    Fold,
    GrazingSlidingSigma,
    SwitchingSliding,
    CrossingSliding,
    GrazingGammaPlus,
    GrazingGammaMinus,
    SolverFailure,
    RangeEnd,
};

inline const char* termination_name(TerminationReason t) {
    switch (t) {
        case TerminationReason::PD: return "pd";
        case TerminationReason::Fold: return "fold";
        case TerminationReason::GrazingSlidingSigma: return "grazing_sliding";
        case TerminationReason::SwitchingSliding: return "switching_sliding";
        case TerminationReason::CrossingSliding: return "crossing_sliding";
        case TerminationReason::GrazingGammaPlus: return "grazing_gamma_plus";
        case TerminationReason::GrazingGammaMinus: return "grazing_gamma_minus";
        case TerminationReason::SolverFailure: return "solver_failure";
        case TerminationReason::RangeEnd: return "range_end";
    }
    return "?";
}

struct BranchPoint {
    double d;
    OrbitSolution sol;
    StabilityReport stab;
};

struct Branch {
    std::string label;
    std::vector<BranchPoint> points;
    TerminationReason termination = TerminationReason::RangeEnd;
};

namespace detail {

/// Maps the first physicality violation onto a branch termination reason.
inline TerminationReason reason_from_violations(const OrbitSolution& sol) {
    for (Violation v : sol.violations) {
        switch (v) {
            case Violation::InteriorSigmaHit: return TerminationReason::GrazingSlidingSigma;
            case Violation::SlidingOnsetOutOfBand: return TerminationReason::SwitchingSliding;
            case Violation::ExceedsCapsule: return TerminationReason::GrazingGammaPlus;
            case Violation::NonPositiveDuration: {
                // which leg collapsed decides the nonsmooth transition
                for (std::size_t j = 0; j < sol.durations.size(); ++j) {
                    if (sol.durations[j] > 0.0) continue;
                    switch (sol.itinerary.legs[j]) {
                        case Leg::SigmaSlide: return TerminationReason::CrossingSliding;
                        case Leg::SigmaLoopPlus:
                        case Leg::SigmaLoopMinus: return TerminationReason::SwitchingSliding;
                        default: return TerminationReason::SolverFailure;
                    }
                }
                return TerminationReason::SolverFailure;
            }
            default: break;
        }
    }
    return TerminationReason::SolverFailure;
}

} // namespace detail

struct ContinueOptions {
    double step = 1e-3;          ///< initial |d| step
    double min_step = 1e-6;      ///< step-halving floor
    bool stop_on_unphysical = true;
    bool stop_on_instability = false; ///< terminate at PD / fold crossings
    SolveOptions solve;
};

/// Natural-parameter continuation of the orbit family of `itin` from
/// d_start (where `seed` solves) towards d_end, with step halving on solver
/// failure. Physicality transitions terminate the branch with the matching
/// nonsmooth reason.
inline Branch continue_branch(const Itinerary& itin, const ParamSet& ps, double d_start,
                              double d_end, const Eigen::VectorXd& seed,
                              const ContinueOptions& opt = {}) {
    Branch br;
    br.label = itin.label;
    const double dir = d_end >= d_start ? 1.0 : -1.0;
    double step = std::abs(opt.step);
    double d = d_start;
    Eigen::VectorXd x = seed;

    OrbitSolution first = solve_orbit(itin, x, ps.at(d), opt.solve);
    if (!first.converged) {
        br.termination = TerminationReason::SolverFailure;
        return br;
    }
    br.points.push_back({d, first, stability_of(first, ps.at(d))});
    x = first.unknowns();

    while (dir * (d_end - d) > 1e-12) {
        const double dn = dir > 0 ? std::min(d + step, d_end) : std::max(d - step, d_end);
        OrbitSolution sol = solve_orbit(itin, x, ps.at(dn), opt.solve);
        if (!sol.converged) {
            step *= 0.5;
            if (step < opt.min_step) {
                br.termination = TerminationReason::SolverFailure;
                return br;
            }
            continue;
        }
        StabilityReport stab;
        bool have_stab = true;
        try {
            stab = stability_of(sol, ps.at(dn));
        } catch (const SingularDenominator&) {
            have_stab = false;
        }
        if (opt.stop_on_unphysical && (!sol.feasible || !sol.physical)) {
            br.termination = detail::reason_from_violations(sol);
            br.points.push_back({dn, sol, stab});
            return br;
        }
        if (opt.stop_on_instability && have_stab && !br.points.empty()) {
            const auto& prev = br.points.back().stab;
            const bool was_stable = prev.classification == StabilityClass::Stable;
            if (was_stable && stab.classification == StabilityClass::UnstablePD) {
                br.termination = TerminationReason::PD;
                br.points.push_back({dn, sol, stab});
                return br;
            }
            if (was_stable && stab.classification == StabilityClass::UnstableFold) {
                br.termination = TerminationReason::Fold;
                br.points.push_back({dn, sol, stab});
                return br;
            }
        }
        br.points.push_back({dn, sol, stab});
        x = sol.unknowns();
        d = dn;
        step = std::min(step * 1.6, std::abs(opt.step));
    }
    br.termination = TerminationReason::RangeEnd;
    return br;
}

// ---------------------------------------------------------------------------
// Critical points
// ---------------------------------------------------------------------------

enum class BifKind {
    PD,
    Fold,
    GrazingSlidingSigma,
    SwitchingSliding,
    CrossingSliding,
    GrazingGammaPlus,
    GrazingGammaMinus,
    NotApplicable,
};

inline const char* bif_kind_name(BifKind k) {
    switch (k) {
        case BifKind::PD: return "pd";
        case BifKind::Fold: return "fold";
        case BifKind::GrazingSlidingSigma: return "grazing_sliding";
        case BifKind::SwitchingSliding: return "switching_sliding";
        case BifKind::CrossingSliding: return "crossing_sliding";
        case BifKind::GrazingGammaPlus: return "grazing_gamma_plus";
        case BifKind::GrazingGammaMinus: return "grazing_gamma_minus";
        case BifKind::NotApplicable: return "not_applicable";
    }
    return "?";
}

struct BifurcationPoint {
    BifKind kind = BifKind::NotApplicable;
    double d_star = std::numeric_limits<double>::quiet_NaN();
    std::string orbit_label;
    double witness_t = std::numeric_limits<double>::quiet_NaN(); ///< tangency time
    double residual = std::numeric_limits<double>::quiet_NaN();  ///< augmented-system residual
    double d_bisect = std::numeric_limits<double>::quiet_NaN();  ///< indicator-bisection estimate
    bool found = false;
};

struct NoBracket : std::runtime_error {
    explicit NoBracket(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

/// Start time of leg `j` for a solution with initial impact at t = 0.
inline double leg_start_time(const OrbitSolution& sol, std::size_t j) {
    return j == 0 ? 0.0 : sol.points[j - 1].t;
}

/// Largest interior velocity on a Sigma- flow leg (tangency indicator for
/// grazing-sliding; positive once the leg pokes through Sigma).
inline double max_interior_velocity(const OrbitSolution& sol, std::size_t j,
                                    const NondimParams& p) {
    const LegTraits tr = leg_traits(sol.itinerary.legs[j]);
    const double t0 = leg_start_time(sol, j);
    const double t1 = sol.points[j].t;
    double v0;
    if (tr.source == Surface::Sigma) v0 = 0.0;
    else {
        const double v_pre = j == 0 ? sol.Zdot_init : sol.points[j - 1].v;
        v0 = -p.r * v_pre;
    }
    const double L = p.L(tr.region_sign);
    std::vector<double> ts;
    stationary_times(t0 + 1e-10, t1 - 1e-10, L, sol.phi, ts);
    double best = -std::numeric_limits<double>::infinity();
    for (double te : ts) best = std::max(best, seg_v(te, t0, v0, L, sol.phi));
    return best;
}

/// Time of the interior velocity maximum used as the tangency witness.
inline double argmax_interior_velocity(const OrbitSolution& sol, std::size_t j,
                                       const NondimParams& p) {
    const LegTraits tr = leg_traits(sol.itinerary.legs[j]);
    const double t0 = leg_start_time(sol, j);
    const double t1 = sol.points[j].t;
    double v0;
    if (tr.source == Surface::Sigma) v0 = 0.0;
    else {
        const double v_pre = j == 0 ? sol.Zdot_init : sol.points[j - 1].v;
        v0 = -p.r * v_pre;
    }
    const double L = p.L(tr.region_sign);
    std::vector<double> ts;
    stationary_times(t0 + 1e-10, t1 - 1e-10, L, sol.phi, ts);
    double best = -std::numeric_limits<double>::infinity(), tb = 0.5 * (t0 + t1);
    for (double te : ts) {
        const double ve = seg_v(te, t0, v0, L, sol.phi);
        if (ve > best) { best = ve; tb = te; }
    }
    return tb;
}

/// Generic indicator bisection along a branch: re-solves the orbit at probe
/// d values and evaluates `indicator`; refines a sign change to dtol.
inline std::optional<double>
bisect_indicator(const Itinerary& itin, const ParamSet& ps, const Branch& br,
                 const std::function<double(const OrbitSolution&, const NondimParams&)>& indicator,
                 double dtol = 1e-7) {
    if (br.points.size() < 2) return std::nullopt;
    auto value = [&](double d, const Eigen::VectorXd& seed, OrbitSolution* out) {
        OrbitSolution s = solve_orbit(itin, seed, ps.at(d));
        if (out) *out = s;
        return s.converged ? indicator(s, ps.at(d)) : std::numeric_limits<double>::quiet_NaN();
    };
    double prev_d = br.points.front().d;
    double prev_f = indicator(br.points.front().sol, ps.at(prev_d));
    Eigen::VectorXd prev_x = br.points.front().sol.unknowns();
    for (std::size_t i = 1; i < br.points.size(); ++i) {
        const double di = br.points[i].d;
        const double fi = indicator(br.points[i].sol, ps.at(di));
        if (std::isfinite(prev_f) && std::isfinite(fi) && (prev_f < 0) != (fi < 0)) {
            double a = prev_d, b = di, fa = prev_f;
            Eigen::VectorXd xa = prev_x;
            while (std::abs(b - a) > dtol) {
                const double m = 0.5 * (a + b);
                OrbitSolution sm;
                const double fm = value(m, xa, &sm);
                if (!std::isfinite(fm)) break;
                if ((fa < 0) != (fm < 0)) b = m;
                else { a = m; fa = fm; xa = sm.unknowns(); }
            }
            return 0.5 * (a + b);
        }
        prev_d = di;
        prev_f = fi;
        prev_x = br.points[i].sol.unknowns();
    }
    return std::nullopt;
}

} // namespace detail

/// Which tangency condition augments the reduced system.
enum class TangencyKind {
    SigmaGraze,     ///< Zdot(tS) = 0 and f(tS) = L- on a Sigma- flow leg (new unknown tS)
    SlideOnsetAtBandStart, ///< f = L+ at the sliding-onset time (switching-sliding)
    SlideOnsetAtBandEnd,   ///< f = L- at the sliding-onset time (crossing-sliding)
    LoopTopOnGammaPlus,    ///< Z = d/2 at the end of a Sigma+ loop leg (impact grazing)
};

/// Solves the augmented tangency system {reduced system of `itin`, tangency
/// condition on leg `leg_index`} for the orbit unknowns plus d (plus the
/// tangency time for SigmaGraze). `seed_x` seeds the orbit unknowns.
inline BifurcationPoint solve_tangency(const Itinerary& itin, const ParamSet& ps,
                                       TangencyKind kind, std::size_t leg_index,
                                       const Eigen::VectorXd& seed_x, double seed_d,
                                       double seed_tS = std::numeric_limits<double>::quiet_NaN()) {
    const Eigen::Index n = seed_x.size();
    const bool has_tS = kind == TangencyKind::SigmaGraze;
    Eigen::VectorXd y(n + 1 + (has_tS ? 1 : 0));
    y.head(n) = seed_x;
    if (has_tS) y[n] = seed_tS;
    y[y.size() - 1] = seed_d;

    auto fn = [&](const Eigen::VectorXd& yy) {
        const double d = yy[yy.size() - 1];
        const NondimParams p = ps.at(d);
        Eigen::VectorXd x = yy.head(n);
        Eigen::VectorXd base = residual_itinerary(itin, x, p);
        detail::Walk w = detail::walk_itinerary(itin, x, p);
        Eigen::VectorXd out(yy.size());
        out.head(base.size()) = base;
        const double phi = x[1];
        const double t_on = leg_index == 0 ? 0.0 : w.points[leg_index - 1].t;
        switch (kind) {
            case TangencyKind::SigmaGraze: {
                const double tS = yy[n];
                const LegTraits tr = leg_traits(itin.legs[leg_index]);
                const double L = p.L(tr.region_sign);
                double v0;
                if (tr.source == Surface::Sigma) v0 = 0.0;
                else v0 = -p.r * (leg_index == 0 ? x[0] : w.points[leg_index - 1].v);
                out[base.size()] = detail::seg_v(tS, t_on, v0, L, phi);
                out[base.size() + 1] = std::cos(kPi * tS + phi) - p.L_minus;
                break;
            }
            case TangencyKind::SlideOnsetAtBandStart:
                out[base.size()] = std::cos(kPi * t_on + phi) - p.L_plus;
                break;
            case TangencyKind::SlideOnsetAtBandEnd:
                out[base.size()] = std::cos(kPi * t_on + phi) - p.L_minus;
                break;
            case TangencyKind::LoopTopOnGammaPlus:
                out[base.size()] = w.points[leg_index].Z - 0.5 * p.d;
                break;
        }
        return out;
    };

    NewtonOptions nopt;
    nopt.tol = 1e-11;
    NewtonResult nr = newton_solve(fn, y, nopt);
    BifurcationPoint bp;
    bp.orbit_label = itin.label;
    bp.found = nr.converged;
    bp.residual = nr.residual_norm;
    if (nr.converged) {
        bp.d_star = nr.x[nr.x.size() - 1];
        if (has_tS) bp.witness_t = nr.x[n];
        else {
            const NondimParams p = ps.at(bp.d_star);
            detail::Walk w = detail::walk_itinerary(itin, nr.x.head(n), p);
            bp.witness_t = leg_index == 0 ? 0.0
                            : (kind == TangencyKind::LoopTopOnGammaPlus ? w.points[leg_index].t
                                                                        : w.points[leg_index - 1].t);
        }
    }
    return bp;
}

/// Grazing-sliding point d_Sigma of a 1:1-type branch: the Sigma- upward leg
/// `leg_index` becomes tangent to Sigma. NotApplicable when the sliding band
/// is degenerate (mu_k = 0).
inline BifurcationPoint find_grazing_sliding(const Branch& br, const Itinerary& itin,
                                             const ParamSet& ps, std::size_t leg_index = 0) {
    BifurcationPoint bp;
    bp.orbit_label = itin.label;
    {
        const NondimParams p0 = ps.at(br.points.empty() ? 0.3 : br.points.front().d);
        if (p0.L_plus - p0.L_minus <= 2e-10) {
            bp.kind = BifKind::NotApplicable;
            return bp;
        }
    }
    auto indicator = [leg_index](const OrbitSolution& s, const NondimParams& p) {
        return detail::max_interior_velocity(s, leg_index, p);
    };
    auto db = detail::bisect_indicator(itin, ps, br, indicator);
    if (!db) throw NoBracket("find_grazing_sliding: indicator does not change sign along the branch");
    // seed the augmented solve at the bisection point
    Eigen::VectorXd seed;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& pt : br.points)
        if (std::abs(pt.d - *db) < best) { best = std::abs(pt.d - *db); seed = pt.sol.unknowns(); }
    OrbitSolution s0 = solve_orbit(itin, seed, ps.at(*db));
    const double tS = detail::argmax_interior_velocity(s0, leg_index, ps.at(*db));
    bp = solve_tangency(itin, ps, TangencyKind::SigmaGraze, leg_index, s0.unknowns(), *db, tS);
    bp.kind = BifKind::GrazingSlidingSigma;
    bp.d_bisect = *db;
    return bp;
}

/// Switching-sliding point d_ss of a sliding branch: the sliding onset phase
/// reaches the band start acos(L+). `slide_leg` indexes the sliding leg.
inline BifurcationPoint find_switching_sliding(const Branch& br, const Itinerary& itin,
                                               const ParamSet& ps, std::size_t slide_leg) {
    auto indicator = [slide_leg](const OrbitSolution& s, const NondimParams& p) {
        const double t_on = detail::leg_start_time(s, slide_leg);
        return mod_two_pi(kPi * t_on + s.phi) - std::acos(p.L_plus);
    };
    auto db = detail::bisect_indicator(itin, ps, br, indicator);
    if (!db) throw NoBracket("find_switching_sliding: onset phase never reaches the band start");
    Eigen::VectorXd seed;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& pt : br.points)
        if (std::abs(pt.d - *db) < best) { best = std::abs(pt.d - *db); seed = pt.sol.unknowns(); }
    BifurcationPoint bp =
        solve_tangency(itin, ps, TangencyKind::SlideOnsetAtBandStart, slide_leg, seed, *db);
    bp.kind = BifKind::SwitchingSliding;
    bp.d_bisect = *db;
    return bp;
}

/// Crossing-sliding point d_c of a cross-then-slide branch: the sliding
/// interval collapses (onset phase reaches the band end acos(L-)).
inline BifurcationPoint find_crossing_sliding(const Branch& br, const Itinerary& itin,
                                              const ParamSet& ps, std::size_t slide_leg) {
    auto indicator = [slide_leg](const OrbitSolution& s, const NondimParams&) {
        return s.durations[slide_leg];
    };
    auto db = detail::bisect_indicator(itin, ps, br, indicator);
    if (!db) throw NoBracket("find_crossing_sliding: sliding interval never collapses on the branch");
    Eigen::VectorXd seed;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& pt : br.points)
        if (std::abs(pt.d - *db) < best) { best = std::abs(pt.d - *db); seed = pt.sol.unknowns(); }
    BifurcationPoint bp =
        solve_tangency(itin, ps, TangencyKind::SlideOnsetAtBandEnd, slide_leg, seed, *db);
    bp.kind = BifKind::CrossingSliding;
    bp.d_bisect = *db;
    return bp;
}

/// Impact-grazing point d_Gamma+ of a branch with a Sigma+ loop leg: the
/// loop top reaches Z = d/2.
inline BifurcationPoint find_grazing_gamma(const Branch& br, const Itinerary& itin,
                                           const ParamSet& ps, std::size_t loop_leg) {
    auto indicator = [loop_leg](const OrbitSolution& s, const NondimParams& p) {
        return s.points[loop_leg].Z - 0.5 * p.d;
    };
    auto db = detail::bisect_indicator(itin, ps, br, indicator);
    if (!db) throw NoBracket("find_grazing_gamma: loop top never reaches Gamma+ on the branch");
    Eigen::VectorXd seed;
    double best = std::numeric_limits<double>::infinity();
    for (const auto& pt : br.points)
        if (std::abs(pt.d - *db) < best) { best = std::abs(pt.d - *db); seed = pt.sol.unknowns(); }
    BifurcationPoint bp = solve_tangency(itin, ps, TangencyKind::LoopTopOnGammaPlus, loop_leg, seed, *db);
    bp.kind = BifKind::GrazingGammaPlus;
    bp.d_bisect = *db;
    return bp;
}

namespace detail {

inline std::optional<double> eig_crossing(const Branch& br, const Itinerary& itin,
                                          const ParamSet& ps, double level, double dtol) {
    if (br.points.size() < 2) return std::nullopt;
    auto eig_at = [&](double d, const Eigen::VectorXd& seed, Eigen::VectorXd* xout) {
        OrbitSolution s = solve_orbit(itin, seed, ps.at(d));
        if (xout) *xout = s.unknowns();
        if (!s.converged) return std::numeric_limits<double>::quiet_NaN();
        StabilityReport rep = stability_of(s, ps.at(d));
        if (level < 0.0) return rep.min_real_eig() - level;
        double mx = -std::numeric_limits<double>::infinity();
        for (const auto& e : {rep.eig1, rep.eig2})
            if (std::abs(e.imag()) < 1e-12) mx = std::max(mx, e.real());
        return mx - level;
    };
    double prev_d = br.points.front().d;
    double prev_f = 0.0;
    {
        const auto& rep = br.points.front().stab;
        prev_f = level < 0.0 ? rep.min_real_eig() - level
                             : std::max(rep.eig1.real(), rep.eig2.real()) - level;
    }
    Eigen::VectorXd prev_x = br.points.front().sol.unknowns();
    for (std::size_t i = 1; i < br.points.size(); ++i) {
        const auto& rep = br.points[i].stab;
        const double fi = level < 0.0 ? rep.min_real_eig() - level
                                      : std::max(rep.eig1.real(), rep.eig2.real()) - level;
        const double di = br.points[i].d;
        if (std::isfinite(prev_f) && std::isfinite(fi) && (prev_f < 0) != (fi < 0)) {
            double a = prev_d, b = di, fa = prev_f;
            Eigen::VectorXd xa = prev_x;
            while (std::abs(b - a) > dtol) {
                const double m = 0.5 * (a + b);
                Eigen::VectorXd xm;
                const double fm = eig_at(m, xa, &xm);
                if (!std::isfinite(fm)) break;
                if ((fa < 0) != (fm < 0)) b = m;
                else { a = m; fa = fm; xa = xm; }
            }
            return 0.5 * (a + b);
        }
        prev_d = di;
        prev_f = fi;
        prev_x = br.points[i].sol.unknowns();
    }
    return std::nullopt;
}

} // namespace detail

/// Period-doubling point: bisection on (min real eigenvalue + 1) to 1e-5.
inline BifurcationPoint find_pd(const Branch& br, const Itinerary& itin, const ParamSet& ps) {
    auto d = detail::eig_crossing(br, itin, ps, -1.0, 1e-6);
    if (!d) throw NoBracket("find_pd: no eigenvalue crossing of -1 along the branch");
    BifurcationPoint bp;
    bp.kind = BifKind::PD;
    bp.orbit_label = itin.label;
    bp.d_star = *d;
    bp.d_bisect = *d;
    bp.residual = 0.0;
    bp.found = true;
    return bp;
}

/// Fold point: bisection on (max real eigenvalue - 1).
inline BifurcationPoint find_fold(const Branch& br, const Itinerary& itin, const ParamSet& ps) {
    auto d = detail::eig_crossing(br, itin, ps, +1.0, 1e-6);
    if (!d) throw NoBracket("find_fold: no eigenvalue crossing of +1 along the branch");
    BifurcationPoint bp;
    bp.kind = BifKind::Fold;
    bp.orbit_label = itin.label;
    bp.d_star = *d;
    bp.d_bisect = *d;
    bp.residual = 0.0;
    bp.found = true;
    return bp;
}

// ---------------------------------------------------------------------------
// Seeding
// ---------------------------------------------------------------------------

/// Expected simulator event kind at the end of each itinerary leg.
inline std::vector<EventKind> expected_event_pattern(const Itinerary& itin) {
    std::vector<EventKind> out;
    for (std::size_t j = 0; j < itin.legs.size(); ++j) {
        const Leg leg = itin.legs[j];
        const bool next_slides = itinerary_leg_is_slide(itin, j + 1);
        switch (leg) {
            case Leg::GammaPlusToGammaMinus:
            case Leg::SigmaToGammaMinus: out.push_back(EventKind::ImpactTop); break;
            case Leg::GammaMinusToGammaPlus:
            case Leg::SigmaToGammaPlus: out.push_back(EventKind::ImpactBottom); break;
            case Leg::GammaPlusToSigma:
                out.push_back(next_slides ? EventKind::SlideStart : EventKind::CrossUp);
                break;
            case Leg::GammaMinusToSigma:
                out.push_back(next_slides ? EventKind::SlideStart : EventKind::CrossDown);
                break;
            case Leg::SigmaLoopPlus:
                out.push_back(next_slides ? EventKind::SlideStart : EventKind::CrossDown);
                break;
            case Leg::SigmaLoopMinus:
                out.push_back(next_slides ? EventKind::SlideStart : EventKind::CrossUp);
                break;
            case Leg::SigmaSlide: out.push_back(EventKind::SlideEnd); break;
        }
    }
    return out;
}

/// Extracts an orbit-unknown guess for `itin` from a simulated event log by
/// locating a bottom impact whose following events match the itinerary's
/// pattern. Returns nothing if the attractor does not carry the pattern.
inline std::optional<Eigen::VectorXd> orbit_guess_from_events(const Itinerary& itin,
                                                              const std::vector<Event>& events,
                                                              const NondimParams& p) {
    const std::vector<EventKind> pattern = expected_event_pattern(itin);
    for (std::size_t i = 0; i < events.size(); ++i) {
        if (events[i].kind != EventKind::ImpactBottom) continue;
        if (i + pattern.size() >= events.size()) break;
        bool ok = true;
        for (std::size_t j = 0; j < pattern.size(); ++j)
            if (events[i + 1 + j].kind != pattern[j]) { ok = false; break; }
        if (!ok) continue;
        Eigen::VectorXd x(static_cast<Eigen::Index>(pattern.size()) + 1);
        x[0] = events[i].v_pre;
        x[1] = mod_two_pi(kPi * events[i].t + p.phi);
        double t_prev = events[i].t;
        for (std::size_t j = 0; j + 1 < pattern.size(); ++j) {
            x[static_cast<Eigen::Index>(j) + 2] = events[i + 1 + j].t - t_prev;
            t_prev = events[i + 1 + j].t;
        }
        return x;
    }
    return std::nullopt;
}

/// Multi-start roots of an itinerary's reduced system over a seed grid
/// (8 phases x 6 upward durations). Distinct converged feasible roots are
/// all returned; stability labeling is left to the caller.
inline std::vector<OrbitSolution> multi_start_orbit(const Itinerary& itin, const NondimParams& p,
                                                    double Zd_guess = 0.6) {
    std::vector<OrbitSolution> roots;
    const std::size_t m = itin.legs.size();
    const int p_mult = itin.period_multiple;
    for (int i = 0; i < 8; ++i) {
        const double phi = 2.0 * kPi * i / 8.0;
        for (int j = 1; j <= 6; ++j) {
            const double dt_up = kPeriod * j / 7.0;
            Eigen::VectorXd x = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m) + 1);
            x[0] = Zd_guess;
            x[1] = phi;
            // distribute: upward composites get dt_up split evenly, downward
            // legs the remainder of each period
            std::vector<double> dts(m, 0.0);
            std::size_t idx = 0;
            for (int period = 0; period < p_mult; ++period) {
                std::size_t first = idx;
                std::size_t ups = 0;
                while (idx < m && leg_traits(itin.legs[idx]).target != Surface::GammaPlus) {
                    ++ups;
                    ++idx;
                }
                ++idx; // the downward leg closing this period
                for (std::size_t k2 = first; k2 < first + ups; ++k2) dts[k2] = dt_up / ups;
                dts[first + ups] = kPeriod - dt_up;
            }
            for (std::size_t k2 = 0; k2 + 1 < m; ++k2) x[static_cast<Eigen::Index>(k2) + 2] = dts[k2];
            OrbitSolution sol = solve_orbit(itin, x, p);
            if (!sol.converged || !sol.feasible) continue;
            if (sol.Zdot_init <= 0.0) continue;
            bool duplicate = false;
            for (const auto& rr : roots)
                if (std::abs(rr.Zdot_init - sol.Zdot_init) < 1e-7 &&
                    std::abs(rr.phi - sol.phi) < 1e-6)
                    duplicate = true;
            if (!duplicate) roots.push_back(sol);
        }
    }
    return roots;
}

// ---------------------------------------------------------------------------
// Numeric sweeps and attractor labeling
// ---------------------------------------------------------------------------

struct DiagramRow {
    double d;
    double A;
    double s;
    bool bottom;
    double t_mod;   ///< impact time mod 2
    double v;       ///< impact velocity
    std::string label;
};

struct SweepOptions {
    int points = 400;
    bool descending = true;
    int transient_periods = 200;
    int record_periods = 30;
    int label_max_period = 8;
    double label_tol = 1e-4;
};

/// Assigns the n:m/pT label (with s/c/cs decorations) to a steady-state
/// impact record, or "chaotic" when no period <= p_max fits.
inline std::string label_attractor(const std::vector<ImpactRecord>& impacts,
                                   const std::vector<Event>& events, int p_max = 8,
                                   double tol = 1e-4) {
    if (impacts.empty()) return "0:0";
    // find the smallest p such that the sequence repeats with period p*T
    int period = -1;
    for (int p = 1; p <= p_max; ++p) {
        const double P = p * kPeriod;
        bool ok = true;
        std::size_t checked = 0;
        for (std::size_t i = 0; i < impacts.size(); ++i) {
            // find the partner one period later
            const double t_target = impacts[i].t + P;
            if (t_target > impacts.back().t + 0.5 * kPeriod) break;
            bool matched = false;
            for (std::size_t j = i; j < impacts.size(); ++j) {
                if (impacts[j].t < t_target - 0.25) continue;
                if (impacts[j].t > t_target + 0.25) break;
                if (std::abs(impacts[j].t - t_target) <= tol &&
                    std::abs(impacts[j].v - impacts[i].v) <= tol &&
                    impacts[j].bottom == impacts[i].bottom) {
                    matched = true;
                    break;
                }
            }
            if (!matched) { ok = false; break; }
            ++checked;
        }
        if (ok && checked >= impacts.size() / 2) { period = p; break; }
    }
    if (period < 0) return "chaotic";

    // anchor windows at the first bottom impact (or first impact)
    double t0 = impacts.front().t;
    for (const auto& im : impacts)
        if (im.bottom) { t0 = im.t; break; }
    struct Window { int n = 0, m = 0; bool crossed = false, slid = false; };
    std::vector<Window> win(static_cast<std::size_t>(period));
    auto window_of = [&](double t) -> Window* {
        const double rel = t - t0;
        if (rel < -tol) return nullptr;
        const int k = static_cast<int>(std::floor((rel + 1e-12) / kPeriod));
        if (k < 0 || k >= period) return nullptr;
        return &win[static_cast<std::size_t>(k)];
    };
    for (const auto& im : impacts) {
        Window* w = window_of(im.t);
        if (!w) continue;
        (im.bottom ? w->n : w->m)++;
    }
    for (const auto& ev : events) {
        Window* w = window_of(ev.t);
        if (!w) continue;
        if (ev.kind == EventKind::SlideStart) w->slid = true;
        if (ev.kind == EventKind::CrossUp) w->crossed = true;
    }
    auto window_label = [](const Window& w) {
        std::string dec = w.crossed && w.slid ? "cs" : w.slid ? "s" : w.crossed ? "c" : "";
        return std::to_string(w.n) + ":" + std::to_string(w.m) + dec;
    };
    // canonical rotation: most bottom impacts first, then fewest decorations
    int best = 0;
    for (int k = 1; k < period; ++k) {
        const Window& a = win[static_cast<std::size_t>(k)];
        const Window& b = win[static_cast<std::size_t>(best)];
        const int deca = (a.crossed || a.slid) ? (a.crossed && a.slid ? 2 : 1) : 0;
        const int decb = (b.crossed || b.slid) ? (b.crossed && b.slid ? 2 : 1) : 0;
        if (a.n > b.n || (a.n == b.n && deca < decb)) best = k;
    }
    std::string first = window_label(win[static_cast<std::size_t>(best)]);
    bool uniform = true;
    for (const auto& w : win)
        if (window_label(w) != first) uniform = false;
    if (uniform) {
        return period == 1 ? first : first + "/" + std::to_string(period) + "T";
    }
    std::string out;
    for (int k = 0; k < period; ++k) {
        if (k) out += "-";
        out += window_label(win[static_cast<std::size_t>((best + k) % period)]);
    }
    return out + "/" + std::to_string(period) + "T";
}

struct DiagramDataset {
    std::vector<DiagramRow> rows;
    std::vector<std::pair<double, std::string>> labels; ///< (d, label) per point
};

/// Numeric bifurcation-diagram sweep over d with continuation of initial
/// conditions: each point starts from the final state of the previous one.
/// Per-point failures are recorded as "failed" labels and the sweep goes on.
inline DiagramDataset sweep_numeric(const ParamSet& ps, double d_from, double d_to,
                                    const SweepOptions& opt = {}) {
    DiagramDataset out;
    std::vector<double> grid(static_cast<std::size_t>(opt.points));
    for (int i = 0; i < opt.points; ++i)
        grid[static_cast<std::size_t>(i)] =
            d_from + (d_to - d_from) * (opt.points == 1 ? 0.0 : double(i) / (opt.points - 1));
    if (opt.descending && d_from < d_to) std::reverse(grid.begin(), grid.end());
    if (!opt.descending && d_from > d_to) std::reverse(grid.begin(), grid.end());

    RelState state{0.0, 0.0, 0.3, Region::SigmaPlus};
    bool have_state = false;
    for (double d : grid) {
        const NondimParams p = ps.at(d);
        const PhysicalParams phys = ps.physical_at(d);
        RelState init = state;
        if (have_state) {
            init.Z = std::clamp(init.Z, -0.5 * p.d + 1e-9, 0.5 * p.d - 1e-9);
        } else {
            init = RelState{0.0, 0.0, 0.3, Region::SigmaPlus};
        }
        SteadyStateResult ss =
            steady_state_impacts(p, init, opt.transient_periods, opt.record_periods);
        if (ss.status != SimStatus::Completed) {
            out.labels.emplace_back(d, std::string("failed:") +
                                           (ss.status == SimStatus::ChatterCap ? "chatter" : "side_stick"));
            have_state = false;
            continue;
        }
        state = ss.final_state;
        if (state.region == Region::Sliding) state.region = Region::SigmaMinus;
        have_state = true;
        const std::string label =
            label_attractor(ss.impacts, ss.events, opt.label_max_period, opt.label_tol);
        out.labels.emplace_back(d, label);
        for (const auto& im : ss.impacts)
            out.rows.push_back({d, phys.A, phys.s, im.bottom, im.t_mod, im.v, label});
    }
    return out;
}

} // namespace vieh
