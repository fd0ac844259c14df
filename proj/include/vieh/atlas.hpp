#pragma once

// Critical-point surveys: walks the branch chain of 1:1-type solutions
// (1:1 -> 1:1s -> 1:1cs -> 1:1c and the 2T composites) over a parameter
// set, seeding each family from the degeneration point of the previous one
// and refining every bifurcation with the dual indicator/tangency solve.

#include "vieh/bifurcation.hpp"

#include <map>

namespace vieh {

struct SurveyResult {
    std::map<std::string, BifurcationPoint> critical; ///< keyed by short name
    std::map<std::string, Branch> branches;           ///< keyed by family label
    std::vector<std::string> log;
};

namespace detail {

inline Eigen::VectorXd closest_unknowns(const Branch& br, double d) {
    Eigen::VectorXd b = br.points.back().sol.unknowns();
    double best = std::numeric_limits<double>::infinity();
    for (const auto& pt : br.points)
        if (std::abs(pt.d - d) < best) {
            best = std::abs(pt.d - d);
            b = pt.sol.unknowns();
        }
    return b;
}

inline Eigen::VectorXd seed_from_sim(const Itinerary& itin, const ParamSet& ps, double d,
                                     int transient = 300) {
    const NondimParams p = ps.at(d);
    SteadyStateResult ss =
        steady_state_impacts(p, {0.0, 0.0, 0.3, Region::SigmaPlus}, transient, 12);
    if (ss.status != SimStatus::Completed)
        throw std::runtime_error("seed_from_sim: simulation failed at d = " + std::to_string(d));
    auto guess = orbit_guess_from_events(itin, ss.events, p);
    if (!guess)
        throw std::runtime_error("seed_from_sim: attractor at d = " + std::to_string(d) +
                                 " does not match itinerary " + itin.label);
    return *guess;
}

} // namespace detail

/// One-period chain for a ParamSet: 1:1 branch from d_hi, PD and
/// grazing-sliding on it, then 1:1s -> d_ss, 1:1cs -> d_c, 1:1c branch with
/// its PD and the impact-grazing point. Each nonsmooth point is solved
/// directly from the previous tangency data and cross-checked by indicator
/// bisection along a locally built branch. Entries that do not apply
/// (mu_k = 0 sliding points) are reported NotApplicable.
inline SurveyResult survey_one_period(const ParamSet& ps, double d_hi, double d_lo) {
    SurveyResult out;
    const Itinerary it11 = itineraries::one_one();
    const Itinerary it11s = itineraries::one_one_s();
    const Itinerary it11cs = itineraries::one_one_cs();
    const Itinerary it11c = itineraries::one_one_c();

    Eigen::VectorXd seed = detail::seed_from_sim(it11, ps, d_hi);
    ContinueOptions copt;
    copt.step = 2e-3;
    copt.stop_on_unphysical = false; // track the root through the PD and to the graze
    Branch br11 = continue_branch(it11, ps, d_hi, d_lo, seed, copt);
    out.branches["1:1"] = br11;

    try {
        out.critical["pd_1_1"] = find_pd(br11, it11, ps);
    } catch (const NoBracket&) {
        out.log.push_back("no PD on the 1:1 branch in range");
    }

    const bool frictionless = ps.at(d_hi).L_plus - ps.at(d_hi).L_minus <= 2e-10;
    BifurcationPoint gs;
    if (frictionless) {
        BifurcationPoint na;
        na.kind = BifKind::NotApplicable;
        out.critical["d_sigma"] = na;
        out.critical["d_ss"] = na;
        out.critical["d_c"] = na;
    } else {
        try {
            gs = find_grazing_sliding(br11, it11, ps, 0);
            out.critical["d_sigma"] = gs;
        } catch (const NoBracket&) {
            out.log.push_back("1:1 branch never grazes Sigma in range");
        }
    }

    // -- sliding family and the switching-sliding point
    BifurcationPoint ss;
    if (gs.found) {
        const Eigen::VectorXd b = detail::closest_unknowns(br11, gs.d_star);
        // d_ss directly from the grazing data: the tangency time splits the
        // upward leg, with a zero-length slide as the seed
        Eigen::VectorXd xs(5);
        xs << b[0], b[1], gs.witness_t, 0.0, b[2] - gs.witness_t;
        ss = solve_tangency(it11s, ps, TangencyKind::SlideOnsetAtBandStart, 1, xs, gs.d_star);
        ss.kind = BifKind::SwitchingSliding;
        if (ss.found) {
            // cross-check: build the s-branch across (d_ss, d_sigma) and
            // bisect the onset-phase indicator along it
            const double w = std::max(gs.d_star - ss.d_star, 1e-6);
            OrbitSolution s_seed;
            bool got = false;
            const NondimParams p0 = ps.at(gs.d_star - 0.15 * w);
            const double band = p0.max_sliding_duration();
            for (double frac : {0.2, 0.05, 0.5}) {
                Eigen::VectorXd x(5);
                x << b[0], b[1], gs.witness_t - 0.5 * frac * band, frac * band,
                    b[2] - gs.witness_t - 0.5 * frac * band;
                OrbitSolution sol = solve_orbit(it11s, x, p0);
                if (sol.converged && sol.durations[1] > 0 && sol.durations[1] < 1.3 * band) {
                    s_seed = sol;
                    got = true;
                    break;
                }
            }
            if (got) {
                ContinueOptions so;
                so.step = std::max(w / 8.0, 1e-6);
                so.stop_on_unphysical = false;
                Branch brs = continue_branch(it11s, ps, gs.d_star - 0.15 * w,
                                             ss.d_star - 0.3 * w, s_seed.unknowns(), so);
                out.branches["1:1s"] = brs;
                try {
                    BifurcationPoint chk = find_switching_sliding(brs, it11s, ps, 1);
                    ss.d_bisect = chk.d_bisect;
                } catch (const NoBracket&) {
                    out.log.push_back("switching-sliding cross-check found no bracket");
                }
            } else {
                out.log.push_back("could not build the 1:1s cross-check branch");
            }
            out.critical["d_ss"] = ss;
        } else {
            out.log.push_back("switching-sliding tangency solve failed");
        }
    }

    // -- cross-then-slide family and the crossing-sliding point
    BifurcationPoint dc;
    if (ss.found) {
        // unknowns of the sliding solution at d_ss: re-solve the tangency to
        // recover them (solve_tangency already returned d_star; rebuild x)
        Eigen::VectorXd b;
        if (out.branches.count("1:1s"))
            b = detail::closest_unknowns(out.branches["1:1s"], ss.d_star);
        else {
            const Eigen::VectorXd b11 = detail::closest_unknowns(br11, gs.d_star);
            b.resize(5);
            b << b11[0], b11[1], gs.witness_t, 0.0, b11[2] - gs.witness_t;
        }
        // refine the s-root at d_ss itself for a clean split
        OrbitSolution s_at_ss = solve_orbit(it11s, b, ps.at(ss.d_star));
        if (s_at_ss.converged) b = s_at_ss.unknowns();
        for (double c1 : {1e-3, 4e-3, 2e-4, 1e-2}) {
            Eigen::VectorXd x(6);
            x << b[0], b[1], b[2] - 0.5 * c1, c1, std::max(b[3] - 0.5 * c1, 1e-5), b[4];
            dc = solve_tangency(it11cs, ps, TangencyKind::SlideOnsetAtBandEnd, 2, x, ss.d_star - 1e-5);
            dc.kind = BifKind::CrossingSliding;
            // reject the degenerate fallback onto the grazing-sliding point
            if (dc.found && std::abs(dc.d_star - gs.d_star) > 1e-7) break;
            dc.found = false;
        }
        if (dc.found) {
            const double w = std::max(ss.d_star - dc.d_star, 1e-6);
            bool got = false;
            OrbitSolution cs_seed;
            const NondimParams p0 = ps.at(ss.d_star - 0.15 * w);
            for (double c1 : {1e-3, 4e-3, 2e-4}) {
                Eigen::VectorXd x(6);
                x << b[0], b[1], b[2] - 0.5 * c1, c1, std::max(b[3] - 0.5 * c1, 1e-5), b[4];
                OrbitSolution sol = solve_orbit(it11cs, x, p0);
                if (sol.converged && sol.durations[1] > 1e-9 && sol.durations[2] > 0) {
                    cs_seed = sol;
                    got = true;
                    break;
                }
            }
            if (got) {
                ContinueOptions co;
                co.step = std::max(w / 8.0, 1e-6);
                co.stop_on_unphysical = false;
                Branch brcs = continue_branch(it11cs, ps, ss.d_star - 0.15 * w,
                                              dc.d_star - 0.3 * w, cs_seed.unknowns(), co);
                out.branches["1:1cs"] = brcs;
                try {
                    BifurcationPoint chk = find_crossing_sliding(brcs, it11cs, ps, 2);
                    dc.d_bisect = chk.d_bisect;
                } catch (const NoBracket&) {
                    out.log.push_back("crossing-sliding cross-check found no bracket");
                }
            } else {
                out.log.push_back("could not build the 1:1cs cross-check branch");
            }
            out.critical["d_c"] = dc;
        } else {
            out.log.push_back("crossing-sliding tangency solve failed");
        }
    }

    // -- crossing family: from d_c (mu_k > 0) or directly from the 1:1 root
    // (mu_k = 0, where Sigma is invisible and the loop grows smoothly)
    Eigen::VectorXd c_seed;
    double c_d0 = std::numeric_limits<double>::quiet_NaN();
    bool got_c = false;
    if (dc.found) {
        // unknowns of the cs solution at d_c: loop + vanishing slide
        Eigen::VectorXd b;
        if (out.branches.count("1:1cs"))
            b = detail::closest_unknowns(out.branches["1:1cs"], dc.d_star);
        else
            b = Eigen::VectorXd();
        if (b.size() == 6) {
            OrbitSolution cs_at_dc = solve_orbit(it11cs, b, ps.at(dc.d_star + 2e-5));
            if (cs_at_dc.converged) b = cs_at_dc.unknowns();
            c_d0 = dc.d_star - 5e-4;
            Eigen::VectorXd x(5);
            x << b[0], b[1], b[2], b[3], b[5];
            OrbitSolution sol = solve_orbit(it11c, x, ps.at(c_d0));
            if (sol.converged && sol.feasible) {
                c_seed = sol.unknowns();
                got_c = true;
            }
        }
    } else if (frictionless) {
        // continue the plain 1:1 root below the Sigma reach point and read
        // the interior velocity zeros off the closed form
        for (const auto& pt : out.branches["1:1"].points) {
            const NondimParams p = ps.at(pt.d);
            if (detail::max_interior_velocity(pt.sol, 0, p) < 1e-6) continue;
            const OrbitSolution& s = pt.sol;
            const double v0 = -p.r * s.Zdot_init;
            std::vector<double> ts;
            detail::stationary_times(1e-10, s.durations[0] - 1e-10, p.L_minus, s.phi, ts);
            double t1 = std::numeric_limits<double>::quiet_NaN(), t2 = t1;
            double prev_t = 0.0, prev_v = v0;
            std::vector<double> probes = ts;
            probes.push_back(s.durations[0]);
            for (double te : probes) {
                const double ve = detail::seg_v(te, 0.0, v0, p.L_minus, s.phi);
                if (prev_v < 0 && ve > 0) t1 = 0.5 * (prev_t + te);
                if (prev_v > 0 && ve < 0) t2 = 0.5 * (prev_t + te);
                prev_t = te;
                prev_v = ve;
            }
            if (!std::isfinite(t1) || !std::isfinite(t2)) continue;
            Eigen::VectorXd x(5);
            x << s.Zdot_init, s.phi, t1, t2 - t1, s.durations[0] - t2;
            OrbitSolution sol = solve_orbit(it11c, x, p);
            if (sol.converged && sol.feasible) {
                c_seed = sol.unknowns();
                c_d0 = pt.d;
                got_c = true;
                break;
            }
        }
    }
    if (got_c) {
        ContinueOptions co;
        co.step = 1e-3;
        co.stop_on_unphysical = false;
        Branch brc = continue_branch(it11c, ps, c_d0, d_lo, c_seed, co);
        out.branches["1:1c"] = brc;
        try {
            out.critical["pd_1_1_c"] = find_pd(brc, it11c, ps);
        } catch (const NoBracket&) {
            out.log.push_back("no PD on the 1:1c branch in range");
        }
        try {
            out.critical["d_gamma_plus"] = find_grazing_gamma(brc, it11c, ps, 1);
        } catch (const NoBracket&) {
            out.log.push_back("1:1c loop never reaches Gamma+ in range");
        }
    } else {
        out.log.push_back("could not seed the 1:1c family");
    }
    return out;
}

/// 2T chain of the larger-friction regime: 1:1/2T from just below the 1:1 PD,
/// its grazing-sliding point, the 1:1-1:1s/2T family with both
/// switching-sliding points, and the 1:1c/2T family with its impact-grazing
/// point (seeded by simulation inside its stable window).
inline SurveyResult survey_two_period(const ParamSet& ps, const SurveyResult& one_period,
                                      double d_lo) {
    SurveyResult out;
    const Itinerary it2 = itineraries::one_one_2T();
    const Itinerary it2s = itineraries::one_one__one_one_s_2T();
    const Itinerary it2cs = itineraries::one_one__one_one_cs_2T();
    const Itinerary it2c = itineraries::one_one_c_2T();

    auto pd_it = one_period.critical.find("pd_1_1");
    if (pd_it == one_period.critical.end() || !pd_it->second.found) {
        out.log.push_back("2T survey needs the 1:1 PD point");
        return out;
    }
    const double d_pd = pd_it->second.d_star;

    Eigen::VectorXd seed2 = detail::seed_from_sim(it2, ps, d_pd - 0.012);
    ContinueOptions copt;
    copt.step = 1e-3;
    copt.stop_on_unphysical = false;
    Branch br2 = continue_branch(it2, ps, d_pd - 0.012, d_pd - 0.04, seed2, copt);
    out.branches["1:1/2T"] = br2;

    BifurcationPoint g2;
    bool got_g2 = false;
    for (std::size_t leg : {2u, 0u}) {
        try {
            g2 = find_grazing_sliding(br2, it2, ps, leg);
            got_g2 = g2.found;
            if (got_g2) {
                g2.orbit_label = it2.label;
                out.critical["d2T_sigma"] = g2;
                break;
            }
        } catch (const NoBracket&) {
        }
    }
    if (!got_g2) {
        out.log.push_back("1:1/2T branch never grazes Sigma in range");
        return out;
    }

    // --- 1:1-1:1s/2T seeded at the 2T grazing point
    const double d0 = g2.d_star - 6e-4;
    const NondimParams p0 = ps.at(d0);
    const double band = p0.max_sliding_duration();
    Eigen::VectorXd b = br2.points.back().sol.unknowns();
    double best = std::numeric_limits<double>::infinity();
    for (const auto& pt : br2.points)
        if (std::abs(pt.d - g2.d_star) < best) {
            best = std::abs(pt.d - g2.d_star);
            b = pt.sol.unknowns();
        }
    // b layout: (Zd, phi, dtU1, dtD1, dtU2); the tangency lies on leg 2 at
    // absolute time g2.witness_t
    OrbitSolution s2;
    bool got_s2 = false;
    for (double frac : {0.25, 0.1, 0.5}) {
        const double dt_slide = frac * band;
        const double t_leg_start = b[2] + b[3];
        const double to_onset = g2.witness_t - t_leg_start - 0.5 * dt_slide;
        Eigen::VectorXd x(7);
        x[0] = b[0];
        x[1] = b[1];
        x[2] = b[2];
        x[3] = b[3];
        x[4] = to_onset;
        x[5] = dt_slide;
        x[6] = b[4] - to_onset - dt_slide * 0.5;
        OrbitSolution sol = solve_orbit(it2s, x, p0);
        if (sol.converged && sol.feasible && sol.durations[3] > 0 && sol.durations[3] < 1.3 * band) {
            s2 = sol;
            got_s2 = true;
            break;
        }
    }
    if (!got_s2) {
        out.log.push_back("could not seed the 1:1-1:1s/2T family");
        return out;
    }
    ContinueOptions so;
    so.step = 3e-4;
    so.stop_on_unphysical = false;
    Branch br2s = continue_branch(it2s, ps, d0, d0 - 0.05, s2.unknowns(), so);
    out.branches["1:1-1:1s/2T"] = br2s;
    try {
        out.critical["d2T_ss"] = find_switching_sliding(br2s, it2s, ps, 3);
    } catch (const NoBracket&) {
        out.log.push_back("1:1-1:1s/2T onset never reaches the band start");
        return out;
    }

    // --- 1:1-1:1cs/2T below the first switching-sliding point
    const BifurcationPoint& ss1 = out.critical["d2T_ss"];
    b = br2s.points.back().sol.unknowns();
    best = std::numeric_limits<double>::infinity();
    for (const auto& pt : br2s.points)
        if (std::abs(pt.d - ss1.d_star) < best) {
            best = std::abs(pt.d - ss1.d_star);
            b = pt.sol.unknowns();
        }
    bool got_cs2 = false;
    for (double c1 : {1e-3, 4e-3, 2e-4}) {
        const double dcs = ss1.d_star - 3e-4;
        Eigen::VectorXd x(8);
        x[0] = b[0];
        x[1] = b[1];
        x[2] = b[2];
        x[3] = b[3];
        x[4] = b[4] - 0.5 * c1;
        x[5] = c1;
        x[6] = std::max(b[5] - 0.5 * c1, 1e-4);
        x[7] = b[6];
        OrbitSolution sol = solve_orbit(it2cs, x, ps.at(dcs));
        if (!(sol.converged && sol.feasible && sol.durations[3] > 1e-9)) continue;
        got_cs2 = true;
        ContinueOptions co;
        co.step = 3e-4;
        co.stop_on_unphysical = false;
        Branch br2cs = continue_branch(it2cs, ps, dcs, dcs - 0.05, sol.unknowns(), co);
        out.branches["1:1-1:1cs/2T"] = br2cs;
        // second switching-sliding point: the crossing interval collapses
        try {
            auto indicator = [](const OrbitSolution& s, const NondimParams&) {
                return s.durations[3]; // Sigma+ crossing interval
            };
            auto db = detail::bisect_indicator(it2cs, ps, br2cs, indicator);
            if (db) {
                Eigen::VectorXd sb = br2cs.points.back().sol.unknowns();
                double bb = std::numeric_limits<double>::infinity();
                for (const auto& pt : br2cs.points)
                    if (std::abs(pt.d - *db) < bb) {
                        bb = std::abs(pt.d - *db);
                        sb = pt.sol.unknowns();
                    }
                BifurcationPoint p2 = solve_tangency(it2cs, ps, TangencyKind::SlideOnsetAtBandStart,
                                                     4, sb, *db);
                p2.kind = BifKind::SwitchingSliding;
                p2.d_bisect = *db;
                out.critical["d2T_ss_2"] = p2;
            }
        } catch (const NoBracket&) {
            out.log.push_back("1:1-1:1cs/2T crossing never collapses in range");
        }
        break;
    }
    if (!got_cs2) out.log.push_back("could not seed the 1:1-1:1cs/2T family");

    // --- 1:1c/2T family: simulation seed inside its stable window
    auto pdc_it = one_period.critical.find("pd_1_1_c");
    if (pdc_it != one_period.critical.end() && pdc_it->second.found) {
        const double d_pd_c = pdc_it->second.d_star;
        try {
            Eigen::VectorXd cseed = detail::seed_from_sim(it2c, ps, d_pd_c - 0.006, 400);
            ContinueOptions cc;
            cc.step = 5e-4;
            cc.stop_on_unphysical = false;
            Branch br2c = continue_branch(it2c, ps, d_pd_c - 0.006, d_lo, cseed, cc);
            out.branches["1:1c/2T"] = br2c;
            for (std::size_t leg : {1u, 5u}) {
                try {
                    BifurcationPoint bg = find_grazing_gamma(br2c, it2c, ps, leg);
                    if (bg.found) {
                        out.critical["d2T_gamma_plus"] = bg;
                        break;
                    }
                } catch (const NoBracket&) {
                }
            }
            if (!out.critical.count("d2T_gamma_plus"))
                out.log.push_back("1:1c/2T loop never reaches Gamma+ in range");
        } catch (const std::exception& e) {
            out.log.push_back(std::string("1:1c/2T seed failed: ") + e.what());
        }
    }
    return out;
}

} // namespace vieh
