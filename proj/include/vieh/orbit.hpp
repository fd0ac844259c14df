#pragma once

// Reduced nonlinear systems defining the 1:1-type periodic orbits and their
// 2T composites, a damped Newton solver for them, and the feasibility /
// physicality filters that remove roots violating the switching or
// impacting dynamics.

#include "vieh/flow.hpp"
#include "vieh/itinerary.hpp"
#include "vieh/model.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace vieh {

inline double mod_two_pi(double x) {
    double m = std::fmod(x, 2.0 * kPi);
    if (m < 0.0) m += 2.0 * kPi;
    return m;
}

// ---------------------------------------------------------------------------
// Reduced systems in the paper's variables (Zdot_{k-1}, phi, dt^0, ...).
// The initial impact is placed at t = 0 on Gamma+ and phi is the forcing
// phase there. Downward-leg duration is eliminated through the period.
// ---------------------------------------------------------------------------

/// 1:1 system: x = (Zdot, phi, dt0), dt_down = T - dt0.
inline Eigen::Vector3d residual_1_1(const Eigen::Vector3d& x, const NondimParams& p) {
    const double Zd = x[0], phi = x[1], dt0 = x[2];
    const double tk = dt0, dtk = kPeriod - dt0;
    const double r = p.r, Lm = p.L_minus, Lp = p.L_plus, d = p.d;
    const double F1_0 = forcing_F1(0.0, phi), F2_0 = forcing_F2(0.0, phi);
    const double F1_k = forcing_F1(tk, phi), F2_k = forcing_F2(tk, phi);
    Eigen::Vector3d res;
    res[0] = (-r * Zd * dt0 + F2_k - F2_0 - F1_0 * dt0 - 0.5 * Lm * dt0 * dt0) + d;
    res[1] = (r * r * Zd * dtk - (r + 1.0) * F1_k * dtk + r * F1_0 * dtk + F2_0 - F2_k
              + r * Lm * dt0 * dtk - 0.5 * Lp * dtk * dtk) - d;
    res[2] = Zd - (-(r + 1.0) * (F1_k - F1_0) + r * Lm * dt0 - Lp * dtk) / (1.0 - r * r);
    return res;
}

/// 1:1s system: x = (Zdot, phi, dt0, dt1, dt2) with sliding on [t1, t2].
inline Eigen::Matrix<double, 5, 1> residual_1_1_s(const Eigen::Matrix<double, 5, 1>& x,
                                                  const NondimParams& p) {
    const double Zd = x[0], phi = x[1], dt0 = x[2], dt1 = x[3], dt2 = x[4];
    const double t1 = dt0, t2 = t1 + dt1, t3 = t2 + dt2;
    const double dtk = kPeriod - (dt0 + dt1 + dt2);
    const double r = p.r, Lm = p.L_minus, Lp = p.L_plus, d = p.d;
    auto F1 = [&](double t) { return forcing_F1(t, phi); };
    auto F2 = [&](double t) { return forcing_F2(t, phi); };
    Eigen::Matrix<double, 5, 1> res;
    res[0] = -r * Zd + F1(t1) - F1(0.0) - Lm * dt0;
    res[1] = mod_two_pi(kPi * t2 + phi) - std::acos(p.L_minus);
    res[2] = (-r * Zd * dt0 + F2(t1) - F2(0.0) - F1(0.0) * dt0 - 0.5 * Lm * dt0 * dt0
              + F2(t3) - F2(t2) - F1(t2) * dt2 - 0.5 * Lm * dt2 * dt2) + d;
    res[3] = (-(r + 1.0) * dtk * F1(t3) + r * dtk * F1(t2) + r * Lm * dtk * dt2
              + F2(0.0) - F2(t3) - 0.5 * Lp * dtk * dtk) - d;
    res[4] = Zd - (-(r + 1.0) * F1(t3) + r * F1(t2) + r * Lm * dt2 + F1(0.0) - Lp * dtk);
    return res;
}

/// 1:1c system: x = (Zdot, phi, dt0, dt1, dt2) with a Sigma+ excursion on [t1, t2].
inline Eigen::Matrix<double, 5, 1> residual_1_1_c(const Eigen::Matrix<double, 5, 1>& x,
                                                  const NondimParams& p) {
    const double Zd = x[0], phi = x[1], dt0 = x[2], dt1 = x[3], dt2 = x[4];
    const double t1 = dt0, t2 = t1 + dt1, t3 = t2 + dt2;
    const double dtk = kPeriod - (dt0 + dt1 + dt2);
    const double r = p.r, Lm = p.L_minus, Lp = p.L_plus, d = p.d;
    auto F1 = [&](double t) { return forcing_F1(t, phi); };
    auto F2 = [&](double t) { return forcing_F2(t, phi); };
    Eigen::Matrix<double, 5, 1> res;
    res[0] = -r * Zd + F1(t1) - F1(0.0) - Lm * dt0;
    res[1] = F1(t2) - F1(t1) - Lp * dt1;
    res[2] = (-r * Zd * dt0 - F2(0.0) - F1(0.0) * dt0 - 0.5 * Lm * dt0 * dt0
              - F1(t1) * dt1 - 0.5 * Lp * dt1 * dt1
              + F2(t3) - F1(t2) * dt2 - 0.5 * Lm * dt2 * dt2) + d;
    res[3] = (-(r + 1.0) * dtk * F1(t3) + r * dtk * F1(t2) + r * dtk * Lm * dt2
              + F2(0.0) - F2(t3) - 0.5 * Lp * dtk * dtk) - d;
    res[4] = Zd - (-(r + 1.0) * F1(t3) + r * F1(t2) + r * Lm * dt2 + F1(0.0) - Lp * dtk);
    return res;
}

/// 1:1cs system: x = (Zdot, phi, dt0, dt1, dt2, dt3); crossing at t1,
/// sliding on [t2, t3], impact at t4.
inline Eigen::Matrix<double, 6, 1> residual_1_1_cs(const Eigen::Matrix<double, 6, 1>& x,
                                                   const NondimParams& p) {
    const double Zd = x[0], phi = x[1], dt0 = x[2], dt1 = x[3], dt2 = x[4], dt3 = x[5];
    const double t1 = dt0, t2 = t1 + dt1, t3 = t2 + dt2, t4 = t3 + dt3;
    const double dtk = kPeriod - (dt0 + dt1 + dt2 + dt3);
    const double r = p.r, Lm = p.L_minus, Lp = p.L_plus, d = p.d;
    auto F1 = [&](double t) { return forcing_F1(t, phi); };
    auto F2 = [&](double t) { return forcing_F2(t, phi); };
    Eigen::Matrix<double, 6, 1> res;
    res[0] = -r * Zd + F1(t1) - F1(0.0) - Lm * dt0;
    res[1] = F1(t2) - F1(t1) - Lp * dt1;
    res[2] = std::cos(kPi * t3 + phi) - Lm;
    res[3] = (-r * Zd * dt0 - F2(0.0) - F1(0.0) * dt0 - 0.5 * Lm * dt0 * dt0
              + F2(t2) - F1(t1) * dt1 - 0.5 * Lp * dt1 * dt1
              + F2(t4) - F2(t3) - F1(t3) * dt3 - 0.5 * Lm * dt3 * dt3) + d;
    res[4] = (-(r + 1.0) * dtk * F1(t4) + r * F1(t3) * dtk + F2(0.0) - F2(t4)
              + r * dtk * Lm * dt3 - 0.5 * Lp * dtk * dtk) - d;
    res[5] = Zd - (-(r + 1.0) * F1(t4) + r * F1(t3) + r * Lm * dt3 + F1(0.0) - Lp * dtk);
    return res;
}

/// q-parameterized 1:1 system: x = (Zdot, q, phi) with dt0 = q T. Used as an
/// independent cross-check of residual_1_1 and of the frictionless limit.
inline Eigen::Vector3d residual_1_1_qform(const Eigen::Vector3d& x, const NondimParams& p) {
    const double Zd = x[0], q = x[1], phi = x[2];
    const double dt0 = q * kPeriod, dtk = (1.0 - q) * kPeriod;
    const double r = p.r, Lm = p.L_minus, Lp = p.L_plus, d = p.d;
    const double dF1 = forcing_F1(dt0, phi) - forcing_F1(0.0, phi);
    const double dF2 = forcing_F2(dt0, phi) - forcing_F2(0.0, phi);
    Eigen::Vector3d res;
    res[0] = (r - 1.0) * Zd + (-Lp * dtk + r * Lm * dt0) / (1.0 + r) - dF1;
    res[1] = forcing_F1(0.0, phi)
             + ((r * dt0 - dtk) * Zd + 0.5 * Lm * dt0 * dt0 - 0.5 * Lp * dtk * dtk) / kPeriod;
    res[2] = dF1 * dF1 + dF2 * dF2
             - std::pow((r - 1.0) * Zd + (-Lp * dtk + r * Lm * dt0) / (1.0 + r), 2)
             - std::pow(-d + dt0 * dtk / (2.0 * kPeriod)
                                * (Lp * dtk + Lm * dt0 + 2.0 * (1.0 + r) * Zd), 2);
    return res;
}

// ---------------------------------------------------------------------------
// Generic reduced system assembled from an itinerary. Unknowns are
// x = (Zdot, phi, dt_0 .. dt_{m-2}); the final leg duration is
// p*T - sum(dt_j). One residual per leg plus the periodicity condition.
// ---------------------------------------------------------------------------

/// State at the end of each leg during a reconstruction walk.
struct EventPoint {
    double t;
    double Z;
    double v;     ///< velocity just before any impact at this point
    Leg leg;      ///< leg that ended here
};

namespace detail {

struct Walk {
    Eigen::VectorXd residual;
    std::vector<EventPoint> points;
    std::vector<double> durations; ///< all m leg durations
};

inline Walk walk_itinerary(const Itinerary& itin, const Eigen::VectorXd& x,
                           const NondimParams& p) {
    const std::size_t m = itin.legs.size();
    const double Zd = x[0], phi = x[1];
    Walk w;
    w.residual.resize(static_cast<Eigen::Index>(m) + 1);
    w.durations.resize(m);
    double total = 0.0;
    for (std::size_t j = 0; j + 1 < m; ++j) {
        w.durations[j] = x[static_cast<Eigen::Index>(j) + 2];
        total += w.durations[j];
    }
    w.durations[m - 1] = itin.period_multiple * kPeriod - total;

    double t = 0.0, Z = 0.5 * p.d, v = -p.r * Zd;
    const double half = 0.5 * p.d;
    for (std::size_t j = 0; j < m; ++j) {
        const Leg leg = itin.legs[j];
        const LegTraits tr = leg_traits(leg);
        const double dt = w.durations[j];
        const double t1 = t + dt;
        double Z1, v1;
        if (tr.sliding) {
            Z1 = Z;
            v1 = 0.0;
            w.residual[static_cast<Eigen::Index>(j)] =
                mod_two_pi(kPi * t1 + phi) - std::acos(p.L_minus);
        } else {
            const double L = p.L(tr.region_sign);
            const double F1_t = forcing_F1(t, phi);
            v1 = v + forcing_F1(t1, phi) - F1_t - L * dt;
            Z1 = Z + v * dt + forcing_F2(t1, phi) - forcing_F2(t, phi) - F1_t * dt
                 - 0.5 * L * dt * dt;
            if (tr.target == Surface::Sigma) {
                w.residual[static_cast<Eigen::Index>(j)] = v1;
                v1 = 0.0;
            } else {
                const double target = tr.target == Surface::GammaPlus ? half : -half;
                w.residual[static_cast<Eigen::Index>(j)] = Z1 - target;
                Z1 = target;
            }
        }
        w.points.push_back({t1, Z1, v1, leg});
        t = t1;
        Z = Z1;
        if (tr.target == Surface::GammaPlus || tr.target == Surface::GammaMinus) {
            if (j + 1 == m) {
                w.residual[static_cast<Eigen::Index>(m)] = v1 - Zd; // periodicity
            }
            v = -p.r * v1; // impact at the leg boundary
        } else {
            v = v1;
        }
    }
    return w;
}

} // namespace detail

/// Residual of the itinerary-assembled reduced system (works for both T- and
/// 2T-periodic compositions; the four named systems above are algebraically
/// reduced forms of the same roots).
inline Eigen::VectorXd residual_itinerary(const Itinerary& itin, const Eigen::VectorXd& x,
                                          const NondimParams& p) {
    return detail::walk_itinerary(itin, x, p).residual;
}

// ---------------------------------------------------------------------------
// Damped Newton with a numerical Jacobian (central differences).
// ---------------------------------------------------------------------------

struct NewtonOptions {
    double tol = 1e-10;      ///< residual inf-norm at acceptance
    int max_iter = 100;
    double fd_step = 1e-7;   ///< central-difference step
    double min_step = 1e-12; ///< Armijo backtracking floor
};

struct NewtonResult {
    Eigen::VectorXd x;
    double residual_norm = std::numeric_limits<double>::infinity();
    bool converged = false;
    int iterations = 0;
};

inline NewtonResult newton_solve(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& fn,
                                 Eigen::VectorXd x, const NewtonOptions& opt = {}) {
    NewtonResult out;
    const auto norm = [](const Eigen::VectorXd& v) { return v.lpNorm<Eigen::Infinity>(); };
    Eigen::VectorXd r = fn(x);
    double rn = norm(r);
    const Eigen::Index n = x.size();
    Eigen::MatrixXd J(r.size(), n);
    for (int it = 0; it < opt.max_iter; ++it) {
        out.iterations = it;
        if (!std::isfinite(rn)) break;
        if (rn <= opt.tol) {
            out.converged = true;
            break;
        }
        for (Eigen::Index j = 0; j < n; ++j) {
            Eigen::VectorXd xp = x, xm = x;
            xp[j] += opt.fd_step;
            xm[j] -= opt.fd_step;
            J.col(j) = (fn(xp) - fn(xm)) / (2.0 * opt.fd_step);
        }
        Eigen::VectorXd step = J.fullPivLu().solve(-r);
        if (!step.allFinite()) break;
        double alpha = 1.0;
        bool accepted = false;
        while (alpha >= opt.min_step) {
            Eigen::VectorXd xn = x + alpha * step;
            Eigen::VectorXd rnew = fn(xn);
            const double rn_new = norm(rnew);
            if (std::isfinite(rn_new) && rn_new < rn * (1.0 - 1e-4 * alpha)) {
                x = xn;
                r = rnew;
                rn = rn_new;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted) break; // step collapse
    }
    if (rn <= opt.tol) out.converged = true;
    out.x = x;
    out.residual_norm = rn;
    return out;
}

// ---------------------------------------------------------------------------
// Orbit solutions, feasibility and physicality.
// ---------------------------------------------------------------------------

enum class Violation {
    NonPositiveDuration,
    InteriorSigmaHit,     ///< leg velocity changes sign at an unlisted time
    ExceedsCapsule,       ///< |Z| > d/2 somewhere (grazing on Gamma)
    SlidingOnsetOutOfBand,
    SlidingExitBranch,
    CrossingConditionViolated,
    NotConverged,
};

inline const char* violation_name(Violation v) {
    switch (v) {
        case Violation::NonPositiveDuration: return "non_positive_duration";
        case Violation::InteriorSigmaHit: return "interior_sigma_hit";
        case Violation::ExceedsCapsule: return "exceeds_capsule";
        case Violation::SlidingOnsetOutOfBand: return "sliding_onset_out_of_band";
        case Violation::SlidingExitBranch: return "sliding_exit_branch";
        case Violation::CrossingConditionViolated: return "crossing_condition_violated";
        case Violation::NotConverged: return "not_converged";
    }
    return "?";
}

struct OrbitSolution {
    Itinerary itinerary;
    double Zdot_init = 0.0;            ///< pre-impact velocity at the initial Gamma+ impact
    double phi = 0.0;                  ///< forcing phase at the initial impact
    std::vector<double> durations;     ///< all leg durations in itinerary order
    std::vector<EventPoint> points;    ///< state at the end of every leg
    double residual_norm = std::numeric_limits<double>::infinity();
    bool converged = false;
    bool feasible = false;
    bool physical = false;
    std::vector<Violation> violations;

    Eigen::VectorXd unknowns() const {
        Eigen::VectorXd x(static_cast<Eigen::Index>(durations.size()) + 1);
        x[0] = Zdot_init;
        x[1] = phi;
        for (std::size_t j = 0; j + 1 < durations.size(); ++j)
            x[static_cast<Eigen::Index>(j) + 2] = durations[j];
        return x;
    }
};

inline bool itinerary_leg_is_slide(const Itinerary& itin, std::size_t j) {
    return j < itin.legs.size() && itin.legs[j] == Leg::SigmaSlide;
}

/// Feasibility: all leg durations strictly positive. Physicality: every
/// Sigma event satisfies its crossing / sliding conditions and the replayed
/// closed-form trajectory neither leaves the capsule nor touches Sigma at an
/// unlisted time (checked through the analytic extrema of each leg).
inline void check_physicality(OrbitSolution& sol, const NondimParams& p) {
    sol.violations.clear();
    const double phi = sol.phi;
    const double half = 0.5 * p.d;
    const double vtol = 1e-9;

    sol.feasible = true;
    for (double dt : sol.durations)
        if (!(dt > 0.0)) {
            sol.feasible = false;
            sol.violations.push_back(Violation::NonPositiveDuration);
            break;
        }

    bool physical = sol.feasible && sol.converged;
    if (!sol.converged) sol.violations.push_back(Violation::NotConverged);

    const double acos_Lm = std::acos(p.L_minus);
    const double acos_Lp = std::acos(p.L_plus);

    double t0 = 0.0, v0 = -p.r * sol.Zdot_init;
    for (std::size_t j = 0; j < sol.itinerary.legs.size(); ++j) {
        const Leg leg = sol.itinerary.legs[j];
        const LegTraits tr = leg_traits(leg);
        const EventPoint& end = sol.points[j];

        if (tr.sliding) {
            // onset must lie in the admissible band [acos(L+), acos(L-)),
            // the exit on the sin > 0 branch of acos(L-)
            const double ph_on = mod_two_pi(kPi * t0 + phi);
            const double ph_off = mod_two_pi(kPi * end.t + phi);
            if (!(ph_on >= acos_Lp - 1e-8 && ph_on < acos_Lm - 1e-12)) {
                physical = false;
                sol.violations.push_back(Violation::SlidingOnsetOutOfBand);
            }
            if (!(std::abs(ph_off - acos_Lm) <= 1e-8 && std::sin(kPi * end.t + phi) > 0.0)) {
                physical = false;
                sol.violations.push_back(Violation::SlidingExitBranch);
            }
        } else {
            const double L = p.L(tr.region_sign);
            // crossing conditions at Sigma arrivals that are not sliding onsets
            if (tr.target == Surface::Sigma) {
                const bool next_slides = j + 1 < sol.itinerary.legs.size() &&
                                         itinerary_leg_is_slide(sol.itinerary, j + 1);
                const double f_end = forcing_f(end.t, phi);
                if (!next_slides) {
                    const bool ok = tr.region_sign < 0 ? f_end > p.L_plus - 1e-9
                                                       : f_end < p.L_minus + 1e-9;
                    if (!ok) {
                        physical = false;
                        sol.violations.push_back(Violation::CrossingConditionViolated);
                    }
                }
                if (std::abs(end.Z) > half - 1e-12) {
                    physical = false;
                    sol.violations.push_back(Violation::ExceedsCapsule);
                }
            }
            // interior Sigma hits: velocity extrema inside the leg
            std::vector<double> ts;
            detail::stationary_times(t0 + 1e-10, end.t - 1e-10, L, phi, ts);
            for (double te : ts) {
                const double ve = detail::seg_v(te, t0, v0, L, phi);
                const bool crossed = tr.region_sign < 0 ? ve > vtol : ve < -vtol;
                if (crossed) {
                    physical = false;
                    sol.violations.push_back(Violation::InteriorSigmaHit);
                    break;
                }
            }
        }
        t0 = end.t;
        v0 = (tr.target == Surface::GammaPlus || tr.target == Surface::GammaMinus)
                 ? -p.r * end.v
                 : 0.0;
    }
    sol.physical = physical;
}

struct SolveOptions {
    NewtonOptions newton;
};

/// Solves the reduced system of `itin` from `guess` (same layout as
/// OrbitSolution::unknowns) and reconstructs the intermediates.
inline OrbitSolution solve_orbit(const Itinerary& itin, const Eigen::VectorXd& guess,
                                 const NondimParams& p, const SolveOptions& opt = {}) {
    itin.validate();
    auto fn = [&](const Eigen::VectorXd& x) { return residual_itinerary(itin, x, p); };
    NewtonResult nr = newton_solve(fn, guess, opt.newton);

    OrbitSolution sol;
    sol.itinerary = itin;
    sol.converged = nr.converged;
    sol.residual_norm = nr.residual_norm;
    sol.Zdot_init = nr.x[0];
    sol.phi = mod_two_pi(nr.x[1]);
    Eigen::VectorXd xr = nr.x;
    xr[1] = sol.phi;
    detail::Walk w = detail::walk_itinerary(itin, xr, p);
    sol.durations = w.durations;
    sol.points = w.points;
    check_physicality(sol, p);
    return sol;
}

} // namespace vieh
