#pragma once

// Event-driven simulation of the relative-frame dynamics
//
//     Zdd = f(t) - L^lambda,   lambda = sign(Zdot),
//
// with impacts Zdot -> -r Zdot at Z = +-d/2 and Filippov sliding on the
// switching manifold Sigma = {Zdot = 0}. Between events the flow is closed
// form, so event location reduces to root finding on analytic expressions.

#include "vieh/model.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace vieh {

enum class Region { SigmaPlus, SigmaMinus, Sliding };

inline int region_sign(Region r) { return r == Region::SigmaPlus ? +1 : -1; }

/// Instantaneous state in the relative frame.
struct RelState {
    double t = 0.0;
    double Z = 0.0;
    double Zdot = 0.0;
    Region region = Region::SigmaMinus;
};

enum class EventKind {
    ImpactBottom, ///< Z = +d/2
    ImpactTop,    ///< Z = -d/2
    CrossUp,      ///< Sigma- -> Sigma+
    CrossDown,    ///< Sigma+ -> Sigma-
    SlideStart,
    SlideEnd,
    GrazeSigma,   ///< tangency at Sigma, flow stays on the incoming side
    GrazeGamma,   ///< impact with (numerically) vanishing velocity
};

inline const char* event_kind_name(EventKind k) {
    switch (k) {
        case EventKind::ImpactBottom: return "impact_bottom";
        case EventKind::ImpactTop: return "impact_top";
        case EventKind::CrossUp: return "cross_up";
        case EventKind::CrossDown: return "cross_down";
        case EventKind::SlideStart: return "slide_start";
        case EventKind::SlideEnd: return "slide_end";
        case EventKind::GrazeSigma: return "graze_sigma";
        case EventKind::GrazeGamma: return "graze_gamma";
    }
    return "?";
}

struct Event {
    EventKind kind;
    double t;
    double Z;
    double v_pre = 0.0;
    double v_post = 0.0;
};

inline bool is_impact(EventKind k) {
    return k == EventKind::ImpactBottom || k == EventKind::ImpactTop || k == EventKind::GrazeGamma;
}

/// Newton's restitution law in the relative frame.
inline double apply_impact(double v_pre, double r) { return -r * v_pre; }

/// Closed-form flow in a fixed region over [t, t+tau]; no event may occur
/// inside the interval. Sliding states must use slide_until_exit instead.
inline RelState propagate_segment(const RelState& s, Region lambda, double tau,
                                  const NondimParams& p) {
    if (lambda == Region::Sliding)
        throw std::invalid_argument("propagate_segment: sliding segments are handled by slide_until_exit");
    const double L = p.L(region_sign(lambda));
    const double t1 = s.t + tau;
    const double F1_0 = forcing_F1(s.t, p.phi);
    RelState out;
    out.t = t1;
    out.Zdot = s.Zdot + forcing_F1(t1, p.phi) - F1_0 - L * tau;
    out.Z = s.Z + s.Zdot * tau + forcing_F2(t1, p.phi) - forcing_F2(s.t, p.phi) - F1_0 * tau
            - 0.5 * L * tau * tau;
    out.region = lambda;
    return out;
}

namespace detail {

/// Velocity along the closed-form segment started at (t0, v0) in region L.
inline double seg_v(double t, double t0, double v0, double L, double phi) {
    return v0 + forcing_F1(t, phi) - forcing_F1(t0, phi) - L * (t - t0);
}

inline double seg_z(double t, double t0, double z0, double v0, double L, double phi) {
    const double dt = t - t0;
    return z0 + v0 * dt + forcing_F2(t, phi) - forcing_F2(t0, phi) - forcing_F1(t0, phi) * dt
           - 0.5 * L * dt * dt;
}

/// Safeguarded bisection/Newton hybrid for an analytic function with a
/// bracketing interval. Refines the root to ~1e-13 in t.
template <class F, class DF>
double refine_root(F f, DF df, double a, double b, double fa, double fb) {
    double x = 0.5 * (a + b);
    for (int it = 0; it < 200; ++it) {
        if (b - a < 1e-13) break;
        double fx = f(x);
        if (fx == 0.0) return x;
        if ((fx < 0) == (fa < 0)) { a = x; fa = fx; }
        else { b = x; fb = fx; }
        double d = df(x);
        double xn = x - fx / d;
        if (!(xn > a && xn < b) || d == 0.0) xn = 0.5 * (a + b);
        x = xn;
    }
    return 0.5 * (a + b);
}

/// Times in (t0, t1] at which cos(pi t + phi) = L, i.e. the stationary
/// points of the segment velocity. Closed form via arccos.
inline void stationary_times(double t0, double t1, double L, double phi, std::vector<double>& out) {
    if (!(L > -1.0 && L < 1.0)) return;
    const double a = std::acos(L);
    const double k0 = std::floor((kPi * t0 + phi) / (2.0 * kPi)) - 1.0;
    for (double k = k0;; k += 1.0) {
        bool past = true;
        for (double root : {2.0 * kPi * k + a, 2.0 * kPi * k + 2.0 * kPi - a}) {
            const double t = (root - phi) / kPi;
            if (t > t1) continue;
            past = false;
            if (t > t0 + 1e-13) out.push_back(t);
        }
        if (past && k > k0 + 1.0) break;
    }
    std::sort(out.begin(), out.end());
}

struct RawEvent {
    double t;
    bool impact; ///< true: Z = +-d/2, false: Zdot = 0
    double Z;
};

/// Earliest event of the segment started at `s` in region `lambda`, searched
/// over (s.t, t_max]. Uses a monotone decomposition: velocity roots are
/// bracketed between the analytic stationary points of Zdot, and position
/// roots between the velocity roots, so no sign change can be missed.
inline std::optional<RawEvent> locate_event(const RelState& s, Region lambda, double t_max,
                                            const NondimParams& p) {
    const double L = p.L(region_sign(lambda));
    const double phi = p.phi;
    const double t0 = s.t;
    if (!(t_max > t0)) return std::nullopt;

    auto v = [&](double t) { return seg_v(t, t0, s.Zdot, L, phi); };
    auto dv = [&](double t) { return forcing_f(t, phi) - L; };
    auto z = [&](double t) { return seg_z(t, t0, s.Z, s.Zdot, L, phi); };

    std::vector<double> brk;
    stationary_times(t0, t_max, L, phi, brk);
    brk.push_back(t_max);

    // Sign of v just after t0. When v0 = 0 (segment starts on Sigma) the
    // analytic germ decides: first f - L, then f' if the contact is tangent.
    double v_sign0 = s.Zdot;
    if (std::abs(v_sign0) <= 1e-12) {
        const double g1 = forcing_f(t0, phi) - L;
        v_sign0 = (std::abs(g1) > 1e-10) ? g1 : -kPi * std::sin(kPi * t0 + phi);
        if (v_sign0 == 0.0) v_sign0 = 1.0;
    }
    // Events closer than the guard to t0 are the departing event re-detected
    // through rounding (the contact can be quadratically flat), not new ones.
    const double guard = t0 + 1e-9;

    std::vector<double> vroots;
    double a = t0;
    double fa = v_sign0;
    for (double b : brk) {
        const double fb = v(b);
        if ((fa < 0) != (fb < 0) && fb != 0.0) {
            const double rt = refine_root(v, dv, a, b, (a == t0) ? (fa < 0 ? -1.0 : 1.0) * 1e-300 : fa, fb);
            if (rt > guard) vroots.push_back(rt);
        } else if (fb == 0.0 && b > guard) {
            vroots.push_back(b);
        }
        a = b;
        fa = fb;
    }

    std::vector<RawEvent> cands;
    const double half = 0.5 * p.d;
    for (double rt : vroots) {
        const double Zr = z(rt);
        if (std::abs(Zr) < half - 1e-12) cands.push_back({rt, false, Zr});
        // a velocity root at |Z| ~ d/2 is handled as the impact candidate below
    }

    std::vector<double> zbrk = brk;
    zbrk.insert(zbrk.end(), vroots.begin(), vroots.end());
    std::sort(zbrk.begin(), zbrk.end());
    for (double target : {+half, -half}) {
        auto g = [&](double t) { return z(t) - target; };
        auto dg = [&](double t) { return v(t); };
        double ga = z(t0) - target;
        // A segment starting exactly on a wall leaves it with the interior
        // velocity; the sign of the departure is the sign of Zdot there.
        if (std::abs(ga) <= 1e-13) ga = (s.Zdot != 0.0 ? s.Zdot : (target > 0 ? -1.0 : 1.0)) * 1e-300;
        double aa = t0;
        for (double b : zbrk) {
            const double gb = g(b);
            if ((ga < 0) != (gb < 0) && gb != 0.0) {
                const double rt = refine_root(g, dg, aa, b, ga, gb);
                if (rt > guard) {
                    cands.push_back({rt, true, target});
                    break; // earliest root for this target
                }
            } else if (gb == 0.0 && b > guard) {
                cands.push_back({b, true, target});
                break;
            }
            aa = b;
            ga = gb;
        }
    }

    if (cands.empty()) return std::nullopt;
    auto best = std::min_element(cands.begin(), cands.end(), [](const RawEvent& x, const RawEvent& y) {
        return x.t < y.t;
    });
    // Simultaneous Sigma hit and impact: the impact wins.
    RawEvent chosen = *best;
    for (const auto& c : cands)
        if (c.impact && c.t <= best->t + 1e-12) { chosen = c; break; }
    return chosen;
}

} // namespace detail

enum class SigmaClass { Cross, Slide, Graze };

/// Classifies a Sigma hit arriving from `from` at time t: the hit is a
/// crossing when the receiving-side field carries the flow through, sliding
/// when the fields converge, and a graze at exact tangency of the incoming
/// field (the flow then stays on the incoming side).
inline SigmaClass classify_sigma_hit(double t, Region from, const NondimParams& p) {
    const double ft = forcing_f(t, p.phi);
    const double tang_tol = 1e-10;
    const bool degenerate_band = (p.L_plus - p.L_minus) <= 2.0 * tang_tol; // mu_k ~ 0
    if (from == Region::SigmaMinus) {
        if (std::abs(ft - p.L_minus) <= tang_tol) return SigmaClass::Graze;
        if (std::abs(ft - p.L_plus) <= tang_tol) {
            // boundary of the sliding band: slide if f is entering the band
            return (std::sin(kPi * t + p.phi) > 0.0 && !degenerate_band) ? SigmaClass::Slide
                                                                         : SigmaClass::Cross;
        }
        if (ft > p.L_plus) return SigmaClass::Cross;
        if (ft > p.L_minus) return SigmaClass::Slide;
        return SigmaClass::Graze; // f < L-: unreachable from Sigma- except by tangency
    }
    if (std::abs(ft - p.L_plus) <= tang_tol) return SigmaClass::Graze;
    if (std::abs(ft - p.L_minus) <= tang_tol)
        return (std::sin(kPi * t + p.phi) < 0.0 && !degenerate_band) ? SigmaClass::Slide
                                                                     : SigmaClass::Cross;
    if (ft < p.L_minus) return SigmaClass::Cross;
    if (ft < p.L_plus) return SigmaClass::Slide;
    return SigmaClass::Graze;
}

/// Sliding exit: smallest t > t_onset with mod(pi t + phi, 2pi) = acos(L-)
/// and sin(pi t + phi) > 0 when exiting into Sigma-, or the mirror condition
/// (2pi - acos(L+), sin < 0) when exiting into Sigma+. Which one applies is
/// decided by which boundary of the sliding band the forcing reaches first.
inline std::pair<Event, RelState> slide_until_exit(const RelState& s, const NondimParams& p) {
    const double ph = std::fmod(std::fmod(kPi * s.t + p.phi, 2.0 * kPi) + 2.0 * kPi, 2.0 * kPi);
    const double exit_minus = std::acos(p.L_minus);          // f decreasing branch
    const double exit_plus = 2.0 * kPi - std::acos(p.L_plus); // f increasing branch
    double dph_minus = exit_minus - ph;
    if (dph_minus <= 1e-13) dph_minus += 2.0 * kPi;
    double dph_plus = exit_plus - ph;
    if (dph_plus <= 1e-13) dph_plus += 2.0 * kPi;
    const bool to_minus = dph_minus <= dph_plus;
    const double t_exit = s.t + (to_minus ? dph_minus : dph_plus) / kPi;
    Event ev{EventKind::SlideEnd, t_exit, s.Z, 0.0, 0.0};
    RelState out{t_exit, s.Z, 0.0, to_minus ? Region::SigmaMinus : Region::SigmaPlus};
    return {ev, out};
}

enum class SimStatus { Completed, ChatterCap, SideStick };

struct Sample {
    double t;
    double Z;
    double Zdot;
    Region region;
};

struct SimResult {
    std::vector<Event> events;
    std::vector<Sample> samples;
    RelState final_state;
    SimStatus status = SimStatus::Completed;
    std::string diagnostic;
};

struct SimOptions {
    int max_events_per_period = 64; ///< chatter guard
    int samples_per_period = 0;     ///< 0 disables trajectory sampling
};

/// Runs the event-driven simulation from `init` until `horizon`. The event
/// log is time ordered; every Sigma hit is classified and every impact
/// applies the restitution law. Aborts with a diagnostic if the event count
/// exceeds the chatter cap.
inline SimResult simulate(const NondimParams& p, RelState init, double horizon,
                          const SimOptions& opt = {}) {
    SimResult res;
    RelState s = init;
    if (std::abs(s.Z) > 0.5 * p.d + 1e-12)
        throw std::invalid_argument("simulate: initial state outside the capsule");
    if (s.region != Region::Sliding) s.region = s.Zdot >= 0.0 ? Region::SigmaPlus : Region::SigmaMinus;

    const double t_end = init.t + horizon;
    const std::size_t max_events =
        static_cast<std::size_t>(opt.max_events_per_period * std::max(1.0, horizon / kPeriod)) + 16;

    double next_sample = init.t;
    const double sample_dt = opt.samples_per_period > 0 ? kPeriod / opt.samples_per_period : 0.0;
    auto emit_samples_until = [&](double t_stop, const RelState& seg_start, Region lam) {
        if (sample_dt <= 0.0) return;
        while (next_sample <= t_stop + 1e-15) {
            RelState q = propagate_segment(seg_start, lam, next_sample - seg_start.t, p);
            res.samples.push_back({q.t, q.Z, q.Zdot, lam});
            next_sample += sample_dt;
        }
    };

    while (s.t < t_end) {
        if (res.events.size() > max_events) {
            res.status = SimStatus::ChatterCap;
            res.diagnostic = "event cap exceeded at t = " + std::to_string(s.t) +
                             " (impact accumulation / chatter)";
            break;
        }
        if (s.region == Region::Sliding) {
            auto [ev, out] = slide_until_exit(s, p);
            if (ev.t >= t_end) {
                if (sample_dt > 0.0)
                    while (next_sample <= t_end + 1e-15) {
                        res.samples.push_back({next_sample, s.Z, 0.0, Region::Sliding});
                        next_sample += sample_dt;
                    }
                s.t = t_end;
                break;
            }
            if (sample_dt > 0.0)
                while (next_sample <= ev.t + 1e-15) {
                    res.samples.push_back({next_sample, s.Z, 0.0, Region::Sliding});
                    next_sample += sample_dt;
                }
            res.events.push_back(ev);
            s = out;
            continue;
        }

        auto raw = detail::locate_event(s, s.region, t_end, p);
        if (!raw) {
            emit_samples_until(t_end, s, s.region);
            s = propagate_segment(s, s.region, t_end - s.t, p);
            break;
        }
        emit_samples_until(raw->t, s, s.region);
        RelState hit = propagate_segment(s, s.region, raw->t - s.t, p);
        hit.t = raw->t;

        if (raw->impact) {
            const bool bottom = raw->Z > 0.0;
            const double v_pre = hit.Zdot;
            const double v_post = apply_impact(v_pre, p.r);
            EventKind kind = std::abs(v_pre) <= 1e-10 ? EventKind::GrazeGamma
                             : bottom ? EventKind::ImpactBottom
                                      : EventKind::ImpactTop;
            res.events.push_back({kind, hit.t, raw->Z, v_pre, v_post});
            s = RelState{hit.t, raw->Z, v_post,
                         v_post > 0.0 ? Region::SigmaPlus : Region::SigmaMinus};
            if (v_post == 0.0) {
                // zero-velocity contact: side-stick is out of scope; continue
                // into the interior if the field allows, otherwise stop
                const double field = forcing_f(hit.t, p.phi) - p.L(bottom ? -1 : +1);
                const bool inward = bottom ? field < 0.0 : field > 0.0;
                if (!inward) {
                    res.status = SimStatus::SideStick;
                    res.diagnostic = "side-stick contact at t = " + std::to_string(hit.t);
                    break;
                }
                s.region = bottom ? Region::SigmaMinus : Region::SigmaPlus;
            }
        } else {
            const SigmaClass cls = classify_sigma_hit(hit.t, s.region, p);
            if (cls == SigmaClass::Cross) {
                const bool up = s.region == Region::SigmaMinus;
                res.events.push_back({up ? EventKind::CrossUp : EventKind::CrossDown, hit.t, raw->Z});
                s = RelState{hit.t, raw->Z, 0.0, up ? Region::SigmaPlus : Region::SigmaMinus};
            } else if (cls == SigmaClass::Slide) {
                res.events.push_back({EventKind::SlideStart, hit.t, raw->Z});
                s = RelState{hit.t, raw->Z, 0.0, Region::Sliding};
            } else {
                res.events.push_back({EventKind::GrazeSigma, hit.t, raw->Z});
                s = RelState{hit.t, raw->Z, 0.0, s.region};
            }
        }
    }
    res.final_state = s;
    return res;
}

/// One steady-state impact record: time folded into [0, 2p), signed impact
/// velocity and which end was hit.
struct ImpactRecord {
    double t;        ///< absolute event time
    double t_mod;    ///< t mod (fold_period)
    double v;        ///< pre-impact velocity
    bool bottom;     ///< true: Gamma+ (Z = +d/2)
};

struct SteadyStateResult {
    std::vector<ImpactRecord> impacts;
    std::vector<Event> events; ///< all events in the recording window
    SimStatus status = SimStatus::Completed;
    RelState final_state;
};

/// Discards `transient_periods` forcing periods, then records all impacts
/// over `record_periods`. `init` may come from a previous parameter point to
/// continue attractors across a sweep.
inline SteadyStateResult steady_state_impacts(const NondimParams& p, RelState init,
                                              int transient_periods, int record_periods,
                                              const SimOptions& opt = {}) {
    SimResult warm = simulate(p, init, transient_periods * kPeriod, opt);
    SteadyStateResult out;
    out.status = warm.status;
    if (warm.status != SimStatus::Completed) {
        out.final_state = warm.final_state;
        return out;
    }
    SimResult rec = simulate(p, warm.final_state, record_periods * kPeriod, opt);
    out.status = rec.status;
    out.events = rec.events;
    out.final_state = rec.final_state;
    for (const Event& e : rec.events) {
        if (!is_impact(e.kind)) continue;
        const double tm = std::fmod(std::fmod(e.t, kPeriod) + kPeriod, kPeriod);
        out.impacts.push_back({e.t, tm, e.v_pre, e.Z > 0.0});
    }
    return out;
}

} // namespace vieh
