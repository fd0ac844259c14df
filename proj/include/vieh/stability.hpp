#pragma once

// Linear stability of periodic orbits through composed 2x2 Jacobians of the
// event maps. Each leg's Jacobian is the exact closed-form sensitivity of
// its surface coordinates: (t, Zdot) on Gamma+- and (t, Z) on Sigma. The
// monodromy is the ordered product over one full period.

#include "vieh/orbit.hpp"

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>

namespace vieh {

struct SingularDenominator : std::runtime_error {
    explicit SingularDenominator(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

inline void check_denominator(double den, const char* what) {
    if (std::abs(den) < 1e-12)
        throw SingularDenominator(std::string(what) + " vanishes (grazing orbit)");
}

} // namespace detail

/// Jacobian of one leg, evaluated at the solved endpoint data.
///   Gamma -> Gamma : d(t1, v1)/d(t0, v0)   (v pre-impact on both ends)
///   Gamma -> Sigma : d(t1, Z1)/d(t0, v0)
///   Sigma -> Sigma : d(t1, Z1)/d(t0, Z0)   (slides: [[0,0],[0,1]])
///   Sigma -> Gamma : d(t1, v1)/d(t0, Z0)
inline Eigen::Matrix2d jacobian_leg(Leg leg, double t0, double v_in, double t1, double v_out,
                                    const NondimParams& p, double phi) {
    const LegTraits tr = leg_traits(leg);
    Eigen::Matrix2d J;
    if (tr.sliding) {
        // exit time pinned by the phase condition: no sensitivity to the
        // incoming time, Z carried through unchanged
        J << 0.0, 0.0, 0.0, 1.0;
        return J;
    }
    const double L = p.L(tr.region_sign);
    const double dt = t1 - t0;
    const double f0 = forcing_f(t0, phi);
    const double f1 = forcing_f(t1, phi);
    const bool from_gamma = tr.source != Surface::Sigma;
    const bool to_gamma = tr.target != Surface::Sigma;
    const double r = p.r;

    if (from_gamma && to_gamma) {
        const double D = v_out; // velocity at the arrival impact
        detail::check_denominator(D, "arrival velocity");
        const double dt1_dt0 = -(r * v_in - f0 * dt + L * dt) / D;
        const double dt1_dv = r * dt / D;
        J(0, 0) = dt1_dt0;
        J(0, 1) = dt1_dv;
        J(1, 0) = dt1_dt0 * (f1 - L) - (f0 - L);
        J(1, 1) = -r + dt1_dv * (f1 - L);
        return J;
    }
    if (from_gamma && !to_gamma) {
        const double D = f1 - L; // Zddot at the Sigma arrival
        detail::check_denominator(D, "f - L at the Sigma arrival");
        const double dt1_dt0 = (f0 - L) / D;
        const double dt1_dv = r / D;
        J(0, 0) = dt1_dt0;
        J(0, 1) = dt1_dv;
        // dZ1/d. : the implicit term vanishes because Zdot(t1) = 0
        J(1, 0) = forcing_F1(t1, phi) - forcing_F1(t0, phi) - f0 * dt;
        J(1, 1) = -r * dt;
        return J;
    }
    if (!from_gamma && !to_gamma) {
        const double D = f1 - L;
        detail::check_denominator(D, "f - L at the Sigma return");
        J(0, 0) = (f0 - L) / D;
        J(0, 1) = 0.0;
        J(1, 0) = forcing_F1(t1, phi) - forcing_F1(t0, phi) - f0 * dt;
        J(1, 1) = 1.0;
        return J;
    }
    // Sigma -> Gamma
    const double D = v_out;
    detail::check_denominator(D, "arrival velocity");
    const double dt1_dt0 = (f0 - L) * dt / D;
    const double dt1_dZ0 = -1.0 / D;
    J(0, 0) = dt1_dt0;
    J(0, 1) = dt1_dZ0;
    J(1, 0) = dt1_dt0 * (f1 - L) - (f0 - L);
    J(1, 1) = dt1_dZ0 * (f1 - L);
    return J;
}

struct Monodromy {
    Eigen::Matrix2d entries = Eigen::Matrix2d::Identity();
    std::vector<Eigen::Matrix2d> legs; ///< per-leg Jacobians, itinerary order
    bool near_grazing = false;         ///< some internal event velocity < 1e-6

    /// Associativity audit: left-to-right vs right-to-left accumulation.
    double association_error() const {
        Eigen::Matrix2d l = Eigen::Matrix2d::Identity();
        Eigen::Matrix2d r = Eigen::Matrix2d::Identity();
        for (std::size_t j = 0; j < legs.size(); ++j) {
            l = legs[j] * l;                      // ((J2 J1) J0) style
            r = r * legs[legs.size() - 1 - j];    // (J2 (J1 J0)) style
        }
        return (l - r).cwiseAbs().maxCoeff();
    }
};

/// Ordered product of the per-leg Jacobians over the orbit's full period
/// (the downward-leg factor multiplies last, P = P_{G-G+} o P_{G+...G-}).
inline Monodromy monodromy(const OrbitSolution& sol, const NondimParams& p) {
    Monodromy m;
    double t0 = 0.0;
    double v_in = sol.Zdot_init;
    for (std::size_t j = 0; j < sol.itinerary.legs.size(); ++j) {
        const Leg leg = sol.itinerary.legs[j];
        const EventPoint& end = sol.points[j];
        Eigen::Matrix2d J = jacobian_leg(leg, t0, v_in, end.t, end.v, p, sol.phi);
        m.legs.push_back(J);
        m.entries = J * m.entries;
        const LegTraits tr = leg_traits(leg);
        if ((tr.target == Surface::GammaPlus || tr.target == Surface::GammaMinus) &&
            std::abs(end.v) < 1e-6)
            m.near_grazing = true;
        t0 = end.t;
        v_in = end.v;
    }
    return m;
}

enum class StabilityClass { Stable, UnstablePD, UnstableFold, UnstableComplex, Marginal };

inline const char* stability_class_name(StabilityClass c) {
    switch (c) {
        case StabilityClass::Stable: return "stable";
        case StabilityClass::UnstablePD: return "unstable_pd";
        case StabilityClass::UnstableFold: return "unstable_fold";
        case StabilityClass::UnstableComplex: return "unstable_complex";
        case StabilityClass::Marginal: return "marginal";
    }
    return "?";
}

struct StabilityReport {
    std::complex<double> eig1, eig2;
    StabilityClass classification = StabilityClass::Stable;
    double margin = 0.0; ///< max |eig| - 1
    bool near_grazing = false;

    double max_abs_eig() const { return std::max(std::abs(eig1), std::abs(eig2)); }
    double min_real_eig() const {
        double m = std::numeric_limits<double>::infinity();
        for (const auto& e : {eig1, eig2})
            if (std::abs(e.imag()) < 1e-12) m = std::min(m, e.real());
        return m;
    }
};

/// Eigenvalues of the 2x2 monodromy and their stability classification.
inline StabilityReport classify(const Monodromy& m, double tol = 1e-8) {
    StabilityReport rep;
    rep.near_grazing = m.near_grazing;
    const double tr = m.entries.trace();
    const double det = m.entries.determinant();
    const double disc = tr * tr - 4.0 * det;
    if (disc >= 0.0) {
        const double s = std::sqrt(disc);
        rep.eig1 = 0.5 * (tr + s);
        rep.eig2 = 0.5 * (tr - s);
    } else {
        const double s = std::sqrt(-disc);
        rep.eig1 = {0.5 * tr, 0.5 * s};
        rep.eig2 = {0.5 * tr, -0.5 * s};
    }
    const double amax = rep.max_abs_eig();
    rep.margin = amax - 1.0;
    if (std::abs(amax - 1.0) <= tol) {
        rep.classification = StabilityClass::Marginal;
    } else if (amax < 1.0) {
        rep.classification = StabilityClass::Stable;
    } else if (disc < 0.0) {
        rep.classification = StabilityClass::UnstableComplex;
    } else {
        const double dominant = std::abs(rep.eig1.real()) >= std::abs(rep.eig2.real())
                                    ? rep.eig1.real()
                                    : rep.eig2.real();
        rep.classification = dominant < 0.0 ? StabilityClass::UnstablePD : StabilityClass::UnstableFold;
    }
    return rep;
}

inline StabilityReport stability_of(const OrbitSolution& sol, const NondimParams& p,
                                    double tol = 1e-8) {
    return classify(monodromy(sol, p), tol);
}

} // namespace vieh
