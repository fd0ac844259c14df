#pragma once

// Physical and dimensionless parameters of the inclined capsule-bullet
// harvester, the harmonic forcing and its antiderivatives, and the
// nondimensionalization map between them.

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace vieh {

inline constexpr double kPi = std::numbers::pi;

/// Dimensionless forcing period. Fixed by the time scaling tau = (pi/omega) t.
inline constexpr double kPeriod = 2.0;

/// Dimensional parameters of the device. Angles in radians, SI units.
struct PhysicalParams {
    double m = 0.0035;        ///< bullet mass [kg]
    double M = 0.1245;        ///< capsule mass [kg]
    double s = 0.5;           ///< capsule length [m]
    double omega = 5.0 * kPi; ///< forcing angular frequency [rad/s]
    double A = 5.0;           ///< forcing amplitude [N]
    double beta = kPi / 4.0;  ///< inclination angle [rad]
    double mu_k = 0.5;        ///< kinetic friction coefficient
    double r = 0.5;           ///< restitution coefficient
    double g = 9.8;           ///< gravity [m/s^2]
    double phi = 0.0;         ///< forcing phase [rad]

    double mass_ratio() const { return m / M; }

    void validate() const {
        if (!(r > 0.0 && r < 1.0)) throw std::invalid_argument("PhysicalParams: r must lie in (0,1)");
        if (!(mu_k >= 0.0)) throw std::invalid_argument("PhysicalParams: mu_k must be >= 0");
        if (!(beta >= 0.0 && beta < kPi / 2.0)) throw std::invalid_argument("PhysicalParams: beta must lie in [0, pi/2)");
        if (!(A > 0.0)) throw std::invalid_argument("PhysicalParams: A must be > 0");
        if (!(M > 0.0)) throw std::invalid_argument("PhysicalParams: M must be > 0");
        if (!(omega > 0.0)) throw std::invalid_argument("PhysicalParams: omega must be > 0");
        if (!(s > 0.0)) throw std::invalid_argument("PhysicalParams: s must be > 0");
    }
};

/// The dimensionless system every computation runs on: gap width d, the
/// constant net forces L+- acting while Zdot >< 0, restitution and phase.
struct NondimParams {
    double d = 0.3;        ///< dimensionless capsule length M w^2 s / (A pi^2)
    double g1bar = 0.0;    ///< M g sin(beta) / A
    double g2bar = 0.0;    ///< M mu_k g cos(beta) / A
    double L_plus = 0.0;   ///< -(g1bar - g2bar), net force in Sigma+
    double L_minus = 0.0;  ///< -(g1bar + g2bar), net force in Sigma-
    double r = 0.5;        ///< restitution coefficient
    double phi = 0.0;      ///< forcing phase [rad]

    double L(int region_sign) const { return region_sign > 0 ? L_plus : L_minus; }

    /// Maximal admissible sliding duration (arccos(L-) - arccos(L+)) / pi.
    double max_sliding_duration() const {
        return (std::acos(L_minus) - std::acos(L_plus)) / kPi;
    }

    void validate() const {
        if (!(d > 0.0)) throw std::invalid_argument("NondimParams: d must be > 0");
        if (!(r > 0.0 && r < 1.0)) throw std::invalid_argument("NondimParams: r must lie in (0,1)");
        if (!(L_plus > -1.0 && L_plus < 1.0) || !(L_minus > -1.0 && L_minus < 1.0))
            throw std::invalid_argument("NondimParams: L+- outside (-1,1); system is outside the analyzed regime");
        if (!(L_minus <= L_plus)) throw std::invalid_argument("NondimParams: L- must not exceed L+");
        if (!(L_minus < 0.0)) throw std::invalid_argument("NondimParams: L- must be negative");
    }
};

/// Values of the forcing and its first two antiderivatives at time t:
/// f = cos(pi t + phi), F1 = sin(pi t + phi)/pi, F2 = -cos(pi t + phi)/pi^2.
struct ForcingEval {
    double f;
    double F1;
    double F2;
};

inline double forcing_f(double t, double phi) { return std::cos(kPi * t + phi); }
inline double forcing_F1(double t, double phi) { return std::sin(kPi * t + phi) / kPi; }
inline double forcing_F2(double t, double phi) { return -std::cos(kPi * t + phi) / (kPi * kPi); }

inline ForcingEval forcing_eval(double t, double phi) {
    return ForcingEval{forcing_f(t, phi), forcing_F1(t, phi), forcing_F2(t, phi)};
}

/// Maps dimensional device parameters onto the dimensionless system.
/// Throws if the resulting L+- leave (-1,1).
inline NondimParams nondimensionalize(const PhysicalParams& p) {
    p.validate();
    NondimParams n;
    n.d = p.M * p.omega * p.omega * p.s / (p.A * kPi * kPi);
    n.g1bar = p.M * p.g * std::sin(p.beta) / p.A;
    n.g2bar = p.M * p.mu_k * p.g * std::cos(p.beta) / p.A;
    n.L_plus = -(n.g1bar - n.g2bar);
    n.L_minus = -(n.g1bar + n.g2bar);
    n.r = p.r;
    n.phi = p.phi;
    n.validate();
    return n;
}

/// How a family of parameter points is generated when sweeping d.
enum class SweepAxis {
    Amplitude, ///< vary A at fixed s (L+- scale with 1/A, i.e. with d)
    Length,    ///< vary s at fixed A (L+- stay constant)
};

/// A physical base point plus the axis along which d is swept.
struct ParamSet {
    PhysicalParams base;
    SweepAxis axis = SweepAxis::Amplitude;

    /// Physical parameters realizing a given dimensionless d.
    PhysicalParams physical_at(double d) const {
        PhysicalParams p = base;
        if (axis == SweepAxis::Amplitude)
            p.A = p.M * p.omega * p.omega * p.s / (d * kPi * kPi);
        else
            p.s = d * p.A * kPi * kPi / (p.M * p.omega * p.omega);
        return p;
    }

    NondimParams at(double d) const { return nondimensionalize(physical_at(d)); }
};

} // namespace vieh
