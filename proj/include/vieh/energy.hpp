#pragma once

// Voltage per impact from the dielectric-membrane deformation chain and the
// averaged energy metrics over a recording window.
//
// Chain per impact: dimensional impact speed V_k -> maximal membrane
// deflection delta_k (energy balance against the power-law elastic force
// K delta^nu) -> bullet/membrane contact angle alpha_k (tangent-cone
// geometry) -> deformed membrane area A_k (spherical cap + cone frustum)
// -> output voltage U_imp = (A_k / (pi R_c^2))^2 U_in.

#include "vieh/flow.hpp"
#include "vieh/model.hpp"

#include <cmath>
#include <optional>
#include <vector>

namespace vieh {

/// Membrane/electronics constants. Radii in millimetres, K in SI units for
/// a deflection in metres, voltage in millivolts.
struct EnergyParams {
    double U_in = 2000.0;   ///< input voltage [mV]
    double R_c = 6.3;       ///< undeformed membrane radius [mm]
    double R_b = 5.0;       ///< bullet radius [mm]
    double K = 4.0847e5;    ///< elastic parameter of the membrane force K*delta^nu
    double nu = 2.6;        ///< elastic exponent
    double m = 0.0035;      ///< bullet mass [kg]

    void validate() const {
        if (!(U_in > 0 && R_c > 0 && R_b > 0 && K > 0 && nu > 0 && m > 0))
            throw std::invalid_argument("EnergyParams: all parameters must be positive");
        if (!(R_b < R_c))
            throw std::invalid_argument("EnergyParams: bullet radius must be below the membrane radius");
    }
};

/// Dimensional relative impact speed from the dimensionless one. The scaling
/// x = (A pi^2 / (M w^2)) x*, tau = (pi/w) t gives dx/dtau = (A pi/(M w)) Zdot.
inline double dimensional_velocity(double Zdot, const PhysicalParams& phys) {
    return phys.A * kPi / (phys.M * phys.omega) * std::abs(Zdot);
}

/// Maximal membrane deflection [mm]: kinetic energy m V^2/2 stored in the
/// elastic membrane with force K delta^nu, so delta = ((nu+1) m V^2 /
/// (2K))^(1/(nu+1)) in metres, then converted to millimetres.
inline double membrane_deflection_mm(double V, const EnergyParams& ep) {
    const double delta_m = std::pow((ep.nu + 1.0) * ep.m * V * V / (2.0 * ep.K), 1.0 / (ep.nu + 1.0));
    return 1e3 * delta_m;
}

/// Contact angle of the deformed membrane against the bullet tip: the cone
/// from the contact circle to the membrane rim is tangent to the spherical
/// tip, which pins cos(alpha) as the positive root of
///   cos^2 a [(d-Rb)^2 + Rc^2] + 2 Rb (d-Rb) cos a + Rb^2 - Rc^2 = 0.
/// Clamped to [-1, 1] as a guard for extreme deflections.
inline double contact_cos_alpha(double delta_mm, const EnergyParams& ep) {
    const double u = delta_mm - ep.R_b;
    const double q = u * u + ep.R_c * ep.R_c;
    const double disc = ep.R_c * ep.R_c * (q - ep.R_b * ep.R_b);
    const double root = disc > 0.0 ? std::sqrt(disc) : 0.0;
    const double c = (-ep.R_b * u + root) / q;
    return std::clamp(c, -1.0, 1.0);
}

/// Deformed membrane area [mm^2]: spherical cap wrapped on the bullet plus
/// the cone frustum out to the rim.
inline double deformed_area(double cos_alpha, const EnergyParams& ep) {
    const double sin2 = std::max(0.0, 1.0 - cos_alpha * cos_alpha);
    const double cap = 2.0 * kPi * ep.R_b * ep.R_b * (1.0 - cos_alpha);
    const double denom = std::max(cos_alpha, 1e-6);
    const double frustum = kPi * (ep.R_c * ep.R_c - ep.R_b * ep.R_b * sin2) / denom;
    return cap + frustum;
}

/// Net output voltage [mV] of one impact with dimensionless velocity Zdot_k:
/// U_k = U_imp - U_in with U_imp = (A_k / (pi R_c^2))^2 U_in.
inline double impact_voltage(double Zdot_k, const PhysicalParams& phys, const EnergyParams& ep) {
    const double V = dimensional_velocity(Zdot_k, phys);
    const double delta = membrane_deflection_mm(V, ep);
    const double c = contact_cos_alpha(delta, ep);
    const double area = deformed_area(c, ep);
    const double ratio = area / (kPi * ep.R_c * ep.R_c);
    return (ratio * ratio - 1.0) * ep.U_in;
}

struct EnergyMetrics {
    std::vector<std::pair<double, double>> per_impact; ///< (t_k, U_k)
    std::optional<double> U_bar_I;                     ///< average per impact [mV]
    double U_bar_T = 0.0;                              ///< average per unit time [mV]
    int impact_count = 0;
};

/// Averages the per-impact voltages over the window [t0, tf]. With no
/// impacts the per-impact average is undefined (left empty) and the
/// per-time average is zero.
inline EnergyMetrics average_metrics(const std::vector<std::pair<double, double>>& impacts,
                                     double t0, double tf) {
    EnergyMetrics em;
    if (!(tf > t0)) throw std::invalid_argument("average_metrics: empty window");
    double sum = 0.0;
    for (const auto& [t, U] : impacts) {
        if (t < t0 || t > tf) continue;
        em.per_impact.emplace_back(t, U);
        sum += U;
        ++em.impact_count;
    }
    if (em.impact_count > 0) em.U_bar_I = sum / em.impact_count;
    em.U_bar_T = sum / (tf - t0);
    return em;
}

/// Convenience: voltages of all impacts in a steady-state record.
inline std::vector<std::pair<double, double>> impact_voltages(const std::vector<ImpactRecord>& impacts,
                                                              const PhysicalParams& phys,
                                                              const EnergyParams& ep) {
    std::vector<std::pair<double, double>> out;
    out.reserve(impacts.size());
    for (const auto& im : impacts) out.emplace_back(im.t, impact_voltage(im.v, phys, ep));
    return out;
}

} // namespace vieh
