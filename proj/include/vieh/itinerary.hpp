#pragma once

// Symbolic itineraries over the map alphabet between the impact surfaces
// Gamma+- and the switching manifold Sigma. An itinerary fixes the leg
// sequence of a periodic orbit; the solver turns it into a reduced system.

#include <stdexcept>
#include <string>
#include <vector>

namespace vieh {

enum class Surface { GammaPlus, GammaMinus, Sigma };

enum class Leg {
    GammaPlusToGammaMinus, ///< P_{G+G-}, flow in Sigma-
    GammaMinusToGammaPlus, ///< P_{G-G+}, flow in Sigma+
    GammaPlusToSigma,      ///< P_{G+S}, flow in Sigma-
    GammaMinusToSigma,     ///< P_{G-S}, flow in Sigma+
    SigmaToGammaPlus,      ///< P_{SG+}, flow in Sigma+
    SigmaToGammaMinus,     ///< P_{SG-}, flow in Sigma-
    SigmaLoopPlus,         ///< P^+_{SS}, crossing excursion through Sigma+
    SigmaLoopMinus,        ///< P^-_{SS}, crossing excursion through Sigma-
    SigmaSlide,            ///< P^s_{SS}, sliding along Sigma
};

struct LegTraits {
    Surface source;
    Surface target;
    int region_sign;  ///< +1 flow in Sigma+, -1 in Sigma-, 0 sliding
    bool sliding;     ///< S(j) == 0 in the map formulation
};

inline LegTraits leg_traits(Leg l) {
    switch (l) {
        case Leg::GammaPlusToGammaMinus: return {Surface::GammaPlus, Surface::GammaMinus, -1, false};
        case Leg::GammaMinusToGammaPlus: return {Surface::GammaMinus, Surface::GammaPlus, +1, false};
        case Leg::GammaPlusToSigma: return {Surface::GammaPlus, Surface::Sigma, -1, false};
        case Leg::GammaMinusToSigma: return {Surface::GammaMinus, Surface::Sigma, +1, false};
        case Leg::SigmaToGammaPlus: return {Surface::Sigma, Surface::GammaPlus, +1, false};
        case Leg::SigmaToGammaMinus: return {Surface::Sigma, Surface::GammaMinus, -1, false};
        case Leg::SigmaLoopPlus: return {Surface::Sigma, Surface::Sigma, +1, false};
        case Leg::SigmaLoopMinus: return {Surface::Sigma, Surface::Sigma, -1, false};
        case Leg::SigmaSlide: return {Surface::Sigma, Surface::Sigma, 0, true};
    }
    throw std::logic_error("leg_traits: bad leg");
}

inline const char* leg_name(Leg l) {
    switch (l) {
        case Leg::GammaPlusToGammaMinus: return "P_G+G-";
        case Leg::GammaMinusToGammaPlus: return "P_G-G+";
        case Leg::GammaPlusToSigma: return "P_G+S";
        case Leg::GammaMinusToSigma: return "P_G-S";
        case Leg::SigmaToGammaPlus: return "P_SG+";
        case Leg::SigmaToGammaMinus: return "P_SG-";
        case Leg::SigmaLoopPlus: return "P+_SS";
        case Leg::SigmaLoopMinus: return "P-_SS";
        case Leg::SigmaSlide: return "Ps_SS";
    }
    return "?";
}

struct Itinerary {
    std::vector<Leg> legs;
    int period_multiple = 1; ///< p in n:m/pT
    std::string label;

    std::size_t size() const { return legs.size(); }

    /// Legs must chain target -> source and the itinerary must return to
    /// Gamma+ where it started. A sliding leg cannot directly follow an
    /// impact (no side-stick).
    void validate() const {
        if (legs.empty()) throw std::invalid_argument("Itinerary: empty");
        if (leg_traits(legs.front()).source != Surface::GammaPlus)
            throw std::invalid_argument("Itinerary: must start on Gamma+");
        for (std::size_t i = 0; i + 1 < legs.size(); ++i)
            if (leg_traits(legs[i]).target != leg_traits(legs[i + 1]).source)
                throw std::invalid_argument("Itinerary: legs do not compose at index " + std::to_string(i));
        if (leg_traits(legs.back()).target != Surface::GammaPlus)
            throw std::invalid_argument("Itinerary: must return to Gamma+");
        // No side-stick: a sliding leg needs a Sigma arrival, which the
        // composition check above already enforces (slides source on Sigma,
        // and legs departing an impact start on Gamma+-).
    }
};

namespace itineraries {

inline Itinerary one_one() {
    return {{Leg::GammaPlusToGammaMinus, Leg::GammaMinusToGammaPlus}, 1, "1:1"};
}

inline Itinerary one_one_s() {
    return {{Leg::GammaPlusToSigma, Leg::SigmaSlide, Leg::SigmaToGammaMinus, Leg::GammaMinusToGammaPlus},
            1, "1:1s"};
}

inline Itinerary one_one_c() {
    return {{Leg::GammaPlusToSigma, Leg::SigmaLoopPlus, Leg::SigmaToGammaMinus, Leg::GammaMinusToGammaPlus},
            1, "1:1c"};
}

inline Itinerary one_one_cs() {
    return {{Leg::GammaPlusToSigma, Leg::SigmaLoopPlus, Leg::SigmaSlide, Leg::SigmaToGammaMinus,
             Leg::GammaMinusToGammaPlus},
            1, "1:1cs"};
}

/// Concatenates two single-period itineraries into a 2T composite.
inline Itinerary two_period(const Itinerary& first, const Itinerary& second) {
    Itinerary out;
    out.legs = first.legs;
    out.legs.insert(out.legs.end(), second.legs.begin(), second.legs.end());
    out.period_multiple = 2;
    out.label = (first.label == second.label) ? first.label + "/2T"
                                              : first.label + "-" + second.label + "/2T";
    out.validate();
    return out;
}

inline Itinerary one_one_2T() { return two_period(one_one(), one_one()); }
inline Itinerary one_one__one_one_s_2T() { return two_period(one_one(), one_one_s()); }
inline Itinerary one_one__one_one_cs_2T() { return two_period(one_one(), one_one_cs()); }
inline Itinerary one_one_c_2T() { return two_period(one_one_c(), one_one_c()); }

/// Looks an itinerary up by its label ("1:1", "1:1s", "1:1c", "1:1cs",
/// "1:1/2T", "1:1-1:1s/2T", "1:1-1:1cs/2T", "1:1c/2T").
inline Itinerary by_label(const std::string& label) {
    for (auto make : {one_one, one_one_s, one_one_c, one_one_cs, one_one_2T,
                      one_one__one_one_s_2T, one_one__one_one_cs_2T, one_one_c_2T}) {
        Itinerary it = make();
        if (it.label == label) return it;
    }
    throw std::invalid_argument("unknown itinerary label: " + label);
}

} // namespace itineraries

} // namespace vieh
