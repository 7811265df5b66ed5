#pragma once
#include <cmath>

#include "trwf/errors.hpp"
#include "trwf/grids.hpp"

namespace trwf {

// arcsech(1/2) = ln(2 + sqrt(3)); fixes the sech width so the envelope drops
// to half its peak at |t| = fwhm/2.
inline constexpr double kArcsechHalf = 1.3169578969248167086;

// Intense few-cycle driving envelope E(t) = E0 sech(Gamma t) together with the
// conformal time map it generates. r_eff carries the overall interaction
// strength; E0 (amplitude_scale) only scales envelope() and cancels from every
// normalized quadrature downstream.
struct DrivingPulse {
    double fwhm_fs = 16.0;
    double r_eff = 5.0;
    double amplitude_scale = 1.0;

    DrivingPulse() = default;
    DrivingPulse(double fwhm, double reff, double scale = 1.0)
        : fwhm_fs(fwhm), r_eff(reff), amplitude_scale(scale) {
        if (!(fwhm_fs > 0.0)) throw ConfigInvalid("pulse.fwhm_fs must be > 0");
        if (r_eff < 0.0) throw ConfigInvalid("pulse.r_eff must be >= 0");
        if (!(amplitude_scale > 0.0)) throw ConfigInvalid("pulse.amplitude_scale must be > 0");
    }

    double gamma() const { return 2.0 * kArcsechHalf / fwhm_fs; }

    double envelope(double t) const {
        return amplitude_scale / std::cosh(gamma() * t);
    }

    // tau(t): monotone, asymptotically neutral reparametrization of time.
    double tau(double t) const {
        const double g = gamma();
        return std::asinh(std::sinh(g * t) + r_eff) / g;
    }

    // Functional inverse of tau. For the symmetric drive tau(-t) = -tau_inv(t).
    double tau_inv(double t) const {
        const double g = gamma();
        return std::asinh(std::sinh(g * t) - r_eff) / g;
    }

    // d tau/dt = E(tau(t)) / E(t) = cosh(Gamma t)/cosh(Gamma tau(t)); strictly
    // positive, so tau is invertible.
    double tau_derivative(double t) const {
        const double g = gamma();
        return std::cosh(g * t) / std::cosh(g * tau(t));
    }

    double tau_inv_derivative(double t) const {
        const double g = gamma();
        return std::cosh(g * t) / std::cosh(g * tau_inv(t));
    }
};

} // namespace trwf
