#pragma once
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "trwf/detection.hpp"
#include "trwf/phase_space.hpp"

namespace trwf {

// Principal-axis summary of a gated covariance at one delay. angle is the
// direction of the V_max axis, reported in (-pi/2, pi/2]; an isotropic
// covariance gets angle 0 so vacuum tails of a series stay deterministic.
struct EllipseParams {
    double v_max = 0.5;
    double v_min = 0.5;
    double angle = 0.0;
    double t_d = 0.0;
};

inline EllipseParams squeeze_ellipse(const GaussianState& st, double t_d = 0.0) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(st.cov);
    EllipseParams ell;
    ell.t_d = t_d;
    ell.v_min = es.eigenvalues()[0];
    ell.v_max = es.eigenvalues()[1];
    if (ell.v_max - ell.v_min < 1e-12 * std::max(1.0, ell.v_max)) return ell;
    const Eigen::Vector2d ax = es.eigenvectors().col(1);
    double a = std::atan2(ax[1], ax[0]);
    // the axis is a direction, not a vector: fold to (-pi/2, pi/2]
    if (a <= -0.5 * kPi) a += kPi;
    if (a > 0.5 * kPi) a -= kPi;
    ell.angle = a;
    return ell;
}

// M = max(0, (1/V_min - 1/V_vac) / 2) with V_vac = 1/2. Positive exactly
// when some quadrature beats vacuum noise.
inline double metrological_power(const EllipseParams& ell) {
    if (!(ell.v_min > 0.0))
        throw UnphysicalCovariance("v_min must be positive, got " + std::to_string(ell.v_min));
    return std::max(0.0, 0.5 * (1.0 / ell.v_min - 2.0));
}

inline double metrological_power(const GaussianState& st) {
    return metrological_power(squeeze_ellipse(st));
}

// Two-mode small-r approximation of the lower covariance eigenvalue,
//   V_min ~ 1/2 + T1 r1^2 - sqrt((T1 r1 + T2 r2)^2 + 2 T1 T2 r1 r2 (cos phi - 1)),
// phi = 2 (arg theta1 - arg theta2). The interference term vanishes when the
// two gated mode amplitudes are in phase and subtracts fully at quadrature.
inline double vmin_approx(double T1, double T2, double r1, double r2,
                          Complex theta1, Complex theta2) {
    const double phi = 2.0 * (std::arg(theta1) - std::arg(theta2));
    const double s = T1 * r1 + T2 * r2;
    const double rad = s * s + 2.0 * T1 * T2 * r1 * r2 * (std::cos(phi) - 1.0);
    return 0.5 + T1 * r1 * r1 - std::sqrt(std::max(0.0, rad));
}

// Thermal occupation equivalent to the uncertainty-product excess:
// 4 nbar (nbar + 1) = V_max V_min / V_vac^2 - 1. Pure states sit at nbar = 0.
inline double thermal_photon_number(const EllipseParams& ell, double tol = 1e-6) {
    const double prod = ell.v_max * ell.v_min;
    if (prod < 0.25 - tol)
        throw UnphysicalCovariance("V_max V_min = " + std::to_string(prod) +
                                   " below the uncertainty bound 1/4");
    return std::max(0.0, 0.5 * (2.0 * std::sqrt(std::max(prod, 0.25)) - 1.0));
}

// Scalar diagnostics per delay for one gated mode set.
struct MetricSeries {
    std::vector<double> t_d;
    std::vector<double> metrological_power;
    std::vector<double> origin_value; // W_sub(0, 0; t_d)
    std::vector<double> thermal_nbar;
};

struct NegativityTrace {
    std::vector<double> t_d;
    std::vector<double> w00;
    std::size_t min_index = 0;
};

inline std::vector<EllipseParams> ellipse_series(const DetectionProjection& proj,
                                                 const std::vector<double>& r) {
    std::vector<EllipseParams> out;
    out.reserve(proj.t_d.size());
    for (std::size_t d = 0; d < proj.t_d.size(); ++d)
        out.push_back(squeeze_ellipse(gaussian_trwf(proj, r, d), proj.t_d[d]));
    return out;
}

// W_sub(0, 0; t_d) closed-form series; min_index marks the deepest dip.
inline NegativityTrace negativity_trace(const DetectionProjection& proj,
                                        const std::vector<double>& r) {
    const SubtractedState sub = subtracted_state(r);
    NegativityTrace tr;
    tr.t_d = proj.t_d;
    tr.w00.resize(proj.t_d.size());
    for (std::size_t d = 0; d < proj.t_d.size(); ++d)
        tr.w00[d] = subtracted_wigner_origin(sub, proj, d);
    tr.min_index = static_cast<std::size_t>(
        std::min_element(tr.w00.begin(), tr.w00.end()) - tr.w00.begin());
    return tr;
}

inline MetricSeries metric_series(const DetectionProjection& proj,
                                  const std::vector<double>& r) {
    MetricSeries ms;
    ms.t_d = proj.t_d;
    const std::size_t nd = proj.t_d.size();
    ms.metrological_power.resize(nd);
    ms.thermal_nbar.resize(nd);
    for (std::size_t d = 0; d < nd; ++d) {
        const EllipseParams ell = squeeze_ellipse(gaussian_trwf(proj, r, d), proj.t_d[d]);
        ms.metrological_power[d] = metrological_power(ell);
        ms.thermal_nbar[d] = thermal_photon_number(ell);
    }
    ms.origin_value = negativity_trace(proj, r).w00;
    return ms;
}

// Lift a mod-period angle series to a continuous branch. The squeezing axis
// lives on the half-circle, so the default period is pi.
inline std::vector<double> unwrap_angles(const std::vector<double>& a, double period = kPi) {
    std::vector<double> out(a.size());
    if (a.empty()) return out;
    out[0] = a[0];
    for (std::size_t i = 1; i < a.size(); ++i)
        out[i] = a[i] - period * std::round((a[i] - out[i - 1]) / period);
    return out;
}

// d(angle)/d(t_d) by central differences on the unwrapped branch; one-sided
// at the ends. Requires at least two samples on a strictly increasing grid.
inline std::vector<double> angular_velocity(const std::vector<double>& t_d,
                                            const std::vector<double>& unwrapped) {
    const std::size_t n = t_d.size();
    if (n != unwrapped.size() || n < 2)
        throw GridMismatch("angular_velocity needs matching series with >= 2 samples");
    std::vector<double> v(n);
    v[0] = (unwrapped[1] - unwrapped[0]) / (t_d[1] - t_d[0]);
    for (std::size_t i = 1; i + 1 < n; ++i)
        v[i] = (unwrapped[i + 1] - unwrapped[i - 1]) / (t_d[i + 1] - t_d[i - 1]);
    v[n - 1] = (unwrapped[n - 1] - unwrapped[n - 2]) / (t_d[n - 1] - t_d[n - 2]);
    return v;
}

} // namespace trwf
