#pragma once
#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "trwf/grids.hpp"
#include "trwf/kernel.hpp"
#include "trwf/pulse.hpp"

namespace trwf {

// Gaussian near-infrared probe, E(w) = i E0 exp(-((w - omega_c)/delta_omega)^2).
// E0 is never fixed; every output of this module is shot-noise-relative.
// The time-domain field envelope exp(-(delta_omega t)^2/4) has FWHM
// 4 sqrt(ln 2)/delta_omega, which is 16.06 fs for the defaults.
struct ProbeSpectrum {
    double omega_c = kTwoPi * 0.255;      // rad/fs
    double delta_omega = kTwoPi * 0.033;  // rad/fs
    double duration_fwhm_fs = 16.0;

    double envelope(double w) const {
        const double z = (w - omega_c) / delta_omega;
        return std::exp(-z * z);
    }

    double time_envelope(double t) const {
        const double z = 0.5 * delta_omega * t;
        return std::exp(-z * z);
    }
};

// Sharp low-pass before the detector: transmit w <= omega_max, block the rest.
struct SpectralFilter {
    double omega_max = kTwoPi * 0.212; // rad/fs

    double transfer(double w) const { return w <= omega_max ? 1.0 : 0.0; }
};

// Filtered, flattened probe mode h(w) = i F(w) E*(w) / sqrt(w), normalized to
// unit L2 norm under the grid quadrature. The probe's i and the conjugated i
// cancel, so h is real and nonnegative. shot_noise_n is the normalization
// integral Int |F E|^2 / w dw itself (E0 = 1, relative units).
struct ProbeMode {
    FrequencyGrid grid;
    CVector h;
    double shot_noise_n = 0.0;
};

inline ProbeMode probe_mode(const ProbeSpectrum& probe, const SpectralFilter& filter,
                            const FrequencyGrid& grid) {
    if (!(filter.omega_max > 0.0))
        throw ConfigInvalid("filter.omega_max must be > 0");
    const std::vector<double> w = grid.nodes();
    const std::vector<double> wq = grid.weights();
    ProbeMode pm;
    pm.grid = grid;
    pm.h.resize(w.size());
    double n = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) {
        const double f = filter.transfer(w[k]) * probe.envelope(w[k]) / std::sqrt(w[k]);
        pm.h[k] = f;
        n += wq[k] * f * f;
    }
    if (!(n > 0.0))
        throw EmptyPassband("filter at " + std::to_string(filter.omega_max) +
                            " rad/fs removes the whole probe spectrum");
    pm.h /= std::sqrt(n);
    pm.shot_noise_n = n;
    return pm;
}

// Frequency bands and map-deviation blocks shared by every filter cutoff:
// the sampling crystal couples the probe band (rows) to the terahertz band
// (columns). Building this once makes a cutoff scan two matrix-vector
// products per point.
struct EOSWorkspace {
    FrequencyGrid nir;
    FrequencyGrid thz;
    CMatrix dev_plus;  // D+(w, W), sum-frequency channel
    CMatrix dev_minus; // D-(w, W), difference-frequency channel
};

// Band layout. thz_top doubles as the lower edge of the probe band, so the
// two integration domains partition the spectrum at Omega_max.
struct EOSConfig {
    double thz_top = kTwoPi * 0.13;      // Omega_max, rad/fs
    double thz_bottom = kTwoPi * 0.001;  // keep the 1/sqrt(w) row scale finite
    double nir_top = kTwoPi * 0.45;      // probe band truncation
    std::size_t n_nir = 600;
    std::size_t n_thz = 200;
};

// Deviation integrals of the sampling interaction,
//   D+-(w, W) = (1/2pi) sqrt(W/w) Int dt [e^{i w s(t)} - 1] e^{i (w -+ W) t},
// for the carrier-resolved time shift the probe imprints on copropagating
// light through the electro-optic effect:
//   s(t) = -(r_eff / Gamma) env_p(t) cos(omega_c t).
// The index shift follows the probe FIELD, carrier included; r_eff/Gamma is
// the small-signal shift amplitude of the gate pulse's reparametrization.
// The carrier is what makes gating work: it moves every sum-frequency image
// of a terahertz column to omega_c + W, outside a sub-carrier passband. A
// carrier-free envelope map cannot do that. Its image band, stretched by at
// most (r + sqrt(r^2 + 4))/2, always overlaps a passband wide enough to see
// the terahertz signal, so the sum-frequency channel would swamp the
// difference-frequency channel at every cutoff.
inline CMatrix eos_deviation(const DrivingPulse& pulse, const ProbeSpectrum& probe,
                             const std::vector<double>& w_rows,
                             const std::vector<double>& w_cols,
                             const TimeGrid& tgrid, int branch) {
    for (double w : w_rows)
        if (!(w > 0.0)) throw SingularFrequency("probe-band frequencies must be > 0");
    for (double w : w_cols)
        if (!(w > 0.0)) throw SingularFrequency("terahertz frequencies must be > 0");

    const std::size_t nr = w_rows.size(), nc = w_cols.size(), nt = tgrid.n;
    const std::vector<double> t = tgrid.nodes();
    const std::vector<double> wt = tgrid.weights();

    const double shift0 = pulse.r_eff / pulse.gamma();
    // Same tail requirement as the squeezing kernel: the shift must be dead
    // at the window edges or the deviation integrand is truncated mid-swing.
    const double edge = shift0 * std::max(probe.time_envelope(tgrid.t_min),
                                          probe.time_envelope(tgrid.t_max));
    if (edge > 1e-4)
        throw GridTooNarrow("time window truncates the probe envelope: |shift| = " +
                            std::to_string(edge) + " fs at the edge");

    std::vector<double> shift(nt);
    for (std::size_t j = 0; j < nt; ++j)
        shift[j] = -shift0 * probe.time_envelope(t[j]) * std::cos(probe.omega_c * t[j]);

    // A(k, j) = (1/2pi) w_k^{-1/2} [e^{i w_k shift_j} - 1] e^{i w_k t_j} wt_j
    // B(j, l) = w_l^{1/2} e^{-i branch * w_l t_j}
    CMatrix A(nr, nt), B(nt, nc);
    const double inv2pi = 1.0 / kTwoPi;
    for (std::size_t k = 0; k < nr; ++k) {
        const double wk = w_rows[k];
        const double rowscale = inv2pi / std::sqrt(wk);
        for (std::size_t j = 0; j < nt; ++j) {
            const Complex dev = std::polar(1.0, wk * shift[j]) - 1.0;
            A(k, j) = rowscale * wt[j] * dev * std::polar(1.0, wk * t[j]);
        }
    }
    const double sgn = branch >= 0 ? -1.0 : 1.0;
    for (std::size_t j = 0; j < nt; ++j)
        for (std::size_t l = 0; l < nc; ++l)
            B(j, l) = std::sqrt(w_cols[l]) * std::polar(1.0, sgn * w_cols[l] * t[j]);

    return A * B;
}

inline EOSWorkspace eos_workspace(const DrivingPulse& pulse, const ProbeSpectrum& probe,
                                  const TimeGrid& tgrid, const EOSConfig& cfg = {}) {
    if (!(cfg.thz_bottom > 0.0 && cfg.thz_bottom < cfg.thz_top && cfg.thz_top < cfg.nir_top))
        throw ConfigInvalid("EOS bands must satisfy 0 < thz_bottom < thz_top < nir_top");
    EOSWorkspace ws;
    ws.nir = FrequencyGrid(cfg.thz_top, cfg.nir_top, cfg.n_nir);
    ws.thz = FrequencyGrid(cfg.thz_bottom, cfg.thz_top, cfg.n_thz);
    ws.dev_plus = eos_deviation(pulse, probe, ws.nir.nodes(), ws.thz.nodes(), tgrid, +1);
    ws.dev_minus = eos_deviation(pulse, probe, ws.nir.nodes(), ws.thz.nodes(), tgrid, -1);
    return ws;
}

// Terahertz-range mode pair seen by the gated probe. beta rides the
// difference-frequency channel (the gating signal; it vanishes identically
// when the map is trivial). With a sub-carrier passband the first-order
// sum-frequency products land above the cutoff, so alpha keeps only the
// second-order floor of the exact exponential map and stays strongly
// suppressed at small shift amplitude.
struct EOSModes {
    FrequencyGrid nir;
    FrequencyGrid thz;
    CVector h;
    CVector alpha_thz;
    CVector beta_thz;
    double shot_noise_n = 0.0;
};

inline EOSModes thz_modes(const ProbeSpectrum& probe, const SpectralFilter& filter,
                          const EOSWorkspace& ws) {
    const ProbeMode pm = probe_mode(probe, filter, ws.nir);
    const std::vector<double> wq = ws.nir.weights();
    CVector hw = pm.h;
    for (Eigen::Index k = 0; k < hw.size(); ++k) hw[k] *= wq[std::size_t(k)];

    EOSModes m;
    m.nir = ws.nir;
    m.thz = ws.thz;
    m.h = pm.h;
    m.shot_noise_n = pm.shot_noise_n;
    // alpha(W) = Int dw h(w) D+(w, W); beta(W) = -conj(Int dw h(w) D-(w, W)).
    // The delta part of the forward kernel never fires: the probe band sits
    // strictly above every terahertz column frequency.
    m.alpha_thz = ws.dev_plus.transpose() * hw;
    m.beta_thz = -(ws.dev_minus.transpose() * hw).conjugate();
    return m;
}

inline EOSModes thz_modes(const ProbeSpectrum& probe, const SpectralFilter& filter,
                          const DrivingPulse& pulse, const TimeGrid& tgrid,
                          const EOSConfig& cfg = {}) {
    return thz_modes(probe, filter, eos_workspace(pulse, probe, tgrid, cfg));
}

// [f, f†] as the L2 norm of the mode profile; already shot-noise-relative
// because h is unit-normalized.
inline double mode_commutator(const FrequencyGrid& grid, const CVector& f) {
    const std::vector<double> wq = grid.weights();
    double acc = 0.0;
    for (std::size_t l = 0; l < wq.size(); ++l) acc += wq[l] * std::norm(f[l]);
    return acc;
}

// Same commutator through the time domain: transform the one-sided spectrum
// and integrate |f(t)|^2. Agreement with mode_commutator is a quadrature
// cross-check, not a faster path. The discrete spectrum recurs in time with
// period 2pi/dw, so the window must stay inside half a recurrence or the
// integral picks up ghost copies.
inline double mode_commutator_time(const FrequencyGrid& grid, const CVector& f,
                                   const TimeGrid& tgrid) {
    const double half_recurrence = kPi / grid.dw();
    if (std::max(std::abs(tgrid.t_min), std::abs(tgrid.t_max)) >= half_recurrence)
        throw SpacingViolation("time window reaches the frequency grid's alias at +-" +
                               std::to_string(half_recurrence) + " fs");
    const std::vector<double> w = grid.nodes();
    const std::vector<double> wq = grid.weights();
    const std::vector<double> t = tgrid.nodes();
    const std::vector<double> wt = tgrid.weights();
    double acc = 0.0;
    for (std::size_t j = 0; j < t.size(); ++j) {
        Complex ft = 0.0;
        for (std::size_t l = 0; l < w.size(); ++l)
            ft += wq[l] * f[l] * std::polar(1.0, -w[l] * t[j]);
        acc += wt[j] * std::norm(ft);
    }
    return acc / kTwoPi;
}

// Vacuum fluctuation level of the gated signal at waveplate phase phi,
// relative to the shot noise:
//   dS^2(phi)/N = [a,a†] + [b,b†] + 2 Re(e^{2 i phi} Int a b* dW).
inline double vacuum_fluct(const EOSModes& m, double phi) {
    const std::vector<double> wq = m.thz.weights();
    double a = 0.0, b = 0.0;
    Complex cross = 0.0;
    for (std::size_t l = 0; l < wq.size(); ++l) {
        a += wq[l] * std::norm(m.alpha_thz[l]);
        b += wq[l] * std::norm(m.beta_thz[l]);
        cross += wq[l] * m.alpha_thz[l] * std::conj(m.beta_thz[l]);
    }
    return a + b + 2.0 * (std::polar(1.0, 2.0 * phi) * cross).real();
}

// Ellipsometry phase reachable by the waveplate setting eps in [pi/2, 3pi/2]:
// phi = arccos(sqrt(-cos eps)), covering [0, pi/2].
inline double waveplate_phase(double eps) {
    const double c = -std::cos(eps);
    if (c < -1e-12)
        throw ConfigInvalid("waveplate eps must lie in [pi/2, 3pi/2], got " +
                            std::to_string(eps));
    return std::acos(std::sqrt(std::min(1.0, std::max(0.0, c))));
}

// Peak-referenced shape of |f(W)|: peak position by parabolic refinement,
// FWHM and band center from the half-maximum crossings (linear interpolation,
// clamped to the grid edges when a side never falls below half).
struct ProfileShape {
    double peak_omega = 0.0;
    double center_omega = 0.0;
    double fwhm = 0.0;
    double peak_value = 0.0;
};

inline ProfileShape profile_shape(const FrequencyGrid& grid, const CVector& f) {
    const std::size_t n = grid.n;
    if (n < 3) throw GridMismatch("profile_shape needs at least 3 samples");
    std::vector<double> mag(n);
    for (std::size_t l = 0; l < n; ++l) mag[l] = std::abs(f[l]);
    const std::size_t im = static_cast<std::size_t>(
        std::max_element(mag.begin(), mag.end()) - mag.begin());

    ProfileShape ps;
    ps.peak_omega = grid.node(im);
    ps.peak_value = mag[im];
    if (im > 0 && im + 1 < n) {
        const double ym = mag[im - 1], y0 = mag[im], yp = mag[im + 1];
        const double den = ym - 2.0 * y0 + yp;
        if (den < 0.0) {
            const double s = 0.5 * (ym - yp) / den;
            ps.peak_omega += s * grid.dw();
            ps.peak_value = y0 - 0.25 * (ym - yp) * s;
        }
    }

    const double half = 0.5 * ps.peak_value;
    double lo = grid.node(0), hi = grid.node(n - 1);
    for (std::size_t l = im; l-- > 0;) {
        if (mag[l] < half) {
            const double fr = (half - mag[l]) / (mag[l + 1] - mag[l]);
            lo = grid.node(l) + fr * grid.dw();
            break;
        }
    }
    for (std::size_t l = im + 1; l < n; ++l) {
        if (mag[l] < half) {
            const double fr = (mag[l - 1] - half) / (mag[l - 1] - mag[l]);
            hi = grid.node(l - 1) + fr * grid.dw();
            break;
        }
    }
    ps.fwhm = hi - lo;
    ps.center_omega = 0.5 * (hi + lo);
    return ps;
}

// Cutoff sweep of the two commutator budgets. The figure of merit is the
// difference-frequency share [b,b†]/N; its argmax is the optimal filter.
struct FilterScan {
    std::vector<double> omega_max;
    std::vector<double> alpha_comm;
    std::vector<double> beta_comm;
    std::size_t optimum_index = 0;
    double optimum_omega_max = 0.0;
};

inline FilterScan filter_scan(const ProbeSpectrum& probe, const std::vector<double>& cutoffs,
                              const EOSWorkspace& ws) {
    if (cutoffs.empty()) throw ConfigInvalid("filter_scan needs a nonempty cutoff grid");
    FilterScan scan;
    scan.omega_max = cutoffs;
    scan.alpha_comm.resize(cutoffs.size());
    scan.beta_comm.resize(cutoffs.size());
    for (std::size_t i = 0; i < cutoffs.size(); ++i) {
        const EOSModes m = thz_modes(probe, SpectralFilter{cutoffs[i]}, ws);
        scan.alpha_comm[i] = mode_commutator(m.thz, m.alpha_thz);
        scan.beta_comm[i] = mode_commutator(m.thz, m.beta_thz);
    }
    scan.optimum_index = static_cast<std::size_t>(
        std::max_element(scan.beta_comm.begin(), scan.beta_comm.end()) -
        scan.beta_comm.begin());
    scan.optimum_omega_max = cutoffs[scan.optimum_index];
    return scan;
}

inline FilterScan filter_scan(const ProbeSpectrum& probe, const std::vector<double>& cutoffs,
                              const DrivingPulse& pulse, const TimeGrid& tgrid,
                              const EOSConfig& cfg = {}) {
    return filter_scan(probe, cutoffs, eos_workspace(pulse, probe, tgrid, cfg));
}

} // namespace trwf
