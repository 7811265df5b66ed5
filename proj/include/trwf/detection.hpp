#pragma once
#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "trwf/kernel.hpp"
#include "trwf/modes.hpp"

namespace trwf {

inline constexpr double kLn2 = 0.69314718055994530942;
inline constexpr double kLn16 = 4.0 * kLn2;

// Normalized Gaussian gate R(t) = 2 sqrt(ln2)/(sqrt(pi) dp) exp(-4 ln2 t^2/dp^2),
// unit area, intensity FWHM delta_p. cep_phase rotates the detected quadrature
// pair (local-oscillator carrier-envelope phase).
struct GatingFunction {
    double delta_p_fs = 5.8;
    double cep_phase = 0.0;

    GatingFunction() = default;
    explicit GatingFunction(double dp, double cep = 0.0) : delta_p_fs(dp), cep_phase(cep) {
        if (!(delta_p_fs > 0.0)) throw ConfigInvalid("gate.delta_p_fs must be > 0");
    }

    double value(double t) const {
        const double a = 2.0 * std::sqrt(kLn2) / (std::sqrt(kTwoPi / 2.0) * delta_p_fs);
        return a * std::exp(-4.0 * kLn2 * t * t / (delta_p_fs * delta_p_fs));
    }

    // Fourier transform Int R(t) e^{iwt} dt; real and even.
    double transfer(double w) const {
        return std::exp(-delta_p_fs * delta_p_fs * w * w / (16.0 * kLn2));
    }
};

// N = dp / sqrt(2 C ln16): rescales the gated field pair to unit commutator,
// from [E_d, E_d_pi2] = -2iC ln16/dp^2.
inline double gate_normalization(const GatingFunction& gate, double field_norm_c = 1.0) {
    return gate.delta_p_fs / std::sqrt(2.0 * field_norm_c * kLn16);
}

// Overlaps theta_j(t_d) of the sliding detection mode with the principal
// modes, plus the vacuum remainder amplitude. theta_vac is stored at build
// time, never recomputed downstream.
struct DetectionProjection {
    std::vector<double> t_d;
    CMatrix theta;                 // n_delays x m
    std::vector<double> theta_vac; // sqrt(1 - sum_j |theta_j|^2), clamped at 0
    double norm_const = 0.0;       // N used in the projection
};

// theta_j(t_d) = -i sqrt(2C) N Int R(t - t_d) alpha_j(t) dt
//             = -sqrt(2C) N Int dw sqrt(w) Rt(w) conj(psi_j(w)) e^{-i w t_d},
// evaluated in the frequency domain (exact for arbitrary delays). The CEP
// phase multiplies every theta_j by e^{i cep}.
inline DetectionProjection project_modes(const PrincipalModeSet& ms,
                                         const GatingFunction& gate,
                                         const std::vector<double>& delays,
                                         double field_norm_c = 1.0) {
    const std::vector<double> w = ms.fgrid.nodes();
    const std::vector<double> wq = ms.fgrid.weights();
    const std::size_t n = w.size(), nd = delays.size(), m = ms.mode_count();

    double tmax = 0.0;
    for (double wk : w) tmax = std::max(tmax, gate.transfer(wk));
    if (tmax < 1e-12)
        throw GateTooWide("gate transfer below 1e-12 on the whole frequency grid");

    const double N = gate_normalization(gate, field_norm_c);
    const Complex cep = std::polar(1.0, gate.cep_phase);
    const Complex pref = -std::sqrt(2.0 * field_norm_c) * N * cep;

    // row vector over w, fixed: sqrt(w) Rt(w) wq; columns: conj(psi_j) e^{-iwt_d}
    Eigen::VectorXd g(n);
    for (std::size_t k = 0; k < n; ++k) g[k] = std::sqrt(w[k]) * gate.transfer(w[k]) * wq[k];

    DetectionProjection proj;
    proj.t_d = delays;
    proj.theta.resize(nd, m);
    proj.theta_vac.resize(nd);
    proj.norm_const = N;

    CMatrix phase(nd, n);
    for (std::size_t d = 0; d < nd; ++d)
        for (std::size_t k = 0; k < n; ++k)
            phase(d, k) = std::polar(g[k], -w[k] * delays[d]);
    proj.theta = pref * (phase * ms.psi.conjugate());

    for (std::size_t d = 0; d < nd; ++d) {
        double s = 0.0;
        for (std::size_t j = 0; j < m; ++j) s += std::norm(proj.theta(d, j));
        if (s > 1.0 + 1e-6)
            throw GateTooWide("sum |theta_j|^2 = " + std::to_string(s) + " > 1");
        proj.theta_vac[d] = std::sqrt(std::max(0.0, 1.0 - s));
    }
    return proj;
}

// 2x2 covariance of (X, P) at one delay from the mode picture (Eq.-6 route):
// Sigma = 1/2 (theta_vac^2 I + sum_j O_j diag(e^{2r}, e^{-2r}) O_j^T).
inline Eigen::Matrix2d detected_covariance(const DetectionProjection& proj,
                                           const std::vector<double>& r,
                                           std::size_t delay_idx) {
    Eigen::Matrix2d S = Eigen::Matrix2d::Zero();
    const double tv = proj.theta_vac[delay_idx];
    S(0, 0) = S(1, 1) = tv * tv;
    for (std::size_t j = 0; j < r.size(); ++j) {
        const Complex th = proj.theta(delay_idx, j);
        Eigen::Matrix2d O;
        O << th.real(), -th.imag(), th.imag(), th.real();
        Eigen::Matrix2d D = Eigen::Matrix2d::Zero();
        D(0, 0) = std::exp(2.0 * r[j]);
        D(1, 1) = std::exp(-2.0 * r[j]);
        S += O * D * O.transpose();
    }
    return 0.5 * S;
}

// Independent covariance route: discretize the band into frequency modes at
// spacing dw (1 >> dw*fwhm >> 1/N), build the full multimode Gaussian
// covariance through the Bogoliubov kernel, and project onto the two gated
// field vectors. Used as the oracle against detected_covariance.
//
// w_top caveat: the oracle acts on the detection side, so its comb must span
// the conformal image of the gate band (roughly kernel image_stretch times
// the highest frequency the gate transfer still passes), not just the band
// the principal modes live in. A too-small w_top loses symplectic norm for
// delays near the drive center and the result dips below vacuum (det < 1/4).
//
// The symplectic build is delay-independent; the batch overload amortizes it
// across delays.
inline std::vector<Eigen::Matrix2d> covariance_oracle(const DrivingPulse& pulse,
                                                      const GatingFunction& gate,
                                                      const TimeGrid& tgrid,
                                                      const std::vector<double>& t_d,
                                                      double w_top,
                                                      double spacing_times_fwhm = 0.05,
                                                      double field_norm_c = 1.0) {
    const double dw = spacing_times_fwhm / pulse.fwhm_fs;
    const std::size_t N = std::size_t(std::floor(w_top / dw));
    if (spacing_times_fwhm > 0.2 || double(N) * spacing_times_fwhm < 20.0)
        throw SpacingViolation("need 1 >> dw*fwhm >> 1/N, got dw*fwhm = " +
                               std::to_string(spacing_times_fwhm) + ", N = " + std::to_string(N));

    std::vector<double> w(N);
    for (std::size_t k = 0; k < N; ++k) w[k] = dw * double(k + 1);

    // Uniform-comb discretization: a_k ~ sqrt(dw) a(w_k), so the scaled kernel
    // is I + dw * D (uniform weights, not trapezoid: the comb is a basis, not
    // a quadrature).
    CMatrix P = dw * kernel_deviation(pulse, w, w, tgrid, +1);
    P += CMatrix::Identity(N, N);
    CMatrix Q = (-dw) * kernel_deviation(pulse, w, w, tgrid, -1);

    // Real symplectic action on quadratures (x_1..x_N, p_1..p_N).
    Eigen::MatrixXd S(2 * N, 2 * N);
    S.topLeftCorner(N, N) = (P + Q).real();
    S.topRightCorner(N, N) = -(P - Q).imag();
    S.bottomLeftCorner(N, N) = (P + Q).imag();
    S.bottomRightCorner(N, N) = (P - Q).real();
    P.resize(0, 0);
    Q.resize(0, 0);

    std::vector<Eigen::Matrix2d> out(t_d.size());
    Eigen::VectorXd f(2 * N), g(2 * N);
    for (std::size_t d = 0; d < t_d.size(); ++d) {
        // Gated field forms with c_k = sqrt(2 C w_k dw) Rt(w_k):
        //   E_d(t_d)     = sum_k c_k [-sin(w_k t_d) x_k + cos(w_k t_d) p_k]
        //   E_d_pi2(t_d) = sum_k c_k [ cos(w_k t_d) x_k + sin(w_k t_d) p_k]
        // (the pi/2 CEP shift retards every carrier phase by pi/2).
        for (std::size_t k = 0; k < N; ++k) {
            const double c = std::sqrt(2.0 * field_norm_c * w[k] * dw) * gate.transfer(w[k]);
            const double th = w[k] * t_d[d];
            f[k] = -c * std::sin(th);
            f[N + k] = c * std::cos(th);
            g[k] = c * std::cos(th);
            g[N + k] = c * std::sin(th);
        }

        // Commutator [f.R, g.R] = i f^T J g fixes the normalization, as in the
        // continuum calibration.
        double fJg = 0.0;
        for (std::size_t k = 0; k < N; ++k)
            fJg += f[k] * g[N + k] - f[N + k] * g[k];
        const double Nn = 1.0 / std::sqrt(std::abs(fJg));

        // X = -N E_pi2, P = -N E; covariance Gamma = S S^T / 2 applied as forms.
        Eigen::VectorXd Sg = S.transpose() * g;
        Eigen::VectorXd Sf = S.transpose() * f;
        out[d](0, 0) = 0.5 * Nn * Nn * Sg.squaredNorm();
        out[d](1, 1) = 0.5 * Nn * Nn * Sf.squaredNorm();
        out[d](0, 1) = out[d](1, 0) = 0.5 * Nn * Nn * Sg.dot(Sf);
    }
    return out;
}

inline Eigen::Matrix2d covariance_oracle(const DrivingPulse& pulse,
                                         const GatingFunction& gate,
                                         const TimeGrid& tgrid,
                                         double t_d,
                                         double w_top,
                                         double spacing_times_fwhm = 0.05,
                                         double field_norm_c = 1.0) {
    return covariance_oracle(pulse, gate, tgrid, std::vector<double>{t_d}, w_top,
                             spacing_times_fwhm, field_norm_c)[0];
}

} // namespace trwf
