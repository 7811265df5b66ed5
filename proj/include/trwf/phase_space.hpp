#pragma once
#include <cmath>
#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "trwf/detection.hpp"

namespace trwf {

// Zero-mean Gaussian state of the detected quadrature pair. Physicality is
// the uncertainty bound det cov >= 1/4; individual eigenvalues may drop to
// e^{-2r}/2 under squeezing.
struct GaussianState {
    Eigen::Matrix2d cov = 0.5 * Eigen::Matrix2d::Identity();
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
};

inline void validate_covariance(const Eigen::Matrix2d& cov, double tol = 1e-6) {
    if (std::abs(cov(0, 1) - cov(1, 0)) > tol)
        throw UnphysicalCovariance("covariance not symmetric");
    if (cov(0, 0) <= 0.0 || cov(1, 1) <= 0.0 || cov.determinant() < 0.25 - tol)
        throw UnphysicalCovariance("det cov = " + std::to_string(cov.determinant()) +
                                   " violates the uncertainty bound 1/4");
}

// W(x_i, p_j) sampled on centered uniform axes; values(i, j), rows follow x.
struct WignerGrid {
    PhaseSpaceGrid x_axis;
    PhaseSpaceGrid p_axis;
    Eigen::MatrixXd values;
};

// Characteristic function samples, same layout (rows follow u).
struct CharFnGrid {
    PhaseSpaceGrid u_axis;
    PhaseSpaceGrid v_axis;
    CMatrix values;
};

// Single-photon-subtracted mixture bookkeeping: component j carries weight
// sinh^2 r_j / N_ph, N_ph = sum_j sinh^2 r_j.
struct SubtractedState {
    std::vector<double> weights;
    double n_photons = 0.0;
    std::vector<double> r; // squeezing vector of the source mode set
};

inline SubtractedState subtracted_state(const std::vector<double>& r) {
    SubtractedState sub;
    sub.r = r;
    sub.weights.resize(r.size());
    for (std::size_t j = 0; j < r.size(); ++j) {
        sub.weights[j] = std::sinh(r[j]) * std::sinh(r[j]);
        sub.n_photons += sub.weights[j];
    }
    if (sub.n_photons <= 0.0)
        throw DegenerateSubtraction("no photons available to subtract (all r = 0)");
    for (double& wj : sub.weights) wj /= sub.n_photons;
    return sub;
}

// Covariance of the gated quadratures at one delay:
// Sigma = 1/2 (theta_vac^2 I + sum_j O_j S_j O_j^T).
inline GaussianState gaussian_trwf(const DetectionProjection& proj,
                                   const std::vector<double>& r,
                                   std::size_t t_d_index) {
    GaussianState st;
    st.cov = detected_covariance(proj, r, t_d_index);
    validate_covariance(st.cov);
    return st;
}

namespace detail {

// m_j(u, v) = s^T O_j S_j O_j^T s, the squeezed quadratic form of mode j.
inline double mode_quadratic(Complex theta, double r, double u, double v) {
    // O_j^T s rotates (u, v) by the mode phase and scales by |theta|
    const double a = theta.real() * u + theta.imag() * v;
    const double b = -theta.imag() * u + theta.real() * v;
    return std::exp(2.0 * r) * a * a + std::exp(-2.0 * r) * b * b;
}

} // namespace detail

// Squeezed-vacuum characteristic function as a product of the vacuum
// remainder and one Gaussian factor per principal mode.
inline CharFnGrid charfn_psq(const DetectionProjection& proj,
                             const std::vector<double>& r,
                             std::size_t t_d_index,
                             const PhaseSpaceGrid& grid) {
    const double tv2 = proj.theta_vac[t_d_index] * proj.theta_vac[t_d_index];
    CharFnGrid cf;
    cf.u_axis = cf.v_axis = grid;
    cf.values.resize(grid.n, grid.n);
    for (std::size_t i = 0; i < grid.n; ++i) {
        const double u = grid.node(i);
        for (std::size_t j = 0; j < grid.n; ++j) {
            const double v = grid.node(j);
            double expo = tv2 * (u * u + v * v);
            for (std::size_t k = 0; k < r.size(); ++k)
                expo += detail::mode_quadratic(proj.theta(t_d_index, k), r[k], u, v);
            cf.values(i, j) = std::exp(-0.25 * expo);
        }
    }
    return cf;
}

// Characteristic function of b rho b†/sinh^2 r for single-mode squeezed
// vacuum: a squeezed one-photon state, (1 - m/2) e^{-m/4} with
// m = e^{2r} u^2 + e^{-2r} v^2.
inline Complex single_mode_sub_charfn(double r, double u, double v) {
    if (!(r > 0.0))
        throw DegenerateSubtraction("subtraction requires r > 0");
    const double m = std::exp(2.0 * r) * u * u + std::exp(-2.0 * r) * v * v;
    return Complex((1.0 - 0.5 * m) * std::exp(-0.25 * m), 0.0);
}

// Mixture characteristic function of the photon-subtracted state: every
// component keeps all Gaussian factors but swaps mode j's factor for the
// subtracted one, i.e. multiplies the product by (1 - m_j/2).
inline CharFnGrid charfn_sub(const SubtractedState& sub,
                             const DetectionProjection& proj,
                             std::size_t t_d_index,
                             const PhaseSpaceGrid& grid) {
    const std::size_t m = sub.r.size();
    const double tv2 = proj.theta_vac[t_d_index] * proj.theta_vac[t_d_index];
    CharFnGrid cf;
    cf.u_axis = cf.v_axis = grid;
    cf.values.resize(grid.n, grid.n);
    std::vector<double> mj(m);
    for (std::size_t i = 0; i < grid.n; ++i) {
        const double u = grid.node(i);
        for (std::size_t j = 0; j < grid.n; ++j) {
            const double v = grid.node(j);
            double expo = tv2 * (u * u + v * v);
            double mix = 0.0;
            for (std::size_t k = 0; k < m; ++k) {
                mj[k] = detail::mode_quadratic(proj.theta(t_d_index, k), sub.r[k], u, v);
                expo += mj[k];
            }
            for (std::size_t k = 0; k < m; ++k)
                mix += sub.weights[k] * (1.0 - 0.5 * mj[k]);
            cf.values(i, j) = mix * std::exp(-0.25 * expo);
        }
    }
    return cf;
}

// Smallest centered square grid on which every Gaussian factor of the state
// has decayed below `floor` at the edge. The polynomial prefactors of
// subtracted states grow only quadratically, so a fixed 25% margin covers
// them.
inline PhaseSpaceGrid charfn_grid_for(const Eigen::Matrix2d& cov, std::size_t n = 384,
                                      double floor_value = 1e-8) {
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(cov);
    const double lam_min = es.eigenvalues().minCoeff();
    if (lam_min <= 0.0) throw UnphysicalCovariance("covariance not positive definite");
    // |cf| along the slow axis is e^{-lam_min h^2 / 2}
    const double h = 1.25 * std::sqrt(-2.0 * std::log(floor_value) / lam_min);
    return PhaseSpaceGrid{h, n};
}

// Plain quadrature DFT W = (2pi)^-2 Int cf(u,v) e^{i(ux+vp)} du dv as two
// dense matrix products. No periodicity assumption, so the (x,p) axes are
// free; the cf grid must have decayed at its edges or the truncated tail
// aliases into the result.
inline WignerGrid wigner_from_charfn(const CharFnGrid& cf,
                                     const PhaseSpaceGrid& x_axis = PhaseSpaceGrid{},
                                     const PhaseSpaceGrid& p_axis = PhaseSpaceGrid{}) {
    const std::size_t nu = cf.u_axis.n, nv = cf.v_axis.n;
    double edge = 0.0;
    for (std::size_t k = 0; k < nu; ++k)
        edge = std::max({edge, std::abs(cf.values(k, 0)), std::abs(cf.values(k, nv - 1))});
    for (std::size_t l = 0; l < nv; ++l)
        edge = std::max({edge, std::abs(cf.values(0, l)), std::abs(cf.values(nu - 1, l))});
    if (edge > 1e-8)
        throw GridTruncation("characteristic function at grid edge = " + std::to_string(edge) +
                             ", widen the (u,v) grid");

    const double du = cf.u_axis.step(), dv = cf.v_axis.step();
    CMatrix Ex(x_axis.n, nu), Ev(nv, p_axis.n);
    for (std::size_t i = 0; i < x_axis.n; ++i)
        for (std::size_t k = 0; k < nu; ++k) {
            const double wq = (k == 0 || k == nu - 1) ? 0.5 * du : du;
            Ex(i, k) = std::polar(wq, cf.u_axis.node(k) * x_axis.node(i));
        }
    for (std::size_t l = 0; l < nv; ++l)
        for (std::size_t j = 0; j < p_axis.n; ++j) {
            const double wq = (l == 0 || l == nv - 1) ? 0.5 * dv : dv;
            Ev(l, j) = std::polar(wq, cf.v_axis.node(l) * p_axis.node(j));
        }

    CMatrix Wc = Ex * cf.values * Ev / (kTwoPi * kTwoPi);
    const double imag_resid = Wc.imag().cwiseAbs().maxCoeff();
    if (imag_resid > 1e-8)
        throw GridTruncation("transform imaginary residue " + std::to_string(imag_resid) +
                             "; characteristic function lacks Hermitian symmetry");

    WignerGrid W;
    W.x_axis = x_axis;
    W.p_axis = p_axis;
    W.values = Wc.real();
    return W;
}

// Closed-form Gaussian density, the oracle partner of the transform route.
inline WignerGrid wigner_gaussian(const GaussianState& st,
                                  const PhaseSpaceGrid& x_axis = PhaseSpaceGrid{},
                                  const PhaseSpaceGrid& p_axis = PhaseSpaceGrid{}) {
    const Eigen::Matrix2d Si = st.cov.inverse();
    const double norm = 1.0 / (kTwoPi * std::sqrt(st.cov.determinant()));
    WignerGrid W;
    W.x_axis = x_axis;
    W.p_axis = p_axis;
    W.values.resize(x_axis.n, p_axis.n);
    for (std::size_t i = 0; i < x_axis.n; ++i) {
        const double x = x_axis.node(i) - st.mean[0];
        for (std::size_t j = 0; j < p_axis.n; ++j) {
            const double p = p_axis.node(j) - st.mean[1];
            const double q = Si(0, 0) * x * x + 2.0 * Si(0, 1) * x * p + Si(1, 1) * p * p;
            W.values(i, j) = norm * std::exp(-0.5 * q);
        }
    }
    return W;
}

// W_sub(0, 0) without building a grid: (2pi)^-2 Int cf_sub equals
// (1/2pi sqrt(det Sigma)) sum_j w_j [1 - tr(A_j Sigma^-1)/2] with
// A_j = O_j S_j O_j^T, since <s^T A s> under the Gaussian weight is
// tr(A Sigma^-1).
inline double subtracted_wigner_origin(const SubtractedState& sub,
                                       const DetectionProjection& proj,
                                       std::size_t t_d_index) {
    const Eigen::Matrix2d Sg = detected_covariance(proj, sub.r, t_d_index);
    const Eigen::Matrix2d Si = Sg.inverse();
    double acc = 0.0;
    for (std::size_t j = 0; j < sub.r.size(); ++j) {
        const Complex th = proj.theta(t_d_index, j);
        Eigen::Matrix2d O;
        O << th.real(), -th.imag(), th.imag(), th.real();
        Eigen::Matrix2d A = O *
            Eigen::Vector2d(std::exp(2.0 * sub.r[j]), std::exp(-2.0 * sub.r[j])).asDiagonal() *
            O.transpose();
        acc += sub.weights[j] * (1.0 - 0.5 * (A * Si).trace());
    }
    return acc / (kTwoPi * std::sqrt(Sg.determinant()));
}

// Fock-state Wigner function ((-1)^n/pi) L_n(2 s^2) e^{-s^2}, s^2 = x^2+p^2.
inline double fock_wigner(int n, double x, double p) {
    if (n < 0) throw ConfigInvalid("fock_wigner requires n >= 0");
    const double z = 2.0 * (x * x + p * p);
    // Laguerre recurrence (k+1) L_{k+1} = (2k+1-z) L_k - k L_{k-1}
    double lk = 1.0, lkm = 0.0;
    for (int k = 0; k < n; ++k) {
        const double lkp = ((2.0 * k + 1.0 - z) * lk - k * lkm) / (k + 1.0);
        lkm = lk;
        lk = lkp;
    }
    const double sign = (n % 2 == 0) ? 1.0 : -1.0;
    return sign / (kTwoPi / 2.0) * lk * std::exp(-0.5 * z);
}

namespace detail {

inline double ps_weight(const PhaseSpaceGrid& g, std::size_t i) {
    return (i == 0 || i == g.n - 1) ? 0.5 * g.step() : g.step();
}

} // namespace detail

// P(n) = 2pi Int W W_n dx dp; the parity-kernel route works for Gaussian and
// non-Gaussian grids alike.
inline std::vector<double> photon_probabilities(const WignerGrid& W, int n_max) {
    std::vector<double> out(std::size_t(n_max) + 1);
    for (int n = 0; n <= n_max; ++n) {
        double acc = 0.0;
        for (std::size_t i = 0; i < W.x_axis.n; ++i) {
            const double wx = detail::ps_weight(W.x_axis, i);
            const double x = W.x_axis.node(i);
            for (std::size_t j = 0; j < W.p_axis.n; ++j) {
                acc += wx * detail::ps_weight(W.p_axis, j) *
                       W.values(i, j) * fock_wigner(n, x, W.p_axis.node(j));
            }
        }
        out[std::size_t(n)] = std::clamp(kTwoPi * acc, 0.0, 1.0);
    }
    return out;
}

inline double wigner_norm(const WignerGrid& W) {
    double acc = 0.0;
    for (std::size_t i = 0; i < W.x_axis.n; ++i)
        for (std::size_t j = 0; j < W.p_axis.n; ++j)
            acc += detail::ps_weight(W.x_axis, i) * detail::ps_weight(W.p_axis, j) * W.values(i, j);
    return acc;
}

// D_HS = 2pi Int (W1 - W2)^2 dx dp
inline double hs_distance(const WignerGrid& W1, const WignerGrid& W2) {
    if (!(W1.x_axis == W2.x_axis) || !(W1.p_axis == W2.p_axis))
        throw GridMismatch("Wigner grids differ");
    double acc = 0.0;
    for (std::size_t i = 0; i < W1.x_axis.n; ++i)
        for (std::size_t j = 0; j < W1.p_axis.n; ++j) {
            const double d = W1.values(i, j) - W2.values(i, j);
            acc += detail::ps_weight(W1.x_axis, i) * detail::ps_weight(W1.p_axis, j) * d * d;
        }
    return kTwoPi * acc;
}

// Same distance for two zero-mean Gaussians in closed form:
// 2pi Int W_a W_b = 1/sqrt(det(Sa+Sb)), 2pi Int W_a^2 = 1/(2 sqrt(det Sa)).
inline double hs_distance_gaussian(const Eigen::Matrix2d& Sa, const Eigen::Matrix2d& Sb) {
    return 0.5 / std::sqrt(Sa.determinant()) + 0.5 / std::sqrt(Sb.determinant()) -
           2.0 / std::sqrt((Sa + Sb).determinant());
}

} // namespace trwf
