#pragma once
#include <complex>
#include <vector>

#include <Eigen/Dense>

#include "trwf/grids.hpp"
#include "trwf/pulse.hpp"

namespace trwf {

using Complex = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

// Deviation part of the Bogoliubov kernel pair. The full kernels are
//   p(w, w') = delta(w - w') + D+(w, w')
//   q(w, w') = -D-(w, w')
// with
//   D±(w, w') = (1/2pi) sqrt(w'/w) Int dt [e^{i w (tauinv(t) - t)} - 1] e^{i (w ∓ w') t}.
// Writing p against e^{i w t} keeps the integrand compactly supported (the
// conformal map is asymptotically neutral), so plain trapezoid quadrature
// applies; the delta is restored analytically by the caller. The q branch has
// no delta because both frequencies are positive.
//
// branch = +1 gives D+ (p deviation), branch = -1 gives D- (q deviation,
// i.e. the p integrand evaluated at the mirrored frequency -w').
inline CMatrix kernel_deviation(const DrivingPulse& pulse,
                                const std::vector<double>& w_rows,
                                const std::vector<double>& w_cols,
                                const TimeGrid& tgrid,
                                int branch) {
    for (double w : w_rows)
        if (!(w > 0.0)) throw SingularFrequency("row frequency must be > 0");
    for (double w : w_cols)
        if (!(w > 0.0)) throw SingularFrequency("column frequency must be > 0");

    // The time window must include the whole region where the conformal map
    // deviates from the identity, otherwise the deviation integrand is cut.
    const double tail_lo = std::abs(pulse.tau_inv(tgrid.t_min) - tgrid.t_min);
    const double tail_hi = std::abs(pulse.tau_inv(tgrid.t_max) - tgrid.t_max);
    if (tail_lo > 1e-4 || tail_hi > 1e-4)
        throw GridTooNarrow("conformal map still active at the time-window edge; "
                            "|tauinv(t)-t| = " + std::to_string(std::max(tail_lo, tail_hi)) + " fs");

    const std::size_t nr = w_rows.size(), nc = w_cols.size(), nt = tgrid.n;
    const std::vector<double> t = tgrid.nodes();
    const std::vector<double> wt = tgrid.weights();

    std::vector<double> shift(nt); // tauinv(t) - t, compactly supported
    for (std::size_t j = 0; j < nt; ++j) shift[j] = pulse.tau_inv(t[j]) - t[j];

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

// Weight-scaled discrete Bogoliubov pair on a frequency grid. With
// S = diag(sqrt(quadrature weight)) the matrices
//   P = I + S D+ S,   Q = -S D- S
// act on unit-commutator discrete modes, so the continuum completeness
// relation becomes the exact matrix identity P P† - Q Q† = I (up to
// discretization error; see symplectic_defect).
struct BogoliubovKernel {
    FrequencyGrid fgrid;
    CMatrix P;
    CMatrix Q;
    // Largest instantaneous frequency-stretch factor of the conformal map,
    // max_t dtauinv/dt (slightly above sqrt(1 + r_eff^2)), measured on the
    // build time grid. A row at w scatters up to ~ image_stretch * w, so rows
    // above fgrid.w_max / image_stretch have part of their image outside the
    // grid and cannot satisfy the discrete completeness identity.
    // certified_band_top() gives the safe band.
    double image_stretch = 1.0;
};

// Time-grid sampling rule: keep w_max * dt <= pi/4 (8 samples per shortest
// period), or the top singular values of Q pick up aliased weight and
// bloch_messiah will reject the kernel. Band-edge rows of P are incomplete
// on any finite grid (see image_stretch); widen the grid, not the tolerance,
// when downstream residuals matter.
inline BogoliubovKernel compute_kernel(const DrivingPulse& pulse,
                                       const FrequencyGrid& fgrid,
                                       const TimeGrid& tgrid) {
    const std::vector<double> w = fgrid.nodes();
    const std::vector<double> wq = fgrid.weights();

    CMatrix Dp = kernel_deviation(pulse, w, w, tgrid, +1);
    CMatrix Dq = kernel_deviation(pulse, w, w, tgrid, -1);

    Eigen::VectorXd s(w.size());
    for (std::size_t k = 0; k < w.size(); ++k) s[k] = std::sqrt(wq[k]);

    BogoliubovKernel ker;
    ker.fgrid = fgrid;
    ker.P = s.asDiagonal() * Dp * s.asDiagonal();
    ker.P += CMatrix::Identity(w.size(), w.size());
    ker.Q = -(s.asDiagonal() * Dq * s.asDiagonal());
    double stretch = 1.0;
    for (double t : tgrid.nodes()) stretch = std::max(stretch, pulse.tau_inv_derivative(t));
    ker.image_stretch = stretch;
    return ker;
}

// Highest frequency up to which the grid contains the conformal image of
// every row, with a safety margin for the amplitude tail past the turning
// point of the map (the scattering amplitude falls off exponentially beyond
// image_stretch * w, but not abruptly).
inline double certified_band_top(const BogoliubovKernel& ker, double tail_margin = 1.3) {
    return ker.fgrid.w_max / (ker.image_stretch * tail_margin);
}

// Operator-norm defect of P P† - Q Q† - I, restricted to rows and columns
// with w <= band_top. The defect matrix is Hermitian, so the norm is the
// largest |eigenvalue|.
//
// band_top <= 0 selects the full grid. Note that the full-grid defect is
// O(1) on any finite grid: rows near the top edge scatter above w_max, so
// their completeness sum is necessarily truncated. That is a property of
// the band edge, not an accuracy problem; the identity is certified over
// [w_min, certified_band_top()] instead.
inline double symplectic_defect(const BogoliubovKernel& ker, double band_top = 0.0) {
    CMatrix M = ker.P * ker.P.adjoint() - ker.Q * ker.Q.adjoint();
    M -= CMatrix::Identity(M.rows(), M.cols());
    Eigen::Index m = M.rows();
    if (band_top > 0.0) {
        m = 0;
        while (m < M.rows() && ker.fgrid.node(m) <= band_top) ++m;
        if (m == 0) throw GridMismatch("certified band is below the frequency grid");
    }
    CMatrix blk = 0.5 * (M.topLeftCorner(m, m) + M.topLeftCorner(m, m).adjoint());
    Eigen::SelfAdjointEigenSolver<CMatrix> es(blk, Eigen::EigenvaluesOnly);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

} // namespace trwf
