#pragma once
#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "trwf/kernel.hpp"

namespace trwf {

// Result of reducing a Bogoliubov kernel to independent single-mode squeezers:
// P = sum_j conj(Psi_j) cosh(r_j) Phi_j^T + passive remainder,
// Q = sum_j conj(Psi_j) sinh(r_j) Phi_j^H,
// where Psi_j / Phi_j are the weight-scaled output/input mode columns. psi and
// phi store the continuum-normalized functions (sum w |psi(w)|^2 = 1); r is
// sorted descending and truncated at sinh(r) < truncation_threshold.
struct PrincipalModeSet {
    FrequencyGrid fgrid;
    std::vector<double> r;
    CMatrix psi; // n x m output modes (columns)
    CMatrix phi; // n x m input modes
    CMatrix alpha;      // m x n_t temporal field modes, filled by field_modes()
    TimeGrid alpha_tgrid; // time grid alpha is sampled on
    double truncation_threshold = 1e-3;
    double discarded_sinh2 = 0.0; // sum of sinh^2 r over dropped modes

    std::size_t mode_count() const { return r.size(); }

    // Fraction of the total photon weight sum sinh^2 r_j lost to truncation.
    double completeness_defect() const {
        double kept = 0.0;
        for (double rj : r) kept += std::sinh(rj) * std::sinh(rj);
        const double total = kept + discarded_sinh2;
        return total > 0.0 ? discarded_sinh2 / total : 0.0;
    }
};

namespace detail {

// Jointly diagonalize commuting real symmetric X, Y: returns orthogonal R with
// R^T X R and R^T Y R both diagonal. Blocks here are tiny (degenerate
// singular-value clusters), so the eigen-then-subdiagonalize route is enough.
inline Eigen::MatrixXd joint_diagonalize(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ex(X);
    Eigen::MatrixXd R = ex.eigenvectors();
    Eigen::VectorXd lam = ex.eigenvalues();
    const double tol = 1e-8 * std::max(1.0, lam.cwiseAbs().maxCoeff());
    Eigen::Index i = 0;
    while (i < lam.size()) {
        Eigen::Index j = i + 1;
        while (j < lam.size() && std::abs(lam[j] - lam[i]) <= tol) ++j;
        if (j - i > 1) {
            Eigen::MatrixXd Rc = R.middleCols(i, j - i);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ey(Rc.transpose() * Y * Rc);
            R.middleCols(i, j - i) = Rc * ey.eigenvectors();
        }
        i = j;
    }
    return R;
}

} // namespace detail

// SVD-based Bloch-Messiah reduction. The SVD Q = A S B^H fixes the mode pair
// only up to a common unitary per degenerate singular-value block; the block
// is resolved against P: M = A^H P conj(B) equals cosh(r) W^H W* with W the
// residual mixing, and W^H W* is unitary symmetric, so it splits as
// R diag(e^{i phi}) R^T with commuting real/imaginary parts. W^H =
// R diag(e^{i phi/2}) restores the pairing. Remaining freedom is one sign per
// mode, fixed by making the largest-modulus component of psi_j have positive
// real part.
inline PrincipalModeSet bloch_messiah(const BogoliubovKernel& ker,
                                      double truncation_threshold = 1e-3) {
    const Eigen::Index n = ker.Q.rows();
    Eigen::BDCSVD<CMatrix> svd(ker.Q, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Eigen::VectorXd sv = svd.singularValues();

    Eigen::Index m = 0;
    while (m < n && sv[m] >= truncation_threshold) ++m;

    PrincipalModeSet out;
    out.fgrid = ker.fgrid;
    out.truncation_threshold = truncation_threshold;
    for (Eigen::Index j = m; j < sv.size(); ++j) out.discarded_sinh2 += sv[j] * sv[j];
    if (m == 0) return out;

    CMatrix A = svd.matrixU().leftCols(m);  // approximates conj(Psi) * W
    CMatrix B = svd.matrixV().leftCols(m);  // approximates Phi * W
    std::vector<double> r(m);
    for (Eigen::Index j = 0; j < m; ++j) r[j] = std::asinh(sv[j]);

    CMatrix M = A.adjoint() * ker.P * B.conjugate();

    // Degenerate blocks share the phase fix; relative gap below tol groups.
    const double degen_tol = 1e-8;
    std::vector<std::pair<Eigen::Index, Eigen::Index>> degen_blocks;
    Eigen::Index i = 0;
    while (i < m) {
        Eigen::Index j = i + 1;
        while (j < m && (sv[i] - sv[j]) <= degen_tol * sv[i]) ++j;
        const Eigen::Index b = j - i;
        if (b > 1) degen_blocks.emplace_back(i, b);
        const double c = std::cosh(r[i]);
        CMatrix T = M.block(i, i, b, b) / c;
        Eigen::MatrixXd R = detail::joint_diagonalize(T.real(), T.imag());
        CMatrix Twist = R.transpose() * T * R; // ~ diag(e^{i phi})
        CMatrix Wh = CMatrix::Zero(b, b);
        for (Eigen::Index k = 0; k < b; ++k) {
            const double phi = std::arg(Twist(k, k));
            Wh.col(k) = R.col(k) * std::polar(1.0, 0.5 * phi);
        }
        A.middleCols(i, b) = A.middleCols(i, b) * Wh;
        B.middleCols(i, b) = B.middleCols(i, b) * Wh;
        i = j;
    }

    // After the fix, A = conj(Psi) and B = Phi. Verify the pairing actually
    // reproduces P on the retained block before trusting it.
    CMatrix Mfix = A.adjoint() * ker.P * B.conjugate();
    double resid = 0.0;
    for (Eigen::Index a = 0; a < m; ++a)
        for (Eigen::Index bcol = 0; bcol < m; ++bcol) {
            const Complex want = (a == bcol) ? Complex(std::cosh(r[a]), 0.0) : Complex(0.0, 0.0);
            resid = std::max(resid, std::abs(Mfix(a, bcol) - want));
        }
    if (resid > 0.05)
        throw DecompositionFailed("mode pairing residual " + std::to_string(resid));

    const std::vector<double> wq = ker.fgrid.weights();
    out.r = std::move(r);
    out.psi.resize(n, m);
    out.phi.resize(n, m);
    for (Eigen::Index k = 0; k < n; ++k) {
        const double s = 1.0 / std::sqrt(wq[std::size_t(k)]);
        for (Eigen::Index jm = 0; jm < m; ++jm) {
            out.psi(k, jm) = std::conj(A(k, jm)) * s;
            out.phi(k, jm) = B(k, jm) * s;
        }
    }

    // Sign canonicalization (the only gauge freedom preserving both kernels).
    for (Eigen::Index jm = 0; jm < m; ++jm) {
        Eigen::Index kmax = 0;
        double best = -1.0;
        for (Eigen::Index k = 0; k < n; ++k)
            if (std::abs(out.psi(k, jm)) > best) { best = std::abs(out.psi(k, jm)); kmax = k; }
        const Complex lead = out.psi(kmax, jm);
        const bool flip = lead.real() < 0.0 || (lead.real() == 0.0 && lead.imag() < 0.0);
        if (flip) {
            out.psi.col(jm) *= -1.0;
            out.phi.col(jm) *= -1.0;
        }
    }

    // Within a degenerate block the ordering by singular value is arbitrary;
    // break the tie by ascending spectral centroid of psi_j.
    if (!degen_blocks.empty()) {
        const std::vector<double> w = ker.fgrid.nodes();
        auto centroid = [&](Eigen::Index jm) {
            double num = 0.0, den = 0.0;
            for (Eigen::Index k = 0; k < n; ++k) {
                const double mass = wq[std::size_t(k)] * std::norm(out.psi(k, jm));
                num += w[std::size_t(k)] * mass;
                den += mass;
            }
            return num / den;
        };
        for (auto [start, len] : degen_blocks) {
            std::vector<Eigen::Index> order(len);
            std::vector<double> cent(len);
            for (Eigen::Index k = 0; k < len; ++k) { order[k] = k; cent[k] = centroid(start + k); }
            std::sort(order.begin(), order.end(),
                      [&](Eigen::Index a, Eigen::Index b) { return cent[a] < cent[b]; });
            CMatrix psi_blk = out.psi.middleCols(start, len);
            CMatrix phi_blk = out.phi.middleCols(start, len);
            for (Eigen::Index k = 0; k < len; ++k) {
                out.psi.col(start + k) = psi_blk.col(order[k]);
                out.phi.col(start + k) = phi_blk.col(order[k]);
            }
        }
    }
    return out;
}

// Largest absolute element of U_j^T P conj(V_k) - delta_jk cosh r_j and
// U_j^T Q V_k - delta_jk sinh r_j over the retained modes: how well the
// truncated reduction reproduces the kernel it came from.
inline double mode_reconstruction_residual(const BogoliubovKernel& ker,
                                           const PrincipalModeSet& ms) {
    const Eigen::Index n = ker.P.rows();
    const Eigen::Index m = Eigen::Index(ms.mode_count());
    if (m == 0) return 0.0;
    const std::vector<double> wq = ker.fgrid.weights();
    CMatrix U(n, m), V(n, m);
    for (Eigen::Index k = 0; k < n; ++k) {
        const double s = std::sqrt(wq[std::size_t(k)]);
        for (Eigen::Index j = 0; j < m; ++j) {
            U(k, j) = ms.psi(k, j) * s;
            V(k, j) = ms.phi(k, j) * s;
        }
    }
    CMatrix MP = U.transpose() * ker.P * V.conjugate();
    CMatrix MQ = U.transpose() * ker.Q * V;
    double resid = 0.0;
    for (Eigen::Index a = 0; a < m; ++a)
        for (Eigen::Index b = 0; b < m; ++b) {
            const Complex wantP = a == b ? Complex(std::cosh(ms.r[a]), 0) : Complex(0, 0);
            const Complex wantQ = a == b ? Complex(std::sinh(ms.r[a]), 0) : Complex(0, 0);
            resid = std::max(resid, std::abs(MP(a, b) - wantP));
            resid = std::max(resid, std::abs(MQ(a, b) - wantQ));
        }
    return resid;
}

// Temporal profiles through which each principal mode enters the
// positive-frequency field:
//   alpha_j(t) = -i sqrt(C) Int dw sqrt(w) conj(psi_j(w)) e^{-i w t}.
// The prefactor matches the gate calibration [E_d, E_d_pi2] = -2iC ln16/dp^2.
// Stored into ms.alpha as an m x n_t matrix (one row per mode) and returned.
inline const CMatrix& field_modes(PrincipalModeSet& ms, const TimeGrid& tgrid,
                                  double field_norm_c = 1.0) {
    const std::vector<double> w = ms.fgrid.nodes();
    const std::vector<double> wq = ms.fgrid.weights();
    const std::vector<double> t = tgrid.nodes();
    CMatrix E(tgrid.n, w.size());
    for (std::size_t i = 0; i < tgrid.n; ++i)
        for (std::size_t k = 0; k < w.size(); ++k)
            E(i, k) = wq[k] * std::sqrt(w[k]) * std::polar(1.0, -w[k] * t[i]);
    ms.alpha_tgrid = tgrid;
    ms.alpha = (Complex(0.0, -1.0) * std::sqrt(field_norm_c) * (E * ms.psi.conjugate())).transpose();
    return ms.alpha;
}

// Closed-form mode profile c * E(tau(t)) * exp(i(sign*pi/2 - f(-t))): the
// analytic solution shape for the dominant pair. f is the caller's phase
// function; only the modulus is fixed by the envelope.
inline std::vector<Complex> analytic_mode_shape(const DrivingPulse& pulse,
                                                const TimeGrid& tgrid,
                                                double c, int half_pi_sign,
                                                const std::function<double(double)>& f = {}) {
    std::vector<Complex> a(tgrid.n);
    const double s = half_pi_sign >= 0 ? 1.0 : -1.0;
    for (std::size_t i = 0; i < tgrid.n; ++i) {
        const double t = tgrid.node(i);
        const double ph = s * (kTwoPi / 4.0) - (f ? f(-t) : 0.0);
        a[i] = c * pulse.envelope(pulse.tau(t)) * std::polar(1.0, ph);
    }
    return a;
}

} // namespace trwf
