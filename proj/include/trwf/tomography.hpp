#pragma once
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <fftw3.h>

#include "trwf/phase_space.hpp"

namespace trwf {

// splitmix64 step; combines (seed, phase index, delay index) into one
// independent stream id so parallel sampling never shares a generator.
inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t phase_idx,
                                 std::uint64_t delay_idx) {
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ull;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    };
    return mix(mix(mix(seed) ^ phase_idx) ^ (delay_idx << 1 | 1));
}

namespace detail {

// xoshiro-free deterministic uniforms: mt19937_64 with fixed bit mapping.
// std::normal_distribution is implementation-defined, so Box-Muller is done
// by hand to keep sample sets bit-reproducible across standard libraries.
class SampleRng {
public:
    explicit SampleRng(std::uint64_t seed) : gen_(seed) {}

    double uniform() { // [0, 1)
        return double(gen_() >> 11) * 0x1.0p-53;
    }

    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = uniform(), u2 = uniform();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        const double rad = std::sqrt(-2.0 * std::log(u1));
        const double ang = kTwoPi * u2;
        spare_ = rad * std::sin(ang);
        have_spare_ = true;
        return rad * std::cos(ang);
    }

private:
    std::mt19937_64 gen_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

} // namespace detail

struct QuadratureSampleSet {
    double phase = 0.0;
    double t_d = 0.0;
    std::vector<double> samples;
    std::uint64_t seed = 0;
};

// Rotated-quadrature variance [cos sin] Sigma [cos sin]^T; Gaussian states
// sample directly from it.
inline QuadratureSampleSet sample_quadratures(const GaussianState& st, double phase,
                                              double t_d, std::size_t count,
                                              std::uint64_t seed) {
    const double c = std::cos(phase), s = std::sin(phase);
    const double var = c * c * st.cov(0, 0) + 2.0 * c * s * st.cov(0, 1) + s * s * st.cov(1, 1);
    const double mu = c * st.mean[0] + s * st.mean[1];
    QuadratureSampleSet out;
    out.phase = phase;
    out.t_d = t_d;
    out.seed = seed;
    out.samples.resize(count);
    detail::SampleRng rng(seed);
    const double sd = std::sqrt(var);
    for (double& q : out.samples) q = mu + sd * rng.normal();
    return out;
}

struct MarginalSet {
    std::vector<double> phases;
    PhaseSpaceGrid q_axis;
    Eigen::MatrixXd pr; // n_phases x n_q
};

// Rotated Radon projection pr_phi(q) = Int W(q cos - s sin, q sin + s cos) ds
// by bilinear interpolation; the grid is treated as 0 outside its box.
inline MarginalSet marginals_from_wigner(const WignerGrid& W,
                                         const std::vector<double>& phases) {
    MarginalSet ms;
    ms.phases = phases;
    ms.q_axis = W.x_axis;
    const std::size_t nq = ms.q_axis.n;
    ms.pr.setZero(Eigen::Index(phases.size()), Eigen::Index(nq));

    const double dx = W.x_axis.step(), dp = W.p_axis.step();
    const double ds = std::min(dx, dp);
    const double smax = std::hypot(W.x_axis.half_width, W.p_axis.half_width);
    const auto ns = std::size_t(std::ceil(2.0 * smax / ds)) + 1;

    auto interp = [&](double x, double p) -> double {
        const double fx = (x + W.x_axis.half_width) / dx;
        const double fp = (p + W.p_axis.half_width) / dp;
        if (fx < 0.0 || fp < 0.0) return 0.0;
        const auto i = std::size_t(fx), j = std::size_t(fp);
        if (i + 1 >= W.x_axis.n || j + 1 >= W.p_axis.n) return 0.0;
        const double ax = fx - double(i), ap = fp - double(j);
        return (1 - ax) * ((1 - ap) * W.values(i, j) + ap * W.values(i, j + 1)) +
               ax * ((1 - ap) * W.values(i + 1, j) + ap * W.values(i + 1, j + 1));
    };

    for (std::size_t f = 0; f < phases.size(); ++f) {
        const double c = std::cos(phases[f]), sn = std::sin(phases[f]);
        for (std::size_t iq = 0; iq < nq; ++iq) {
            const double q = ms.q_axis.node(iq);
            double acc = 0.0;
            for (std::size_t k = 0; k < ns; ++k) {
                const double s = -smax + double(k) * ds;
                const double wq = (k == 0 || k == ns - 1) ? 0.5 : 1.0;
                acc += wq * interp(q * c - s * sn, q * sn + s * c);
            }
            ms.pr(f, iq) = acc * ds;
        }
    }
    return ms;
}

// Inverse-CDF sampling from one tabulated marginal. The projection of a
// Wigner function is a true probability density; negative excursions beyond
// grid error mean the grid itself is wrong.
inline QuadratureSampleSet sample_quadratures(const WignerGrid& W, double phase,
                                              double t_d, std::size_t count,
                                              std::uint64_t seed) {
    MarginalSet ms = marginals_from_wigner(W, {phase});
    const std::size_t nq = ms.q_axis.n;
    std::vector<double> density(nq);
    double clipped = 0.0, total = 0.0;
    for (std::size_t i = 0; i < nq; ++i) {
        const double v = ms.pr(0, i);
        density[i] = std::max(v, 0.0);
        if (v < 0.0) clipped -= v;
        total += density[i];
    }
    if (clipped * ms.q_axis.step() > 1e-4)
        throw NegativeMarginal("clipped probability mass " +
                               std::to_string(clipped * ms.q_axis.step()));

    // piecewise-constant bins centered on the nodes
    std::vector<double> cdf(nq + 1, 0.0);
    for (std::size_t i = 0; i < nq; ++i) cdf[i + 1] = cdf[i] + density[i] / total;

    QuadratureSampleSet out;
    out.phase = phase;
    out.t_d = t_d;
    out.seed = seed;
    out.samples.resize(count);
    detail::SampleRng rng(seed);
    const double q0 = -ms.q_axis.half_width - 0.5 * ms.q_axis.step();
    for (double& q : out.samples) {
        const double u = rng.uniform();
        const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        const auto bin = std::size_t(std::max<std::ptrdiff_t>(it - cdf.begin() - 1, 0));
        const double lo = cdf[bin], hi = cdf[std::min(bin + 1, nq)];
        const double frac = hi > lo ? (u - lo) / (hi - lo) : 0.5;
        q = q0 + (double(bin) + frac) * ms.q_axis.step();
    }
    return out;
}

// G_N maps the order-N symmetrized moment vector
// (<X^N>_S, <X^{N-1}P>_S, ..., <P^N>_S) to the rotated moments <X_phi^N>:
// row(phi)_j = binom(N, j) cos^{N-j} sin^j.
struct MomentMatrix {
    Eigen::MatrixXd G;
    Eigen::MatrixXd Ginv;
    double condition = 0.0;
};

inline MomentMatrix moment_matrix(int order, const std::vector<double>& phases) {
    const auto n = std::size_t(order) + 1;
    if (phases.size() != n)
        throw InsufficientPhases("order " + std::to_string(order) + " needs " +
                                 std::to_string(n) + " phases");
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a + 1; b < n; ++b) {
            const double d = std::remainder(phases[a] - phases[b], kTwoPi / 2.0);
            if (std::abs(d) < 1e-9)
                throw DuplicatePhases("phases " + std::to_string(phases[a]) + " and " +
                                      std::to_string(phases[b]) + " coincide mod pi");
        }

    MomentMatrix mm;
    mm.G.resize(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        const double c = std::cos(phases[i]), s = std::sin(phases[i]);
        double binom = 1.0;
        for (std::size_t j = 0; j < n; ++j) {
            mm.G(i, j) = binom * std::pow(c, double(order - int(j))) * std::pow(s, double(j));
            binom *= double(order - int(j)) / double(j + 1);
        }
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(mm.G, Eigen::ComputeFullU | Eigen::ComputeFullV);
    mm.condition = svd.singularValues()(0) / svd.singularValues()(Eigen::Index(n) - 1);
    mm.Ginv = svd.solve(Eigen::MatrixXd::Identity(Eigen::Index(n), Eigen::Index(n)));
    return mm;
}

// Symmetrized moments <X^n P^m>_S for n+m <= order; moment(0,0) = 1.
struct MomentSet {
    int order = 0;
    Eigen::MatrixXd mom; // (order+1)^2, entry (n, m); unused corner left 0
    double max_condition = 0.0;

    double moment(int n, int m) const { return mom(n, m); }
};

// Order-by-order inversion: the k-th raw moments at k+1 distinct phases
// determine all symmetrized moments of total degree k.
inline MomentSet estimate_moments(const std::vector<QuadratureSampleSet>& sets, int order) {
    if (sets.size() < std::size_t(order) + 1)
        throw InsufficientPhases(std::to_string(sets.size()) + " phase sets for order " +
                                 std::to_string(order));
    for (const auto& s : sets)
        if (std::abs(s.t_d - sets[0].t_d) > 1e-12)
            throw ConfigInvalid("sample sets mix delays");

    MomentSet out;
    out.order = order;
    out.mom.setZero(order + 1, order + 1);
    out.mom(0, 0) = 1.0;

    // raw moments per phase, up to the full order
    Eigen::MatrixXd raw(sets.size(), order + 1);
    for (std::size_t i = 0; i < sets.size(); ++i) {
        raw(Eigen::Index(i), 0) = 1.0;
        for (int k = 1; k <= order; ++k) {
            double acc = 0.0;
            for (double q : sets[i].samples) acc += std::pow(q, k);
            raw(Eigen::Index(i), k) = acc / double(sets[i].samples.size());
        }
    }

    for (int k = 1; k <= order; ++k) {
        std::vector<double> phases(std::size_t(k) + 1);
        Eigen::VectorXd rhs(k + 1);
        for (int i = 0; i <= k; ++i) {
            phases[std::size_t(i)] = sets[std::size_t(i)].phase;
            rhs(i) = raw(i, k);
        }
        MomentMatrix mm = moment_matrix(k, phases);
        out.max_condition = std::max(out.max_condition, mm.condition);
        Eigen::VectorXd sym = mm.Ginv * rhs;
        for (int j = 0; j <= k; ++j) out.mom(k - j, j) = sym(j);
    }
    return out;
}

// Exact symmetrized moments by grid quadrature of a Wigner function; the
// oracle partner of the sampling estimator.
inline MomentSet moments_of_wigner(const WignerGrid& W, int order) {
    MomentSet out;
    out.order = order;
    out.mom.setZero(order + 1, order + 1);
    for (std::size_t i = 0; i < W.x_axis.n; ++i) {
        const double wx = detail::ps_weight(W.x_axis, i);
        const double x = W.x_axis.node(i);
        for (std::size_t j = 0; j < W.p_axis.n; ++j) {
            const double mass = wx * detail::ps_weight(W.p_axis, j) * W.values(i, j);
            const double p = W.p_axis.node(j);
            double xn = 1.0;
            for (int n = 0; n <= order; ++n) {
                double pm = 1.0;
                for (int m = 0; n + m <= order; ++m) {
                    out.mom(n, m) += mass * xn * pm;
                    pm *= p;
                }
                xn *= x;
            }
        }
    }
    return out;
}

namespace detail {

// physicists' Hermite coefficient table rows H_0..H_order via the recurrence
// H_{k+1} = 2x H_k - 2k H_{k-1}
inline std::vector<std::vector<double>> hermite_coeffs(int order) {
    std::vector<std::vector<double>> H(std::size_t(order) + 1);
    H[0] = {1.0};
    if (order >= 1) H[1] = {0.0, 2.0};
    for (int k = 2; k <= order; ++k) {
        auto& h = H[std::size_t(k)];
        h.assign(std::size_t(k) + 1, 0.0);
        for (std::size_t j = 0; j + 1 <= std::size_t(k); ++j)
            h[j + 1] += 2.0 * H[std::size_t(k - 1)][j];
        for (std::size_t j = 0; j < H[std::size_t(k - 2)].size(); ++j)
            h[j] -= 2.0 * double(k - 1) * H[std::size_t(k - 2)][j];
    }
    return H;
}

} // namespace detail

struct GCCoefficients {
    int order = 0;
    Eigen::MatrixXd C; // (order+1)^2, entry (n, m) for n+m <= order
};

// C_nm = <H_n(X) H_m(P)>_S / (2^{n+m} n! m!), expanded through the Hermite
// coefficient table. Orthogonality against W_vac makes the vacuum give
// exactly C_nm = delta_n0 delta_m0.
inline GCCoefficients gram_charlier_coefficients(const MomentSet& moments) {
    const int N = moments.order;
    const auto H = detail::hermite_coeffs(N);
    GCCoefficients gc;
    gc.order = N;
    gc.C.setZero(N + 1, N + 1);
    for (int n = 0; n <= N; ++n)
        for (int m = 0; n + m <= N; ++m) {
            double acc = 0.0;
            for (std::size_t j = 0; j < H[std::size_t(n)].size(); ++j) {
                if (H[std::size_t(n)][j] == 0.0) continue;
                for (std::size_t k = 0; k < H[std::size_t(m)].size(); ++k) {
                    if (H[std::size_t(m)][k] == 0.0) continue;
                    acc += H[std::size_t(n)][j] * H[std::size_t(m)][k] *
                           moments.moment(int(j), int(k));
                }
            }
            double fact = std::pow(2.0, n + m);
            for (int t = 2; t <= n; ++t) fact *= t;
            for (int t = 2; t <= m; ++t) fact *= t;
            gc.C(n, m) = acc / fact;
        }
    return gc;
}

// Truncated expansion W = sum_{n+m<=N} C_nm H_n(x) H_m(p) W_vac(x, p).
inline WignerGrid gram_charlier(const MomentSet& moments,
                                const PhaseSpaceGrid& x_axis = PhaseSpaceGrid{},
                                const PhaseSpaceGrid& p_axis = PhaseSpaceGrid{}) {
    if (moments.order < 2) throw ConfigInvalid("expansion needs moments of order >= 2");
    const int N = moments.order;
    const GCCoefficients gc = gram_charlier_coefficients(moments);

    // Hermite values H_n(axis node) by recurrence
    auto herm_table = [N](const PhaseSpaceGrid& g) {
        Eigen::MatrixXd T(N + 1, g.n);
        for (std::size_t i = 0; i < g.n; ++i) {
            const double x = g.node(i);
            T(0, i) = 1.0;
            if (N >= 1) T(1, i) = 2.0 * x;
            for (int k = 2; k <= N; ++k)
                T(k, i) = 2.0 * x * T(k - 1, i) - 2.0 * (k - 1) * T(k - 2, i);
        }
        return T;
    };
    const Eigen::MatrixXd Hx = herm_table(x_axis), Hp = herm_table(p_axis);

    WignerGrid W;
    W.x_axis = x_axis;
    W.p_axis = p_axis;
    W.values.resize(x_axis.n, p_axis.n);
    const double inv_pi = 2.0 / kTwoPi;
    for (std::size_t i = 0; i < x_axis.n; ++i) {
        const double x = x_axis.node(i);
        for (std::size_t j = 0; j < p_axis.n; ++j) {
            const double p = p_axis.node(j);
            double poly = 0.0;
            for (int n = 0; n <= N; ++n)
                for (int m = 0; n + m <= N; ++m)
                    if (gc.C(n, m) != 0.0) poly += gc.C(n, m) * Hx(n, i) * Hp(m, j);
            W.values(i, j) = poly * inv_pi * std::exp(-x * x - p * p);
        }
    }
    return W;
}

namespace detail {

// in-place complex DFT through FFTW; sign = FFTW_FORWARD or FFTW_BACKWARD
inline void fft(std::vector<Complex>& buf, int sign) {
    fftw_plan plan = fftw_plan_dft_1d(int(buf.size()),
                                      reinterpret_cast<fftw_complex*>(buf.data()),
                                      reinterpret_cast<fftw_complex*>(buf.data()),
                                      sign, FFTW_ESTIMATE);
    fftw_execute(plan);
    fftw_destroy_plan(plan);
}

} // namespace detail

// Filtered back-projection with a hard-cutoff ramp filter (0.8 x Nyquist).
// Marginals are zero-padded to four times their length: the ramp kernel's
// 1/q^2 tail must neither wrap around nor be sampled too coarsely near DC.
inline WignerGrid inverse_radon(const MarginalSet& ms,
                                const PhaseSpaceGrid& x_axis = PhaseSpaceGrid{},
                                const PhaseSpaceGrid& p_axis = PhaseSpaceGrid{},
                                double cutoff_frac = 0.8) {
    const std::size_t nphi = ms.phases.size();
    if (nphi < 16) throw TooFewPhases(std::to_string(nphi) + " phases, need >= 16");
    const std::size_t nq = ms.q_axis.n;
    const double dq = ms.q_axis.step();
    const std::size_t L = 4 * nq;
    const double dxi = kTwoPi / (double(L) * dq);
    const double cutoff = cutoff_frac * (kTwoPi / 2.0) / dq;

    Eigen::MatrixXd filtered(nphi, nq);
    std::vector<Complex> buf(L);
    for (std::size_t f = 0; f < nphi; ++f) {
        std::fill(buf.begin(), buf.end(), Complex(0, 0));
        for (std::size_t i = 0; i < nq; ++i) buf[i] = ms.pr(f, i);
        detail::fft(buf, FFTW_FORWARD);
        for (std::size_t k = 0; k < L; ++k) {
            const double xi = (k <= L / 2) ? dxi * double(k) : dxi * double(k) - kTwoPi / dq;
            buf[k] *= (std::abs(xi) <= cutoff) ? std::abs(xi) : 0.0;
        }
        detail::fft(buf, FFTW_BACKWARD);
        for (std::size_t i = 0; i < nq; ++i)
            filtered(f, i) = buf[i].real() / double(L); // dq*dxi/2pi * unnorm inverse
    }

    WignerGrid W;
    W.x_axis = x_axis;
    W.p_axis = p_axis;
    W.values.setZero(x_axis.n, p_axis.n);
    const double dphi = (kTwoPi / 2.0) / double(nphi);
    for (std::size_t f = 0; f < nphi; ++f) {
        const double c = std::cos(ms.phases[f]), s = std::sin(ms.phases[f]);
        for (std::size_t i = 0; i < x_axis.n; ++i)
            for (std::size_t j = 0; j < p_axis.n; ++j) {
                const double q = x_axis.node(i) * c + p_axis.node(j) * s;
                const double fq = (q + ms.q_axis.half_width) / dq;
                if (fq < 0.0) continue;
                const auto b = std::size_t(fq);
                if (b + 1 >= nq) continue;
                const double a = fq - double(b);
                W.values(i, j) += dphi * ((1 - a) * filtered(f, b) + a * filtered(f, b + 1));
            }
    }
    W.values /= kTwoPi;
    const double norm = wigner_norm(W);
    if (norm > 0.0) W.values /= norm;
    return W;
}

// Single-dominant-mode readout of a covariance series. V_max, V_min and the
// major-axis angle give |theta|, arg theta and r in closed form; r is the
// median over delays carrying weight, alpha comes from regularized
// deconvolution of theta against the gate.
struct ExtractedMode {
    std::vector<double> t_d;
    std::vector<Complex> theta;
    std::vector<Complex> alpha;
    double r = 0.0;
};

inline ExtractedMode extract_mode(const std::vector<GaussianState>& series,
                                  const std::vector<double>& delays,
                                  const GatingFunction& gate,
                                  double field_norm_c = 1.0,
                                  double tikhonov_eps = 1e-3) {
    if (series.size() != delays.size() || series.size() < 4)
        throw ConfigInvalid("covariance series and delay grid mismatch");
    const std::size_t nd = series.size();

    ExtractedMode out;
    out.t_d = delays;
    out.theta.assign(nd, Complex(0, 0));
    std::vector<double> r_at(nd, 0.0);
    bool any = false;
    for (std::size_t d = 0; d < nd; ++d) {
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(series[d].cov);
        const double vmin = es.eigenvalues()(0), vmax = es.eigenvalues()(1);
        if (vmax <= 0.5 + 1e-9 || vmin >= 0.5 - 1e-12) continue;
        any = true;
        // |theta|^2 = (2Vmax-1)(1-2Vmin) / (2(Vmax+Vmin-1)): substituting the
        // single-mode covariance model gives exactly |theta|^2, sinh-free.
        const double num = (2.0 * vmax - 1.0) * (1.0 - 2.0 * vmin);
        const double den = 2.0 * (vmax + vmin - 1.0);
        const double mag = den > 0.0 ? std::sqrt(num / den) : 0.0;
        r_at[d] = 0.5 * std::log((2.0 * vmax - 1.0) / (1.0 - 2.0 * vmin));
        const Eigen::Vector2d axis = es.eigenvectors().col(1); // V_max direction
        const double ang = std::atan2(axis(1), axis(0));
        out.theta[d] = std::polar(mag, ang);
    }
    if (!any) throw NoSqueezingDetected("V_max <= 1/2 at every delay");

    // the axis angle is only defined mod pi: flip signs for delay continuity
    for (std::size_t d = 1; d < nd; ++d) {
        const Complex prev = out.theta[d - 1];
        if (std::abs(prev) > 0.0 &&
            (out.theta[d] * std::conj(prev)).real() < 0.0)
            out.theta[d] = -out.theta[d];
    }

    double peak = 0.0;
    for (const Complex& th : out.theta) peak = std::max(peak, std::norm(th));
    std::vector<double> rs;
    for (std::size_t d = 0; d < nd; ++d)
        if (std::norm(out.theta[d]) > 0.1 * peak) rs.push_back(r_at[d]);
    std::sort(rs.begin(), rs.end());
    out.r = rs[rs.size() / 2];

    // theta(t_d) = -i sqrt(2) N Int R(t - t_d) alpha(t) dt, so in frequency
    // space alpha = i theta_hat / (R_hat sqrt(2) N) with a Tikhonov floor.
    const double dt = delays[1] - delays[0];
    for (std::size_t d = 2; d < nd; ++d)
        if (std::abs((delays[d] - delays[d - 1]) - dt) > 1e-9 * std::abs(dt))
            throw ConfigInvalid("deconvolution needs a uniform delay grid");
    std::vector<Complex> buf(out.theta);
    detail::fft(buf, FFTW_FORWARD);
    double rmax = 0.0;
    for (std::size_t k = 0; k < nd; ++k) {
        const double xi = (k <= nd / 2) ? kTwoPi * double(k) / (double(nd) * dt)
                                        : kTwoPi * double(k) / (double(nd) * dt) - kTwoPi / dt;
        rmax = std::max(rmax, gate.transfer(xi));
    }
    const double floorv = tikhonov_eps * rmax * rmax;
    const double N = gate_normalization(gate, field_norm_c);
    for (std::size_t k = 0; k < nd; ++k) {
        const double xi = (k <= nd / 2) ? kTwoPi * double(k) / (double(nd) * dt)
                                        : kTwoPi * double(k) / (double(nd) * dt) - kTwoPi / dt;
        const double rt = gate.transfer(xi);
        buf[k] *= Complex(0.0, 1.0) * rt / ((rt * rt + floorv) * std::sqrt(2.0) * N);
    }
    detail::fft(buf, FFTW_BACKWARD);
    out.alpha.resize(nd);
    for (std::size_t d = 0; d < nd; ++d) out.alpha[d] = buf[d] / double(nd);
    return out;
}

} // namespace trwf
