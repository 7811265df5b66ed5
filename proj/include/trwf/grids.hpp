#pragma once
#include <cmath>
#include <cstddef>
#include <vector>

#include "trwf/errors.hpp"

// Units everywhere: time in fs, angular frequency in rad/fs.
// 1 THz of ordinary frequency is 2*pi*1e-3 rad/fs.

namespace trwf {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;
inline constexpr double kPi = 0.5 * kTwoPi;

// rad/fs per THz (ordinary frequency)
inline constexpr double kRadFsPerThz = kTwoPi * 1e-3;

inline double thz_to_radfs(double f_thz) { return f_thz * kRadFsPerThz; }
inline double radfs_to_thz(double w) { return w / kRadFsPerThz; }

// Uniform sampling of [t_min, t_max], n >= 2 nodes, endpoints included.
struct TimeGrid {
    double t_min = 0.0;
    double t_max = 0.0;
    std::size_t n = 0;

    TimeGrid() = default;
    TimeGrid(double a, double b, std::size_t n_) : t_min(a), t_max(b), n(n_) {
        if (!(b > a) || n < 2)
            throw ConfigInvalid("TimeGrid requires t_max > t_min and n >= 2");
    }

    double dt() const { return (t_max - t_min) / double(n - 1); }
    double node(std::size_t i) const { return t_min + dt() * double(i); }

    std::vector<double> nodes() const {
        std::vector<double> t(n);
        for (std::size_t i = 0; i < n; ++i) t[i] = node(i);
        return t;
    }

    // trapezoid weights; integrate f dt ~ sum w_i f_i
    std::vector<double> weights() const {
        std::vector<double> w(n, dt());
        w.front() *= 0.5;
        w.back() *= 0.5;
        return w;
    }
};

// Uniform positive angular-frequency grid. The lower edge must stay strictly
// above zero: kernel rows carry 1/sqrt(w).
struct FrequencyGrid {
    double w_min = 0.0;
    double w_max = 0.0;
    std::size_t n = 0;

    FrequencyGrid() = default;
    FrequencyGrid(double a, double b, std::size_t n_) : w_min(a), w_max(b), n(n_) {
        if (n < 2) throw ConfigInvalid("FrequencyGrid requires n >= 2");
        if (!(w_min > 0.0)) throw SingularFrequency("w_min must be > 0");
        if (!(w_max > w_min)) throw SingularFrequency("w_max must exceed w_min");
    }

    double dw() const { return (w_max - w_min) / double(n - 1); }
    double node(std::size_t i) const { return w_min + dw() * double(i); }

    std::vector<double> nodes() const {
        std::vector<double> w(n);
        for (std::size_t i = 0; i < n; ++i) w[i] = node(i);
        return w;
    }

    std::vector<double> weights() const {
        std::vector<double> w(n, dw());
        w.front() *= 0.5;
        w.back() *= 0.5;
        return w;
    }
};

// Square phase-space grid shared by characteristic functions and Wigner maps.
struct PhaseSpaceGrid {
    double half_width = 5.0; // axes run [-half_width, half_width]
    std::size_t n = 256;     // nodes per axis, endpoints included

    PhaseSpaceGrid() = default;
    PhaseSpaceGrid(double hw, std::size_t n_) : half_width(hw), n(n_) {
        if (!(hw > 0.0) || n < 8)
            throw ConfigInvalid("PhaseSpaceGrid requires half_width > 0 and n >= 8");
    }

    double step() const { return 2.0 * half_width / double(n - 1); }
    double node(std::size_t i) const { return -half_width + step() * double(i); }

    std::vector<double> nodes() const {
        std::vector<double> x(n);
        for (std::size_t i = 0; i < n; ++i) x[i] = node(i);
        return x;
    }

    bool operator==(const PhaseSpaceGrid& o) const {
        return half_width == o.half_width && n == o.n;
    }
};

} // namespace trwf
