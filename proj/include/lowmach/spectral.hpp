#pragma once

#include "lowmach/field.hpp"

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace lowmach {

namespace detail {

inline Field restore(Field spectral, Repr target) {
    return target == Repr::physical ? spectral.to_physical() : spectral;
}

inline void check_axis(const TorusGrid& g, int axis) {
    if (axis < 0 || axis >= g.dim())
        throw std::invalid_argument("axis " + std::to_string(axis) + " out of range for a " +
                                    std::to_string(g.dim()) + "D grid");
}

// Multiplies each coefficient by symbol(s), where s is the spectral slot.
template <class Symbol>
Field apply_symbol(const Field& f, Symbol&& symbol) {
    Field s = f.to_spectral();
    auto c = s.coefficients();
    for (std::size_t i = 0; i < c.size(); ++i) c[i] *= symbol(i);
    return restore(std::move(s), f.repr());
}

}  // namespace detail

/// d^order f / dx_axis^order by multiplication with (i k_axis)^order. The
/// Nyquist mode is dropped for odd orders so the result stays a real field.
/// Returns the result in the input's representation.
inline Field derivative(const Field& f, int axis, int order = 1) {
    const auto& g = f.grid();
    detail::check_axis(g, axis);
    if (order < 1 || order > 4) throw std::invalid_argument("derivative: order must be in 1..4");
    const int nyq = g.n() / 2;
    using C = std::complex<double>;
    return detail::apply_symbol(f, [&](std::size_t s) -> C {
        const int k = g.wavenumber(axis, s);
        if ((order % 2 == 1) && k == nyq) return C{};
        const double kd = double(k);
        switch (order) {
            case 1: return C(0.0, kd);
            case 2: return C(-kd * kd, 0.0);
            case 3: return C(0.0, -kd * kd * kd);
            default: return C(kd * kd * kd * kd, 0.0);
        }
    });
}

inline VectorField gradient(const Field& f) {
    const Field s = f.to_spectral();
    std::vector<Field> comps;
    for (int a = 0; a < f.grid().dim(); ++a) comps.push_back(detail::restore(derivative(s, a, 1), f.repr()));
    return VectorField(std::move(comps));
}

inline Field divergence(const VectorField& v) {
    if (int(v.size()) != v.grid().dim())
        throw std::invalid_argument("divergence: component count must equal grid dimension");
    Field acc = derivative(v[0].to_spectral(), 0, 1);
    for (std::size_t a = 1; a < v.size(); ++a) acc += derivative(v[a].to_spectral(), int(a), 1);
    return detail::restore(std::move(acc), v.repr());
}

inline Field laplacian(const Field& f) {
    const auto& kk = f.grid().k_squared_table();
    return detail::apply_symbol(f, [&](std::size_t s) { return -kk[s]; });
}

inline Field biharmonic(const Field& f) {
    const auto& kk = f.grid().k_squared_table();
    return detail::apply_symbol(f, [&](std::size_t s) { return kk[s] * kk[s]; });
}

inline VectorField laplacian(const VectorField& v) {
    std::vector<Field> c;
    for (const auto& f : v) c.push_back(laplacian(f));
    return VectorField(std::move(c));
}

/// 2/3-rule truncation: zero every coefficient with some |k_i| > floor(n/3).
inline Field dealias(const Field& f) {
    if (!f.is_spectral()) throw std::invalid_argument("dealias requires a spectral field");
    Field out = f;
    auto c = out.coefficients();
    const auto& g = f.grid();
    for (std::size_t s = 0; s < c.size(); ++s)
        if (!g.resolved(s)) c[s] = 0.0;
    return out;
}

inline VectorField dealias(const VectorField& v) {
    std::vector<Field> c;
    for (const auto& f : v) c.push_back(dealias(f));
    return VectorField(std::move(c));
}

/// Spectral inverse of a0 + a2 |k|^2 + a4 |k|^4 (all coefficients >= 0, a0 > 0).
inline Field solve_shifted(const Field& f, double a0, double a2, double a4) {
    if (!(a0 > 0.0)) throw std::invalid_argument("shifted solve: constant shift must be positive");
    if (a2 < 0.0 || a4 < 0.0) throw std::invalid_argument("shifted solve: coefficients must be nonnegative");
    const auto& kk = f.grid().k_squared_table();
    return detail::apply_symbol(f, [&](std::size_t s) { return 1.0 / (a0 + a2 * kk[s] + a4 * kk[s] * kk[s]); });
}

/// Solves (a - b Laplacian) u = f.
inline Field solve_helmholtz(double a, double b, const Field& f) {
    if (!(a > 0.0)) throw std::invalid_argument("solve_helmholtz: a must be > 0 (singular at k = 0)");
    if (b < 0.0) throw std::invalid_argument("solve_helmholtz: b must be >= 0");
    return solve_shifted(f, a, b, 0.0);
}

/// Solves (a + b Biharmonic) u = f.
inline Field solve_biharmonic_shift(double a, double b, const Field& f) {
    if (!(a > 0.0)) throw std::invalid_argument("solve_biharmonic_shift: a must be > 0");
    if (b < 0.0) throw std::invalid_argument("solve_biharmonic_shift: b must be >= 0");
    return solve_shifted(f, a, 0.0, b);
}

/// L2-orthogonal projection onto divergence-free fields, I - k k^T / |k|^2,
/// built from the same wavenumbers the first derivative uses so that the
/// discrete divergence of the result vanishes. The mean (k = 0) is kept.
inline VectorField leray_project(const VectorField& v) {
    const auto& g = v.grid();
    if (g.dim() < 2) throw std::invalid_argument("leray_project: needs dim >= 2");
    if (int(v.size()) != g.dim()) throw std::invalid_argument("leray_project: component count != dim");
    const Repr r = v.repr();
    VectorField s = v.to_spectral();
    auto c0 = s[0].coefficients();
    auto c1 = s[1].coefficients();
    const auto& k0 = g.derivative_wavenumbers(0);
    const auto& k1 = g.derivative_wavenumbers(1);
    for (std::size_t i = 0; i < c0.size(); ++i) {
        const double q = k0[i] * k0[i] + k1[i] * k1[i];
        if (q == 0.0) continue;
        const auto kdotv = k0[i] * c0[i] + k1[i] * c1[i];
        c0[i] -= k0[i] * kdotv / q;
        c1[i] -= k1[i] * kdotv / q;
    }
    return r == Repr::physical ? s.to_physical() : s;
}

/// Integral over the torus.
inline double integrate(const Field& f) {
    const auto& g = f.grid();
    if (f.is_spectral()) return f.coefficients()[0].real() / double(g.size()) * g.volume();
    double sum = 0.0;
    for (double v : f.values()) sum += v;
    return sum * g.cell_volume();
}

inline double mean(const Field& f) { return integrate(f) / f.grid().volume(); }

/// Sum over the full (Hermitian-completed) spectrum of weight(s) |f_k|^2,
/// scaled so that weight == 1 gives the integral of f^2.
template <class Weight>
double weighted_spectral_sum(const Field& f, Weight&& weight) {
    const Field s = f.to_spectral();
    const auto& g = f.grid();
    const auto c = s.coefficients();
    double sum = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) sum += g.hermitian_weight(i) * weight(i) * std::norm(c[i]);
    const double nd = double(g.size());
    return sum * g.volume() / (nd * nd);
}

/// Integral of f*g over the torus via Parseval.
inline double inner(const Field& a, const Field& b) {
    const Field sa = a.to_spectral();
    const Field sb = b.to_spectral();
    const auto& g = a.grid();
    const auto ca = sa.coefficients();
    const auto cb = sb.coefficients();
    double sum = 0.0;
    for (std::size_t i = 0; i < ca.size(); ++i)
        sum += g.hermitian_weight(i) * (ca[i].real() * cb[i].real() + ca[i].imag() * cb[i].imag());
    const double nd = double(g.size());
    return sum * g.volume() / (nd * nd);
}

inline double l2_norm(const Field& f) {
    return std::sqrt(weighted_spectral_sum(f, [](std::size_t) { return 1.0; }));
}

inline double l2_norm(const VectorField& v) {
    double s = 0.0;
    for (const auto& f : v) s += weighted_spectral_sum(f, [](std::size_t) { return 1.0; });
    return std::sqrt(s);
}

inline double max_abs(const VectorField& v) {
    double m = 0.0;
    for (const auto& f : v) m = std::max(m, f.to_physical().max_abs());
    return m;
}

/// Trigonometric interpolation onto a grid with `factor` times as many points
/// per axis (zero padding). A Nyquist coefficient is split evenly between the
/// +n/2 and -n/2 modes of the fine grid.
inline Field oversample(const Field& f, int factor = 2) {
    const auto& g = f.grid();
    const TorusGrid fine(g.dim(), g.n() * factor);
    const Field s = f.to_spectral();
    Field out(fine, Repr::spectral);
    const int nyq = g.n() / 2;
    const double scale = double(fine.size()) / double(g.size());
    auto dst = out.coefficients();
    auto half = [nyq](int k) { return std::abs(k) == nyq ? 0.5 : 1.0; };
    if (g.dim() == 1) {
        for (int ka = 0; ka <= nyq; ++ka) dst[fine.slot(ka).index] = scale * half(ka) * s.coefficient(ka);
    } else {
        for (int ka = -nyq; ka <= nyq; ++ka)
            for (int kb = 0; kb <= nyq; ++kb)
                dst[fine.slot(ka, kb).index] = scale * half(ka) * half(kb) * s.coefficient(ka, kb);
    }
    return out.to_physical();
}

}  // namespace lowmach
