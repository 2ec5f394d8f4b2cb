#pragma once

#include "lowmach/dynamics.hpp"
#include "lowmach/field.hpp"

#include <cstdint>
#include <random>

namespace lowmach::testing {

// Random real field with all modes |k_i| <= band populated.
inline Field random_field(const TorusGrid& g, std::uint64_t seed, int band = 5) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Field f(g, Repr::spectral);
    const int b1 = g.dim() == 2 ? band : 0;
    for (int k0 = -band; k0 <= band; ++k0)
        for (int k1 = 0; k1 <= b1; ++k1) {
            if (k1 == 0 && k0 < 0) continue;
            const double scale = double(g.size()) / (1.0 + k0 * k0 + k1 * k1);
            Field::complex c(u(rng) * scale, (k0 == 0 && k1 == 0) ? 0.0 : u(rng) * scale);
            f.set_coefficient(k0, k1, c);
        }
    return f.to_physical();
}

inline VectorField random_vector(const TorusGrid& g, std::uint64_t seed, int band = 5) {
    std::vector<Field> c;
    for (int a = 0; a < g.dim(); ++a) c.push_back(random_field(g, seed * 7919 + std::uint64_t(a), band));
    return VectorField(std::move(c));
}

inline double max_diff(const Field& a, const Field& b) { return (a.to_physical() - b.to_physical()).max_abs(); }

inline double max_diff(const VectorField& a, const VectorField& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, max_diff(a[i], b[i]));
    return m;
}

}  // namespace lowmach::testing
