#pragma once

#include "lowmach/constitutive.hpp"
#include "lowmach/field.hpp"

#include <stdexcept>

namespace lowmach {

/// Compressible unknowns in conservative form: density, momentum rho*u and
/// phase density rho*phi, for Mach parameter eps.
struct CompressibleState {
    double eps = 1.0;
    Field rho;
    VectorField mom;
    Field q;
    ModelKind model = ModelKind::cahn_hilliard;

    const TorusGrid& grid() const { return rho.grid(); }

    void validate() const {
        if (!(eps > 0.0)) throw std::invalid_argument("CompressibleState: eps must be > 0");
        if (int(mom.size()) != rho.grid().dim())
            throw std::invalid_argument("CompressibleState: momentum component count != dim");
        if (!(mom.grid() == rho.grid()) || !(q.grid() == rho.grid()))
            throw std::invalid_argument("CompressibleState: fields on different grids");
    }

    CompressibleState to_physical() const { return {eps, rho.to_physical(), mom.to_physical(), q.to_physical(), model}; }
};

/// Incompressible unknowns: divergence-free velocity and phase field.
struct IncompressibleState {
    VectorField u;
    Field phi;
    ModelKind model = ModelKind::cahn_hilliard;

    const TorusGrid& grid() const { return phi.grid(); }

    IncompressibleState to_physical() const { return {u.to_physical(), phi.to_physical(), model}; }
};

}  // namespace lowmach
