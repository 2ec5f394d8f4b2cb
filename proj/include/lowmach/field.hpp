#pragma once

#include "lowmach/grid.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <stdexcept>
#include <type_traits>
#include <string>
#include <utility>
#include <vector>

namespace lowmach {

enum class Repr { physical, spectral };

inline const char* to_string(Repr r) { return r == Repr::physical ? "physical" : "spectral"; }

/// Scalar field on a TorusGrid, held either as real point values or as
/// half-complex Fourier coefficients (see TorusGrid for the layout).
class Field {
  public:
    using complex = std::complex<double>;

    Field() = default;

    Field(TorusGrid grid, Repr repr) : grid_(std::move(grid)), repr_(repr) {
        if (repr_ == Repr::physical)
            values_.assign(grid_.size(), 0.0);
        else
            coefs_.assign(grid_.spectral_size(), complex{});
    }

    static Field zeros(const TorusGrid& g, Repr r = Repr::physical) { return Field(g, r); }

    static Field constant(const TorusGrid& g, double c) {
        Field f(g, Repr::physical);
        std::fill(f.values_.begin(), f.values_.end(), c);
        return f;
    }

    static Field from_values(const TorusGrid& g, std::vector<double> v) {
        if (v.size() != g.size()) throw std::invalid_argument("Field: value count does not match grid");
        Field f;
        f.grid_ = g;
        f.repr_ = Repr::physical;
        f.values_ = std::move(v);
        return f;
    }

    /// Samples fn(x) in 1D or fn(x, y) in 2D.
    template <class Fn>
    static Field sample(const TorusGrid& g, Fn&& fn) {
        Field f(g, Repr::physical);
        const int n = g.n();
        if (g.dim() == 1) {
            if constexpr (std::is_invocable_r_v<double, Fn, double>) {
                for (int i = 0; i < n; ++i) f.values_[i] = fn(g.coordinate(i));
            } else {
                for (int i = 0; i < n; ++i) f.values_[i] = fn(g.coordinate(i), 0.0);
            }
        } else {
            if constexpr (std::is_invocable_r_v<double, Fn, double, double>) {
                for (int i = 0; i < n; ++i)
                    for (int j = 0; j < n; ++j)
                        f.values_[std::size_t(i) * n + j] = fn(g.coordinate(i), g.coordinate(j));
            } else {
                throw std::invalid_argument("Field::sample: 2D grid needs fn(x, y)");
            }
        }
        return f;
    }

    const TorusGrid& grid() const noexcept { return grid_; }
    Repr repr() const noexcept { return repr_; }
    bool is_physical() const noexcept { return repr_ == Repr::physical; }
    bool is_spectral() const noexcept { return repr_ == Repr::spectral; }
    bool empty() const noexcept { return !grid_.valid(); }

    std::span<double> values() {
        require(Repr::physical, "values");
        return values_;
    }
    std::span<const double> values() const {
        require(Repr::physical, "values");
        return values_;
    }
    std::span<complex> coefficients() {
        require(Repr::spectral, "coefficients");
        return coefs_;
    }
    std::span<const complex> coefficients() const {
        require(Repr::spectral, "coefficients");
        return coefs_;
    }

    double& operator[](std::size_t i) { return values()[i]; }
    double operator[](std::size_t i) const { return values()[i]; }

    /// Coefficient of wavenumber (k0, k1) using Hermitian symmetry for
    /// modes not stored explicitly.
    complex coefficient(int k0, int k1 = 0) const {
        require(Repr::spectral, "coefficient");
        const auto s = grid_.slot(k0, k1);
        return s.conjugate ? std::conj(coefs_[s.index]) : coefs_[s.index];
    }
    void set_coefficient(int k0, int k1, complex c) {
        require(Repr::spectral, "set_coefficient");
        const auto s = grid_.slot(k0, k1);
        coefs_[s.index] = s.conjugate ? std::conj(c) : c;
    }

    bool all_finite() const {
        if (is_physical())
            return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
        return std::all_of(coefs_.begin(), coefs_.end(), [](const complex& c) {
            return std::isfinite(c.real()) && std::isfinite(c.imag());
        });
    }

    Field to_spectral() const {
        if (is_spectral()) return *this;
        if (!all_finite()) throw std::domain_error("to_spectral: field contains non-finite values");
        Field out(grid_, Repr::spectral);
        grid_.forward(values_.data(), out.coefs_.data());
        return out;
    }

    Field to_physical() const {
        if (is_physical()) return *this;
        if (!all_finite()) throw std::domain_error("to_physical: field contains non-finite coefficients");
        Field out(grid_, Repr::physical);
        std::vector<complex> scratch(coefs_);
        grid_.backward_inplace_destroy(scratch.data(), out.values_.data());
        return out;
    }

    Field& operator+=(const Field& o) {
        check_compatible(o);
        if (is_physical())
            for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
        else
            for (std::size_t i = 0; i < coefs_.size(); ++i) coefs_[i] += o.coefs_[i];
        return *this;
    }
    Field& operator-=(const Field& o) {
        check_compatible(o);
        if (is_physical())
            for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
        else
            for (std::size_t i = 0; i < coefs_.size(); ++i) coefs_[i] -= o.coefs_[i];
        return *this;
    }
    Field& operator*=(double a) {
        for (auto& v : values_) v *= a;
        for (auto& c : coefs_) c *= a;
        return *this;
    }
    /// this += a * x
    Field& axpy(double a, const Field& x) {
        check_compatible(x);
        if (is_physical())
            for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += a * x.values_[i];
        else
            for (std::size_t i = 0; i < coefs_.size(); ++i) coefs_[i] += a * x.coefs_[i];
        return *this;
    }

    friend Field operator+(Field a, const Field& b) { return a += b; }
    friend Field operator-(Field a, const Field& b) { return a -= b; }
    friend Field operator*(Field a, double s) { return a *= s; }
    friend Field operator*(double s, Field a) { return a *= s; }
    friend Field operator-(Field a) { return a *= -1.0; }

    /// Pointwise product of physical fields.
    friend Field operator*(const Field& a, const Field& b) {
        a.check_compatible(b);
        a.require(Repr::physical, "pointwise product");
        Field out(a.grid_, Repr::physical);
        for (std::size_t i = 0; i < a.values_.size(); ++i) out.values_[i] = a.values_[i] * b.values_[i];
        return out;
    }
    friend Field operator/(const Field& a, const Field& b) {
        a.check_compatible(b);
        a.require(Repr::physical, "pointwise quotient");
        Field out(a.grid_, Repr::physical);
        for (std::size_t i = 0; i < a.values_.size(); ++i) out.values_[i] = a.values_[i] / b.values_[i];
        return out;
    }

    Field& add_constant(double c) {
        require(Repr::physical, "add_constant");
        for (auto& v : values_) v += c;
        return *this;
    }

    template <class Fn>
    Field map(Fn&& fn) const {
        require(Repr::physical, "map");
        Field out(grid_, Repr::physical);
        std::transform(values_.begin(), values_.end(), out.values_.begin(), fn);
        return out;
    }

    double min() const { return *std::min_element(values().begin(), values().end()); }
    double max() const { return *std::max_element(values().begin(), values().end()); }
    double max_abs() const {
        double m = 0.0;
        for (double v : values()) m = std::max(m, std::abs(v));
        return m;
    }

    void check_compatible(const Field& o) const {
        if (!(grid_ == o.grid_)) throw std::invalid_argument("Field: operands live on different grids");
        if (repr_ != o.repr_)
            throw std::invalid_argument(std::string("Field: representation mismatch (") +
                                        to_string(repr_) + " vs " + to_string(o.repr_) + ")");
    }

  private:
    void require(Repr r, const char* what) const {
        if (repr_ != r)
            throw std::invalid_argument(std::string(what) + " requires a " + to_string(r) + " field");
    }

    TorusGrid grid_;
    Repr repr_ = Repr::physical;
    std::vector<double> values_;
    std::vector<complex> coefs_;
};

/// d-component vector field; all components share a grid and representation.
class VectorField {
  public:
    VectorField() = default;

    explicit VectorField(std::vector<Field> comps) : comps_(std::move(comps)) { validate(); }
    VectorField(std::initializer_list<Field> comps) : comps_(comps) { validate(); }

    static VectorField zeros(const TorusGrid& g, Repr r = Repr::physical) {
        std::vector<Field> c;
        for (int a = 0; a < g.dim(); ++a) c.emplace_back(g, r);
        return VectorField(std::move(c));
    }

    std::size_t size() const noexcept { return comps_.size(); }
    Field& operator[](std::size_t i) { return comps_[i]; }
    const Field& operator[](std::size_t i) const { return comps_[i]; }
    auto begin() { return comps_.begin(); }
    auto end() { return comps_.end(); }
    auto begin() const { return comps_.begin(); }
    auto end() const { return comps_.end(); }

    const TorusGrid& grid() const { return comps_.at(0).grid(); }
    Repr repr() const { return comps_.at(0).repr(); }

    VectorField to_spectral() const {
        std::vector<Field> c;
        for (const auto& f : comps_) c.push_back(f.to_spectral());
        return VectorField(std::move(c));
    }
    VectorField to_physical() const {
        std::vector<Field> c;
        for (const auto& f : comps_) c.push_back(f.to_physical());
        return VectorField(std::move(c));
    }

    VectorField& operator+=(const VectorField& o) {
        check_size(o);
        for (std::size_t i = 0; i < size(); ++i) comps_[i] += o.comps_[i];
        return *this;
    }
    VectorField& operator-=(const VectorField& o) {
        check_size(o);
        for (std::size_t i = 0; i < size(); ++i) comps_[i] -= o.comps_[i];
        return *this;
    }
    VectorField& operator*=(double a) {
        for (auto& f : comps_) f *= a;
        return *this;
    }
    VectorField& axpy(double a, const VectorField& x) {
        check_size(x);
        for (std::size_t i = 0; i < size(); ++i) comps_[i].axpy(a, x.comps_[i]);
        return *this;
    }
    friend VectorField operator+(VectorField a, const VectorField& b) { return a += b; }
    friend VectorField operator-(VectorField a, const VectorField& b) { return a -= b; }
    friend VectorField operator*(VectorField a, double s) { return a *= s; }
    friend VectorField operator*(double s, VectorField a) { return a *= s; }

    /// Componentwise scaling by a physical scalar field.
    friend VectorField operator*(const VectorField& v, const Field& s) {
        std::vector<Field> c;
        for (const auto& f : v.comps_) c.push_back(f * s);
        return VectorField(std::move(c));
    }
    friend VectorField operator/(const VectorField& v, const Field& s) {
        std::vector<Field> c;
        for (const auto& f : v.comps_) c.push_back(f / s);
        return VectorField(std::move(c));
    }

    bool all_finite() const {
        return std::all_of(comps_.begin(), comps_.end(), [](const Field& f) { return f.all_finite(); });
    }

  private:
    void validate() const {
        if (comps_.empty()) throw std::invalid_argument("VectorField: no components");
        for (const auto& f : comps_) comps_[0].check_compatible(f);
    }
    void check_size(const VectorField& o) const {
        if (o.size() != size()) throw std::invalid_argument("VectorField: component count mismatch");
    }

    std::vector<Field> comps_;
};

inline Field to_spectral(const Field& f) { return f.to_spectral(); }
inline Field to_physical(const Field& f) { return f.to_physical(); }
inline VectorField to_spectral(const VectorField& v) { return v.to_spectral(); }
inline VectorField to_physical(const VectorField& v) { return v.to_physical(); }

/// Pointwise dot product of two physical vector fields.
inline Field dot(const VectorField& a, const VectorField& b) {
    Field out = a[0] * b[0];
    for (std::size_t i = 1; i < a.size(); ++i) out += a[i] * b[i];
    return out;
}

}  // namespace lowmach
