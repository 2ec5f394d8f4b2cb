#pragma once

#include <fftw3.h>

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace lowmach {

namespace detail {

// FFTW's planner is not thread-safe; execution with the new-array interface is.
inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

struct GridData {
    int dim = 0;
    int n = 0;
    std::size_t real_size = 0;
    std::size_t spectral_size = 0;
    int half = 0;  // n/2 + 1, length of the last (r2c) axis in spectral layout

    // Per spectral index tables.
    std::array<std::vector<int>, 2> k;        // integer wavenumbers, Nyquist = +n/2
    std::array<std::vector<double>, 2> keff;  // first-derivative wavenumbers (Nyquist -> 0)
    std::vector<double> kk;                   // |k|^2
    std::vector<double> weight;               // Hermitian multiplicity of the stored coefficient
    std::vector<unsigned char> resolved;      // 1 if kept by the 2/3 rule

    fftw_plan forward = nullptr;
    fftw_plan backward = nullptr;

    GridData(int d, int npts) : dim(d), n(npts) {
        half = n / 2 + 1;
        real_size = (dim == 1) ? std::size_t(n) : std::size_t(n) * std::size_t(n);
        spectral_size = (dim == 1) ? std::size_t(half) : std::size_t(n) * std::size_t(half);
        const int cutoff = n / 3;
        for (auto& v : k) v.assign(spectral_size, 0);
        for (auto& v : keff) v.assign(spectral_size, 0.0);
        kk.assign(spectral_size, 0.0);
        weight.assign(spectral_size, 0.0);
        resolved.assign(spectral_size, 0);
        auto wave = [this](int a) { return a <= n / 2 ? a : a - n; };
        for (std::size_t s = 0; s < spectral_size; ++s) {
            const int b = int(s % std::size_t(half));
            const int a = int(s / std::size_t(half));
            int ks[2] = {0, 0};
            if (dim == 1) {
                ks[0] = b;
            } else {
                ks[0] = wave(a);
                ks[1] = b;
            }
            bool keep = true;
            double sq = 0.0;
            for (int ax = 0; ax < dim; ++ax) {
                k[ax][s] = ks[ax];
                keff[ax][s] = (ks[ax] == n / 2) ? 0.0 : double(ks[ax]);
                sq += double(ks[ax]) * double(ks[ax]);
                if (std::abs(ks[ax]) > cutoff) keep = false;
            }
            kk[s] = sq;
            resolved[s] = keep ? 1 : 0;
            weight[s] = (b == 0 || b == n / 2) ? 1.0 : 2.0;
        }

        std::vector<double> re(real_size);
        std::vector<std::complex<double>> co(spectral_size);
        auto* rp = re.data();
        auto* cp = reinterpret_cast<fftw_complex*>(co.data());
        const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        if (dim == 1) {
            forward = fftw_plan_dft_r2c_1d(n, rp, cp, flags);
            backward = fftw_plan_dft_c2r_1d(n, cp, rp, flags);
        } else {
            forward = fftw_plan_dft_r2c_2d(n, n, rp, cp, flags);
            backward = fftw_plan_dft_c2r_2d(n, n, cp, rp, flags);
        }
        if (!forward || !backward) throw std::runtime_error("FFTW plan creation failed");
    }

    GridData(const GridData&) = delete;
    GridData& operator=(const GridData&) = delete;

    ~GridData() {
        std::lock_guard<std::mutex> lock(fftw_planner_mutex());
        if (forward) fftw_destroy_plan(forward);
        if (backward) fftw_destroy_plan(backward);
    }
};

inline std::shared_ptr<const GridData> shared_grid_data(int dim, int n) {
    static std::mutex m;
    static std::map<std::pair<int, int>, std::weak_ptr<const GridData>> cache;
    std::lock_guard<std::mutex> lock(m);
    auto& slot = cache[{dim, n}];
    if (auto p = slot.lock()) return p;
    auto p = std::make_shared<const GridData>(dim, n);
    slot = p;
    return p;
}

}  // namespace detail

/// Uniform periodic grid on [0, 2pi)^dim with n points per axis.
///
/// Physical data are row-major with axis 0 slowest. Spectral data use the
/// real-to-complex half layout: n x (n/2+1) coefficients in 2D, n/2+1 in 1D,
/// the last axis holding only nonnegative wavenumbers. The forward transform
/// is unnormalized; the inverse carries the single 1/n^dim factor.
///
/// Copies are cheap handles onto shared, immutable tables and FFT plans.
class TorusGrid {
  public:
    TorusGrid() = default;

    TorusGrid(int dim, int n) {
        if (dim != 1 && dim != 2) {
            throw std::invalid_argument("TorusGrid: dim must be 1 or 2, got " + std::to_string(dim));
        }
        if (n < 8 || (n & (n - 1)) != 0) {
            throw std::invalid_argument("TorusGrid: n must be a power of two >= 8, got " +
                                        std::to_string(n));
        }
        data_ = detail::shared_grid_data(dim, n);
    }

    bool valid() const noexcept { return data_ != nullptr; }
    int dim() const noexcept { return data_->dim; }
    int n() const noexcept { return data_->n; }
    std::size_t size() const noexcept { return data_->real_size; }
    std::size_t spectral_size() const noexcept { return data_->spectral_size; }
    int dealias_cutoff() const noexcept { return data_->n / 3; }

    static constexpr double length() noexcept { return 2.0 * std::numbers::pi; }
    double dx() const noexcept { return length() / double(data_->n); }
    double volume() const noexcept { return std::pow(length(), dim()); }
    double cell_volume() const noexcept { return volume() / double(size()); }

    /// Coordinate of point index i along any axis.
    double coordinate(int i) const noexcept { return dx() * double(i); }

    /// Integer wavenumber of spectral slot s along an axis.
    int wavenumber(int axis, std::size_t s) const { return data_->k[axis][s]; }
    double derivative_wavenumber(int axis, std::size_t s) const { return data_->keff[axis][s]; }
    double k_squared(std::size_t s) const { return data_->kk[s]; }
    double hermitian_weight(std::size_t s) const { return data_->weight[s]; }
    bool resolved(std::size_t s) const { return data_->resolved[s] != 0; }

    const std::vector<double>& k_squared_table() const noexcept { return data_->kk; }
    const std::vector<double>& derivative_wavenumbers(int axis) const { return data_->keff[axis]; }
    const std::vector<double>& hermitian_weights() const noexcept { return data_->weight; }

    /// Largest |k|^2 among modes that survive dealiasing.
    double max_resolved_k_squared() const noexcept {
        const double c = dealias_cutoff();
        return double(dim()) * c * c;
    }

    /// Spectral slot holding wavenumber (k0, k1), or -1 together with a
    /// conjugation flag when only the mirrored mode is stored.
    struct Slot {
        std::size_t index;
        bool conjugate;
    };
    Slot slot(int k0, int k1 = 0) const {
        const int nn = n();
        auto wrap = [nn](int k) { return ((k % nn) + nn) % nn; };
        if (dim() == 1) {
            int a = wrap(k0);
            if (a <= nn / 2) return {std::size_t(a), false};
            return {std::size_t(nn - a), true};
        }
        int a = wrap(k0), b = wrap(k1);
        bool conj = false;
        if (b > nn / 2) {
            a = wrap(-k0);
            b = wrap(-k1);
            conj = true;
        }
        return {std::size_t(a) * std::size_t(data_->half) + std::size_t(b), conj};
    }

    void forward(const double* in, std::complex<double>* out) const {
        fftw_execute_dft_r2c(data_->forward, const_cast<double*>(in),
                             reinterpret_cast<fftw_complex*>(out));
    }

    /// Destroys `in` (FFTW c2r semantics); applies the 1/n^dim normalization.
    void backward_inplace_destroy(std::complex<double>* in, double* out) const {
        fftw_execute_dft_c2r(data_->backward, reinterpret_cast<fftw_complex*>(in), out);
        const double scale = 1.0 / double(size());
        for (std::size_t i = 0; i < size(); ++i) out[i] *= scale;
    }

    friend bool operator==(const TorusGrid& a, const TorusGrid& b) noexcept {
        if (a.data_ == b.data_) return true;
        if (!a.data_ || !b.data_) return false;
        return a.dim() == b.dim() && a.n() == b.n();
    }

  private:
    std::shared_ptr<const detail::GridData> data_;
};

}  // namespace lowmach
