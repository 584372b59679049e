#pragma once

// Data-parallel inner loops used by batched inference, NSE reductions and the
// DFT behind spectral initialization.
//
// Every kernel has a scalar reference implementation. SIMD backends (AVX2 on
// x86-64, NEON on AArch64) are selected at runtime. Elementwise kernels
// perform the same IEEE operations in the same order as the scalar reference
// and therefore agree bit-for-bit; reductions reassociate across lanes and
// agree to rounding.

#include <cstddef>
#include <string_view>
#include <vector>

namespace lddmd::kernels {

enum class Backend { Scalar, Avx2, Neon };

struct KernelTable {
    Backend backend;
    std::string_view name;

    // y[i] = y[i] + a * x[i]
    void (*axpy)(double a, const double* x, double* y, std::size_t n);
    // out[i] = x[i] + y[i]
    void (*add)(const double* x, const double* y, double* out, std::size_t n);
    // out[i] = x[i] - y[i]
    void (*sub)(const double* x, const double* y, double* out, std::size_t n);
    // out[i] = (a * (x[i] * x[i]) + b * x[i]) + c
    void (*poly2)(double a, double b, double c, const double* x, double* out, std::size_t n);
    // out0[i] = s[i] * (cs[i] * v0[i] - sn[i] * v1[i])
    // out1[i] = s[i] * (sn[i] * v0[i] + cs[i] * v1[i])
    void (*rotate)(const double* cs, const double* sn, const double* s, const double* v0,
                   const double* v1, double* out0, double* out1, std::size_t n);
    // out[i] = softplus(x[i]); transcendental, scalar in every backend
    void (*softplus)(const double* x, double* out, std::size_t n);

    double (*sum)(const double* x, std::size_t n);
    // sum (a[i] - b[i])^2
    double (*sum_sq_diff)(const double* a, const double* b, std::size_t n);

    // power[k - k_begin] = |sum_t x[t] e^{-2 pi i k t / n}|^2 for k in [k_begin, k_end).
    // cos_table/sin_table hold cos/sin(2 pi m / n) for m in [0, n).
    void (*dft_power)(const double* x, std::size_t n, const double* cos_table,
                      const double* sin_table, std::size_t k_begin, std::size_t k_end,
                      double* power);
};

/// The scalar reference backend.
const KernelTable& scalar_table();

/// All backends usable on this CPU, scalar first.
std::vector<const KernelTable*> available();

/// The backend used by the library: the widest supported one unless
/// overridden with select().
const KernelTable& active();

/// Forces a backend. Returns false (and changes nothing) if it is not
/// supported on this CPU.
bool select(Backend backend);

}  // namespace lddmd::kernels
