#pragma once

// Per-backend kernel entry points. Each backend namespace provides the same
// set of functions; dispatch.cpp assembles them into KernelTables.

#include <cstddef>

#include "lddmd/kernels.hpp"

#define LDDMD_DECLARE_KERNELS                                                                     \
    void axpy(double a, const double* x, double* y, std::size_t n);                                \
    void add(const double* x, const double* y, double* out, std::size_t n);                        \
    void sub(const double* x, const double* y, double* out, std::size_t n);                        \
    void poly2(double a, double b, double c, const double* x, double* out, std::size_t n);         \
    void rotate(const double* cs, const double* sn, const double* s, const double* v0,             \
                const double* v1, double* out0, double* out1, std::size_t n);                      \
    void softplus(const double* x, double* out, std::size_t n);                                    \
    double sum(const double* x, std::size_t n);                                                    \
    double sum_sq_diff(const double* a, const double* b, std::size_t n);                           \
    void dft_power(const double* x, std::size_t n, const double* cos_table,                        \
                   const double* sin_table, std::size_t k_begin, std::size_t k_end, double* power);

namespace lddmd::kernels {
namespace scalar {
LDDMD_DECLARE_KERNELS
}
namespace avx2 {
LDDMD_DECLARE_KERNELS
}
namespace neon {
LDDMD_DECLARE_KERNELS
}
}  // namespace lddmd::kernels

#undef LDDMD_DECLARE_KERNELS
