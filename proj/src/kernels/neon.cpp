// NEON backend (AArch64, two doubles per register). Advanced SIMD is part of
// the AArch64 baseline, so no runtime feature probe is needed.

#include <arm_neon.h>

#include "kernels/table_decls.hpp"

namespace lddmd::kernels::neon {

void axpy(double a, const double* x, double* y, std::size_t n) {
    const float64x2_t va = vdupq_n_f64(a);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        vst1q_f64(y + i, vaddq_f64(vld1q_f64(y + i), vmulq_f64(va, vld1q_f64(x + i))));
    }
    for (; i < n; ++i) {
        y[i] = y[i] + a * x[i];
    }
}

void add(const double* x, const double* y, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        vst1q_f64(out + i, vaddq_f64(vld1q_f64(x + i), vld1q_f64(y + i)));
    }
    for (; i < n; ++i) {
        out[i] = x[i] + y[i];
    }
}

void sub(const double* x, const double* y, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        vst1q_f64(out + i, vsubq_f64(vld1q_f64(x + i), vld1q_f64(y + i)));
    }
    for (; i < n; ++i) {
        out[i] = x[i] - y[i];
    }
}

void poly2(double a, double b, double c, const double* x, double* out, std::size_t n) {
    const float64x2_t va = vdupq_n_f64(a);
    const float64x2_t vb = vdupq_n_f64(b);
    const float64x2_t vc = vdupq_n_f64(c);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t vx = vld1q_f64(x + i);
        const float64x2_t quad = vmulq_f64(va, vmulq_f64(vx, vx));
        const float64x2_t lin = vmulq_f64(vb, vx);
        vst1q_f64(out + i, vaddq_f64(vaddq_f64(quad, lin), vc));
    }
    for (; i < n; ++i) {
        out[i] = (a * (x[i] * x[i]) + b * x[i]) + c;
    }
}

void rotate(const double* cs, const double* sn, const double* s, const double* v0, const double* v1,
            double* out0, double* out1, std::size_t n) {
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t c = vld1q_f64(cs + i);
        const float64x2_t si = vld1q_f64(sn + i);
        const float64x2_t sc = vld1q_f64(s + i);
        const float64x2_t a = vld1q_f64(v0 + i);
        const float64x2_t b = vld1q_f64(v1 + i);
        const float64x2_t r0 = vsubq_f64(vmulq_f64(c, a), vmulq_f64(si, b));
        const float64x2_t r1 = vaddq_f64(vmulq_f64(si, a), vmulq_f64(c, b));
        vst1q_f64(out0 + i, vmulq_f64(sc, r0));
        vst1q_f64(out1 + i, vmulq_f64(sc, r1));
    }
    if (i < n) {
        scalar::rotate(cs + i, sn + i, s + i, v0 + i, v1 + i, out0 + i, out1 + i, n - i);
    }
}

void softplus(const double* x, double* out, std::size_t n) { scalar::softplus(x, out, n); }

double sum(const double* x, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        acc = vaddq_f64(acc, vld1q_f64(x + i));
    }
    double total = vaddvq_f64(acc);
    for (; i < n; ++i) {
        total += x[i];
    }
    return total;
}

double sum_sq_diff(const double* a, const double* b, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t d = vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i));
        acc = vaddq_f64(acc, vmulq_f64(d, d));
    }
    double total = vaddvq_f64(acc);
    for (; i < n; ++i) {
        const double d = a[i] - b[i];
        total += d * d;
    }
    return total;
}

// No gather on NEON; the strided twiddle walk stays scalar.
void dft_power(const double* x, std::size_t n, const double* cos_table, const double* sin_table,
               std::size_t k_begin, std::size_t k_end, double* power) {
    scalar::dft_power(x, n, cos_table, sin_table, k_begin, k_end, power);
}

}  // namespace lddmd::kernels::neon
