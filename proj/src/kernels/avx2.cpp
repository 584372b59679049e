// AVX2 backend. Compiled with -mavx2 (no -mfma) and only entered after the
// dispatcher has confirmed CPU support.

#include <immintrin.h>

#include <cstdint>

#include "kernels/table_decls.hpp"

namespace lddmd::kernels::avx2 {

namespace {

inline double horizontal_sum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

}  // namespace

void axpy(double a, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d vy = _mm256_loadu_pd(y + i);
        _mm256_storeu_pd(y + i, _mm256_add_pd(vy, _mm256_mul_pd(va, _mm256_loadu_pd(x + i))));
    }
    for (; i < n; ++i) {
        y[i] = y[i] + a * x[i];
    }
}

void add(const double* x, const double* y, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    }
    for (; i < n; ++i) {
        out[i] = x[i] + y[i];
    }
}

void sub(const double* x, const double* y, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(out + i, _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    }
    for (; i < n; ++i) {
        out[i] = x[i] - y[i];
    }
}

void poly2(double a, double b, double c, const double* x, double* out, std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    const __m256d vb = _mm256_set1_pd(b);
    const __m256d vc = _mm256_set1_pd(c);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d vx = _mm256_loadu_pd(x + i);
        const __m256d quad = _mm256_mul_pd(va, _mm256_mul_pd(vx, vx));
        const __m256d lin = _mm256_mul_pd(vb, vx);
        _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_add_pd(quad, lin), vc));
    }
    for (; i < n; ++i) {
        out[i] = (a * (x[i] * x[i]) + b * x[i]) + c;
    }
}

void rotate(const double* cs, const double* sn, const double* s, const double* v0, const double* v1,
            double* out0, double* out1, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d c = _mm256_loadu_pd(cs + i);
        const __m256d si = _mm256_loadu_pd(sn + i);
        const __m256d sc = _mm256_loadu_pd(s + i);
        const __m256d a = _mm256_loadu_pd(v0 + i);
        const __m256d b = _mm256_loadu_pd(v1 + i);
        const __m256d r0 = _mm256_sub_pd(_mm256_mul_pd(c, a), _mm256_mul_pd(si, b));
        const __m256d r1 = _mm256_add_pd(_mm256_mul_pd(si, a), _mm256_mul_pd(c, b));
        _mm256_storeu_pd(out0 + i, _mm256_mul_pd(sc, r0));
        _mm256_storeu_pd(out1 + i, _mm256_mul_pd(sc, r1));
    }
    if (i < n) {
        scalar::rotate(cs + i, sn + i, s + i, v0 + i, v1 + i, out0 + i, out1 + i, n - i);
    }
}

void softplus(const double* x, double* out, std::size_t n) { scalar::softplus(x, out, n); }

double sum(const double* x, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
    }
    double total = horizontal_sum(acc);
    for (; i < n; ++i) {
        total += x[i];
    }
    return total;
}

double sum_sq_diff(const double* a, const double* b, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i));
        acc = _mm256_add_pd(acc, _mm256_mul_pd(d, d));
    }
    double total = horizontal_sum(acc);
    for (; i < n; ++i) {
        const double d = a[i] - b[i];
        total += d * d;
    }
    return total;
}

void dft_power(const double* x, std::size_t n, const double* cos_table, const double* sin_table,
               std::size_t k_begin, std::size_t k_end, double* power) {
    for (std::size_t k = k_begin; k < k_end; ++k) {
        __m256d re = _mm256_setzero_pd();
        __m256d im = _mm256_setzero_pd();
        std::size_t m = 0;  // k * t mod n for the first lane
        std::size_t t = 0;
        for (; t + 4 <= n; t += 4) {
            alignas(32) std::int64_t idx[4];
            for (int lane = 0; lane < 4; ++lane) {
                idx[lane] = static_cast<std::int64_t>(m);
                m += k;
                if (m >= n) {
                    m -= n;
                }
            }
            const __m256i vi = _mm256_load_si256(reinterpret_cast<const __m256i*>(idx));
            const __m256d c = _mm256_i64gather_pd(cos_table, vi, 8);
            const __m256d s = _mm256_i64gather_pd(sin_table, vi, 8);
            const __m256d vx = _mm256_loadu_pd(x + t);
            re = _mm256_add_pd(re, _mm256_mul_pd(vx, c));
            im = _mm256_sub_pd(im, _mm256_mul_pd(vx, s));
        }
        double r = horizontal_sum(re);
        double q = horizontal_sum(im);
        for (; t < n; ++t) {
            r += x[t] * cos_table[m];
            q -= x[t] * sin_table[m];
            m += k;
            if (m >= n) {
                m -= n;
            }
        }
        power[k - k_begin] = r * r + q * q;
    }
}

}  // namespace lddmd::kernels::avx2
