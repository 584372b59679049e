#include "kernels/table_decls.hpp"

#include "lddmd/scalar_math.hpp"

namespace lddmd::kernels::scalar {

void axpy(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        y[i] = y[i] + a * x[i];
    }
}

void add(const double* x, const double* y, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = x[i] + y[i];
    }
}

void sub(const double* x, const double* y, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = x[i] - y[i];
    }
}

void poly2(double a, double b, double c, const double* x, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = (a * (x[i] * x[i]) + b * x[i]) + c;
    }
}

void rotate(const double* cs, const double* sn, const double* s, const double* v0, const double* v1,
            double* out0, double* out1, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        const double r0 = cs[i] * v0[i] - sn[i] * v1[i];
        const double r1 = sn[i] * v0[i] + cs[i] * v1[i];
        out0[i] = s[i] * r0;
        out1[i] = s[i] * r1;
    }
}

void softplus(const double* x, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = lddmd::softplus(x[i]);
    }
}

double sum(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        acc += x[i];
    }
    return acc;
}

double sum_sq_diff(const double* a, const double* b, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

void dft_power(const double* x, std::size_t n, const double* cos_table, const double* sin_table,
               std::size_t k_begin, std::size_t k_end, double* power) {
    for (std::size_t k = k_begin; k < k_end; ++k) {
        double re = 0.0;
        double im = 0.0;
        std::size_t m = 0;  // k * t mod n
        for (std::size_t t = 0; t < n; ++t) {
            re += x[t] * cos_table[m];
            im -= x[t] * sin_table[m];
            m += k;
            if (m >= n) {
                m -= n;
            }
        }
        power[k - k_begin] = re * re + im * im;
    }
}

}  // namespace lddmd::kernels::scalar

namespace lddmd::kernels {

const KernelTable& scalar_table() {
    static const KernelTable table{
        Backend::Scalar,   "scalar",         scalar::axpy, scalar::add,         scalar::sub,
        scalar::poly2,     scalar::rotate,   scalar::softplus, scalar::sum, scalar::sum_sq_diff,
        scalar::dft_power,
    };
    return table;
}

}  // namespace lddmd::kernels
