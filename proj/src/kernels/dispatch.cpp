#include <atomic>

#include "kernels/table_decls.hpp"

namespace lddmd::kernels {

namespace {

#if defined(LDDMD_HAVE_AVX2)
const KernelTable kAvx2{
    Backend::Avx2,   "avx2",        avx2::axpy,  avx2::add,         avx2::sub,
    avx2::poly2,     avx2::rotate,  avx2::softplus, avx2::sum, avx2::sum_sq_diff,
    avx2::dft_power,
};

bool cpu_has_avx2() {
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2");
}
#endif

#if defined(LDDMD_HAVE_NEON)
const KernelTable kNeon{
    Backend::Neon,   "neon",        neon::axpy,  neon::add,         neon::sub,
    neon::poly2,     neon::rotate,  neon::softplus, neon::sum, neon::sum_sq_diff,
    neon::dft_power,
};
#endif

const KernelTable* find(Backend backend) {
    switch (backend) {
        case Backend::Scalar:
            return &scalar_table();
        case Backend::Avx2:
#if defined(LDDMD_HAVE_AVX2)
            if (cpu_has_avx2()) {
                return &kAvx2;
            }
#endif
            return nullptr;
        case Backend::Neon:
#if defined(LDDMD_HAVE_NEON)
            return &kNeon;
#else
            return nullptr;
#endif
    }
    return nullptr;
}

const KernelTable* widest() {
    if (const auto* t = find(Backend::Avx2)) {
        return t;
    }
    if (const auto* t = find(Backend::Neon)) {
        return t;
    }
    return &scalar_table();
}

std::atomic<const KernelTable*>& current() {
    static std::atomic<const KernelTable*> table{widest()};
    return table;
}

}  // namespace

std::vector<const KernelTable*> available() {
    std::vector<const KernelTable*> out{&scalar_table()};
    for (Backend b : {Backend::Avx2, Backend::Neon}) {
        if (const auto* t = find(b)) {
            out.push_back(t);
        }
    }
    return out;
}

const KernelTable& active() { return *current().load(std::memory_order_acquire); }

bool select(Backend backend) {
    const KernelTable* t = find(backend);
    if (t == nullptr) {
        return false;
    }
    current().store(t, std::memory_order_release);
    return true;
}

}  // namespace lddmd::kernels
