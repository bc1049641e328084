#include "fsa/simd/kernels.hpp"

namespace fsa::simd {

#if !defined(FSA_HAVE_AVX2)
const Kernels* avx2_kernels() { return nullptr; }
#endif

namespace {

const Kernels* pick_auto() {
    if (const Kernels* k = avx2_kernels()) return k;
    return &scalar_kernels();
}

const Kernels* g_active = nullptr;

}  // namespace

const Kernels& active() {
    if (g_active == nullptr) g_active = pick_auto();
    return *g_active;
}

bool set_active(std::string_view name) {
    if (name == "auto") {
        g_active = pick_auto();
        return true;
    }
    if (name == "scalar") {
        g_active = &scalar_kernels();
        return true;
    }
    if (name == "avx2") {
        if (const Kernels* k = avx2_kernels()) {
            g_active = k;
            return true;
        }
        return false;
    }
    return false;
}

}  // namespace fsa::simd
