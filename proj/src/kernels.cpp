#include "tpseg/kernels.hpp"

#include <cstdlib>
#include <cstring>

#include "tpseg/common.hpp"

namespace tpseg::kernels {

const KernelOps* avx2_kernels_impl();  // defined in kernels_avx2.cpp

const KernelOps* avx2_kernels() {
  static const KernelOps* ops = [] -> const KernelOps* {
    const KernelOps* impl = avx2_kernels_impl();
    if (!impl) return nullptr;
#if defined(__x86_64__) || defined(_M_X64)
    if (!__builtin_cpu_supports("avx2")) return nullptr;
#endif
    return impl;
  }();
  return ops;
}

const KernelOps& active_kernels() {
  static const KernelOps* active = [] -> const KernelOps* {
    const char* env = std::getenv("TPSEG_KERNELS");
    if (env && std::strlen(env) > 0) {
      if (std::strcmp(env, "scalar") == 0) return &scalar_kernels();
      if (std::strcmp(env, "avx2") == 0) {
        const KernelOps* a = avx2_kernels();
        if (!a) throw UsageError("TPSEG_KERNELS=avx2 but AVX2 is unavailable");
        return a;
      }
      if (std::strcmp(env, "auto") != 0)
        throw UsageError(std::string("unknown TPSEG_KERNELS value: ") + env);
    }
    const KernelOps* a = avx2_kernels();
    return a ? a : &scalar_kernels();
  }();
  return *active;
}

std::vector<const KernelOps*> available_kernels() {
  std::vector<const KernelOps*> all{&scalar_kernels()};
  if (const KernelOps* a = avx2_kernels()) all.push_back(a);
  return all;
}

}  // namespace tpseg::kernels
