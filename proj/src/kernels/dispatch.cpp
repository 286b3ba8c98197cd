#include "physio/kernels/kernels.hpp"

#include <cstdlib>
#include <cstring>

#include "physio/errors.hpp"

namespace physio::kernels {

#if defined(PHYSIO_HAVE_AVX2)
const Ops* avx2_impl_table();  // defined in the -mavx2 TU

const Ops* avx2_ops() {
  static const Ops* table = [] {
    return (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma"))
               ? avx2_impl_table()
               : nullptr;
  }();
  return table;
}
#else
const Ops* avx2_ops() { return nullptr; }
#endif

const Ops& active() {
  static const Ops& chosen = [&]() -> const Ops& {
    const char* env = std::getenv("PHYSIO_KERNELS");
    if (env && *env) {
      if (std::strcmp(env, "scalar") == 0) return scalar_ops();
      if (std::strcmp(env, "avx2") == 0) {
        const Ops* v = avx2_ops();
        if (!v) throw ConfigError("PHYSIO_KERNELS=avx2 but this host or build has no AVX2 lane");
        return *v;
      }
      throw ConfigError(std::string("PHYSIO_KERNELS: unknown lane '") + env +
                        "' (expected scalar or avx2)");
    }
    const Ops* v = avx2_ops();
    return v ? *v : scalar_ops();
  }();
  return chosen;
}

}  // namespace physio::kernels
