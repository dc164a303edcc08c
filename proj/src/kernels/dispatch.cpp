#include <atomic>

#include "shortmr/kernels.hpp"

namespace shortmr::kernels {

const KernelTable& scalar_table();
const KernelTable& avx2_table();

bool cpu_has_avx2() {
#if (defined(__x86_64__) || defined(_M_X64)) && defined(__GNUC__)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable& table(Backend b) {
  if (b == Backend::avx2 && cpu_has_avx2()) return avx2_table();
  return scalar_table();
}

namespace {
std::atomic<const KernelTable*> g_active{nullptr};
}

const KernelTable& active() {
  const KernelTable* t = g_active.load(std::memory_order_acquire);
  if (!t) {
    t = cpu_has_avx2() ? &avx2_table() : &scalar_table();
    g_active.store(t, std::memory_order_release);
  }
  return *t;
}

void set_active(Backend b) {
  g_active.store(&table(b), std::memory_order_release);
}

}  // namespace shortmr::kernels
