#include <cstdio>
#include <cstdlib>

#include "hwnas/kernels.hpp"

namespace hwnas::kernels {

namespace {

bool cpu_has_avx2() {
#if (defined(__x86_64__) || defined(__i386__)) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const Ops* lookup(std::string_view name) {
  if (name == "scalar") return &scalar_ops();
#if defined(__x86_64__) || defined(__i386__)
  if (name == "avx2" && cpu_has_avx2()) return &avx2_ops();
#endif
#if defined(__aarch64__) || defined(__ARM_NEON)
  if (name == "neon") return &neon_ops();
#endif
  return nullptr;
}

const Ops* best() {
#if defined(__x86_64__) || defined(__i386__)
  if (cpu_has_avx2()) return &avx2_ops();
#endif
#if defined(__aarch64__) || defined(__ARM_NEON)
  return &neon_ops();
#endif
  return &scalar_ops();
}

const Ops* select() {
  const char* env = std::getenv("HWNAS_KERNEL");
  if (env != nullptr && env[0] != '\0' && std::string_view(env) != "auto") {
    if (const Ops* ops = lookup(env)) return ops;
    std::fprintf(stderr, "hwnas: kernel '%s' not available on this host, using '%s'\n", env,
                 best()->name);
  }
  return best();
}

}  // namespace

const Ops& active() {
  static const Ops* selected = select();
  return *selected;
}

const Ops* find(std::string_view name) { return lookup(name); }

std::vector<std::string> available() {
  std::vector<std::string> names;
  for (const char* name : {"scalar", "avx2", "neon"}) {
    if (lookup(name) != nullptr) names.emplace_back(name);
  }
  return names;
}

}  // namespace hwnas::kernels
