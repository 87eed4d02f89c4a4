#include <atomic>

#include "kernels_internal.hpp"
#include "ctxslu/errors.hpp"

namespace ctxslu::kernels {
namespace {

Isa detect() {
#ifdef CTXSLU_HAVE_AVX2_KERNELS
  __builtin_cpu_init();
  if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) return Isa::kAvx2;
#endif
  return Isa::kScalar;
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{&table_for(detect())};
  return table;
}

std::atomic<Isa>& current_isa() {
  static std::atomic<Isa> isa{detect()};
  return isa;
}

}  // namespace

const KernelTable& table_for(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return detail::kScalarTable;
    case Isa::kAvx2:
#ifdef CTXSLU_HAVE_AVX2_KERNELS
      return detail::kAvx2Table;
#else
      break;
#endif
  }
  throw DomainError("kernel ISA not compiled in: " + std::string(isa_name(isa)));
}

bool isa_supported(Isa isa) {
  if (isa == Isa::kScalar) return true;
#ifdef CTXSLU_HAVE_AVX2_KERNELS
  __builtin_cpu_init();
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Isa active_isa() { return current_isa().load(std::memory_order_relaxed); }

void set_isa(Isa isa) {
  if (!isa_supported(isa)) {
    throw DomainError("CPU does not support kernel ISA " + std::string(isa_name(isa)));
  }
  current().store(&table_for(isa), std::memory_order_relaxed);
  current_isa().store(isa, std::memory_order_relaxed);
}

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::kScalar:
      return "scalar";
    case Isa::kAvx2:
      return "avx2";
  }
  return "unknown";
}

double dot(const double* a, const double* b, std::size_t n) {
  return current().load(std::memory_order_relaxed)->dot(a, b, n);
}
void axpy(double alpha, const double* x, double* y, std::size_t n) {
  current().load(std::memory_order_relaxed)->axpy(alpha, x, y, n);
}
void gemv(const double* w, std::size_t rows, std::size_t cols, const double* x, double* y) {
  current().load(std::memory_order_relaxed)->gemv(w, rows, cols, x, y);
}
void gemv_t_acc(const double* w, std::size_t rows, std::size_t cols, const double* g,
                double* x_grad) {
  current().load(std::memory_order_relaxed)->gemv_t_acc(w, rows, cols, g, x_grad);
}
void ger_acc(double* w_grad, std::size_t rows, std::size_t cols, const double* g,
             const double* x) {
  current().load(std::memory_order_relaxed)->ger_acc(w_grad, rows, cols, g, x);
}

}  // namespace ctxslu::kernels
