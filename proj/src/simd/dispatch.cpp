#include <atomic>
#include <cstdlib>
#include <string>

#include "mechdetect/error.hpp"
#include "mechdetect/simd/kernels.hpp"

namespace mechdetect::simd {
namespace {

bool cpu_has_avx2() {
#if defined(MECHDETECT_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
    __builtin_cpu_init();
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

Backend initial_backend() {
    const bool avx2 = cpu_has_avx2();
    if (const char* env = std::getenv("MECHDETECT_SIMD")) {
        const std::string choice(env);
        if (choice == "scalar") return Backend::Scalar;
        if (choice == "avx2" && avx2) return Backend::Avx2;
    }
    return avx2 ? Backend::Avx2 : Backend::Scalar;
}

std::atomic<Backend>& current() {
    static std::atomic<Backend> backend{initial_backend()};
    return backend;
}

} // namespace

std::string_view to_string(Backend b) { return b == Backend::Avx2 ? "avx2" : "scalar"; }

bool backend_available(Backend b) { return b == Backend::Scalar || cpu_has_avx2(); }

Backend active_backend() { return current().load(std::memory_order_relaxed); }

void set_backend(Backend b) {
    if (!backend_available(b))
        throw InvalidArgument("SIMD backend '" + std::string(to_string(b)) + "' is not available");
    current().store(b, std::memory_order_relaxed);
}

#if defined(MECHDETECT_HAVE_AVX2)
#define MECHDETECT_DISPATCH(fn, ...)                                                    \
    (active_backend() == Backend::Avx2 ? avx2::fn(__VA_ARGS__) : scalar::fn(__VA_ARGS__))
#else
#define MECHDETECT_DISPATCH(fn, ...) scalar::fn(__VA_ARGS__)
#endif

void logistic_gradients(std::span<const double> raw, std::span<const std::uint8_t> labels,
                        std::span<double> grad, std::span<double> hess) {
    MECHDETECT_DISPATCH(logistic_gradients, raw, labels, grad, hess);
}

double logistic_loss(std::span<const double> raw, std::span<const std::uint8_t> labels) {
    return MECHDETECT_DISPATCH(logistic_loss, raw, labels);
}

void build_histogram(std::span<const std::uint8_t> bins, std::span<const std::uint32_t> rows,
                     std::span<const double> grad, std::span<const double> hess,
                     std::span<HistogramBin> hist) {
    MECHDETECT_DISPATCH(build_histogram, bins, rows, grad, hess, hist);
}

#if !defined(MECHDETECT_HAVE_AVX2)
// Builds without the AVX2 translation unit still link against the avx2
// namespace (tests reference it); route it to the reference code.
namespace avx2 {
void logistic_gradients(std::span<const double> raw, std::span<const std::uint8_t> labels,
                        std::span<double> grad, std::span<double> hess) {
    scalar::logistic_gradients(raw, labels, grad, hess);
}
double logistic_loss(std::span<const double> raw, std::span<const std::uint8_t> labels) {
    return scalar::logistic_loss(raw, labels);
}
void build_histogram(std::span<const std::uint8_t> bins, std::span<const std::uint32_t> rows,
                     std::span<const double> grad, std::span<const double> hess,
                     std::span<HistogramBin> hist) {
    scalar::build_histogram(bins, rows, grad, hess, hist);
}
} // namespace avx2
#endif

} // namespace mechdetect::simd
