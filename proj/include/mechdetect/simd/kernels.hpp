#pragma once

// Data-parallel inner loops of the boosting learner. Each kernel has a scalar
// reference in namespace `scalar` and, on x86-64 builds, an AVX2 variant in
// namespace `avx2`. The free functions dispatch to the backend chosen at
// startup: the best one the CPU supports, unless MECHDETECT_SIMD=scalar|avx2
// says otherwise.
//
// build_histogram is bit-identical across backends (same accumulation
// order). The transcendental kernels use polynomial exp/log1p in the AVX2
// path and agree with the scalar reference to ~1e-15 relative.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

namespace mechdetect::simd {

struct HistogramBin {
    double sum_gradients = 0.0;
    double sum_hessians = 0.0;
    std::uint32_t count = 0;
};

enum class Backend { Scalar, Avx2 };

std::string_view to_string(Backend b);
bool backend_available(Backend b);
Backend active_backend();
/// Throws InvalidArgument if the backend is not compiled in or unsupported by the CPU.
void set_backend(Backend b);

/// grad = sigmoid(raw) - label, hess = p (1 - p).
void logistic_gradients(std::span<const double> raw, std::span<const std::uint8_t> labels,
                        std::span<double> grad, std::span<double> hess);

/// Sum over rows of log(1 + exp(raw)) - label * raw.
double logistic_loss(std::span<const double> raw, std::span<const std::uint8_t> labels);

/// Adds grad/hess/count of each row in `rows` into hist[bins[row]].
/// Rows must be < 2^31.
void build_histogram(std::span<const std::uint8_t> bins, std::span<const std::uint32_t> rows,
                     std::span<const double> grad, std::span<const double> hess,
                     std::span<HistogramBin> hist);

namespace scalar {
void logistic_gradients(std::span<const double> raw, std::span<const std::uint8_t> labels,
                        std::span<double> grad, std::span<double> hess);
double logistic_loss(std::span<const double> raw, std::span<const std::uint8_t> labels);
void build_histogram(std::span<const std::uint8_t> bins, std::span<const std::uint32_t> rows,
                     std::span<const double> grad, std::span<const double> hess,
                     std::span<HistogramBin> hist);
} // namespace scalar

namespace avx2 {
void logistic_gradients(std::span<const double> raw, std::span<const std::uint8_t> labels,
                        std::span<double> grad, std::span<double> hess);
double logistic_loss(std::span<const double> raw, std::span<const std::uint8_t> labels);
void build_histogram(std::span<const std::uint8_t> bins, std::span<const std::uint32_t> rows,
                     std::span<const double> grad, std::span<const double> hess,
                     std::span<HistogramBin> hist);
} // namespace avx2

} // namespace mechdetect::simd
