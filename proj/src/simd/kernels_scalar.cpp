#include <cmath>

#include "mechdetect/simd/kernels.hpp"

namespace mechdetect::simd::scalar {

void logistic_gradients(std::span<const double> raw, std::span<const std::uint8_t> labels,
                        std::span<double> grad, std::span<double> hess) {
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const double p = 1.0 / (1.0 + std::exp(-raw[i]));
        grad[i] = p - static_cast<double>(labels[i]);
        hess[i] = p * (1.0 - p);
    }
}

double logistic_loss(std::span<const double> raw, std::span<const std::uint8_t> labels) {
    double total = 0.0;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        const double z = raw[i];
        const double softplus = std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
        total += softplus - static_cast<double>(labels[i]) * z;
    }
    return total;
}

void build_histogram(std::span<const std::uint8_t> bins, std::span<const std::uint32_t> rows,
                     std::span<const double> grad, std::span<const double> hess,
                     std::span<HistogramBin> hist) {
    for (std::uint32_t r : rows) {
        HistogramBin& b = hist[bins[r]];
        b.sum_gradients += grad[r];
        b.sum_hessians += hess[r];
        ++b.count;
    }
}

} // namespace mechdetect::simd::scalar
