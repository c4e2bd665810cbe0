// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <limits>

#include "elmgs/image.hpp"

namespace elmgs {

struct SsimOptions {
    int window = 11;
    double sigma = 1.5;
    double c1 = 0.01 * 0.01;
    double c2 = 0.03 * 0.03;
};

/// PSNR in dB for dynamic range 1. Identical images give +infinity.
double psnr(const Image& a, const Image& b);

/// Mean SSIM over every fully contained window, averaged over channels.
/// Both images must be at least window x window.
double ssim(const Image& a, const Image& b, const SsimOptions& options = {});

/// SSIM together with d ssim / d a (same layout as a.rgb).
double ssim_with_gradient(const Image& a, const Image& b, std::vector<double>& grad_a,
                          const SsimOptions& options = {});

struct QualityReport {
    double psnr = std::numeric_limits<double>::infinity();
    double ssim = 1.0;
    std::size_t raw_bytes = 0;
    std::size_t compressed_bytes = 0;
    double compression_ratio = 1.0;
};

/// Fills raw/compressed sizes and their ratio.
QualityReport size_report(std::size_t compressed_bytes, std::size_t raw_bytes);

}  // namespace elmgs
