// SPDX-License-Identifier: Apache-2.0
#include "elmgs/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "elmgs/error.hpp"

namespace elmgs {

namespace {

void require_same_shape(const Image& a, const Image& b) {
    if (!a.same_shape(b) || a.rgb.size() != b.rgb.size())
        fail(ErrorKind::InvalidArgument,
             "image dimension mismatch: " + std::to_string(a.width) + "x" + std::to_string(a.height) +
                 " vs " + std::to_string(b.width) + "x" + std::to_string(b.height));
}

std::vector<double> gaussian_kernel(int size, double sigma) {
    std::vector<double> k(size);
    const double center = 0.5 * (size - 1);
    double total = 0.0;
    for (int i = 0; i < size; ++i) {
        const double d = i - center;
        k[i] = std::exp(-d * d / (2.0 * sigma * sigma));
        total += k[i];
    }
    for (double& v : k) v /= total;
    return k;
}

// Single-channel plane extracted from an interleaved image.
std::vector<double> channel(const Image& img, int c) {
    std::vector<double> out(img.pixel_count());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = img.rgb[3 * i + c];
    return out;
}

// Correlation restricted to windows fully inside the plane.
std::vector<double> filter_valid(const std::vector<double>& plane, int w, int h,
                                 const std::vector<double>& k) {
    const int n = static_cast<int>(k.size());
    const int ow = w - n + 1, oh = h - n + 1;
    std::vector<double> rows(static_cast<std::size_t>(ow) * h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < ow; ++x) {
            double s = 0.0;
            for (int i = 0; i < n; ++i) s += k[i] * plane[static_cast<std::size_t>(y) * w + x + i];
            rows[static_cast<std::size_t>(y) * ow + x] = s;
        }
    std::vector<double> out(static_cast<std::size_t>(ow) * oh);
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
            double s = 0.0;
            for (int i = 0; i < n; ++i) s += k[i] * rows[static_cast<std::size_t>(y + i) * ow + x];
            out[static_cast<std::size_t>(y) * ow + x] = s;
        }
    return out;
}

// Adjoint of filter_valid: scatters a window map back onto the full plane.
std::vector<double> filter_adjoint(const std::vector<double>& map, int w, int h,
                                   const std::vector<double>& k) {
    const int n = static_cast<int>(k.size());
    const int ow = w - n + 1, oh = h - n + 1;
    std::vector<double> cols(static_cast<std::size_t>(ow) * h, 0.0);
    for (int y = 0; y < oh; ++y)
        for (int x = 0; x < ow; ++x) {
            const double v = map[static_cast<std::size_t>(y) * ow + x];
            for (int i = 0; i < n; ++i) cols[static_cast<std::size_t>(y + i) * ow + x] += k[i] * v;
        }
    std::vector<double> out(static_cast<std::size_t>(w) * h, 0.0);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < ow; ++x) {
            const double v = cols[static_cast<std::size_t>(y) * ow + x];
            for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(y) * w + x + i] += k[i] * v;
        }
    return out;
}

double ssim_impl(const Image& a, const Image& b, std::vector<double>* grad_a, const SsimOptions& opt) {
    require_same_shape(a, b);
    if (a.width < opt.window || a.height < opt.window)
        fail(ErrorKind::InvalidArgument, "SSIM needs images of at least " + std::to_string(opt.window) +
                                             "x" + std::to_string(opt.window) + " pixels");
    const auto k = gaussian_kernel(opt.window, opt.sigma);
    const int w = a.width, h = a.height;
    const std::size_t windows = static_cast<std::size_t>(w - opt.window + 1) * (h - opt.window + 1);
    const double norm = 1.0 / (3.0 * static_cast<double>(windows));
    if (grad_a) grad_a->assign(a.rgb.size(), 0.0);

    double total = 0.0;
    for (int c = 0; c < 3; ++c) {
        const auto pa = channel(a, c);
        const auto pb = channel(b, c);
        std::vector<double> aa(pa.size()), bb(pa.size()), ab(pa.size());
        for (std::size_t i = 0; i < pa.size(); ++i) {
            aa[i] = pa[i] * pa[i];
            bb[i] = pb[i] * pb[i];
            ab[i] = pa[i] * pb[i];
        }
        const auto mu_a = filter_valid(pa, w, h, k);
        const auto mu_b = filter_valid(pb, w, h, k);
        const auto e_aa = filter_valid(aa, w, h, k);
        const auto e_bb = filter_valid(bb, w, h, k);
        const auto e_ab = filter_valid(ab, w, h, k);

        std::vector<double> d_mu(windows), d_aa(windows), d_ab(windows);
        for (std::size_t i = 0; i < windows; ++i) {
            const double ma = mu_a[i], mb = mu_b[i];
            const double var_a = e_aa[i] - ma * ma;
            const double var_b = e_bb[i] - mb * mb;
            const double cov = e_ab[i] - ma * mb;
            const double n1 = 2.0 * ma * mb + opt.c1;
            const double n2 = 2.0 * cov + opt.c2;
            const double d1 = ma * ma + mb * mb + opt.c1;
            const double d2 = var_a + var_b + opt.c2;
            const double s = (n1 * n2) / (d1 * d2);
            total += s;
            if (!grad_a) continue;
            // Partials with respect to (mu_a, E[a^2], E[ab]).
            const double den = d1 * d2;
            const double dn1 = 2.0 * mb, dn2 = -2.0 * mb, dd1 = 2.0 * ma, dd2 = -2.0 * ma;
            d_mu[i] = (dn1 * n2 + n1 * dn2) / den - s * (dd1 * d2 + d1 * dd2) / den;
            d_aa[i] = -s * d1 / den;
            d_ab[i] = n1 * 2.0 / den;
        }
        if (!grad_a) continue;
        const auto g_mu = filter_adjoint(d_mu, w, h, k);
        const auto g_aa = filter_adjoint(d_aa, w, h, k);
        const auto g_ab = filter_adjoint(d_ab, w, h, k);
        for (std::size_t i = 0; i < pa.size(); ++i)
            (*grad_a)[3 * i + c] = norm * (g_mu[i] + 2.0 * pa[i] * g_aa[i] + pb[i] * g_ab[i]);
    }
    return std::clamp(total / (3.0 * static_cast<double>(windows)), -1.0, 1.0);
}

}  // namespace

double psnr(const Image& a, const Image& b) {
    require_same_shape(a, b);
    if (a.rgb.empty()) fail(ErrorKind::InvalidArgument, "PSNR of empty images");
    double sum = 0.0;
    for (std::size_t i = 0; i < a.rgb.size(); ++i) {
        const double d = a.rgb[i] - b.rgb[i];
        sum += d * d;
    }
    const double mse = sum / static_cast<double>(a.rgb.size());
    if (mse == 0.0) return std::numeric_limits<double>::infinity();
    return -10.0 * std::log10(mse);
}

double ssim(const Image& a, const Image& b, const SsimOptions& options) {
    return ssim_impl(a, b, nullptr, options);
}

double ssim_with_gradient(const Image& a, const Image& b, std::vector<double>& grad_a,
                          const SsimOptions& options) {
    return ssim_impl(a, b, &grad_a, options);
}

QualityReport size_report(std::size_t compressed_bytes, std::size_t raw_bytes) {
    if (compressed_bytes == 0) fail(ErrorKind::InvalidArgument, "compressed size is zero");
    if (raw_bytes == 0) fail(ErrorKind::InvalidArgument, "original size is zero");
    QualityReport r;
    r.raw_bytes = raw_bytes;
    r.compressed_bytes = compressed_bytes;
    r.compression_ratio = static_cast<double>(raw_bytes) / static_cast<double>(compressed_bytes);
    return r;
}

}  // namespace elmgs
