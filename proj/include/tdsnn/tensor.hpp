#pragma once

// Dense row-major tensor and the linear ops shared by the analog reference
// path and the spiking current-injection path. All arithmetic is double
// precision regardless of what model files store.

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace tdsnn {

struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;  // flat, row-major, size == product of shape

    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> s)
        : shape(std::move(s)), data(numel(shape), 0.0) {}
    Tensor(std::vector<std::size_t> s, std::vector<double> d)
        : shape(std::move(s)), data(std::move(d)) {
        if (data.size() != numel(shape)) {
            throw std::invalid_argument("Tensor: data length " +
                                        std::to_string(data.size()) +
                                        " does not match shape product " +
                                        std::to_string(numel(shape)));
        }
    }

    static std::size_t numel(const std::vector<std::size_t>& s) {
        return std::accumulate(s.begin(), s.end(), std::size_t{1},
                               std::multiplies<>());
    }
    static Tensor zeros(std::vector<std::size_t> s) { return Tensor(std::move(s)); }
    static Tensor full(std::vector<std::size_t> s, double v) {
        Tensor t(std::move(s));
        std::fill(t.data.begin(), t.data.end(), v);
        return t;
    }
    static Tensor scalar(double v) { return Tensor({1}, {v}); }

    std::size_t size() const { return data.size(); }
    double& operator[](std::size_t i) { return data[i]; }
    double operator[](std::size_t i) const { return data[i]; }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    bool all_finite() const {
        return std::all_of(data.begin(), data.end(),
                           [](double v) { return std::isfinite(v); });
    }
};

inline std::string shape_str(const std::vector<std::size_t>& s) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
    os << ']';
    return os.str();
}

namespace detail {

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

}  // namespace detail

// ---- elementwise helpers -------------------------------------------------

inline Tensor& add_inplace(Tensor& a, const Tensor& b) {
    detail::require(a.same_shape(b), "add: shape mismatch " +
                                         shape_str(a.shape) + " vs " +
                                         shape_str(b.shape));
    for (std::size_t i = 0; i < a.size(); ++i) a.data[i] += b.data[i];
    return a;
}

inline Tensor add(Tensor a, const Tensor& b) { add_inplace(a, b); return a; }

inline Tensor sub(Tensor a, const Tensor& b) {
    detail::require(a.same_shape(b), "sub: shape mismatch " +
                                         shape_str(a.shape) + " vs " +
                                         shape_str(b.shape));
    for (std::size_t i = 0; i < a.size(); ++i) a.data[i] -= b.data[i];
    return a;
}

inline Tensor scale(Tensor a, double s) {
    for (double& v : a.data) v *= s;
    return a;
}

inline double max_abs(const Tensor& a) {
    double m = 0.0;
    for (double v : a.data) m = std::max(m, std::abs(v));
    return m;
}

inline double mean_abs(const Tensor& a) {
    if (a.data.empty()) return 0.0;
    double s = 0.0;
    for (double v : a.data) s += std::abs(v);
    return s / static_cast<double>(a.size());
}

// ---- linear operations ---------------------------------------------------

// Cross-correlation with zero padding. input [Cin,H,W], kernel
// [Cout,Cin,kH,kW], bias [Cout] -> [Cout,H',W'] with
// H' = (H + 2*padding - kH)/stride + 1.
inline Tensor conv2d(const Tensor& input, const Tensor& kernel,
                     const Tensor& bias, int stride, int padding) {
    detail::require(input.shape.size() == 3,
                    "conv2d: input must be rank 3 [Cin,H,W], got " +
                        shape_str(input.shape));
    detail::require(kernel.shape.size() == 4,
                    "conv2d: kernel must be rank 4 [Cout,Cin,kH,kW], got " +
                        shape_str(kernel.shape));
    detail::require(stride >= 1, "conv2d: stride must be >= 1");
    detail::require(padding >= 0, "conv2d: padding must be >= 0");

    const std::size_t cin = input.shape[0], h = input.shape[1], w = input.shape[2];
    const std::size_t cout = kernel.shape[0], kh = kernel.shape[2], kw = kernel.shape[3];
    detail::require(kernel.shape[1] == cin,
                    "conv2d: kernel expects " + std::to_string(kernel.shape[1]) +
                        " input channels, input has " + std::to_string(cin));
    detail::require(bias.shape == std::vector<std::size_t>{cout},
                    "conv2d: bias shape " + shape_str(bias.shape) +
                        " does not match " + std::to_string(cout) +
                        " output channels");
    detail::require(h + 2 * static_cast<std::size_t>(padding) >= kh &&
                        w + 2 * static_cast<std::size_t>(padding) >= kw,
                    "conv2d: kernel " + std::to_string(kh) + "x" +
                        std::to_string(kw) + " larger than padded input");

    const std::size_t oh = (h + 2 * padding - kh) / stride + 1;
    const std::size_t ow = (w + 2 * padding - kw) / stride + 1;
    Tensor out({cout, oh, ow});

    for (std::size_t co = 0; co < cout; ++co) {
        for (std::size_t y = 0; y < oh; ++y) {
            for (std::size_t x = 0; x < ow; ++x) {
                double acc = bias.data[co];
                for (std::size_t ci = 0; ci < cin; ++ci) {
                    for (std::size_t ky = 0; ky < kh; ++ky) {
                        const long iy = static_cast<long>(y) * stride + ky - padding;
                        if (iy < 0 || iy >= static_cast<long>(h)) continue;
                        for (std::size_t kx = 0; kx < kw; ++kx) {
                            const long ix = static_cast<long>(x) * stride + kx - padding;
                            if (ix < 0 || ix >= static_cast<long>(w)) continue;
                            acc += input.data[(ci * h + iy) * w + ix] *
                                   kernel.data[((co * cin + ci) * kh + ky) * kw + kx];
                        }
                    }
                }
                out.data[(co * oh + y) * ow + x] = acc;
            }
        }
    }
    return out;
}

// output_i = sum_j weights[i,j]*input[j] + bias[i]
inline Tensor fully_connected(const Tensor& input, const Tensor& weights,
                              const Tensor& bias) {
    detail::require(weights.shape.size() == 2,
                    "fully_connected: weights must be rank 2 [M,N], got " +
                        shape_str(weights.shape));
    const std::size_t m = weights.shape[0], n = weights.shape[1];
    detail::require(input.size() == n,
                    "fully_connected: weights expect " + std::to_string(n) +
                        " inputs, input has " + std::to_string(input.size()));
    detail::require(bias.shape == std::vector<std::size_t>{m},
                    "fully_connected: bias shape " + shape_str(bias.shape) +
                        " does not match " + std::to_string(m) + " outputs");

    Tensor out({m});
    for (std::size_t i = 0; i < m; ++i) {
        double acc = bias.data[i];
        for (std::size_t j = 0; j < n; ++j)
            acc += weights.data[i * n + j] * input.data[j];
        out.data[i] = acc;
    }
    return out;
}

// Mean over each window. input [C,H,W] -> [C,H',W'], floor semantics.
inline Tensor avg_pool2d(const Tensor& input, int window, int stride) {
    detail::require(input.shape.size() == 3,
                    "avg_pool2d: input must be rank 3 [C,H,W], got " +
                        shape_str(input.shape));
    detail::require(window >= 1 && stride >= 1,
                    "avg_pool2d: window and stride must be >= 1");
    const std::size_t c = input.shape[0], h = input.shape[1], w = input.shape[2];
    detail::require(static_cast<std::size_t>(window) <= h &&
                        static_cast<std::size_t>(window) <= w,
                    "avg_pool2d: window " + std::to_string(window) +
                        " larger than input " + shape_str(input.shape));

    const std::size_t oh = (h - window) / stride + 1;
    const std::size_t ow = (w - window) / stride + 1;
    const double inv = 1.0 / (static_cast<double>(window) * window);
    Tensor out({c, oh, ow});
    for (std::size_t ch = 0; ch < c; ++ch) {
        for (std::size_t y = 0; y < oh; ++y) {
            for (std::size_t x = 0; x < ow; ++x) {
                double acc = 0.0;
                for (int py = 0; py < window; ++py)
                    for (int px = 0; px < window; ++px)
                        acc += input.data[(ch * h + y * stride + py) * w +
                                          x * stride + px];
                out.data[(ch * oh + y) * ow + x] = acc * inv;
            }
        }
    }
    return out;
}

}  // namespace tdsnn
