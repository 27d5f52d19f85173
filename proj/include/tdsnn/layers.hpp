#pragma once

// Layer parameter records shared by the analog model, the converter and the
// spiking engine. A layer's linear part is one of conv2d / fully-connected /
// average-pooling; pooling carries no parameters.

#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include "tdsnn/tensor.hpp"

namespace tdsnn {

struct Conv2dSpec {
    Tensor kernel;  // [Cout,Cin,kH,kW]
    Tensor bias;    // [Cout]
    int stride = 1;
    int padding = 0;
};

struct FcSpec {
    Tensor weights;  // [M,N]
    Tensor bias;     // [M]
};

struct AvgPoolSpec {
    int window = 2;
    int stride = 2;
};

using LinearOp = std::variant<Conv2dSpec, FcSpec, AvgPoolSpec>;

inline bool is_pool(const LinearOp& op) {
    return std::holds_alternative<AvgPoolSpec>(op);
}

inline const char* op_kind_name(const LinearOp& op) {
    if (std::holds_alternative<Conv2dSpec>(op)) return "conv2d";
    if (std::holds_alternative<FcSpec>(op)) return "fc";
    return "avgpool";
}

inline Tensor apply(const LinearOp& op, const Tensor& input) {
    if (const auto* c = std::get_if<Conv2dSpec>(&op))
        return conv2d(input, c->kernel, c->bias, c->stride, c->padding);
    if (const auto* f = std::get_if<FcSpec>(&op))
        return fully_connected(input, f->weights, f->bias);
    const auto& p = std::get<AvgPoolSpec>(op);
    return avg_pool2d(input, p.window, p.stride);
}

// Flattened input expected by the op, given the producing shape; used only
// for validation messages.
inline std::vector<std::size_t> output_shape(const LinearOp& op,
                                             const std::vector<std::size_t>& in) {
    if (const auto* c = std::get_if<Conv2dSpec>(&op)) {
        const std::size_t h = in.at(1), w = in.at(2);
        const std::size_t kh = c->kernel.shape[2], kw = c->kernel.shape[3];
        return {c->kernel.shape[0], (h + 2 * c->padding - kh) / c->stride + 1,
                (w + 2 * c->padding - kw) / c->stride + 1};
    }
    if (const auto* f = std::get_if<FcSpec>(&op)) return {f->weights.shape[0]};
    const auto& p = std::get<AvgPoolSpec>(op);
    return {in.at(0), (in.at(1) - p.window) / p.stride + 1,
            (in.at(2) - p.window) / p.stride + 1};
}

// Number of weight accumulations one input element triggers in this op
// (kernel taps that touch it, times nothing else for fc). Used by the
// energy accounting; structural, independent of weight values.
inline Tensor synaptic_fanout(const LinearOp& op,
                              const std::vector<std::size_t>& in_shape) {
    if (const auto* f = std::get_if<FcSpec>(&op)) {
        return Tensor::full({f->weights.shape[1]},
                            static_cast<double>(f->weights.shape[0]));
    }
    if (const auto* c = std::get_if<Conv2dSpec>(&op)) {
        const std::size_t cin = in_shape.at(0), h = in_shape.at(1), w = in_shape.at(2);
        const std::size_t cout = c->kernel.shape[0];
        const std::size_t kh = c->kernel.shape[2], kw = c->kernel.shape[3];
        const std::size_t oh = (h + 2 * c->padding - kh) / c->stride + 1;
        const std::size_t ow = (w + 2 * c->padding - kw) / c->stride + 1;
        Tensor fan({cin, h, w});
        for (std::size_t y = 0; y < oh; ++y) {
            for (std::size_t x = 0; x < ow; ++x) {
                for (std::size_t ky = 0; ky < kh; ++ky) {
                    const long iy = static_cast<long>(y) * c->stride + ky - c->padding;
                    if (iy < 0 || iy >= static_cast<long>(h)) continue;
                    for (std::size_t kx = 0; kx < kw; ++kx) {
                        const long ix = static_cast<long>(x) * c->stride + kx - c->padding;
                        if (ix < 0 || ix >= static_cast<long>(w)) continue;
                        for (std::size_t ci = 0; ci < cin; ++ci)
                            fan.data[(ci * h + iy) * w + ix] += static_cast<double>(cout);
                    }
                }
            }
        }
        return fan;
    }
    // Pooling alone triggers no weight accumulations; composition with a
    // following weighted op happens in pool_backproject.
    return Tensor::zeros(std::vector<std::size_t>(in_shape));
}

// Pull per-element downstream accumulation counts back through a pooling
// stage: an input element inherits the counts of every window it feeds.
inline Tensor pool_backproject(const AvgPoolSpec& p,
                               const std::vector<std::size_t>& in_shape,
                               const Tensor& downstream) {
    const std::size_t c = in_shape.at(0), h = in_shape.at(1), w = in_shape.at(2);
    const std::size_t oh = downstream.shape.at(1), ow = downstream.shape.at(2);
    Tensor fan({c, h, w});
    for (std::size_t ch = 0; ch < c; ++ch) {
        for (std::size_t y = 0; y < oh; ++y) {
            for (std::size_t x = 0; x < ow; ++x) {
                const double d = downstream.data[(ch * oh + y) * ow + x];
                for (int py = 0; py < p.window; ++py)
                    for (int px = 0; px < p.window; ++px)
                        fan.data[(ch * h + y * p.stride + py) * w +
                                 x * p.stride + px] += d;
            }
        }
    }
    return fan;
}

}  // namespace tdsnn
