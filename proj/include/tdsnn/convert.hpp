#pragma once

// Folds batch-norm statistics and the activation scales lambda into layer
// weights so every hidden threshold normalizes to 1 and layers exchange
// nothing but binary spikes. The output layer keeps its lambda as
// output_scale, reapplied at decode so results land in source units.

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tdsnn/ann.hpp"
#include "tdsnn/layers.hpp"
#include "tdsnn/neurons.hpp"
#include "tdsnn/tensor.hpp"

namespace tdsnn {

struct SnnLayer {
    LinearOp op;  // fused weights/bias for conv and fc; pooling unchanged
    double theta = 1.0;
    bool spiking = false;  // hidden conv/fc layers fire; pools and output do not
};

struct SnnModel {
    std::vector<SnnLayer> layers;
    NeuronKind kind = NeuronKind::IF;
    int T = 1;
    int T_delay = 0;
    double output_scale = 1.0;  // lambda of the last hidden activation
    std::string name = "snn";
};

inline void validate(const SnnModel& model) {
    detail::require(!model.layers.empty(), "SnnModel: no layers");
    detail::require(model.T >= 1, "SnnModel: T must be >= 1");
    detail::require(model.T_delay >= 0 && model.T_delay <= model.T,
                    "SnnModel: T_delay must be in [0, T]");
    detail::require(model.output_scale > 0.0,
                    "SnnModel: output_scale must be > 0");
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        const SnnLayer& l = model.layers[i];
        detail::require(l.theta > 0.0,
                        "SnnModel: layer " + std::to_string(i) +
                            " theta must be > 0");
        detail::require(!(l.spiking && is_pool(l.op)),
                        "SnnModel: layer " + std::to_string(i) +
                            " is avgpool and cannot spike");
        detail::require(!(l.spiking && i + 1 == model.layers.size()),
                        "SnnModel: output layer cannot spike");
    }
}

// New weights and bias of a conv/fc layer after absorbing batch norm and
// the activation scales of the producing (lambda_prev) and current
// (lambda_cur) layers:
//   W' = lambda_prev * gamma / (lambda_cur * sqrt(sigma2 + eps)) * W
//   B' = gamma * (bias - mu) / (lambda_cur * sqrt(sigma2 + eps)) + beta / lambda_cur
// A pre-existing conv bias rides through the same normalization as mu.
inline std::pair<Tensor, Tensor> fuse_conv_bn(const Tensor& weights,
                                              const Tensor& bias,
                                              const BnParams& bn,
                                              double lambda_prev,
                                              double lambda_cur) {
    detail::require(lambda_prev > 0.0 && lambda_cur > 0.0,
                    "fuse_conv_bn: lambda values must be > 0");
    detail::require(bn.sigma2 + bn.eps > 0.0,
                    "fuse_conv_bn: sigma2 + eps must be > 0");
    const double denom = std::sqrt(bn.sigma2 + bn.eps);
    const double w_scale = lambda_prev * bn.gamma / (lambda_cur * denom);
    const double b_scale = bn.gamma / (lambda_cur * denom);

    Tensor fused_w = scale(weights, w_scale);
    Tensor fused_b = bias;
    for (double& v : fused_b.data)
        v = b_scale * (v - bn.mu) + bn.beta / lambda_cur;
    return {std::move(fused_w), std::move(fused_b)};
}

namespace detail {

inline LinearOp fuse_op(const AnnLayer& layer, double lambda_prev,
                        double lambda_cur) {
    const BnParams bn = layer.bn.value_or(BnParams{1.0, 0.0, 0.0, 1.0, 0.0});
    if (const auto* c = std::get_if<Conv2dSpec>(&layer.op)) {
        auto [w, b] = fuse_conv_bn(c->kernel, c->bias, bn, lambda_prev, lambda_cur);
        return Conv2dSpec{std::move(w), std::move(b), c->stride, c->padding};
    }
    const auto& f = std::get<FcSpec>(layer.op);
    auto [w, b] = fuse_conv_bn(f.weights, f.bias, bn, lambda_prev, lambda_cur);
    return FcSpec{std::move(w), std::move(b)};
}

}  // namespace detail

inline SnnModel convert(const AnnModel& ann, int T, NeuronKind kind,
                        int T_delay) {
    validate(ann);
    detail::require(T >= 1, "convert: T must be >= 1");
    detail::require(T_delay >= 0 && T_delay <= T,
                    "convert: T_delay must be in [0, T]");

    SnnModel snn;
    snn.kind = kind;
    snn.T = T;
    snn.T_delay = T_delay;
    snn.name = ann.name;

    double lambda_prev = 1.0;
    for (std::size_t i = 0; i < ann.layers.size(); ++i) {
        const AnnLayer& layer = ann.layers[i];
        const bool last = i + 1 == ann.layers.size();
        if (is_pool(layer.op)) {
            snn.layers.push_back({layer.op, 1.0, false});
            continue;
        }
        if (last) {
            // No activation to normalize by; reuse lambda_prev so weights
            // stay in threshold units and the decode restores source units.
            snn.layers.push_back(
                {detail::fuse_op(layer, lambda_prev, lambda_prev), 1.0, false});
        } else {
            const double lambda_cur = layer.act->lambda;
            snn.layers.push_back(
                {detail::fuse_op(layer, lambda_prev, lambda_cur), 1.0, true});
            lambda_prev = lambda_cur;
        }
    }
    snn.output_scale = lambda_prev;
    validate(snn);
    return snn;
}

}  // namespace tdsnn
