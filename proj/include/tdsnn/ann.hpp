#pragma once

// Reference forward pass for the source analog network. Hidden layers use
// the quant-clip activation so that every activation lands on the discrete
// lattice {0, lambda/L, ..., lambda}; the output layer is a raw readout.

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tdsnn/layers.hpp"
#include "tdsnn/tensor.hpp"

namespace tdsnn {

struct QuantClipParams {
    double lambda = 1.0;  // maximum activation scale, > 0
    int L = 1;            // quantized time-steps, >= 1
};

struct BnParams {
    double gamma = 1.0;
    double beta = 0.0;
    double mu = 0.0;      // running mean
    double sigma2 = 1.0;  // running variance, sigma2 + eps > 0
    double eps = 1e-5;
};

struct AnnLayer {
    LinearOp op;
    std::optional<BnParams> bn;        // conv/fc layers only
    std::optional<QuantClipParams> act;  // hidden conv/fc layers only
};

struct AnnModel {
    std::vector<AnnLayer> layers;
    std::string name = "ann";
};

// lambda * clip(floor(x*L/lambda)/L, 0, 1). Values within 1e-12 of an
// integer are snapped before flooring so lattice points classify the same
// way on every platform.
inline double quant_clip(double x, double lambda, int L) {
    if (!std::isfinite(x))
        throw std::invalid_argument("quant_clip: non-finite input");
    detail::require(lambda > 0.0, "quant_clip: lambda must be > 0");
    detail::require(L >= 1, "quant_clip: L must be >= 1");

    double u = x * static_cast<double>(L) / lambda;
    const double nearest = std::nearbyint(u);
    if (std::abs(u - nearest) <= 1e-12) u = nearest;
    double q = std::floor(u);
    q = std::clamp(q, 0.0, static_cast<double>(L));
    return lambda * q / static_cast<double>(L);
}

inline Tensor quant_clip(const Tensor& x, const QuantClipParams& p) {
    Tensor out = x;
    for (double& v : out.data) v = quant_clip(v, p.lambda, p.L);
    return out;
}

inline Tensor batch_norm(const Tensor& x, const BnParams& bn) {
    detail::require(bn.sigma2 + bn.eps > 0.0,
                    "batch_norm: sigma2 + eps must be > 0");
    const double inv = bn.gamma / std::sqrt(bn.sigma2 + bn.eps);
    Tensor out = x;
    for (double& v : out.data) v = (v - bn.mu) * inv + bn.beta;
    return out;
}

inline void validate(const AnnModel& model) {
    detail::require(!model.layers.empty(), "AnnModel: no layers");
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        const AnnLayer& l = model.layers[i];
        const bool last = i + 1 == model.layers.size();
        const std::string where = "layer " + std::to_string(i);
        if (is_pool(l.op)) {
            detail::require(!l.bn && !l.act,
                            "AnnModel: " + where +
                                " is avgpool and must not carry bn/lambda");
            continue;
        }
        if (last) {
            detail::require(!l.act, "AnnModel: output " + where +
                                        " must not carry an activation");
        } else {
            detail::require(l.act.has_value(),
                            "AnnModel: hidden " + where + " is missing lambda/L");
        }
        if (l.act) {
            detail::require(l.act->lambda > 0.0,
                            "AnnModel: " + where + " lambda must be > 0");
            detail::require(l.act->L >= 1, "AnnModel: " + where + " L must be >= 1");
        }
        if (l.bn) {
            detail::require(l.bn->sigma2 + l.bn->eps > 0.0,
                            "AnnModel: " + where + " sigma2 + eps must be > 0");
        }
    }
}

struct AnnTrace {
    std::vector<Tensor> activations;  // per hidden layer, in source units
    Tensor output;                    // raw pre-activation output
};

inline AnnTrace ann_forward(const AnnModel& model, const Tensor& input) {
    validate(model);
    AnnTrace trace;
    Tensor x = input;
    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        const AnnLayer& l = model.layers[i];
        x = apply(l.op, x);
        if (l.bn) x = batch_norm(x, *l.bn);
        if (l.act) x = quant_clip(x, *l.act);
        if (i + 1 == model.layers.size()) {
            trace.output = x;
        } else {
            trace.activations.push_back(x);
        }
    }
    return trace;
}

// Scale that maps a hidden layer's activation into rate units: its own
// lambda for activation layers, the most recent upstream lambda for pools
// (pooling commutes with the scale), 1 ahead of the first activation.
inline std::vector<double> hidden_rate_scales(const AnnModel& model) {
    std::vector<double> scales;
    double lambda_prev = 1.0;
    for (std::size_t i = 0; i + 1 < model.layers.size(); ++i) {
        const AnnLayer& l = model.layers[i];
        if (l.act) lambda_prev = l.act->lambda;
        scales.push_back(lambda_prev);
    }
    return scales;
}

// Hidden activations divided by their rate scale; directly comparable to
// spiking rates in [0, 1].
inline std::vector<Tensor> normalized_hidden_activations(const AnnModel& model,
                                                         const AnnTrace& trace) {
    const std::vector<double> scales = hidden_rate_scales(model);
    detail::require(scales.size() == trace.activations.size(),
                    "normalized_hidden_activations: trace does not match model");
    std::vector<Tensor> out;
    out.reserve(scales.size());
    for (std::size_t i = 0; i < scales.size(); ++i)
        out.push_back(scale(trace.activations[i], 1.0 / scales[i]));
    return out;
}

}  // namespace tdsnn
