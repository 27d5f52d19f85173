#pragma once

// Multi-time-step spiking inference over a converted model: constant-current
// input encoding, per-layer delay-spike execution, spike propagation, rate
// computation and output decoding.

#include <cassert>
#include <cmath>
#include <vector>

#include "tdsnn/convert.hpp"
#include "tdsnn/layers.hpp"
#include "tdsnn/neurons.hpp"
#include "tdsnn/tensor.hpp"

namespace tdsnn {

struct SpikeTrain {
    std::vector<Tensor> steps;  // every entry is 0 or 1

    int T() const { return static_cast<int>(steps.size()); }
    bool is_binary() const {
        for (const Tensor& s : steps)
            for (double v : s.data)
                if (v != 0.0 && v != 1.0) return false;
        return true;
    }
};

// IF: sum_t S[t]/T. tdIF: sum_t 2^(T-t)*S[t]/(2^T-1).
inline Tensor weighted_rate(const SpikeTrain& train, NeuronKind kind) {
    detail::require(!train.steps.empty(), "weighted_rate: empty train");
    const int T = train.T();
    const double denom = rate_denominator(kind, T);
    Tensor rate = Tensor::zeros(train.steps.front().shape);
    for (int t = 1; t <= T; ++t) {
        const double w = kind == NeuronKind::tdIF ? td_coeff(T, t) : 1.0;
        for (std::size_t i = 0; i < rate.size(); ++i)
            rate.data[i] += w * train.steps[t - 1].data[i];
    }
    return scale(std::move(rate), 1.0 / denom);
}

// Mean of the output potentials, rescaled into source units.
inline Tensor decode_if(const std::vector<Tensor>& potentials,
                        double output_scale = 1.0) {
    detail::require(!potentials.empty(), "decode_if: no potentials");
    Tensor out = Tensor::zeros(potentials.front().shape);
    for (const Tensor& v : potentials) add_inplace(out, v);
    return scale(std::move(out),
                 output_scale / static_cast<double>(potentials.size()));
}

// Binary-weighted mean: sum_t V[t]*2^(T-t) / (2^T-1), rescaled.
inline Tensor decode_tdif(const std::vector<Tensor>& potentials,
                          double output_scale = 1.0) {
    detail::require(!potentials.empty(), "decode_tdif: no potentials");
    const int T = static_cast<int>(potentials.size());
    Tensor out = Tensor::zeros(potentials.front().shape);
    for (int t = 1; t <= T; ++t) {
        const double w = td_coeff(T, t);
        for (std::size_t i = 0; i < out.size(); ++i)
            out.data[i] += w * potentials[t - 1].data[i];
    }
    return scale(std::move(out), output_scale / rate_denominator(NeuronKind::tdIF, T));
}

// Direct constant-current coding: the analog input is repeated at every
// step; any temporal weighting happens inside the neuron dynamics.
inline std::vector<Tensor> encode_input(const Tensor& input, int T,
                                        NeuronKind /*kind*/ = NeuronKind::IF) {
    detail::require(T >= 1, "encode_input: T must be >= 1");
    return std::vector<Tensor>(static_cast<std::size_t>(T), input);
}

struct LayerTrace {
    bool spiking = false;
    SpikeTrain train;  // spiking layers only
    Tensor rate;       // weighted rate, or pooled upstream rate for pools
    Tensor residual;   // spiking layers only
    Tensor drive;      // total accumulated potential, spiking layers only
    double theta = 1.0;
};

struct InferenceTrace {
    std::vector<LayerTrace> hidden;          // one per hidden model layer
    std::vector<Tensor> output_potentials;   // V_out[t] for t = 1..T
    Tensor decoded;
    NeuronKind kind = NeuronKind::IF;
    int T = 1;
};

namespace detail {

inline InferenceTrace run_snn_impl(const SnnModel& model,
                                   std::vector<Tensor> step_inputs,
                                   Tensor input_rate) {
    validate(model);
    const int T = model.T;
    InferenceTrace trace;
    trace.kind = model.kind;
    trace.T = T;

    const std::size_t n = model.layers.size();
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const SnnLayer& layer = model.layers[i];
        LayerTrace lt;
        if (is_pool(layer.op)) {
            // Pooling rides along with the next layer's current computation;
            // only its rate-level meaning is recorded here.
            for (Tensor& s : step_inputs) s = apply(layer.op, s);
            input_rate = apply(layer.op, input_rate);
            lt.rate = input_rate;
            trace.hidden.push_back(std::move(lt));
            continue;
        }
        std::vector<Tensor> currents;
        currents.reserve(step_inputs.size());
        for (const Tensor& s : step_inputs)
            currents.push_back(apply(layer.op, s));  // bias injected every step
        DelaySpikeResult dsr = delay_spike_run(model.kind, layer.theta, T,
                                               model.T_delay, currents);
        lt.spiking = true;
        lt.theta = layer.theta;
        lt.train = SpikeTrain{std::move(dsr.spikes)};
        assert(lt.train.is_binary());
        lt.rate = weighted_rate(lt.train, model.kind);
        lt.residual = std::move(dsr.residual);
        lt.drive = std::move(dsr.drive);
        step_inputs = lt.train.steps;
        input_rate = lt.rate;
        trace.hidden.push_back(std::move(lt));
    }

    const SnnLayer& out = model.layers.back();
    trace.output_potentials.reserve(step_inputs.size());
    for (const Tensor& s : step_inputs)
        trace.output_potentials.push_back(apply(out.op, s));
    trace.decoded = model.kind == NeuronKind::tdIF
                        ? decode_tdif(trace.output_potentials, model.output_scale)
                        : decode_if(trace.output_potentials, model.output_scale);
    return trace;
}

}  // namespace detail

// Spiking inference on an analog input tensor (constant-current coding).
inline InferenceTrace run_snn(const SnnModel& model, const Tensor& input) {
    detail::require(input.all_finite(), "run_snn: input must be finite");
    return detail::run_snn_impl(model, encode_input(input, model.T, model.kind),
                                input);
}

// Spiking inference on an externally supplied input spike train; its
// weighted rate is what the analog reference would see as input.
inline InferenceTrace run_snn(const SnnModel& model, const SpikeTrain& input) {
    detail::require(input.T() == model.T,
                    "run_snn: input train length " + std::to_string(input.T()) +
                        " does not match model T=" + std::to_string(model.T));
    detail::require(input.is_binary(),
                    "run_snn: input spike train must be binary");
    return detail::run_snn_impl(model, input.steps,
                                weighted_rate(input, model.kind));
}

}  // namespace tdsnn
