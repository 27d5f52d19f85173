#pragma once

// Integrate-and-fire dynamics on whole layers of neurons: plain IF with
// soft reset, the temporal-dependent variant whose per-step current and
// threshold scale with c[t] = 2^(T-t), and the two-stage delay-spike
// schedule that accumulates drive before firing.

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "tdsnn/tensor.hpp"

namespace tdsnn {

enum class NeuronKind { IF, tdIF };

inline const char* neuron_kind_name(NeuronKind k) {
    return k == NeuronKind::IF ? "if" : "tdif";
}

// Binary weight of step t (1-based) under temporal binary coding.
inline double td_coeff(int T, int t) {
    return std::exp2(static_cast<double>(T - t));
}

// Sum of all step weights: 2^T - 1 for tdIF, T for IF.
inline double rate_denominator(NeuronKind kind, int T) {
    return kind == NeuronKind::tdIF ? std::exp2(static_cast<double>(T)) - 1.0
                                    : static_cast<double>(T);
}

struct NeuronLayerState {
    Tensor V;      // membrane potential after reset
    Tensor M_bar;  // delay-stage accumulated potential
    double theta = 1.0;
    int T = 1;
    int T_delay = 0;
    NeuronKind kind = NeuronKind::IF;
    int t_now = 0;  // steps consumed so far, in [0, T]

    NeuronLayerState(std::vector<std::size_t> shape, double theta_, int T_,
                     int T_delay_, NeuronKind kind_)
        : V(Tensor::zeros(shape)),
          M_bar(Tensor::zeros(std::move(shape))),
          theta(theta_),
          T(T_),
          T_delay(T_delay_),
          kind(kind_) {
        detail::require(theta > 0.0, "NeuronLayerState: theta must be > 0");
        detail::require(T >= 1, "NeuronLayerState: T must be >= 1");
        detail::require(T_delay >= 0 && T_delay <= T,
                        "NeuronLayerState: T_delay must be in [0, T]");
    }
};

namespace detail {

// Threshold/subtract at one output slot: spike where M >= cth, Heaviside
// with theta(0) = 1; soft reset subtracts cth on firing.
inline Tensor fire_slot(Tensor& M, double cth) {
    Tensor spikes(M.shape);
    for (std::size_t i = 0; i < M.size(); ++i) {
        if (M.data[i] - cth >= 0.0) {
            spikes.data[i] = 1.0;
            M.data[i] -= cth;
        }
    }
    return spikes;
}

}  // namespace detail

// One step of plain IF: M = V + current, fire at theta, soft reset.
inline Tensor if_step(NeuronLayerState& state, const Tensor& input_current) {
    detail::require(state.t_now < state.T,
                    "if_step: step called beyond T=" + std::to_string(state.T));
    detail::require(state.V.same_shape(input_current),
                    "if_step: current shape " + shape_str(input_current.shape) +
                        " does not match layer " + shape_str(state.V.shape));
    add_inplace(state.V, input_current);
    Tensor spikes = detail::fire_slot(state.V, state.theta);
    ++state.t_now;
    return spikes;
}

// One step of tdIF: current and threshold both scale with c[t] of the step
// being consumed.
inline Tensor tdif_step(NeuronLayerState& state, const Tensor& input_current) {
    detail::require(state.t_now < state.T,
                    "tdif_step: step called beyond T=" + std::to_string(state.T));
    detail::require(state.V.same_shape(input_current),
                    "tdif_step: current shape " + shape_str(input_current.shape) +
                        " does not match layer " + shape_str(state.V.shape));
    const int t = state.t_now + 1;
    const double c = td_coeff(state.T, t);
    for (std::size_t i = 0; i < state.V.size(); ++i)
        state.V.data[i] += c * input_current.data[i];
    Tensor spikes = detail::fire_slot(state.V, c * state.theta);
    ++state.t_now;
    return spikes;
}

struct DelaySpikeResult {
    std::vector<Tensor> spikes;  // exactly T binary tensors
    Tensor residual;             // final accumulated potential
    Tensor drive;                // total accumulated potential before firing
};

// Two-stage delay-spike schedule. Stage 1 accumulates input currents
// (scaled by c[t] for tdIF); once t exceeds T_delay it fires into output
// slots 1..T-T_delay using the threshold of the slot index. Stage 2 drains
// the remaining potential into slots T-T_delay+1..T. T_delay = 0 reduces to
// the plain per-step dynamics; T_delay = T accumulates everything first.
inline DelaySpikeResult delay_spike_run(NeuronKind kind, double theta, int T,
                                        int T_delay,
                                        const std::vector<Tensor>& input_currents) {
    detail::require(T >= 1, "delay_spike_run: T must be >= 1");
    detail::require(T_delay >= 0 && T_delay <= T,
                    "delay_spike_run: T_delay must be in [0, T]");
    detail::require(static_cast<int>(input_currents.size()) == T,
                    "delay_spike_run: expected " + std::to_string(T) +
                        " current tensors, got " +
                        std::to_string(input_currents.size()));

    NeuronLayerState state(input_currents.front().shape, theta, T, T_delay, kind);
    DelaySpikeResult res;
    res.spikes.resize(T);
    res.drive = Tensor::zeros(state.M_bar.shape);

    // Stage 1: accumulate, fire once past the delay.
    for (int t = 1; t <= T; ++t) {
        const Tensor& cur = input_currents[t - 1];
        detail::require(cur.same_shape(state.M_bar),
                        "delay_spike_run: current shape " + shape_str(cur.shape) +
                            " does not match layer " + shape_str(state.M_bar.shape));
        const double c_in = kind == NeuronKind::tdIF ? td_coeff(T, t) : 1.0;
        for (std::size_t i = 0; i < state.M_bar.size(); ++i) {
            const double inj = c_in * cur.data[i];
            state.M_bar.data[i] += inj;
            res.drive.data[i] += inj;
        }
        if (t > T_delay) {
            const int slot = t - T_delay;
            const double c_out = kind == NeuronKind::tdIF ? td_coeff(T, slot) : 1.0;
            res.spikes[slot - 1] = detail::fire_slot(state.M_bar, c_out * theta);
        }
    }
    // Stage 2: drain the remaining potential into the trailing slots.
    for (int slot = T - T_delay + 1; slot <= T; ++slot) {
        const double c_out = kind == NeuronKind::tdIF ? td_coeff(T, slot) : 1.0;
        res.spikes[slot - 1] = detail::fire_slot(state.M_bar, c_out * theta);
    }
    res.residual = state.M_bar;
    return res;
}

}  // namespace tdsnn
