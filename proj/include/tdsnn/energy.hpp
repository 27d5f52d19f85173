#pragma once

// Instruction-level energy accounting for spiking inference on a digital
// neuromorphic core. Potential accumulation is spike-driven (one weight
// accumulation per incoming spike per reached neuron); spike generation is
// evaluated every time-step for every neuron, whether or not it fires.

#include <cstdint>
#include <vector>

#include "tdsnn/convert.hpp"
#include "tdsnn/engine.hpp"
#include "tdsnn/layers.hpp"
#include "tdsnn/tensor.hpp"

namespace tdsnn {

// Per-instruction costs in pJ.
struct InstructionCostTable {
    double add_sub = 1.4;    // ADD/SUB/MUL-by-spike arithmetic
    double compare = 1.2;    // GTH/MAX/MIN
    double shift = 1.2;      // SHL/SHR
    double evc_base = 0.5;   // event capture
    double evc_event = 1.1;  // additional when an event is generated
    double mld = 3.7;        // data memory load
    double mst = 3.9;        // data memory store
};

enum class NeuronPhase { accumulate, fire };

// Cost of one accumulate or fire computation:
//   accumulate(IF)   = MLD + MLD + ADD + MST            = 12.7
//   accumulate(tdIF) = MLD + MLD + SHL + ADD + MST      = 13.9
//   fire, event      = MLD + GTH + MUL + SUB + MST + EVC + event = 13.2
//   fire, silent     = same without the event increment = 12.1
inline double phase_cost(NeuronKind kind, NeuronPhase phase,
                         bool event_generated,
                         const InstructionCostTable& c = {}) {
    if (phase == NeuronPhase::accumulate) {
        double e = c.mld + c.mld + c.add_sub + c.mst;
        if (kind == NeuronKind::tdIF) e += c.shift;
        return e;
    }
    double e = c.mld + c.compare + c.add_sub + c.add_sub + c.mst + c.evc_base;
    if (event_generated) e += c.evc_event;
    return e;
}

struct EnergyLedger {
    std::uint64_t synaptic_events = 0;     // spike-driven weight accumulations
    std::uint64_t bias_events = 0;         // per-step bias accumulations
    std::uint64_t fire_steps_spiking = 0;  // neuron-steps that emitted a spike
    std::uint64_t fire_steps_silent = 0;   // neuron-steps that stayed quiet
    double total_pj = 0.0;
    double average_spiking_rate = 0.0;  // in [0, 1]
};

struct TallyOptions {
    bool paper_mode = false;  // price silent fire steps at the event cost
    InstructionCostTable costs{};
};

// Emitted spikes over (spiking neurons x T), across all hidden layers.
inline double average_spiking_rate(const InferenceTrace& trace) {
    detail::require(!trace.hidden.empty() || !trace.output_potentials.empty(),
                    "average_spiking_rate: empty trace");
    std::uint64_t spikes = 0, slots = 0;
    for (const LayerTrace& lt : trace.hidden) {
        if (!lt.spiking) continue;
        for (const Tensor& s : lt.train.steps)
            for (double v : s.data) spikes += v != 0.0 ? 1 : 0;
        slots += static_cast<std::uint64_t>(lt.train.steps.size()) *
                 lt.train.steps.front().size();
    }
    return slots ? static_cast<double>(spikes) / static_cast<double>(slots) : 0.0;
}

namespace detail {

inline std::uint64_t nonzero_bias_neurons(const LinearOp& op,
                                          const std::vector<std::size_t>& out_shape) {
    if (const auto* f = std::get_if<FcSpec>(&op)) {
        std::uint64_t n = 0;
        for (double b : f->bias.data) n += b != 0.0 ? 1 : 0;
        return n;
    }
    if (const auto* c = std::get_if<Conv2dSpec>(&op)) {
        std::uint64_t channels = 0;
        for (double b : c->bias.data) channels += b != 0.0 ? 1 : 0;
        return channels * out_shape.at(1) * out_shape.at(2);
    }
    return 0;
}

}  // namespace detail

// Prices a completed inference. Accumulations are counted per incoming
// spike times the structural fan-out of its layer (pooling stages between
// two weighted layers fold into that fan-out). Layers fed by the analog
// input contribute no synaptic events; only spikes drive accumulation.
// Nonzero biases cost one accumulate per neuron per step; the per-step
// bias constants are table lookups like the tdIF thresholds, so they carry
// no shift surcharge under either neuron kind.
inline EnergyLedger tally_inference(const InferenceTrace& trace,
                                    const SnnModel& model,
                                    const TallyOptions& opt = {}) {
    validate(model);
    detail::require(trace.hidden.size() + 1 == model.layers.size(),
                    "tally_inference: trace has " +
                        std::to_string(trace.hidden.size()) +
                        " hidden layers, model expects " +
                        std::to_string(model.layers.size() - 1));
    detail::require(trace.T == model.T, "tally_inference: trace/model T differ");

    EnergyLedger led;
    const std::uint64_t T = static_cast<std::uint64_t>(model.T);

    // Upstream spike source while walking the layer list: index of the
    // nearest spiking hidden layer, the pool stages crossed since, and the
    // tensor shapes entering each of those stages.
    int src = -1;
    std::vector<AvgPoolSpec> pools;
    std::vector<std::vector<std::size_t>> chain_shapes;

    for (std::size_t i = 0; i < model.layers.size(); ++i) {
        const SnnLayer& layer = model.layers[i];
        if (is_pool(layer.op)) {
            if (src >= 0) {
                const auto& p = std::get<AvgPoolSpec>(layer.op);
                pools.push_back(p);
                chain_shapes.push_back(output_shape(layer.op, chain_shapes.back()));
            }
            continue;
        }

        const bool hidden = i + 1 < model.layers.size();
        if (hidden) {
            detail::require(trace.hidden[i].spiking &&
                                !trace.hidden[i].train.steps.empty(),
                            "tally_inference: layer " + std::to_string(i) +
                                " trace is not spiking");
        }
        const std::vector<std::size_t>& out_shape =
            hidden ? trace.hidden[i].train.steps.front().shape
                   : trace.output_potentials.front().shape;
        led.bias_events += detail::nonzero_bias_neurons(layer.op, out_shape) * T;

        if (src >= 0) {
            Tensor fan = synaptic_fanout(layer.op, chain_shapes.back());
            for (std::size_t p = pools.size(); p-- > 0;)
                fan = pool_backproject(pools[p], chain_shapes[p], fan);
            const SpikeTrain& train = trace.hidden[static_cast<std::size_t>(src)].train;
            double events = 0.0;
            for (const Tensor& s : train.steps)
                for (std::size_t j = 0; j < s.size(); ++j)
                    if (s.data[j] != 0.0) events += fan.data[j];
            led.synaptic_events += static_cast<std::uint64_t>(events + 0.5);
        }

        if (i + 1 < model.layers.size()) {
            const LayerTrace& lt = trace.hidden[i];
            detail::require(lt.spiking, "tally_inference: layer " +
                                            std::to_string(i) +
                                            " trace is not spiking");
            std::uint64_t spikes = 0;
            for (const Tensor& s : lt.train.steps)
                for (double v : s.data) spikes += v != 0.0 ? 1 : 0;
            const std::uint64_t neurons = lt.train.steps.front().size();
            led.fire_steps_spiking += spikes;
            led.fire_steps_silent += neurons * T - spikes;

            src = static_cast<int>(i);
            pools.clear();
            chain_shapes.assign(1, lt.train.steps.front().shape);
        }
    }

    led.total_pj =
        static_cast<double>(led.synaptic_events) *
            phase_cost(model.kind, NeuronPhase::accumulate, false, opt.costs) +
        static_cast<double>(led.bias_events) *
            phase_cost(NeuronKind::IF, NeuronPhase::accumulate, false, opt.costs) +
        static_cast<double>(led.fire_steps_spiking) *
            phase_cost(model.kind, NeuronPhase::fire, true, opt.costs) +
        static_cast<double>(led.fire_steps_silent) *
            phase_cost(model.kind, NeuronPhase::fire, !opt.paper_mode ? false : true,
                       opt.costs);
    led.average_spiking_rate = average_spiking_rate(trace);
    return led;
}

}  // namespace tdsnn
