#pragma once

// Quantifies the two conversion error families: residual-potential error
// (irregular spike orderings leave the membrane outside [0, theta)) and
// quantization error (the rate lattice cannot hit arbitrary regression
// targets). Includes an exhaustive spike-placement search that produces
// concrete witnesses for both failure modes.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "tdsnn/ann.hpp"
#include "tdsnn/engine.hpp"
#include "tdsnn/neurons.hpp"
#include "tdsnn/tensor.hpp"

namespace tdsnn {

struct LayerError {
    Tensor err;      // rate - normalized analog activation
    Tensor epsilon;  // residual/(theta*T), zero for pool layers
    double max_abs = 0.0;
    double mean_abs = 0.0;
};

struct ErrorReport {
    std::vector<LayerError> layers;
    std::size_t residual_violations = 0;  // neurons with drive >= 0 outside [0, theta)
    double max_abs_err = 0.0;
    double mean_abs_err = 0.0;
    Tensor output_err;  // decoded - analog raw output
    double output_max_abs = 0.0;
};

// (V_T - V_0) / (theta * T), elementwise.
inline Tensor residual_epsilon(const Tensor& v_T, const Tensor& v_0,
                               double theta, int T) {
    detail::require(theta > 0.0, "residual_epsilon: theta must be > 0");
    detail::require(T >= 1, "residual_epsilon: T must be >= 1");
    Tensor out = sub(v_T, v_0);
    return scale(std::move(out), 1.0 / (theta * static_cast<double>(T)));
}

// Per-layer deltas between normalized analog activations and spiking rates.
inline ErrorReport conversion_error(const std::vector<Tensor>& ann_rates,
                                    const InferenceTrace& snn) {
    detail::require(ann_rates.size() == snn.hidden.size(),
                    "conversion_error: trace layer counts differ (" +
                        std::to_string(ann_rates.size()) + " vs " +
                        std::to_string(snn.hidden.size()) + ")");
    ErrorReport report;
    double abs_sum = 0.0;
    std::size_t elems = 0;
    for (std::size_t i = 0; i < ann_rates.size(); ++i) {
        const LayerTrace& lt = snn.hidden[i];
        detail::require(ann_rates[i].shape == lt.rate.shape,
                        "conversion_error: layer " + std::to_string(i) +
                            " shape mismatch " + shape_str(ann_rates[i].shape) +
                            " vs " + shape_str(lt.rate.shape));
        LayerError le;
        le.err = sub(lt.rate, ann_rates[i]);
        le.max_abs = max_abs(le.err);
        le.mean_abs = mean_abs(le.err);
        if (lt.spiking) {
            le.epsilon = residual_epsilon(lt.residual,
                                          Tensor::zeros(lt.residual.shape),
                                          lt.theta, snn.T);
            for (std::size_t j = 0; j < lt.residual.size(); ++j) {
                const double res = lt.residual.data[j];
                if (lt.drive.data[j] >= 0.0 && !(res >= 0.0 && res < lt.theta))
                    ++report.residual_violations;
            }
        } else {
            le.epsilon = Tensor::zeros(le.err.shape);
        }
        report.max_abs_err = std::max(report.max_abs_err, le.max_abs);
        abs_sum += le.mean_abs * static_cast<double>(le.err.size());
        elems += le.err.size();
        report.layers.push_back(std::move(le));
    }
    report.mean_abs_err = elems ? abs_sum / static_cast<double>(elems) : 0.0;
    return report;
}

// Convenience form that normalizes the analog trace and includes the
// decoded-output delta.
inline ErrorReport conversion_error(const AnnModel& model,
                                    const AnnTrace& ann,
                                    const InferenceTrace& snn) {
    ErrorReport report =
        conversion_error(normalized_hidden_activations(model, ann), snn);
    report.output_err = sub(snn.decoded, ann.output);
    report.output_max_abs = max_abs(report.output_err);
    return report;
}

// ---- irregular spike-pattern search ---------------------------------------

struct PatternWitness {
    bool found = false;
    std::vector<std::vector<int>> input_trains;  // one 0/1 train per input
    std::vector<int> output_train;
    double residual = 0.0;
    double rate = 0.0;
};

struct IrregularPatterns {
    PatternWitness uniform;   // residual 0 and rate equal to the analog value
    PatternWitness overflow;  // residual >= theta (too few spikes emitted)
    PatternWitness negative;  // residual < 0 (too many spikes emitted)
    double target_rate = 0.0;
    std::size_t searched = 0;
};

namespace detail {

// All size-k position subsets of {0..T-1} in lexicographic tuple order.
inline std::vector<std::vector<int>> combinations(int T, int k) {
    std::vector<std::vector<int>> all;
    std::vector<int> idx(k);
    for (int i = 0; i < k; ++i) idx[i] = i;
    if (k == 0) {
        all.push_back({});
        return all;
    }
    while (true) {
        all.push_back(idx);
        int i = k - 1;
        while (i >= 0 && idx[i] == T - k + i) --i;
        if (i < 0) break;
        ++idx[i];
        for (int j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
    return all;
}

}  // namespace detail

// Exhaustively searches every placement of the given per-input spike counts
// (rates*T) under plain IF dynamics (T_delay = 0) on a single output neuron.
// Witness order is deterministic: the first placement found when inputs
// enumerate their spike-position tuples lexicographically, earlier inputs
// varying slowest.
inline IrregularPatterns find_irregular_patterns(const std::vector<double>& rates,
                                                 const std::vector<double>& weights,
                                                 double theta, int T) {
    detail::require(rates.size() == weights.size(),
                    "find_irregular_patterns: rates/weights size mismatch");
    detail::require(T >= 1, "find_irregular_patterns: T must be >= 1");
    detail::require(theta > 0.0, "find_irregular_patterns: theta must be > 0");

    const std::size_t K = rates.size();
    std::vector<int> counts(K);
    for (std::size_t i = 0; i < K; ++i) {
        const double n = rates[i] * static_cast<double>(T);
        counts[i] = static_cast<int>(std::lround(n));
        detail::require(std::abs(n - counts[i]) <= 1e-9 && counts[i] >= 0 &&
                            counts[i] <= T,
                        "find_irregular_patterns: rate " + std::to_string(rates[i]) +
                            " is not a realizable spike count over T=" +
                            std::to_string(T));
    }

    IrregularPatterns result;
    double x = 0.0;
    for (std::size_t i = 0; i < K; ++i) x += weights[i] * rates[i];
    result.target_rate = quant_clip(x, theta, T) / theta;

    std::vector<std::vector<std::vector<int>>> choices(K);
    for (std::size_t i = 0; i < K; ++i)
        choices[i] = detail::combinations(T, counts[i]);

    std::vector<std::size_t> odo(K, 0);
    while (true) {
        // Materialize this placement and run it through plain IF.
        std::vector<std::vector<int>> trains(K, std::vector<int>(T, 0));
        for (std::size_t i = 0; i < K; ++i)
            for (int pos : choices[i][odo[i]]) trains[i][pos] = 1;

        std::vector<Tensor> currents;
        currents.reserve(T);
        for (int t = 0; t < T; ++t) {
            double c = 0.0;
            for (std::size_t i = 0; i < K; ++i)
                if (trains[i][t]) c += weights[i];
            currents.push_back(Tensor::scalar(c));
        }
        DelaySpikeResult dsr =
            delay_spike_run(NeuronKind::IF, theta, T, 0, currents);
        const double residual = dsr.residual.data[0];
        double spikes = 0.0;
        std::vector<int> out_train(T);
        for (int t = 0; t < T; ++t) {
            out_train[t] = dsr.spikes[t].data[0] != 0.0 ? 1 : 0;
            spikes += out_train[t];
        }
        const double rate = spikes / static_cast<double>(T);
        ++result.searched;

        auto record = [&](PatternWitness& w) {
            if (w.found) return;
            w.found = true;
            w.input_trains = trains;
            w.output_train = out_train;
            w.residual = residual;
            w.rate = rate;
        };
        if (std::abs(residual) <= 1e-12 &&
            std::abs(rate - result.target_rate) <= 1e-12)
            record(result.uniform);
        if (residual >= theta - 1e-12) record(result.overflow);
        if (residual < -1e-12) record(result.negative);

        // Odometer over placements, last input fastest.
        std::size_t i = K;
        while (i > 0) {
            --i;
            if (++odo[i] < choices[i].size()) break;
            odo[i] = 0;
            if (i == 0) return result;
        }
    }
}

struct DelaySpikeUniformity {
    bool all_match = true;  // every placement hits the target rate
    std::size_t checked = 0;
    double max_rate_dev = 0.0;
    double min_residual = 0.0;
    double max_residual = 0.0;
};

// Re-runs every placement of the same instance under the delay-spike
// schedule; with T_delay = T the ordering ceases to matter.
inline DelaySpikeUniformity delay_spike_uniformity(const std::vector<double>& rates,
                                                   const std::vector<double>& weights,
                                                   double theta, int T,
                                                   int T_delay) {
    const std::size_t K = rates.size();
    std::vector<int> counts(K);
    for (std::size_t i = 0; i < K; ++i)
        counts[i] = static_cast<int>(std::lround(rates[i] * T));

    double x = 0.0;
    for (std::size_t i = 0; i < K; ++i) x += weights[i] * rates[i];
    const double target = quant_clip(x, theta, T) / theta;

    std::vector<std::vector<std::vector<int>>> choices(K);
    for (std::size_t i = 0; i < K; ++i)
        choices[i] = detail::combinations(T, counts[i]);

    DelaySpikeUniformity res;
    bool first = true;
    std::vector<std::size_t> odo(K, 0);
    while (true) {
        std::vector<Tensor> currents;
        currents.reserve(T);
        for (int t = 0; t < T; ++t) {
            double c = 0.0;
            for (std::size_t i = 0; i < K; ++i) {
                const auto& pos = choices[i][odo[i]];
                if (std::find(pos.begin(), pos.end(), t) != pos.end())
                    c += weights[i];
            }
            currents.push_back(Tensor::scalar(c));
        }
        DelaySpikeResult dsr =
            delay_spike_run(NeuronKind::IF, theta, T, T_delay, currents);
        double spikes = 0.0;
        for (int t = 0; t < T; ++t) spikes += dsr.spikes[t].data[0];
        const double rate = spikes / static_cast<double>(T);
        const double residual = dsr.residual.data[0];

        ++res.checked;
        res.max_rate_dev = std::max(res.max_rate_dev, std::abs(rate - target));
        if (std::abs(rate - target) > 1e-12) res.all_match = false;
        if (first || residual < res.min_residual) res.min_residual = residual;
        if (first || residual > res.max_residual) res.max_residual = residual;
        first = false;

        std::size_t i = K;
        while (i > 0) {
            --i;
            if (++odo[i] < choices[i].size()) break;
            odo[i] = 0;
            if (i == 0) return res;
        }
    }
}

// ---- quantization-error demonstration -------------------------------------

struct AnchorLattice {
    int T = 1;
    std::vector<std::pair<double, double>> pairs;  // attainable (w, h) sizes

    std::size_t cardinality() const { return pairs.size(); }
};

// Two regression outputs with weights [1, -1] read one shared input on the
// rate lattice {0..T}/T; box sizes are exp(+-v) times the anchor. The
// attainable set grows with T, which is the whole point.
inline AnchorLattice anchor_lattice_demo(int T, double anchor_w,
                                         double anchor_h) {
    detail::require(T >= 1, "anchor_lattice_demo: T must be >= 1");
    AnchorLattice out;
    out.T = T;
    out.pairs.reserve(static_cast<std::size_t>(T) + 1);
    for (int k = 0; k <= T; ++k) {
        const double v = static_cast<double>(k) / static_cast<double>(T);
        out.pairs.emplace_back(std::exp(v) * anchor_w, std::exp(-v) * anchor_h);
    }
    return out;
}

}  // namespace tdsnn
