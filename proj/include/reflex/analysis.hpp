#pragma once

#include "reflex/feedback.hpp"
#include "reflex/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

namespace reflex {

struct FrequencyPoint {
    SimTime t = 0.0;
    double hz = 0.0;
};

// Instantaneous discharge frequency: 1000/ISI attached at the later spike of
// each consecutive pair, so it is defined only from the second spike onward.
using FrequencySeries = std::vector<FrequencyPoint>;

inline FrequencySeries instantaneous_frequency(std::span<const SimTime> spikes) {
    FrequencySeries out;
    for (std::size_t i = 1; i < spikes.size(); ++i) {
        const double isi = spikes[i] - spikes[i - 1];
        if (!(isi > 0.0)) {
            throw DomainError("instantaneous_frequency: spike times must be strictly increasing");
        }
        out.push_back(FrequencyPoint{spikes[i], 1000.0 / isi});
    }
    return out;
}

// Peristimulus time histogram over the window [-pre_ms, post_ms) around each
// stimulus, half-open bins of bin_width each.
struct Psth {
    double bin_width = 1.0;
    double pre_ms = 0.0;
    double post_ms = 0.0;
    std::vector<std::int64_t> counts;
    std::int64_t trials = 0;

    double bin_start(std::size_t i) const {
        return -pre_ms + static_cast<double>(i) * bin_width;
    }
    std::int64_t total() const {
        std::int64_t sum = 0;
        for (std::int64_t c : counts) {
            sum += c;
        }
        return sum;
    }
};

inline Psth psth(std::span<const SimTime> spikes, std::span<const SimTime> stimulus_times,
                 double bin_width, double pre_ms, double post_ms) {
    if (!(bin_width > 0.0)) {
        throw DomainError("psth: bin_width must be > 0");
    }
    if (pre_ms < 0.0 || !(post_ms > 0.0)) {
        throw DomainError("psth: window must satisfy pre >= 0 and post > 0");
    }
    Psth h;
    h.bin_width = bin_width;
    h.pre_ms = pre_ms;
    h.post_ms = post_ms;
    h.trials = static_cast<std::int64_t>(stimulus_times.size());
    const auto n_bins = static_cast<std::size_t>(std::ceil((pre_ms + post_ms) / bin_width - 1e-9));
    h.counts.assign(n_bins, 0);
    for (SimTime stim : stimulus_times) {
        for (SimTime spike : spikes) {
            const double latency = spike - stim;
            if (latency < -pre_ms || latency >= post_ms) {
                continue;
            }
            const auto idx = static_cast<std::size_t>(std::floor((latency + pre_ms) / bin_width));
            if (idx < n_bins) {
                h.counts[idx] += 1;
            }
        }
    }
    return h;
}

// Target instantaneous-frequency trace, experimental or generated. Times are
// relative to the trial (stimulus) origin.
struct ReferenceTrace {
    std::vector<FrequencyPoint> points;
    double tolerance = 0.05; // relative band defining "good"
};

// Linear interpolation, clamped to the end values outside the covered span.
inline double interpolate_at(const std::vector<FrequencyPoint> &points, SimTime t) {
    if (points.empty()) {
        throw DomainError("interpolate_at: empty series");
    }
    if (t <= points.front().t) {
        return points.front().hz;
    }
    if (t >= points.back().t) {
        return points.back().hz;
    }
    for (std::size_t i = 1; i < points.size(); ++i) {
        if (t <= points[i].t) {
            const auto &a = points[i - 1];
            const auto &b = points[i];
            const double u = (t - a.t) / (b.t - a.t);
            return a.hz + u * (b.hz - a.hz);
        }
    }
    return points.back().hz;
}

// Pointwise comparison of an observed series against the reference, resampled
// at the observed times. Points inside the relative tolerance band are good
// and produce nothing; the rest become one NCS each. A silent trial against
// a nonzero reference is maximally bad: one TooLow NCS of magnitude 1.
inline std::vector<Ncs> compare(const FrequencySeries &observed, const ReferenceTrace &reference) {
    if (reference.points.empty()) {
        throw DomainError("compare: reference trace is empty");
    }
    std::vector<Ncs> out;
    if (observed.empty()) {
        out.push_back(Ncs{NcsKind::InstantFrequency, ErrorDirection::TooLow, 1.0, 0, {}});
        return out;
    }
    for (const auto &p : observed) {
        const double f_ref = interpolate_at(reference.points, p.t);
        if (f_ref <= 0.0) {
            out.push_back(Ncs{NcsKind::InstantFrequency, ErrorDirection::TooHigh, 1.0, 0, {}});
            continue;
        }
        const double rel = (p.hz - f_ref) / f_ref;
        if (std::abs(rel) <= reference.tolerance) {
            continue;
        }
        Ncs ncs;
        ncs.kind = NcsKind::InstantFrequency;
        ncs.direction = rel < 0.0 ? ErrorDirection::TooLow : ErrorDirection::TooHigh;
        ncs.magnitude = std::min(1.0, std::abs(rel));
        out.push_back(ncs);
    }
    return out;
}

// Per-trial scalar error used by the convergence criterion: index-paired
// relative frequency error, with every unmatched point on either side
// counting as a full unit so a partially silent trial cannot look converged.
inline double trial_error(const FrequencySeries &observed, const ReferenceTrace &reference) {
    const std::size_t n_ref = reference.points.size();
    if (n_ref == 0) {
        return 0.0;
    }
    if (observed.empty()) {
        return 1.0;
    }
    const std::size_t n_obs = observed.size();
    const std::size_t paired = std::min(n_obs, n_ref);
    const std::size_t total = std::max(n_obs, n_ref);
    double sum = static_cast<double>(total - paired);
    for (std::size_t i = 0; i < paired; ++i) {
        const double f_ref = reference.points[i].hz;
        if (f_ref <= 0.0) {
            sum += observed[i].hz > 0.0 ? 1.0 : 0.0;
            continue;
        }
        sum += std::min(1.0, std::abs(observed[i].hz - f_ref) / f_ref);
    }
    return sum / static_cast<double>(total);
}

} // namespace reflex
