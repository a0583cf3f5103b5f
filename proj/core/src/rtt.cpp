#include "clocksync/rtt.hpp"

#include <cmath>
#include <cstdlib>
#include <string>
#include <vector>

namespace clocksync {

void RttThresholds::validate() const {
    if (samples_per_phase < 1) throw std::invalid_argument("rtt thresholds: need at least one sample per phase");
    if (max_attempts < 1) throw std::invalid_argument("rtt thresholds: need at least one attempt");
    if (sigma_fraction < 0.0 || diff_fraction < 0.0) {
        throw std::invalid_argument("rtt thresholds: negative relative bound");
    }
    if ((sigma_max && *sigma_max < 0) || (mean_diff_max && *mean_diff_max < 0) ||
        (sigma_diff_max && *sigma_diff_max < 0)) {
        throw std::invalid_argument("rtt thresholds: negative absolute bound");
    }
}

namespace {

Ticks scaled_bound(double fraction, Ticks mean) {
    return static_cast<Ticks>(std::llround(fraction * static_cast<double>(mean)));
}

}  // namespace

Ticks RttThresholds::resolved_sigma_max(Ticks phase_mean) const {
    return sigma_max ? *sigma_max : scaled_bound(sigma_fraction, phase_mean);
}

Ticks RttThresholds::resolved_mean_diff_max(Ticks phase_mean) const {
    return mean_diff_max ? *mean_diff_max : scaled_bound(diff_fraction, phase_mean);
}

Ticks RttThresholds::resolved_sigma_diff_max(Ticks phase_mean) const {
    return sigma_diff_max ? *sigma_diff_max : scaled_bound(diff_fraction, phase_mean);
}

UnstableChannelError::UnstableChannelError(int attempts)
    : std::runtime_error("channel delay statistics failed to settle after " +
                         std::to_string(attempts) + " estimation attempts"),
      attempts_(attempts) {}

UnstableChannelError::UnstableChannelError(int attempts, int requester, int responder)
    : std::runtime_error("channel delay statistics failed to settle after " +
                         std::to_string(attempts) + " estimation attempts (node " +
                         std::to_string(requester) + " pulling from node " +
                         std::to_string(responder) + ")"),
      attempts_(attempts),
      requester_(requester),
      responder_(responder) {}

namespace {

RttEstimate run_probe_phase(RequestChannel& channel, int samples_per_phase) {
    std::vector<Ticks> samples;
    samples.reserve(static_cast<std::size_t>(samples_per_phase));
    __int128 sum = 0;
    for (int i = 0; i < samples_per_phase; ++i) {
        const RequestChannel::Exchange ex = channel.probe();
        const Ticks rtt = ex.response_received - ex.request_sent;
        samples.push_back(rtt);
        sum += rtt;
    }
    RttEstimate est;
    est.samples = samples_per_phase;
    const __int128 j = samples_per_phase;
    est.mean = detail::floordiv(2 * sum + j, 2 * j);  // round to nearest tick
    if (samples_per_phase > 1) {
        const double exact_mean = static_cast<double>(sum) / static_cast<double>(samples_per_phase);
        double ssq = 0.0;
        for (Ticks s : samples) {
            const double d = static_cast<double>(s) - exact_mean;
            ssq += d * d;
        }
        est.stddev = static_cast<Ticks>(std::llround(std::sqrt(ssq / static_cast<double>(samples_per_phase - 1))));
    }
    return est;
}

}  // namespace

PeerTimeReading estimate_with_reading(RequestChannel& channel, const RttThresholds& thresholds) {
    thresholds.validate();
    for (int attempt = 0; attempt < thresholds.max_attempts; ++attempt) {
        const RttEstimate first = run_probe_phase(channel, thresholds.samples_per_phase);
        if (first.stddev > thresholds.resolved_sigma_max(first.mean)) continue;

        const RequestChannel::Exchange real = channel.query_value();

        const RttEstimate second = run_probe_phase(channel, thresholds.samples_per_phase);
        const Ticks mean_diff = std::llabs(first.mean - second.mean);
        const Ticks sigma_diff = std::llabs(first.stddev - second.stddev);
        if (mean_diff <= thresholds.resolved_mean_diff_max(first.mean) &&
            sigma_diff <= thresholds.resolved_sigma_diff_max(first.mean)) {
            PeerTimeReading out;
            out.reading = real.value;
            out.request_sent = real.request_sent;
            out.response_received = real.response_received;
            out.rtt = first;
            return out;
        }
    }
    throw UnstableChannelError(thresholds.max_attempts);
}

std::int64_t correct_reading(std::int64_t reading, const RttEstimate& estimate) {
    return reading + detail::floordiv(estimate.mean, 2);
}

}  // namespace clocksync
