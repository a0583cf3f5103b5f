#pragma once

#include <optional>
#include <stdexcept>

#include "clocksync/netsim.hpp"

namespace clocksync {

/// Round-trip statistics gathered over one probe phase. All values are in
/// requester-clock ticks.
struct RttEstimate {
    Ticks mean = 0;
    Ticks stddev = 0;
    int samples = 0;
};

/// Acceptance policy for the two-phase estimation. Absolute bounds win when
/// set; otherwise each bound resolves to a fraction of the first phase's
/// mean, so the policy scales with the link instead of hard-coding a speed.
struct RttThresholds {
    std::optional<Ticks> sigma_max;
    std::optional<Ticks> mean_diff_max;
    std::optional<Ticks> sigma_diff_max;
    double sigma_fraction = 0.10;
    double diff_fraction = 0.05;
    int samples_per_phase = 30;
    int max_attempts = 8;

    void validate() const;

    Ticks resolved_sigma_max(Ticks phase_mean) const;
    Ticks resolved_mean_diff_max(Ticks phase_mean) const;
    Ticks resolved_sigma_diff_max(Ticks phase_mean) const;
};

/// The channel's delay statistics refused to settle within max_attempts
/// full estimation rounds. Carries the link endpoints when the failure
/// happened inside a larger collective.
class UnstableChannelError : public std::runtime_error {
   public:
    explicit UnstableChannelError(int attempts);
    UnstableChannelError(int attempts, int requester, int responder);

    int attempts() const { return attempts_; }
    int requester() const { return requester_; }
    int responder() const { return responder_; }

   private:
    int attempts_;
    int requester_ = -1;
    int responder_ = -1;
};

/// A peer reading together with the round-trip context it was captured in.
/// request_sent / response_received are the requester-clock endpoints of the
/// exchange that fetched the reading.
struct PeerTimeReading {
    std::int64_t reading = 0;
    Ticks request_sent = 0;
    Ticks response_received = 0;
    RttEstimate rtt;
};

/// Two-phase statistically validated estimation: a probe phase whose spread
/// must pass the sigma bound, the real query, then a second probe phase that
/// must agree with the first in mean and spread. On disagreement the whole
/// flow restarts; after max_attempts failures the channel is reported
/// unstable. The returned estimate carries the first phase's statistics.
PeerTimeReading estimate_with_reading(RequestChannel& channel, const RttThresholds& thresholds = {});

/// Compensates a reading for time spent in flight: reading + mean / 2,
/// floored. Exact when the two directions cost the same.
std::int64_t correct_reading(std::int64_t reading, const RttEstimate& estimate);

}  // namespace clocksync
