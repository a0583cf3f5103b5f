#include "clocksync/timebase.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace clocksync {

namespace {

std::int64_t ppb_from_fraction(double frequency_error) {
    if (!(frequency_error > -1.0)) {
        throw std::invalid_argument("frequency error must stay above -1 (rate " +
                                    std::to_string(1.0 + frequency_error) + " would not be positive)");
    }
    return std::llround(frequency_error * static_cast<double>(kTicksPerSecond));
}

}  // namespace

SimulatedClock::SimulatedClock(int id, Ticks local_time, double frequency_error,
                               Ticks phase_offset, std::uint64_t rng_seed)
    : id_(id),
      local_time_(local_time),
      freq_ppb_(ppb_from_fraction(frequency_error)),
      phase_offset_(phase_offset),
      rng_seed_(rng_seed) {}

void SimulatedClock::advance(Ticks dt) {
    if (dt < 0) {
        throw std::invalid_argument("clock " + std::to_string(id_) +
                                    ": advance over negative true duration " + std::to_string(dt));
    }
    const __int128 num = static_cast<__int128>(dt) * freq_ppb_ + drift_carry_;
    const std::int64_t extra = detail::floordiv(num, kTicksPerSecond);
    drift_carry_ = detail::floormod(num, kTicksPerSecond);
    local_time_ += dt + extra;
}

Ticks SimulatedClock::peek(Ticks dt) const {
    if (dt < 0) {
        throw std::invalid_argument("clock " + std::to_string(id_) +
                                    ": peek over negative true duration " + std::to_string(dt));
    }
    const __int128 num = static_cast<__int128>(dt) * freq_ppb_ + drift_carry_;
    return local_time_ + dt + detail::floordiv(num, kTicksPerSecond);
}

void SimulatedClock::perturb(const DisturbanceEvent& event) {
    const double shifted =
        static_cast<double>(freq_ppb_) / static_cast<double>(kTicksPerSecond) + event.frequency_shift;
    freq_ppb_ = ppb_from_fraction(shifted);
    local_time_ += event.phase_shift;
    phase_offset_ += event.phase_shift;
}

void SimulatedClock::set_local_time(Ticks value) {
    phase_offset_ += value - local_time_;
    local_time_ = value;
    drift_carry_ = 0;
}

double SimulatedClock::frequency_error() const {
    return static_cast<double>(freq_ppb_) / static_cast<double>(kTicksPerSecond);
}

void GlobalClock::advance(Ticks dt) {
    if (dt < 0) {
        throw std::invalid_argument("global clock: advance over negative true duration " +
                                    std::to_string(dt));
    }
    now_ += dt;
}

}  // namespace clocksync
