#pragma once

#include <cstdint>
#include <limits>

namespace clocksync {

/// Tick count. One tick is one nanosecond. All clock and protocol arithmetic
/// runs on ticks so that long runs stay exact; floating point appears only at
/// the geometry and reporting layers.
using Ticks = std::int64_t;

inline constexpr Ticks kTicksPerSecond = 1'000'000'000;

constexpr Ticks ticks_from_seconds(double seconds) noexcept {
    const double scaled = seconds * static_cast<double>(kTicksPerSecond);
    return static_cast<Ticks>(scaled >= 0.0 ? scaled + 0.5 : scaled - 0.5);
}

constexpr double seconds_from_ticks(Ticks t) noexcept {
    return static_cast<double>(t) / static_cast<double>(kTicksPerSecond);
}

namespace detail {

/// Floored division on 128-bit intermediates: the result is the largest
/// integer q with q * den <= num. Used wherever a drift product is folded
/// back to ticks, so rounding is uniform for positive and negative rates.
constexpr std::int64_t floordiv(__int128 num, __int128 den) noexcept {
    __int128 q = num / den;
    if ((num % den != 0) && ((num < 0) != (den < 0))) --q;
    return static_cast<std::int64_t>(q);
}

constexpr std::int64_t floormod(__int128 num, __int128 den) noexcept {
    return static_cast<std::int64_t>(num - static_cast<__int128>(floordiv(num, den)) * den);
}

}  // namespace detail

/// A lasting rate change and/or an instantaneous phase jump applied to a
/// running clock. A burst is both at once.
struct DisturbanceEvent {
    double frequency_shift = 0.0;  ///< added to the clock's frequency error
    Ticks phase_shift = 0;         ///< added to the local reading immediately
};

/// A free-running local clock that drifts against true time.
///
/// Frequency error is held in integer parts per billion together with a
/// remainder carry in [0, 1e9), so advancing by dt1 then dt2 lands on exactly
/// the same reading as advancing by dt1 + dt2. The clock never runs backward:
/// the effective rate 1 + frequency_error must stay positive.
class SimulatedClock {
   public:
    SimulatedClock() = default;
    SimulatedClock(int id, Ticks local_time, double frequency_error,
                   Ticks phase_offset, std::uint64_t rng_seed);

    /// True time has passed by dt ticks; the local reading moves by
    /// dt + floor((dt * ppb + carry) / 1e9). dt must be nonnegative.
    void advance(Ticks dt);

    /// Reading after a hypothetical advance(dt), without mutating the clock.
    /// Lets several observers quote the same clock mid-round.
    Ticks peek(Ticks dt) const;

    /// Current local reading.
    Ticks read() const { return local_time_; }

    /// Applies a disturbance: the frequency shift takes effect for all later
    /// advances, the phase shift lands on the reading now.
    void perturb(const DisturbanceEvent& event);

    /// Hard phase set, used when the clock adopts a value from the protocol.
    void set_local_time(Ticks value);

    int id() const { return id_; }
    double frequency_error() const;
    std::int64_t frequency_error_ppb() const { return freq_ppb_; }
    Ticks phase_offset() const { return phase_offset_; }
    std::uint64_t rng_seed() const { return rng_seed_; }

   private:
    int id_ = 0;
    Ticks local_time_ = 0;
    std::int64_t freq_ppb_ = 0;
    std::int64_t drift_carry_ = 0;  // in [0, kTicksPerSecond)
    Ticks phase_offset_ = 0;
    std::uint64_t rng_seed_ = 0;
};

/// The authoritative reference. Advances exactly one tick per true tick and
/// accepts no disturbances.
class GlobalClock {
   public:
    GlobalClock() = default;
    explicit GlobalClock(Ticks start) : now_(start) {}

    void advance(Ticks dt);
    Ticks read() const { return now_; }

   private:
    Ticks now_ = 0;
};

}  // namespace clocksync
