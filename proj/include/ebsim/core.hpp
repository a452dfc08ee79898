#ifndef EBSIM_CORE_HPP
#define EBSIM_CORE_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>

namespace ebsim {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Base class for every error raised by the library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A precondition on an argument or configuration was violated.
struct InvalidArgument : Error {
    using Error::Error;
};

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t& x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }

} // namespace detail

/**
 * Seedable pseudo-random stream addressed by (seed, stream_id).
 *
 * Engine is xoshiro256++. The 256-bit state is filled by SplitMix64 from a
 * key that mixes both the seed and the stream id, so every (seed, stream_id)
 * pair names its own sequence and no two runs share a stream.
 *
 * Models std::uniform_random_bit_generator.
 */
class RngStream {
public:
    using result_type = std::uint64_t;

    RngStream(std::uint64_t seed, std::uint64_t stream_id) noexcept : seed_{seed}, stream_id_{stream_id} {
        std::uint64_t a = seed;
        std::uint64_t b = stream_id ^ 0xD1B54A32D192ED03ULL;
        std::uint64_t key = detail::splitmix64(a) ^ detail::rotl(detail::splitmix64(b), 29);
        for (auto& word : state_) {
            word = detail::splitmix64(key);
        }
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return ~result_type{0}; }

    result_type operator()() noexcept {
        const std::uint64_t result = detail::rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = detail::rotl(state_[3], 45);
        return result;
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    /// Uniform double in [lo, hi).
    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

    /// Fair coin.
    bool bit() noexcept { return ((*this)() >> 63) != 0; }

    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t below(std::uint64_t n) noexcept {
        // Lemire's nearly-divisionless method.
        unsigned __int128 m = static_cast<unsigned __int128>((*this)()) * n;
        auto low = static_cast<std::uint64_t>(m);
        if (low < n) {
            const std::uint64_t threshold = (0 - n) % n;
            while (low < threshold) {
                m = static_cast<unsigned __int128>((*this)()) * n;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream_id() const noexcept { return stream_id_; }

private:
    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::array<std::uint64_t, 4> state_{};
};

inline RngStream make_stream(std::uint64_t seed, std::uint64_t stream_id) noexcept { return RngStream{seed, stream_id}; }

/// Angle in radians. Degrees only appear at I/O boundaries.
struct Angle {
    double value = 0.0;

    constexpr Angle() = default;
    constexpr explicit Angle(double radians) : value{radians} {}

    static constexpr Angle degrees(double deg) { return Angle{deg * kPi / 180.0}; }
    constexpr double deg() const { return value * 180.0 / kPi; }

    /// Representative in [0, 2pi).
    Angle canonical() const {
        double v = std::fmod(value, kTwoPi);
        if (v < 0.0) {
            v += kTwoPi;
        }
        if (v >= kTwoPi) {
            v = 0.0;
        }
        return Angle{v};
    }

    friend constexpr Angle operator+(Angle a, Angle b) { return Angle{a.value + b.value}; }
    friend constexpr Angle operator-(Angle a, Angle b) { return Angle{a.value - b.value}; }
    friend constexpr Angle operator-(Angle a) { return Angle{-a.value}; }
    friend constexpr bool operator==(Angle a, Angle b) = default;
};

/// Plain real 2-vector (DLM internal state).
struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    constexpr double norm2() const { return x * x + y * y; }
    double norm() const { return std::hypot(x, y); }

    friend constexpr Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend constexpr Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend constexpr Vec2 operator*(double s, Vec2 v) { return {s * v.x, s * v.y}; }
    friend constexpr bool operator==(Vec2 a, Vec2 b) = default;
};

/// Unit 2-vector; the only way to build one is from a direction angle.
class UnitVec2 {
public:
    static UnitVec2 from_angle(double radians) { return UnitVec2{std::cos(radians), std::sin(radians)}; }

    double x() const { return x_; }
    double y() const { return y_; }
    Vec2 vec() const { return {x_, y_}; }
    operator Vec2() const { return vec(); }

private:
    UnitVec2(double x, double y) : x_{x}, y_{y} {}
    double x_;
    double y_;
};

inline void require(bool condition, const std::string& message) {
    if (!condition) {
        throw InvalidArgument(message);
    }
}

} // namespace ebsim

#endif // EBSIM_CORE_HPP
