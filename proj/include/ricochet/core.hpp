#pragma once

// Domain types for the bullet process: bullets, velocity/delay distributions,
// process configuration and reproducible random streams.
//
// All reals are IEEE-754 binary64.

#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace ricochet
{
    /// Raised for malformed distributions, flags or process configurations.
    class ConfigError : public std::invalid_argument
    {
    public:
        using std::invalid_argument::invalid_argument;
    };

    /// Shortest decimal text that round-trips to the same binary64.
    std::string format_real(double x);

    struct Bullet
    {
        std::uint64_t index = 0;
        double velocity = 0.0;
        double fire_time = 0.0;

        friend bool operator==(const Bullet&, const Bullet&) = default;
    };

    // ------------------------------------------------------------------
    // Distributions
    // ------------------------------------------------------------------

    struct Uniform
    {
        double lo;
        double hi;
    };

    struct PointMass
    {
        double c;
    };

    enum class FiniteNoise
    {
        /// Fresh N(0, sigma^2) noise on every draw; the law is non-atomic.
        per_draw,
        /// Each support value is perturbed once per realization and then
        /// reused; every realization has a genuinely finite velocity set.
        per_support,
    };

    /// Equal-weight finite support, optionally blurred with centered Gaussian
    /// noise of standard deviation `noise_sigma`.
    struct FiniteSupport
    {
        std::vector<double> values;
        double noise_sigma = 0.0;
        FiniteNoise noise = FiniteNoise::per_draw;
    };

    struct Exponential
    {
        double rate;
    };

    class RngStream;
    struct SamplingDiagnostics;

    enum class DistributionUse
    {
        velocity,
        delay,
    };

    class DistributionSpec
    {
    public:
        using Variant = std::variant<Uniform, PointMass, FiniteSupport, Exponential>;

        static DistributionSpec uniform(double lo, double hi);
        static DistributionSpec point(double c);
        static DistributionSpec finite(std::vector<double> values, double noise_sigma = 0.0,
                                       FiniteNoise noise = FiniteNoise::per_draw);
        static DistributionSpec exponential(double rate);

        /// Parses `uniform:LO,HI`, `point:C`, `exp:RATE` or
        /// `finite:V1,...,VK[;SIGMA | ;jitter=SIGMA]`. A bare SIGMA adds noise to
        /// every draw; `jitter=` perturbs the support values once per realization.
        static DistributionSpec parse(std::string_view text);

        const Variant& kind() const noexcept { return kind_; }

        /// Uniform, Exponential, or FiniteSupport with positive per-draw noise.
        bool non_atomic() const noexcept;

        /// FiniteSupport whose values are jittered per realization.
        bool jittered_support() const noexcept;

        /// The distribution one realization actually samples from: jittered
        /// support values are drawn here; every other spec is returned as is.
        DistributionSpec realize(RngStream& stream, SamplingDiagnostics* diagnostics = nullptr) const;

        /// Throws ConfigError when the distribution cannot be used for `use`
        /// (delays need strictly positive support).
        void require_legal(DistributionUse use) const;

        double mean() const;

        /// Canonical text form; `parse(to_string())` reproduces the spec.
        std::string to_string() const;

        const FiniteSupport* as_finite() const noexcept { return std::get_if<FiniteSupport>(&kind_); }

    private:
        explicit DistributionSpec(Variant v) : kind_(std::move(v)) {}

        Variant kind_;
    };

    enum class PairVerdict
    {
        valid,
        needs_override,
    };

    /// A pair is provably valid (no simultaneous triple collisions, almost
    /// surely) when at least one member is non-atomic or has randomly jittered
    /// support values.
    PairVerdict validate_pair(const DistributionSpec& mu, const DistributionSpec& nu) noexcept;

    // ------------------------------------------------------------------
    // Random streams
    // ------------------------------------------------------------------

    /// SplitMix64 finalizer (Steele, Lea & Flood 2014).
    constexpr std::uint64_t mix64(std::uint64_t z) noexcept
    {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// One reproducible stream: mt19937_64 seeded from
    /// mix64(mix64(master_seed) ^ mix64(~stream_id)).
    class RngStream
    {
    public:
        RngStream(std::uint64_t master_seed, std::uint64_t stream_id);

        std::uint64_t master_seed() const noexcept { return master_seed_; }
        std::uint64_t stream_id() const noexcept { return stream_id_; }

        std::uint64_t next_u64() { return engine_(); }

        /// Uniform on the open interval (0, 1), 53 bits.
        double next_open01()
        {
            return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
        }

        /// Standard normal via Box-Muller; the spare deviate is cached.
        double next_gaussian();

    private:
        std::uint64_t master_seed_;
        std::uint64_t stream_id_;
        std::mt19937_64 engine_;
        std::optional<double> spare_;
    };

    /// Counts velocity draws that were clamped to 0 after Gaussian noise.
    struct SamplingDiagnostics
    {
        std::uint64_t clamped_velocities = 0;
    };

    double sample_velocity(const DistributionSpec& spec, RngStream& stream,
                           SamplingDiagnostics* diagnostics = nullptr);
    double sample_delay(const DistributionSpec& spec, RngStream& stream);

    // ------------------------------------------------------------------
    // Process configuration and bullet generation
    // ------------------------------------------------------------------

    struct ProcessConfig
    {
        DistributionSpec mu;
        DistributionSpec nu;
        std::uint64_t seed = 0;
        std::uint64_t stream_id = 0;
        /// Forces bullet 0's velocity (the tagged first bullet b_0^v).
        std::optional<double> fixed_v0;
        /// Accept pairs that fail validate_pair.
        bool force = false;

        /// Throws ConfigError on an illegal configuration.
        void validate() const;
    };

    /// Streams bullets b_0, b_1, ... of one realization. Bullet 0's velocity
    /// is always drawn (then optionally overridden) so that realizations with
    /// different fixed_v0 share every other draw.
    class BulletSource
    {
    public:
        explicit BulletSource(const ProcessConfig& config);

        Bullet next();

        std::uint64_t produced() const noexcept { return next_index_; }
        const SamplingDiagnostics& diagnostics() const noexcept { return diagnostics_; }

    private:
        DistributionSpec mu_;
        DistributionSpec nu_;
        std::optional<double> fixed_v0_;
        RngStream stream_;
        SamplingDiagnostics diagnostics_;
        std::uint64_t next_index_ = 0;
        double time_ = 0.0;
    };

    /// Bullets 0..count-1 of the realization described by `config`.
    std::vector<Bullet> generate_sequence(const ProcessConfig& config, std::size_t count);

    /// Builds a bullet list from explicit velocities and fire times.
    std::vector<Bullet> make_bullets(const std::vector<double>& velocities,
                                     const std::vector<double>& fire_times);

} // namespace ricochet
