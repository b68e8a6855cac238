#include "ricochet/core.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <numeric>
#include <set>

namespace ricochet
{
    std::string format_real(double x)
    {
        char buf[64];
        auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
        if (ec != std::errc{})
        {
            throw std::runtime_error("format_real: to_chars failed");
        }
        return std::string(buf, end);
    }

    namespace
    {
        double parse_real(std::string_view text)
        {
            while (!text.empty() && text.front() == ' ')
            {
                text.remove_prefix(1);
            }
            while (!text.empty() && text.back() == ' ')
            {
                text.remove_suffix(1);
            }
            if (!text.empty() && text.front() == '+')
            {
                text.remove_prefix(1);
            }
            double value = 0.0;
            auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
            if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size())
            {
                throw ConfigError("not a number: '" + std::string(text) + "'");
            }
            return value;
        }

        std::vector<double> parse_list(std::string_view text)
        {
            std::vector<double> out;
            while (true)
            {
                auto comma = text.find(',');
                out.push_back(parse_real(text.substr(0, comma)));
                if (comma == std::string_view::npos)
                {
                    break;
                }
                text.remove_prefix(comma + 1);
            }
            return out;
        }

        void require_finite(double x, const char* what)
        {
            if (!std::isfinite(x))
            {
                throw ConfigError(std::string(what) + " must be finite");
            }
        }
    } // namespace

    DistributionSpec DistributionSpec::uniform(double lo, double hi)
    {
        require_finite(lo, "uniform bound");
        require_finite(hi, "uniform bound");
        if (!(0.0 <= lo && lo < hi))
        {
            throw ConfigError("uniform requires 0 <= lo < hi, got " + format_real(lo) + "," + format_real(hi));
        }
        return DistributionSpec(Uniform{lo, hi});
    }

    DistributionSpec DistributionSpec::point(double c)
    {
        require_finite(c, "point mass");
        if (c < 0.0)
        {
            throw ConfigError("point mass must be >= 0, got " + format_real(c));
        }
        return DistributionSpec(PointMass{c});
    }

    DistributionSpec DistributionSpec::finite(std::vector<double> values, double noise_sigma, FiniteNoise noise)
    {
        if (values.empty())
        {
            throw ConfigError("finite support needs at least one value");
        }
        require_finite(noise_sigma, "noise sigma");
        if (noise_sigma < 0.0)
        {
            throw ConfigError("noise sigma must be >= 0");
        }
        std::set<double> seen;
        for (double v : values)
        {
            require_finite(v, "support value");
            if (v < 0.0)
            {
                throw ConfigError("support values must be >= 0, got " + format_real(v));
            }
            if (!seen.insert(v).second)
            {
                throw ConfigError("support values must be distinct, repeated " + format_real(v));
            }
        }
        return DistributionSpec(FiniteSupport{std::move(values), noise_sigma, noise});
    }

    DistributionSpec DistributionSpec::exponential(double rate)
    {
        require_finite(rate, "exponential rate");
        if (!(rate > 0.0))
        {
            throw ConfigError("exponential rate must be > 0");
        }
        return DistributionSpec(Exponential{rate});
    }

    DistributionSpec DistributionSpec::parse(std::string_view text)
    {
        auto colon = text.find(':');
        if (colon == std::string_view::npos)
        {
            throw ConfigError("distribution '" + std::string(text) + "' lacks a ':'");
        }
        auto family = text.substr(0, colon);
        auto args = text.substr(colon + 1);

        if (family == "uniform")
        {
            auto values = parse_list(args);
            if (values.size() != 2)
            {
                throw ConfigError("uniform takes LO,HI");
            }
            return uniform(values[0], values[1]);
        }
        if (family == "point")
        {
            return point(parse_real(args));
        }
        if (family == "exp")
        {
            return exponential(parse_real(args));
        }
        if (family == "finite")
        {
            double sigma = 0.0;
            FiniteNoise noise = FiniteNoise::per_draw;
            auto semi = args.find(';');
            if (semi != std::string_view::npos)
            {
                auto tail = args.substr(semi + 1);
                constexpr std::string_view jitter = "jitter=";
                if (tail.substr(0, jitter.size()) == jitter)
                {
                    noise = FiniteNoise::per_support;
                    tail.remove_prefix(jitter.size());
                }
                sigma = parse_real(tail);
                args = args.substr(0, semi);
            }
            return finite(parse_list(args), sigma, noise);
        }
        throw ConfigError("unknown distribution family '" + std::string(family) + "'");
    }

    bool DistributionSpec::non_atomic() const noexcept
    {
        return std::visit(
            [](const auto& d) -> bool {
                using T = std::decay_t<decltype(d)>;
                if constexpr (std::is_same_v<T, FiniteSupport>)
                {
                    return d.noise_sigma > 0.0 && d.noise == FiniteNoise::per_draw;
                }
                else
                {
                    return !std::is_same_v<T, PointMass>;
                }
            },
            kind_);
    }

    bool DistributionSpec::jittered_support() const noexcept
    {
        const FiniteSupport* f = as_finite();
        return f && f->noise == FiniteNoise::per_support && f->noise_sigma > 0.0;
    }

    DistributionSpec DistributionSpec::realize(RngStream& stream, SamplingDiagnostics* diagnostics) const
    {
        if (!jittered_support())
        {
            return *this;
        }
        FiniteSupport f = *as_finite();
        for (double& v : f.values)
        {
            v += f.noise_sigma * stream.next_gaussian();
            if (v < 0.0)
            {
                v = 0.0;
                if (diagnostics)
                {
                    ++diagnostics->clamped_velocities;
                }
            }
        }
        f.noise_sigma = 0.0;
        f.noise = FiniteNoise::per_draw;
        return DistributionSpec(std::move(f));
    }

    void DistributionSpec::require_legal(DistributionUse use) const
    {
        if (use == DistributionUse::velocity)
        {
            return; // factories already enforce support in [0, inf)
        }
        std::visit(
            [&](const auto& d) {
                using T = std::decay_t<decltype(d)>;
                if constexpr (std::is_same_v<T, PointMass>)
                {
                    if (!(d.c > 0.0))
                    {
                        throw ConfigError("delay point mass must be > 0");
                    }
                }
                else if constexpr (std::is_same_v<T, FiniteSupport>)
                {
                    if (d.noise_sigma > 0.0)
                    {
                        throw ConfigError("finite delay distributions cannot carry noise");
                    }
                    if (*std::min_element(d.values.begin(), d.values.end()) <= 0.0)
                    {
                        throw ConfigError("finite delay support must be > 0");
                    }
                }
            },
            kind_);
    }

    double DistributionSpec::mean() const
    {
        return std::visit(
            [](const auto& d) -> double {
                using T = std::decay_t<decltype(d)>;
                if constexpr (std::is_same_v<T, Uniform>)
                {
                    return 0.5 * (d.lo + d.hi);
                }
                else if constexpr (std::is_same_v<T, PointMass>)
                {
                    return d.c;
                }
                else if constexpr (std::is_same_v<T, FiniteSupport>)
                {
                    return std::accumulate(d.values.begin(), d.values.end(), 0.0) /
                           static_cast<double>(d.values.size());
                }
                else
                {
                    return 1.0 / d.rate;
                }
            },
            kind_);
    }

    std::string DistributionSpec::to_string() const
    {
        return std::visit(
            [](const auto& d) -> std::string {
                using T = std::decay_t<decltype(d)>;
                if constexpr (std::is_same_v<T, Uniform>)
                {
                    return "uniform:" + format_real(d.lo) + "," + format_real(d.hi);
                }
                else if constexpr (std::is_same_v<T, PointMass>)
                {
                    return "point:" + format_real(d.c);
                }
                else if constexpr (std::is_same_v<T, FiniteSupport>)
                {
                    std::string out = "finite:";
                    for (std::size_t i = 0; i < d.values.size(); ++i)
                    {
                        out += (i ? "," : "") + format_real(d.values[i]);
                    }
                    if (d.noise_sigma > 0.0)
                    {
                        out += (d.noise == FiniteNoise::per_support ? ";jitter=" : ";") + format_real(d.noise_sigma);
                    }
                    return out;
                }
                else
                {
                    return "exp:" + format_real(d.rate);
                }
            },
            kind_);
    }

    PairVerdict validate_pair(const DistributionSpec& mu, const DistributionSpec& nu) noexcept
    {
        const bool random_support = mu.jittered_support() || nu.jittered_support();
        return (mu.non_atomic() || nu.non_atomic() || random_support) ? PairVerdict::valid
                                                                      : PairVerdict::needs_override;
    }

    RngStream::RngStream(std::uint64_t master_seed, std::uint64_t stream_id)
        : master_seed_(master_seed), stream_id_(stream_id),
          engine_(mix64(mix64(master_seed) ^ mix64(~stream_id)))
    {
    }

    double RngStream::next_gaussian()
    {
        if (spare_)
        {
            double z = *spare_;
            spare_.reset();
            return z;
        }
        const double u1 = next_open01();
        const double u2 = next_open01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double phi = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(phi);
        return r * std::cos(phi);
    }

    namespace
    {
        double sample(const DistributionSpec& spec, RngStream& stream, SamplingDiagnostics* diagnostics)
        {
            return std::visit(
                [&](const auto& d) -> double {
                    using T = std::decay_t<decltype(d)>;
                    if constexpr (std::is_same_v<T, Uniform>)
                    {
                        double x = d.lo + (d.hi - d.lo) * stream.next_open01();
                        // keep the support open at both ends after rounding
                        if (x <= d.lo)
                        {
                            x = std::nextafter(d.lo, d.hi);
                        }
                        if (x >= d.hi)
                        {
                            x = std::nextafter(d.hi, d.lo);
                        }
                        return x;
                    }
                    else if constexpr (std::is_same_v<T, PointMass>)
                    {
                        return d.c;
                    }
                    else if constexpr (std::is_same_v<T, FiniteSupport>)
                    {
                        const auto k = static_cast<std::size_t>(stream.next_open01() *
                                                                static_cast<double>(d.values.size()));
                        if (d.noise == FiniteNoise::per_support && d.noise_sigma > 0.0)
                        {
                            throw std::logic_error("jittered support must be realized before sampling");
                        }
                        double x = d.values[std::min(k, d.values.size() - 1)];
                        if (d.noise_sigma > 0.0)
                        {
                            x += d.noise_sigma * stream.next_gaussian();
                            if (x < 0.0)
                            {
                                x = 0.0;
                                if (diagnostics)
                                {
                                    ++diagnostics->clamped_velocities;
                                }
                            }
                        }
                        return x;
                    }
                    else
                    {
                        return -std::log(stream.next_open01()) / d.rate;
                    }
                },
                spec.kind());
        }
    } // namespace

    double sample_velocity(const DistributionSpec& spec, RngStream& stream, SamplingDiagnostics* diagnostics)
    {
        return sample(spec, stream, diagnostics);
    }

    double sample_delay(const DistributionSpec& spec, RngStream& stream)
    {
        return sample(spec, stream, nullptr);
    }

    void ProcessConfig::validate() const
    {
        mu.require_legal(DistributionUse::velocity);
        nu.require_legal(DistributionUse::delay);
        if (fixed_v0 && !(std::isfinite(*fixed_v0) && *fixed_v0 >= 0.0))
        {
            throw ConfigError("fixed first velocity must be finite and >= 0");
        }
        if (!force && validate_pair(mu, nu) != PairVerdict::valid)
        {
            throw ConfigError("(" + mu.to_string() + ", " + nu.to_string() +
                              ") is not provably a valid pair: both are atomic; pass --force to run anyway");
        }
    }

    BulletSource::BulletSource(const ProcessConfig& config)
        : mu_(config.mu), nu_(config.nu), fixed_v0_(config.fixed_v0),
          stream_(config.seed, config.stream_id)
    {
        config.validate();
        mu_ = mu_.realize(stream_, &diagnostics_);
    }

    Bullet BulletSource::next()
    {
        Bullet b;
        b.index = next_index_;
        b.velocity = sample_velocity(mu_, stream_, &diagnostics_);
        if (next_index_ == 0)
        {
            if (fixed_v0_)
            {
                b.velocity = *fixed_v0_;
            }
        }
        else
        {
            double t = time_ + sample_delay(nu_, stream_);
            if (!(t > time_))
            {
                t = std::nextafter(time_, INFINITY); // delay below one ulp of the clock
            }
            time_ = t;
        }
        b.fire_time = time_;
        ++next_index_;
        return b;
    }

    std::vector<Bullet> generate_sequence(const ProcessConfig& config, std::size_t count)
    {
        BulletSource source(config);
        std::vector<Bullet> out;
        out.reserve(count);
        for (std::size_t i = 0; i < count; ++i)
        {
            out.push_back(source.next());
        }
        return out;
    }

    std::vector<Bullet> make_bullets(const std::vector<double>& velocities, const std::vector<double>& fire_times)
    {
        if (velocities.size() != fire_times.size())
        {
            throw ConfigError("make_bullets: velocity and fire time lists differ in length");
        }
        std::vector<Bullet> out(velocities.size());
        for (std::size_t i = 0; i < out.size(); ++i)
        {
            out[i] = Bullet{i, velocities[i], fire_times[i]};
        }
        return out;
    }

} // namespace ricochet
