#include "ricochet/estimators.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <map>
#include <mutex>
#include <thread>

namespace ricochet
{
    ProcessConfig Experiment::config(std::uint64_t stream_id, std::optional<double> fixed_v0) const
    {
        return ProcessConfig{mu, nu, seed, stream_id, fixed_v0, force};
    }

    ReplicaAborted::ReplicaAborted(std::uint64_t seed, std::uint64_t stream_id, const TripleCollision& cause)
        : std::runtime_error(std::string(cause.what()) + " (seed " + std::to_string(seed) + ", stream " +
                             std::to_string(stream_id) + ")"),
          seed_(seed), stream_id_(stream_id)
    {
    }

    void parallel_for(std::uint64_t count, unsigned workers, const std::function<void(std::uint64_t)>& fn)
    {
        if (workers == 0)
        {
            workers = std::max(1u, std::thread::hardware_concurrency());
        }
        workers = static_cast<unsigned>(std::min<std::uint64_t>(workers, std::max<std::uint64_t>(count, 1)));
        if (workers <= 1)
        {
            for (std::uint64_t i = 0; i < count; ++i)
            {
                fn(i);
            }
            return;
        }

        std::atomic<std::uint64_t> next{0};
        std::exception_ptr failure;
        std::mutex failure_mutex;
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (unsigned w = 0; w < workers; ++w)
        {
            pool.emplace_back([&] {
                while (true)
                {
                    const std::uint64_t i = next.fetch_add(1);
                    if (i >= count)
                    {
                        return;
                    }
                    try
                    {
                        fn(i);
                    }
                    catch (...)
                    {
                        std::lock_guard lock(failure_mutex);
                        if (!failure)
                        {
                            failure = std::current_exception();
                        }
                        next = count;
                    }
                }
            });
        }
        for (auto& t : pool)
        {
            t.join();
        }
        if (failure)
        {
            std::rethrow_exception(failure);
        }
    }

    Interval wilson_interval(std::uint64_t successes, std::uint64_t trials)
    {
        if (trials == 0)
        {
            return {0.0, 1.0};
        }
        constexpr double z = 1.959963984540054; // two-sided 95%
        const double n = static_cast<double>(trials);
        const double p = static_cast<double>(successes) / n;
        const double z2 = z * z;
        const double denom = 1.0 + z2 / n;
        const double center = (p + z2 / (2.0 * n)) / denom;
        const double half = z / denom * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
        const double lo = std::clamp(center - half, 0.0, 1.0);
        const double hi = std::clamp(center + half, 0.0, 1.0);
        return {std::min(lo, p), std::max(hi, p)};
    }

    namespace
    {
        EngineOptions lean_options(const Experiment& experiment)
        {
            EngineOptions o;
            o.tolerance = experiment.tolerance;
            o.keep_confirmed = false;
            o.record_ps_flags = false;
            return o;
        }

        void tally(RunCounters* counters, const Engine& engine)
        {
            if (counters)
            {
                counters->bullets += engine.ingested();
                counters->collisions += (engine.ingested() - engine.survivor_count()) / 2;
            }
        }

        ThetaEstimate summarize(double v, std::uint64_t n, std::uint64_t replicas, std::uint64_t successes,
                                std::vector<AbortedReplica> aborted)
        {
            ThetaEstimate e;
            e.v = v;
            e.n = n;
            e.replicas = replicas;
            e.successes = successes;
            e.aborted = std::move(aborted);
            const std::uint64_t done = e.completed();
            e.point = done ? static_cast<double>(successes) / static_cast<double>(done) : 0.0;
            const Interval ci = wilson_interval(successes, done);
            e.ci_lo = ci.lo;
            e.ci_hi = ci.hi;
            return e;
        }
    } // namespace

    bool first_bullet_survives(const Experiment& experiment, std::uint64_t stream_id, double v, std::uint64_t n,
                               RunCounters* counters)
    {
        BulletSource source(experiment.config(stream_id, v));
        Engine engine(lean_options(experiment));
        engine.ingest(source.next());
        for (std::uint64_t k = 1; k <= n; ++k)
        {
            engine.ingest(source.next());
            const BulletState first = engine.state_of(0);
            // A death at or before the latest firing is part of the full process.
            if (first.status == BulletStatus::dead ||
                (first.status == BulletStatus::doomed && first.death_time <= engine.last_fire_time()))
            {
                tally(counters, engine);
                return false;
            }
        }
        tally(counters, engine);
        return engine.state_of(0).status == BulletStatus::survivor;
    }

    ThetaEstimate theta_hat(const Experiment& experiment, double v, std::uint64_t n, std::uint64_t replicas,
                            RunCounters* counters)
    {
        if (replicas == 0)
        {
            throw ConfigError("theta: need at least one replica");
        }
        experiment.config(0, v).validate();

        enum class Outcome : std::uint8_t { lost, survived, aborted };
        std::vector<Outcome> outcome(replicas, Outcome::lost);
        std::vector<std::string> reasons(replicas);
        std::vector<RunCounters> per(replicas);

        parallel_for(replicas, experiment.workers, [&](std::uint64_t r) {
            try
            {
                outcome[r] = first_bullet_survives(experiment, r, v, n, &per[r]) ? Outcome::survived : Outcome::lost;
            }
            catch (const TripleCollision& e)
            {
                outcome[r] = Outcome::aborted;
                reasons[r] = e.what();
                per[r].triple_aborts = 1;
            }
        });

        std::uint64_t successes = 0;
        std::vector<AbortedReplica> aborted;
        for (std::uint64_t r = 0; r < replicas; ++r)
        {
            if (outcome[r] == Outcome::survived)
            {
                ++successes;
            }
            else if (outcome[r] == Outcome::aborted)
            {
                aborted.push_back({r, reasons[r]});
            }
            if (counters)
            {
                *counters += per[r];
            }
        }
        return summarize(v, n, replicas, successes, std::move(aborted));
    }

    std::vector<ThetaEstimate> theta_curve(const Experiment& experiment, const std::vector<double>& grid,
                                           std::uint64_t n, std::uint64_t replicas, CurveMethod method,
                                           RunCounters* counters)
    {
        if (replicas == 0)
        {
            throw ConfigError("theta: need at least one replica");
        }
        if (grid.empty() || !std::is_sorted(grid.begin(), grid.end()))
        {
            throw ConfigError("theta: grid must be non-empty and ascending");
        }
        for (double v : grid)
        {
            experiment.config(0, v).validate();
        }

        const std::size_t m = grid.size();
        // survived[r * m + j]: replica r survives at grid[j]
        std::vector<std::uint8_t> survived(replicas * m, 0);
        std::vector<std::string> reasons(replicas);
        std::vector<RunCounters> per(replicas);

        parallel_for(replicas, experiment.workers, [&](std::uint64_t r) {
            auto row = survived.begin() + static_cast<std::ptrdiff_t>(r * m);
            try
            {
                if (method == CurveMethod::exhaustive)
                {
                    for (std::size_t j = 0; j < m; ++j)
                    {
                        row[static_cast<std::ptrdiff_t>(j)] = first_bullet_survives(experiment, r, grid[j], n, &per[r]);
                    }
                    return;
                }
                std::size_t lo = 0;
                std::size_t hi = m;
                while (lo < hi)
                {
                    const std::size_t mid = lo + (hi - lo) / 2;
                    if (first_bullet_survives(experiment, r, grid[mid], n, &per[r]))
                    {
                        hi = mid;
                    }
                    else
                    {
                        lo = mid + 1;
                    }
                }
                std::fill(row + static_cast<std::ptrdiff_t>(lo), row + static_cast<std::ptrdiff_t>(m), 1);
            }
            catch (const TripleCollision& e)
            {
                reasons[r] = e.what();
                per[r].triple_aborts = 1;
                std::fill(row, row + static_cast<std::ptrdiff_t>(m), 0);
            }
        });

        std::vector<AbortedReplica> aborted;
        for (std::uint64_t r = 0; r < replicas; ++r)
        {
            if (!reasons[r].empty())
            {
                aborted.push_back({r, reasons[r]});
            }
            if (counters)
            {
                *counters += per[r];
            }
        }

        std::vector<ThetaEstimate> curve;
        curve.reserve(m);
        for (std::size_t j = 0; j < m; ++j)
        {
            std::uint64_t successes = 0;
            for (std::uint64_t r = 0; r < replicas; ++r)
            {
                successes += survived[r * m + j];
            }
            curve.push_back(summarize(grid[j], n, replicas, successes, aborted));
        }
        return curve;
    }

    double vc_from_curve(const std::vector<ThetaEstimate>& curve)
    {
        for (const auto& e : curve)
        {
            if (e.successes >= 1)
            {
                return e.v;
            }
        }
        return std::numeric_limits<double>::infinity();
    }

    double vc_hat(const Experiment& experiment, const std::vector<double>& grid, std::uint64_t n,
                  std::uint64_t replicas)
    {
        return vc_from_curve(theta_curve(experiment, grid, n, replicas));
    }

    std::vector<double> make_grid(double lo, double hi, double step)
    {
        if (!(step > 0.0) || !std::isfinite(lo) || !std::isfinite(hi) || hi < lo)
        {
            throw ConfigError("grid needs LO <= HI and STEP > 0");
        }
        const auto count = static_cast<std::uint64_t>(std::floor((hi - lo) / step + 0.5)) + 1;
        if (count > 10'000'000)
        {
            throw ConfigError("grid too fine");
        }
        std::vector<double> grid;
        grid.reserve(count);
        for (std::uint64_t i = 0; i < count; ++i)
        {
            // 0.15 rather than 0.15000000000000002 in every output table
            char buf[32];
            std::snprintf(buf, sizeof buf, "%.12g", lo + static_cast<double>(i) * step);
            grid.push_back(std::min(hi, std::strtod(buf, nullptr)));
        }
        return grid;
    }

    VhatEstimate vhat_hat(const Experiment& experiment, std::uint64_t n, double bucket_width)
    {
        if (n < 2 || n % 2 != 0)
        {
            throw ConfigError("vhat: n must be even and >= 2");
        }
        if (!(bucket_width > 0.0) || !std::isfinite(bucket_width))
        {
            throw ConfigError("vhat: bucket width must be > 0");
        }

        VhatEstimate out;
        out.n = n;
        out.window_first = n / 2 + 1;
        out.window_last = n;
        out.bucket_width = bucket_width;

        BulletSource source(experiment.config(0));
        Engine engine(lean_options(experiment));
        std::map<std::int64_t, std::uint64_t> buckets;
        try
        {
            for (std::uint64_t k = 0; k <= n; ++k)
            {
                const Bullet b = source.next();
                const auto result = engine.ingest(b);
                if (k >= out.window_first && result.potential_survivor)
                {
                    ++out.window_potential_survivors;
                    out.max_ps_velocity = std::max(out.max_ps_velocity, b.velocity);
                    ++buckets[static_cast<std::int64_t>(std::floor(b.velocity / bucket_width))];
                }
            }
        }
        catch (const TripleCollision& e)
        {
            throw ReplicaAborted(experiment.seed, 0, e);
        }
        tally(&out.counters, engine);

        if (!buckets.empty())
        {
            const double norm = bucket_width * static_cast<double>(n / 2);
            for (std::int64_t i = buckets.begin()->first; i <= buckets.rbegin()->first; ++i)
            {
                auto it = buckets.find(i);
                const std::uint64_t count = it == buckets.end() ? 0 : it->second;
                out.histogram.push_back(HistogramBucket{static_cast<double>(i) * bucket_width,
                                                        static_cast<double>(i + 1) * bucket_width, count,
                                                        static_cast<double>(count) / norm});
            }
        }
        return out;
    }

    std::size_t nearest_support(const std::vector<double>& sorted_values, double v)
    {
        auto it = std::lower_bound(sorted_values.begin(), sorted_values.end(), v);
        if (it == sorted_values.begin())
        {
            return 0;
        }
        if (it == sorted_values.end())
        {
            return sorted_values.size() - 1;
        }
        const auto above = static_cast<std::size_t>(it - sorted_values.begin());
        const std::size_t below = above - 1;
        return (v - sorted_values[below] <= sorted_values[above] - v) ? below : above;
    }

    CensusResult census(const Experiment& experiment, std::uint64_t n)
    {
        const FiniteSupport* support = experiment.mu.as_finite();
        if (!support)
        {
            throw ConfigError("census: mu must be a finite-support distribution");
        }
        std::vector<double> values = support->values;
        std::sort(values.begin(), values.end());

        CensusResult out;
        out.n = n;
        for (double v : values)
        {
            out.rows.push_back(CensusRow{v, 0, 0});
        }

        BulletSource source(experiment.config(0));
        Engine engine(lean_options(experiment));
        try
        {
            for (std::uint64_t k = 0; k <= n; ++k)
            {
                const Bullet b = source.next();
                if (engine.ingest(b).potential_survivor)
                {
                    ++out.rows[nearest_support(values, b.velocity)].potential_survivors;
                    ++out.total_potential_survivors;
                }
            }
        }
        catch (const TripleCollision& e)
        {
            throw ReplicaAborted(experiment.seed, 0, e);
        }
        tally(&out.counters, engine);

        const auto survivors = engine.survivor_bullets();
        std::vector<std::size_t> row_of(survivors.size());
        for (std::size_t i = 0; i < survivors.size(); ++i)
        {
            row_of[i] = nearest_support(values, survivors[i].velocity);
            ++out.rows[row_of[i]].survivors;
        }
        out.total_survivors = survivors.size();
        for (std::size_t j = 1; j < out.rows.size(); ++j)
        {
            if (out.rows[j].survivors > out.rows[out.modal_row].survivors)
            {
                out.modal_row = j;
            }
        }
        for (std::size_t i = 0; i < survivors.size(); ++i)
        {
            if (row_of[i] == out.modal_row)
            {
                out.first_modal_survivor = survivors[i].index;
                break;
            }
        }
        return out;
    }

    std::vector<std::size_t> sn_trajectory(const Experiment& experiment, std::uint64_t n)
    {
        BulletSource source(experiment.config(0));
        Engine engine(lean_options(experiment));
        std::vector<std::size_t> sizes;
        sizes.reserve(n + 1);
        try
        {
            for (std::uint64_t k = 0; k <= n; ++k)
            {
                sizes.push_back(engine.ingest(source.next()).survivor_count);
            }
        }
        catch (const TripleCollision& e)
        {
            throw ReplicaAborted(experiment.seed, 0, e);
        }
        return sizes;
    }

    std::vector<std::size_t> sn_trajectory(const std::vector<Bullet>& bullets, TieTolerance tolerance)
    {
        EngineOptions o;
        o.tolerance = tolerance;
        o.keep_confirmed = false;
        o.record_ps_flags = false;
        Engine engine(std::move(o));
        std::vector<std::size_t> sizes;
        sizes.reserve(bullets.size());
        for (const auto& b : bullets)
        {
            sizes.push_back(engine.ingest(b).survivor_count);
        }
        return sizes;
    }

} // namespace ricochet
