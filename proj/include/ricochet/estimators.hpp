#pragma once

// Monte Carlo estimators: survival of a tagged first bullet (theta and the
// critical-velocity scan), the pathwise potential-survivor estimator with its
// histogram, and survivor censuses for finite velocity supports.
//
// Every output is a pure function of the experiment description, the sizes
// and the master seed. Replica r always draws from stream r, and aggregation
// only counts, so the worker count changes wall time and nothing else.

#include "ricochet/core.hpp"
#include "ricochet/engine.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ricochet
{
    struct Experiment
    {
        DistributionSpec mu;
        DistributionSpec nu;
        std::uint64_t seed = 0;
        bool force = false;
        TieTolerance tolerance{};
        unsigned workers = 1;

        /// Process configuration for one stream.
        ProcessConfig config(std::uint64_t stream_id, std::optional<double> fixed_v0 = std::nullopt) const;
    };

    /// A single-realization estimator hit a triple collision.
    class ReplicaAborted : public std::runtime_error
    {
    public:
        ReplicaAborted(std::uint64_t seed, std::uint64_t stream_id, const TripleCollision& cause);

        std::uint64_t seed() const noexcept { return seed_; }
        std::uint64_t stream_id() const noexcept { return stream_id_; }

    private:
        std::uint64_t seed_;
        std::uint64_t stream_id_;
    };

    struct AbortedReplica
    {
        std::uint64_t stream_id = 0;
        std::string reason;
    };

    struct RunCounters
    {
        std::uint64_t bullets = 0;
        std::uint64_t collisions = 0;
        std::uint64_t triple_aborts = 0;

        RunCounters& operator+=(const RunCounters& o) noexcept
        {
            bullets += o.bullets;
            collisions += o.collisions;
            triple_aborts += o.triple_aborts;
            return *this;
        }
    };

    struct ThetaEstimate
    {
        double v = 0.0;
        std::uint64_t n = 0;        // bullets fired after b_0
        std::uint64_t replicas = 0; // N requested
        std::uint64_t successes = 0;
        std::vector<AbortedReplica> aborted; // excluded from the estimate
        double point = 0.0;                  // successes / completed replicas
        double ci_lo = 0.0;                  // Wilson score, 95%
        double ci_hi = 0.0;

        std::uint64_t completed() const noexcept { return replicas - aborted.size(); }
    };

    struct Interval
    {
        double lo;
        double hi;
    };

    /// 95% Wilson score interval; (0, 1) when trials == 0.
    Interval wilson_interval(std::uint64_t successes, std::uint64_t trials);

    /// Does b_0, forced to speed v, survive B_n in replica `stream_id`?
    /// Stops early once b_0's death is final.
    bool first_bullet_survives(const Experiment& experiment, std::uint64_t stream_id, double v, std::uint64_t n,
                               RunCounters* counters = nullptr);

    ThetaEstimate theta_hat(const Experiment& experiment, double v, std::uint64_t n, std::uint64_t replicas,
                            RunCounters* counters = nullptr);

    enum class CurveMethod
    {
        /// Per replica, binary search for the slowest surviving grid speed.
        /// Relies on survival being monotone in v under common random numbers.
        bisection,
        /// Every grid point for every replica.
        exhaustive,
    };

    /// theta estimates along an ascending grid with common random numbers.
    std::vector<ThetaEstimate> theta_curve(const Experiment& experiment, const std::vector<double>& grid,
                                           std::uint64_t n, std::uint64_t replicas,
                                           CurveMethod method = CurveMethod::bisection,
                                           RunCounters* counters = nullptr);

    /// Smallest grid speed with at least one success; +inf if none.
    double vc_from_curve(const std::vector<ThetaEstimate>& curve);

    double vc_hat(const Experiment& experiment, const std::vector<double>& grid, std::uint64_t n,
                  std::uint64_t replicas);

    /// lo, lo+step, ..., hi (inclusive within half a step).
    std::vector<double> make_grid(double lo, double hi, double step);

    struct HistogramBucket
    {
        double lo;
        double hi;
        std::uint64_t count;
        double height;
    };

    struct VhatEstimate
    {
        std::uint64_t n = 0;
        std::uint64_t window_first = 0; // n/2 + 1
        std::uint64_t window_last = 0;  // n
        std::uint64_t window_potential_survivors = 0;
        double max_ps_velocity = -std::numeric_limits<double>::infinity();
        double bucket_width = 0.0;
        /// Contiguous buckets from the slowest to the fastest occupied one.
        std::vector<HistogramBucket> histogram;
        RunCounters counters;
    };

    /// One realization of b_0..b_n; velocities of potential survivors with
    /// index in (n/2, n]. Bucket heights are count / (bucket_width * n/2).
    VhatEstimate vhat_hat(const Experiment& experiment, std::uint64_t n, double bucket_width = 0.001);

    struct CensusRow
    {
        double velocity;
        std::uint64_t survivors;
        std::uint64_t potential_survivors;
    };

    struct CensusResult
    {
        std::uint64_t n = 0;
        std::vector<CensusRow> rows; // one per support value, ascending
        std::uint64_t total_survivors = 0;
        std::uint64_t total_potential_survivors = 0;
        std::size_t modal_row = 0; // most survivors, ties to the slower value
        std::optional<std::uint64_t> first_modal_survivor;
        RunCounters counters;

        double modal_velocity() const { return rows.at(modal_row).velocity; }
        std::uint64_t modal_survivors() const { return rows.at(modal_row).survivors; }
    };

    /// Index of the support value nearest to v; ties go to the slower value.
    std::size_t nearest_support(const std::vector<double>& sorted_values, double v);

    /// Resolves b_0..b_n once and tallies survivors and potential survivors by
    /// their support value. mu must be a finite-support distribution.
    CensusResult census(const Experiment& experiment, std::uint64_t n);

    /// |S_0|, ..., |S_n| for one realization.
    std::vector<std::size_t> sn_trajectory(const Experiment& experiment, std::uint64_t n);
    std::vector<std::size_t> sn_trajectory(const std::vector<Bullet>& bullets, TieTolerance tolerance = {});

    /// Runs fn(i) for i in [0, count) on up to `workers` threads. The first
    /// exception thrown by any task is rethrown after all threads join.
    void parallel_for(std::uint64_t count, unsigned workers, const std::function<void(std::uint64_t)>& fn);

} // namespace ricochet
