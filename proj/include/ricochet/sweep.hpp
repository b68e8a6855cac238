#pragma once

// Randomized property sweeps shared by the CLI `check` subcommand and the
// acceptance suite.

#include "ricochet/analysis.hpp"
#include "ricochet/core.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ricochet
{
    struct SweepInstance
    {
        std::uint64_t case_id = 0;
        std::string family; // "mu / nu"
        std::vector<Bullet> bullets;
    };

    /// Number of distribution families cycled through by random_instance().
    std::size_t sweep_family_count() noexcept;

    /// Instance `case_id`: the family cycles with the case id, the size is
    /// uniform in [nmin, nmax], and the draws come from stream case_id.
    SweepInstance random_instance(std::uint64_t seed, std::uint64_t case_id, std::size_t nmin = 2,
                                  std::size_t nmax = 200);

    struct SweepReport
    {
        std::uint64_t cases = 0;
        std::uint64_t failures = 0;
        std::uint64_t triple_collisions = 0; // agreed on by both sides
        double max_relative_time_error = 0.0;
        std::vector<std::string> messages; // first few failures

        bool passed() const noexcept { return failures == 0; }
    };

    /// Engine against brute_resolve on every instance, plus the invariant
    /// suite. Matchings, survivors and per-prefix arrays must agree exactly;
    /// collision times within `time_tolerance` relative.
    SweepReport run_oracle_sweep(std::uint64_t seed, std::uint64_t cases, double time_tolerance = 1e-9);

    /// check_front_addition and shift_reindex_check (random k) per instance.
    SweepReport run_lemma_sweep(std::uint64_t seed, std::uint64_t cases);

} // namespace ricochet
