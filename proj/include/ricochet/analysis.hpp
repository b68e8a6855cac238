#pragma once

// Finite-scale diagnostics: threat censuses, membership settling, the front-
// and back-addition rules for survivor sets, shift reindexing, and the shield
// fixture.

#include "ricochet/core.hpp"
#include "ricochet/engine.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace ricochet
{
    /// Outcome of a consistency check. Failures carry enough context to
    /// reproduce the offending instance.
    struct Verdict
    {
        bool pass = true;
        std::vector<std::string> failures;

        void fail(std::string why)
        {
            pass = false;
            failures.push_back(std::move(why));
        }

        explicit operator bool() const noexcept { return pass; }
        std::string summary() const;
    };

    /// Bullets j with b_j -> b_i in B_j, in increasing order.
    struct ThreatRecord
    {
        std::uint64_t target_index = 0;
        std::vector<std::uint64_t> threat_indices;
    };

    ThreatRecord threats_of(const Resolution& resolution, std::uint64_t target_index);
    ThreatRecord threats_of(const std::vector<Bullet>& bullets, std::uint64_t target_index);

    /// For each bullet, the last prefix k at which its membership in S_k
    /// changed, or its own index if it never entered. Only a lower bound on
    /// when membership settles in the full process.
    std::vector<std::uint64_t> settling_indices(const std::vector<Bullet>& bullets, TieTolerance tolerance = {});

    /// Every structural invariant of the resolution and of the per-step
    /// survivor updates: conservation, parity, unit steps, last-survivor
    /// removal, non-crossing matching, ordered survivor speeds, threat speeds
    /// and collision kinematics.
    Verdict check_invariants(const Resolution& resolution);
    Verdict check_invariants(const std::vector<Bullet>& bullets, TieTolerance tolerance = {});

    /// Compares the survivors of B_[0,n] with those of B_[1,n] using the
    /// reference resolver: the first survivor is removed, or one earlier bullet
    /// is added in front, or (from an empty B_[1,n]) exactly one survives.
    Verdict check_front_addition(const std::vector<Bullet>& bullets, TieTolerance tolerance = {});

    /// Resolves the suffix starting at position k as-is and again re-indexed
    /// from 0 with fire times re-based to 0; both must agree.
    Verdict shift_reindex_check(const std::vector<Bullet>& bullets, std::size_t k, TieTolerance tolerance = {});

    enum class ShieldOutcome
    {
        shielded,   // every fast bullet takes out the slow one ahead of it; b_0 survives
        breached,   // the pairing or b_0's survival failed
        non_shield, // v_fast <= v, so the construction protects nothing
    };

    struct ShieldReport
    {
        ShieldOutcome outcome = ShieldOutcome::breached;
        Resolution resolution;
        std::string detail;
    };

    /// b_0 at speed v followed by m (slow, fast) pairs with the given 2m
    /// delays. Throws ConfigError when v_slow > v or the delays are malformed.
    ShieldReport shield_scenario(double v, std::size_t m, double v_slow, double v_fast,
                                 const std::vector<double>& delays);

} // namespace ricochet
