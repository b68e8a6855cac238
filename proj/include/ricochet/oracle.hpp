#pragma once

// Reference resolver: replays the process event by event, always applying the
// earliest pending firing or adjacent catch. Quadratic per truncation and
// cubic for the per-prefix arrays; meant for inputs of a few hundred bullets.
// Shares nothing with the streaming engine beyond catch_time().

#include "ricochet/catch_time.hpp"
#include "ricochet/core.hpp"
#include "ricochet/engine.hpp"

#include <vector>

namespace ricochet::oracle
{
    using ricochet::catch_time;

    struct FinalState
    {
        std::vector<Collision> collisions; // sorted by back_index
        std::vector<std::uint64_t> survivors;
    };

    /// Resolves the truncation on exactly these bullets.
    FinalState brute_final(const std::vector<Bullet>& bullets, TieTolerance tolerance = {});

    /// Same contract as resolve_truncation(): the final truncation plus the
    /// per-prefix arrays, each prefix resolved independently.
    Resolution brute_resolve(const std::vector<Bullet>& bullets, TieTolerance tolerance = {});

} // namespace ricochet::oracle
