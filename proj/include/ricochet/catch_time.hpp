#pragma once

#include <algorithm>
#include <cmath>
#include <optional>

namespace ricochet
{
    struct Trajectory
    {
        double velocity;
        double fire_time;
    };

    struct CatchPoint
    {
        double time;
        double position;
        /// Time each bullet has been in flight at the catch. Two events that
        /// share a bullet are compared through its age, which keeps full
        /// relative precision when absolute times are large.
        double front_age;
        double back_age;
    };

    /// Where the back bullet's straight-line path meets the front bullet's.
    /// Requires back.fire_time > front.fire_time. A speed-0 front bullet never
    /// leaves the origin, so anything fired behind it meets it at its own fire
    /// time.
    inline std::optional<CatchPoint> catch_time(Trajectory front, Trajectory back) noexcept
    {
        if (front.velocity == 0.0)
        {
            return CatchPoint{back.fire_time, 0.0, back.fire_time - front.fire_time, 0.0};
        }
        if (!(back.velocity > front.velocity))
        {
            return std::nullopt;
        }
        // t = (v_b t_b - v_f t_f) / (v_b - v_f), rearranged so the large fire
        // times never cancel.
        const double gap = back.fire_time - front.fire_time;
        const double travel = front.velocity * gap / (back.velocity - front.velocity);
        return CatchPoint{back.fire_time + travel, back.velocity * travel, gap + travel, travel};
    }

    /// Two event times (or ages) closer than max(abs, rel * t) are treated as
    /// simultaneous.
    struct TieTolerance
    {
        double abs = 1e-12;
        double rel = 1e-12;

        bool ties(double a, double b) const noexcept
        {
            if (!std::isfinite(a) || !std::isfinite(b))
            {
                return false;
            }
            const double scale = std::max(std::fabs(a), std::fabs(b));
            return std::fabs(a - b) <= std::max(abs, rel * scale);
        }
    };

} // namespace ricochet
