#pragma once

// Time-space diagrams: time runs left to right, distance from the origin
// bottom to top, one straight segment per bullet ending where it is
// annihilated or at the time horizon.

#include "ricochet/core.hpp"

#include <cstddef>
#include <string>
#include <vector>

namespace ricochet
{
    struct DiagramOptions
    {
        double tmax = 20.0;
        double width = 900.0;
        double height = 600.0;
        std::size_t max_polylines = 5000; // subsample evenly beyond this
    };

    struct DiagramSummary
    {
        std::size_t bullets = 0; // fired by tmax
        std::size_t drawn = 0;
        std::size_t collisions = 0; // happening by tmax
    };

    /// Resolves the bullets fired by tmax and renders the SVG document.
    std::string render_diagram(const std::vector<Bullet>& bullets, const DiagramOptions& options,
                               DiagramSummary* summary = nullptr);

} // namespace ricochet
