#include "ricochet/diagram.hpp"
#include "ricochet/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace ricochet
{
    std::string render_diagram(const std::vector<Bullet>& bullets, const DiagramOptions& options,
                               DiagramSummary* summary)
    {
        if (!(options.tmax > 0.0) || !std::isfinite(options.tmax))
        {
            throw ConfigError("diagram tmax must be a positive number");
        }
        if (options.max_polylines == 0)
        {
            throw ConfigError("diagram needs room for at least one polyline");
        }

        std::vector<Bullet> fired;
        for (const auto& b : bullets)
        {
            if (b.fire_time > options.tmax)
            {
                break;
            }
            fired.push_back(b);
        }
        if (fired.empty())
        {
            throw ConfigError("no bullet is fired by tmax");
        }
        const Resolution r = resolve_truncation(fired);
        const auto position = [&](std::uint64_t index) {
            const auto it = std::lower_bound(fired.begin(), fired.end(), index,
                                             [](const Bullet& b, std::uint64_t i) { return b.index < i; });
            return static_cast<std::size_t>(it - fired.begin());
        };

        std::vector<double> death(fired.size(), std::numeric_limits<double>::infinity());
        std::size_t visible_collisions = 0;
        for (const auto& c : r.collisions)
        {
            const auto back = position(c.back_index);
            const auto front = position(c.front_index);
            death[back] = death[front] = c.time;
            if (c.time <= options.tmax)
            {
                ++visible_collisions;
            }
        }

        double top = 0.0;
        for (std::size_t i = 0; i < fired.size(); ++i)
        {
            const double end = std::min(death[i], options.tmax);
            top = std::max(top, fired[i].velocity * (end - fired[i].fire_time));
        }
        if (!(top > 0.0))
        {
            top = 1.0;
        }

        const double margin = 40.0;
        const double plot_w = options.width - 2 * margin;
        const double plot_h = options.height - 2 * margin;
        const auto px = [&](double t) { return margin + plot_w * t / options.tmax; };
        const auto py = [&](double x) { return options.height - margin - plot_h * x / top; };

        const std::size_t stride =
            fired.size() <= options.max_polylines ? 1 : (fired.size() + options.max_polylines - 1) / options.max_polylines;

        std::ostringstream svg;
        svg.setf(std::ios::fixed);
        svg.precision(2);
        svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << options.width << "\" height=\""
            << options.height << "\" viewBox=\"0 0 " << options.width << ' ' << options.height << "\">\n";
        svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
        svg << "<line x1=\"" << px(0) << "\" y1=\"" << py(0) << "\" x2=\"" << px(options.tmax) << "\" y2=\"" << py(0)
            << "\" stroke=\"black\"/>\n";
        svg << "<line x1=\"" << px(0) << "\" y1=\"" << py(0) << "\" x2=\"" << px(0) << "\" y2=\"" << py(top)
            << "\" stroke=\"black\"/>\n";
        svg << "<text x=\"" << px(options.tmax) << "\" y=\"" << py(0) + 25 << "\" text-anchor=\"end\" font-size=\"12\">"
            << "time " << format_real(options.tmax) << "</text>\n";
        svg << "<text x=\"" << margin - 5 << "\" y=\"" << py(top) - 8 << "\" font-size=\"12\">distance "
            << format_real(top) << "</text>\n";
        svg << "<g fill=\"none\" stroke-width=\"1\">\n";

        std::size_t drawn = 0;
        for (std::size_t i = 0; i < fired.size(); i += stride)
        {
            const Bullet& b = fired[i];
            const bool dies = death[i] <= options.tmax;
            const double end = dies ? death[i] : options.tmax;
            svg << "<polyline stroke=\"" << (dies ? "#1f77b4" : "#d62728") << "\" points=\"" << px(b.fire_time) << ','
                << py(0) << ' ' << px(end) << ',' << py(b.velocity * (end - b.fire_time)) << "\"/>\n";
            ++drawn;
        }
        svg << "</g>\n</svg>\n";

        if (summary)
        {
            summary->bullets = fired.size();
            summary->drawn = drawn;
            summary->collisions = visible_collisions;
        }
        return svg.str();
    }

} // namespace ricochet
