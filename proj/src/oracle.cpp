#include "ricochet/oracle.hpp"

#include <algorithm>
#include <limits>
#include <optional>

namespace ricochet::oracle
{
    namespace
    {
        constexpr double never = std::numeric_limits<double>::infinity();

        void require_increasing(const std::vector<Bullet>& bullets)
        {
            for (std::size_t i = 1; i < bullets.size(); ++i)
            {
                if (!(bullets[i].fire_time > bullets[i - 1].fire_time))
                {
                    throw NonMonotoneFireTime("oracle: fire times must strictly increase at position " +
                                              std::to_string(i));
                }
            }
        }

        std::optional<CatchPoint> catch_of(const std::vector<Bullet>& bullets, std::size_t front, std::size_t back)
        {
            return catch_time({bullets[front].velocity, bullets[front].fire_time},
                              {bullets[back].velocity, bullets[back].fire_time});
        }

        double adjacent_catch(const std::vector<Bullet>& bullets, std::size_t front, std::size_t back)
        {
            const auto hit = catch_time({bullets[front].velocity, bullets[front].fire_time},
                                        {bullets[back].velocity, bullets[back].fire_time});
            return hit ? hit->time : never;
        }
    } // namespace

    FinalState brute_final(const std::vector<Bullet>& bullets, TieTolerance tolerance)
    {
        require_increasing(bullets);

        FinalState out;
        std::vector<std::size_t> active; // positions, in firing order = spatial order
        std::size_t next_fire = 0;

        while (true)
        {
            double earliest = never;
            std::optional<std::size_t> slot;
            for (std::size_t j = 0; j + 1 < active.size(); ++j)
            {
                const double t = adjacent_catch(bullets, active[j], active[j + 1]);
                if (t < earliest)
                {
                    earliest = t;
                    slot = j;
                }
            }
            const double next_firing = next_fire < bullets.size() ? bullets[next_fire].fire_time : never;

            if (!slot && next_fire == bullets.size())
            {
                break;
            }
            if (!slot || next_firing <= earliest)
            {
                active.push_back(next_fire++);
                continue;
            }

            const std::size_t j = *slot;
            // A neighbouring catch at the same moment would involve a third
            // bullet. The shared bullet's age at both events is compared.
            const auto own = *catch_of(bullets, active[j], active[j + 1]);
            if (j > 0)
            {
                const auto other = catch_of(bullets, active[j - 1], active[j]);
                if (other && tolerance.ties(other->back_age, own.front_age))
                {
                    throw TripleCollision(bullets[active[j - 1]].index, bullets[active[j]].index,
                                          bullets[active[j + 1]].index, earliest);
                }
            }
            if (j + 2 < active.size())
            {
                const auto other = catch_of(bullets, active[j + 1], active[j + 2]);
                if (other && tolerance.ties(other->front_age, own.back_age))
                {
                    throw TripleCollision(bullets[active[j]].index, bullets[active[j + 1]].index,
                                          bullets[active[j + 2]].index, earliest);
                }
            }

            const Bullet& front = bullets[active[j]];
            const Bullet& back = bullets[active[j + 1]];
            const auto hit = catch_time({front.velocity, front.fire_time}, {back.velocity, back.fire_time});
            out.collisions.push_back(Collision{back.index, front.index, hit->time, hit->position});
            active.erase(active.begin() + static_cast<std::ptrdiff_t>(j), active.begin() + static_cast<std::ptrdiff_t>(j + 2));
        }

        for (std::size_t pos : active)
        {
            out.survivors.push_back(bullets[pos].index);
        }
        std::sort(out.collisions.begin(), out.collisions.end(),
                  [](const Collision& a, const Collision& b) { return a.back_index < b.back_index; });
        return out;
    }

    Resolution brute_resolve(const std::vector<Bullet>& bullets, TieTolerance tolerance)
    {
        Resolution r;
        r.bullets = bullets;
        std::vector<Bullet> prefix;
        prefix.reserve(bullets.size());
        for (const auto& b : bullets)
        {
            prefix.push_back(b);
            const FinalState state = brute_final(prefix, tolerance);
            r.sn_sizes.push_back(state.survivors.size());
            r.ps_flags.push_back(!state.survivors.empty() && state.survivors.back() == b.index);

            std::optional<std::uint64_t> partner;
            for (const auto& c : state.collisions)
            {
                if (c.back_index == b.index)
                {
                    partner = c.front_index;
                }
            }
            r.insertion_partner.push_back(partner);

            if (prefix.size() == bullets.size())
            {
                r.collisions = state.collisions;
                r.survivors = state.survivors;
            }
        }
        return r;
    }

} // namespace ricochet::oracle
