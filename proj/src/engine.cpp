#include "ricochet/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace ricochet
{
    namespace
    {
        constexpr double never = std::numeric_limits<double>::infinity();
    }

    TripleCollision::TripleCollision(std::uint64_t front, std::uint64_t middle, std::uint64_t back, double time)
        : std::runtime_error("triple collision: bullets " + std::to_string(front) + ", " + std::to_string(middle) +
                             " and " + std::to_string(back) + " meet at t=" + format_real(time)),
          front_(front), middle_(middle), back_(back), time_(time)
    {
    }

    Engine::Engine(EngineOptions options)
        : options_(std::move(options)), compact_at_(std::max<std::size_t>(options_.compaction_floor, 2))
    {
    }

    InsertionOutcome Engine::ingest(const Bullet& bullet)
    {
        if (finished_)
        {
            throw std::logic_error("engine: ingest after finish()");
        }
        if (poisoned_)
        {
            throw std::logic_error("engine: ingest after a triple collision");
        }
        if (!(std::isfinite(bullet.velocity) && bullet.velocity >= 0.0 && std::isfinite(bullet.fire_time)))
        {
            throw std::invalid_argument("engine: bullet " + std::to_string(bullet.index) +
                                        " needs a finite velocity >= 0 and a finite fire time");
        }
        if (ingested_ > 0)
        {
            if (!(bullet.fire_time > last_fire_))
            {
                throw NonMonotoneFireTime("bullet " + std::to_string(bullet.index) + " fired at " +
                                          format_real(bullet.fire_time) + ", not after " + format_real(last_fire_));
            }
            if (bullet.index <= last_index_)
            {
                throw NonMonotoneFireTime("bullet indices must increase: " + std::to_string(bullet.index) +
                                          " after " + std::to_string(last_index_));
            }
        }

        // Pairs dying by the previous firing are final; nothing fired now can reach them.
        const double settled_by = ingested_ > 0 ? last_fire_ : -never;
        const auto& tol = options_.tolerance;

        slots_.push_back(Slot{bullet.index, bullet.velocity, bullet.fire_time, never, -1});
        const std::size_t fired = slots_.size() - 1;

        InsertionOutcome out;
        std::size_t walker = fired;
        std::int64_t cursor = static_cast<std::int64_t>(fired) - 1;
        bool absorbed = false;

        while (cursor >= 0)
        {
            const Slot& ahead = slots_[static_cast<std::size_t>(cursor)];
            const auto at = static_cast<std::size_t>(cursor);

            if (ahead.partner < 0)
            {
                // The rearmost survivor: either the walker catches it or nothing
                // further ahead is reachable.
                if (auto hit = catch_time(path(ahead), path(slots_[walker])))
                {
                    if (walker == fired)
                    {
                        out.insertion_partner = ahead.index;
                    }
                    out.removed_survivor = ahead.index;
                    pair_up(at, walker, hit->time);
                    --survivors_;
                    absorbed = true;
                }
                break;
            }

            const auto front = static_cast<std::size_t>(ahead.partner);
            if (ahead.death_time > settled_by)
            {
                if (auto hit = catch_time(path(ahead), path(slots_[walker])))
                {
                    // Both events involve `ahead`; compare its age at each.
                    const double scheduled_age = catch_time(path(slots_[front]), path(ahead))->back_age;
                    if (tol.ties(hit->front_age, scheduled_age))
                    {
                        poisoned_ = true;
                        throw TripleCollision(slots_[front].index, ahead.index, slots_[walker].index, hit->time);
                    }
                    if (hit->front_age < scheduled_age)
                    {
                        // The walker intercepts the back member first; its old
                        // partner is freed and walks forward in turn.
                        if (walker == fired)
                        {
                            out.insertion_partner = ahead.index;
                        }
                        slots_[front].partner = -1;
                        slots_[front].death_time = never;
                        pair_up(at, walker, hit->time);
                        ++out.pairs_broken;
                        walker = front;
                        cursor = static_cast<std::int64_t>(front) - 1;
                        continue;
                    }
                }
            }
            // The pair dies before the walker reaches it.
            cursor = static_cast<std::int64_t>(front) - 1;
        }

        if (!absorbed)
        {
            ++survivors_;
            out.added_survivor = slots_[walker].index;
        }
        out.potential_survivor = !out.insertion_partner.has_value();
        out.survivor_count = survivors_;

        last_fire_ = bullet.fire_time;
        last_index_ = bullet.index;
        ++ingested_;
        if (options_.record_ps_flags)
        {
            ps_flags_.push_back(out.potential_survivor);
        }
        peak_slots_ = std::max(peak_slots_, slots_.size());
        if (slots_.size() >= compact_at_)
        {
            compact();
        }
        return out;
    }

    void Engine::pair_up(std::size_t front, std::size_t back, double time)
    {
        slots_[front].partner = static_cast<std::int64_t>(back);
        slots_[front].death_time = time;
        slots_[back].partner = static_cast<std::int64_t>(front);
        slots_[back].death_time = time;
    }

    Collision Engine::collision_of(std::size_t back) const
    {
        const Slot& b = slots_[back];
        const Slot& f = slots_[static_cast<std::size_t>(b.partner)];
        const auto hit = catch_time(path(f), path(b));
        return Collision{b.index, f.index, b.death_time, hit ? hit->position : 0.0};
    }

    void Engine::emit(const Collision& c)
    {
        ++emitted_;
        if (options_.keep_confirmed)
        {
            confirmed_log_.push_back(c);
        }
        if (options_.sink)
        {
            options_.sink(c);
        }
    }

    void Engine::compact()
    {
        const std::size_t n = slots_.size();
        auto settled = [&](const Slot& s) { return s.partner >= 0 && s.death_time <= last_fire_; };

        for (std::size_t i = 0; i < n; ++i)
        {
            if (settled(slots_[i]) && static_cast<std::size_t>(slots_[i].partner) < i)
            {
                emit(collision_of(i));
            }
        }

        remap_.assign(n, -1);
        std::size_t kept = 0;
        for (std::size_t i = 0; i < n; ++i)
        {
            if (settled(slots_[i]))
            {
                continue;
            }
            remap_[i] = static_cast<std::int64_t>(kept);
            slots_[kept++] = slots_[i];
        }
        slots_.resize(kept);
        for (auto& s : slots_)
        {
            if (s.partner >= 0)
            {
                s.partner = remap_[static_cast<std::size_t>(s.partner)];
            }
        }
        compact_at_ = std::max(options_.compaction_floor, 2 * kept);
    }

    std::vector<std::uint64_t> Engine::survivors() const
    {
        std::vector<std::uint64_t> out;
        out.reserve(survivors_);
        for (const auto& s : slots_)
        {
            if (s.partner < 0)
            {
                out.push_back(s.index);
            }
        }
        return out;
    }

    std::vector<Bullet> Engine::survivor_bullets() const
    {
        std::vector<Bullet> out;
        out.reserve(survivors_);
        for (const auto& s : slots_)
        {
            if (s.partner < 0)
            {
                out.push_back(Bullet{s.index, s.velocity, s.fire_time});
            }
        }
        return out;
    }

    std::vector<Collision> Engine::confirmed_collisions() const
    {
        std::vector<Collision> out = confirmed_log_;
        for (std::size_t i = 0; i < slots_.size(); ++i)
        {
            const Slot& s = slots_[i];
            if (s.partner >= 0 && static_cast<std::size_t>(s.partner) < i && s.death_time <= last_fire_)
            {
                out.push_back(collision_of(i));
            }
        }
        std::sort(out.begin(), out.end(),
                  [](const Collision& a, const Collision& b) { return a.back_index < b.back_index; });
        return out;
    }

    bool Engine::is_potential_survivor(std::size_t k) const
    {
        if (!options_.record_ps_flags)
        {
            throw std::logic_error("engine: potential-survivor flags were not recorded");
        }
        if (k >= ps_flags_.size())
        {
            throw std::out_of_range("engine: bullet " + std::to_string(k) + " not ingested");
        }
        return ps_flags_[k];
    }

    std::size_t Engine::find_slot(std::uint64_t index) const
    {
        if (!slots_.empty() && slots_.front().index == index)
        {
            return 0;
        }
        auto it = std::lower_bound(slots_.begin(), slots_.end(), index,
                                   [](const Slot& s, std::uint64_t i) { return s.index < i; });
        if (it == slots_.end() || it->index != index)
        {
            return slots_.size();
        }
        return static_cast<std::size_t>(it - slots_.begin());
    }

    BulletState Engine::state_of(std::uint64_t index) const
    {
        if (ingested_ == 0 || index > last_index_)
        {
            throw std::out_of_range("engine: bullet " + std::to_string(index) + " not ingested");
        }
        const std::size_t at = find_slot(index);
        if (at == slots_.size())
        {
            return BulletState{BulletStatus::dead, std::nullopt, 0.0};
        }
        const Slot& s = slots_[at];
        if (s.partner < 0)
        {
            return BulletState{BulletStatus::survivor, std::nullopt, never};
        }
        return BulletState{BulletStatus::doomed, slots_[static_cast<std::size_t>(s.partner)].index, s.death_time};
    }

    std::vector<Collision> Engine::finish()
    {
        std::vector<Collision> out;
        if (finished_)
        {
            return out;
        }
        for (std::size_t i = 0; i < slots_.size(); ++i)
        {
            if (slots_[i].partner >= 0 && static_cast<std::size_t>(slots_[i].partner) < i)
            {
                out.push_back(collision_of(i));
                emit(out.back());
            }
        }
        std::erase_if(slots_, [](const Slot& s) { return s.partner >= 0; });
        finished_ = true;
        return out;
    }

    std::size_t Engine::resident_bytes() const noexcept
    {
        return slots_.capacity() * sizeof(Slot) + remap_.capacity() * sizeof(std::int64_t) +
               ps_flags_.capacity() / 8 + confirmed_log_.capacity() * sizeof(Collision);
    }

    Resolution resolve_truncation(const std::vector<Bullet>& bullets, TieTolerance tolerance)
    {
        EngineOptions options;
        options.tolerance = tolerance;
        Engine engine(std::move(options));

        Resolution r;
        r.bullets = bullets;
        r.sn_sizes.reserve(bullets.size());
        r.ps_flags.reserve(bullets.size());
        r.insertion_partner.reserve(bullets.size());
        for (const auto& b : bullets)
        {
            const auto outcome = engine.ingest(b);
            r.sn_sizes.push_back(outcome.survivor_count);
            r.ps_flags.push_back(outcome.potential_survivor);
            r.insertion_partner.push_back(outcome.insertion_partner);
        }
        r.survivors = engine.survivors();
        engine.finish();
        r.collisions = engine.confirmed_collisions(); // every collision once finished
        return r;
    }

} // namespace ricochet
