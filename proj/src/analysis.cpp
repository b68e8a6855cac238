#include "ricochet/analysis.hpp"
#include "ricochet/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace ricochet
{
    std::string Verdict::summary() const
    {
        if (pass)
        {
            return "pass";
        }
        std::string out = "FAIL (" + std::to_string(failures.size()) + ")";
        for (std::size_t i = 0; i < failures.size() && i < 5; ++i)
        {
            out += "; " + failures[i];
        }
        return out;
    }

    namespace
    {
        std::size_t position_of(const std::vector<Bullet>& bullets, std::uint64_t index)
        {
            auto it = std::lower_bound(bullets.begin(), bullets.end(), index,
                                       [](const Bullet& b, std::uint64_t i) { return b.index < i; });
            if (it == bullets.end() || it->index != index)
            {
                throw std::out_of_range("no bullet with index " + std::to_string(index));
            }
            return static_cast<std::size_t>(it - bullets.begin());
        }

        std::string list(const std::vector<std::uint64_t>& xs)
        {
            std::ostringstream os;
            os << '{';
            for (std::size_t i = 0; i < xs.size(); ++i)
            {
                os << (i ? "," : "") << xs[i];
            }
            os << '}';
            return os.str();
        }

        bool near(double a, double b)
        {
            return std::fabs(a - b) <= 1e-9 * std::max({1.0, std::fabs(a), std::fabs(b)});
        }
    } // namespace

    ThreatRecord threats_of(const Resolution& resolution, std::uint64_t target_index)
    {
        position_of(resolution.bullets, target_index);
        ThreatRecord record;
        record.target_index = target_index;
        for (std::size_t j = 0; j < resolution.insertion_partner.size(); ++j)
        {
            if (resolution.insertion_partner[j] == target_index)
            {
                record.threat_indices.push_back(resolution.bullets[j].index);
            }
        }
        return record;
    }

    ThreatRecord threats_of(const std::vector<Bullet>& bullets, std::uint64_t target_index)
    {
        return threats_of(resolve_truncation(bullets), target_index);
    }

    std::vector<std::uint64_t> settling_indices(const std::vector<Bullet>& bullets, TieTolerance tolerance)
    {
        EngineOptions options;
        options.tolerance = tolerance;
        options.keep_confirmed = false;
        options.record_ps_flags = false;
        Engine engine(std::move(options));

        std::vector<std::uint64_t> last(bullets.size());
        for (std::size_t k = 0; k < bullets.size(); ++k)
        {
            last[k] = bullets[k].index;
            const auto outcome = engine.ingest(bullets[k]);
            const auto flipped = outcome.added_survivor ? *outcome.added_survivor : *outcome.removed_survivor;
            last[position_of(bullets, flipped)] = bullets[k].index;
        }
        return last;
    }

    Verdict check_invariants(const Resolution& r)
    {
        Verdict v;
        const auto& bullets = r.bullets;
        const std::size_t n = bullets.size();

        if (2 * r.collisions.size() + r.survivors.size() != n)
        {
            v.fail("conservation: 2*" + std::to_string(r.collisions.size()) + " + " +
                   std::to_string(r.survivors.size()) + " != " + std::to_string(n));
        }
        for (std::size_t k = 0; k < r.sn_sizes.size(); ++k)
        {
            if (r.sn_sizes[k] % 2 != (k + 1) % 2)
            {
                v.fail("parity at prefix " + std::to_string(k));
            }
            if (k > 0)
            {
                const auto a = r.sn_sizes[k - 1];
                const auto b = r.sn_sizes[k];
                if (!(b == a + 1 || b + 1 == a))
                {
                    v.fail("unit step violated at prefix " + std::to_string(k));
                }
            }
            if (r.ps_flags[k] == r.insertion_partner[k].has_value())
            {
                v.fail("ps flag disagrees with insertion partner at " + std::to_string(k));
            }
        }
        if (!r.sn_sizes.empty() && r.sn_sizes.back() != r.survivors.size())
        {
            v.fail("final |S_n| disagrees with survivor list");
        }

        // Non-crossing: scanning by position, a back member must close the
        // innermost open pair, and no survivor may sit inside an open pair.
        std::vector<std::int64_t> partner(n, -1);
        for (const auto& c : r.collisions)
        {
            const auto b = position_of(bullets, c.back_index);
            const auto f = position_of(bullets, c.front_index);
            if (!(c.back_index > c.front_index))
            {
                v.fail("collision order: back " + std::to_string(c.back_index) + " <= front " +
                       std::to_string(c.front_index));
                continue;
            }
            if (partner[b] >= 0 || partner[f] >= 0)
            {
                v.fail("bullet matched twice near " + std::to_string(c.back_index));
            }
            partner[b] = static_cast<std::int64_t>(f);
            partner[f] = static_cast<std::int64_t>(b);

            const Bullet& fb = bullets[f];
            const Bullet& bb = bullets[b];
            if (!(bb.velocity > fb.velocity || fb.velocity == 0.0))
            {
                v.fail("collision (" + std::to_string(c.back_index) + "," + std::to_string(c.front_index) +
                       ") has a back bullet no faster than the front one");
            }
            if (c.time < bb.fire_time || c.time < fb.fire_time)
            {
                v.fail("collision before firing at " + std::to_string(c.back_index));
            }
            if (!near(bb.velocity * (c.time - bb.fire_time), c.position) ||
                !near(fb.velocity * (c.time - fb.fire_time), c.position))
            {
                v.fail("collision position off the trajectories at " + std::to_string(c.back_index));
            }
        }
        std::vector<std::size_t> open;
        for (std::size_t i = 0; i < n; ++i)
        {
            if (partner[i] < 0)
            {
                if (!open.empty())
                {
                    v.fail("survivor " + std::to_string(bullets[i].index) + " inside pair opened at " +
                           std::to_string(bullets[open.back()].index));
                }
            }
            else if (static_cast<std::size_t>(partner[i]) > i)
            {
                open.push_back(i);
            }
            else
            {
                if (open.empty() || open.back() != static_cast<std::size_t>(partner[i]))
                {
                    v.fail("crossing pairs at " + std::to_string(bullets[i].index));
                }
                else
                {
                    open.pop_back();
                }
            }
        }

        for (std::size_t s = 1; s < r.survivors.size(); ++s)
        {
            const double ahead = bullets[position_of(bullets, r.survivors[s - 1])].velocity;
            const double behind = bullets[position_of(bullets, r.survivors[s])].velocity;
            if (behind > ahead)
            {
                v.fail("survivor " + std::to_string(r.survivors[s]) + " faster than survivor " +
                       std::to_string(r.survivors[s - 1]));
            }
        }

        for (std::size_t j = 0; j < r.insertion_partner.size(); ++j)
        {
            if (!r.insertion_partner[j])
            {
                continue;
            }
            const double target = bullets[position_of(bullets, *r.insertion_partner[j])].velocity;
            if (!(bullets[j].velocity > target || target == 0.0))
            {
                v.fail("threat " + std::to_string(bullets[j].index) + " is not faster than its target");
            }
        }
        return v;
    }

    Verdict check_invariants(const std::vector<Bullet>& bullets, TieTolerance tolerance)
    {
        Verdict v = check_invariants(resolve_truncation(bullets, tolerance));

        // Step-by-step: S_{k} arises from S_{k-1} by dropping its last member
        // or appending a member behind all of them.
        EngineOptions options;
        options.tolerance = tolerance;
        options.keep_confirmed = false;
        Engine engine(std::move(options));
        std::set<std::uint64_t> current;
        for (const auto& b : bullets)
        {
            const auto outcome = engine.ingest(b);
            if (outcome.removed_survivor.has_value() == outcome.added_survivor.has_value())
            {
                v.fail("ingest of " + std::to_string(b.index) + " did not change S by exactly one");
                continue;
            }
            if (outcome.removed_survivor)
            {
                if (current.empty() || *current.rbegin() != *outcome.removed_survivor)
                {
                    v.fail("ingest of " + std::to_string(b.index) + " removed " +
                           std::to_string(*outcome.removed_survivor) + ", not the last survivor");
                }
                current.erase(*outcome.removed_survivor);
            }
            else
            {
                if (!current.empty() && *current.rbegin() >= *outcome.added_survivor)
                {
                    v.fail("ingest of " + std::to_string(b.index) + " added " +
                           std::to_string(*outcome.added_survivor) + " in front of the last survivor");
                }
                if (outcome.potential_survivor != (*outcome.added_survivor == b.index))
                {
                    v.fail("ps flag of " + std::to_string(b.index) + " disagrees with the added survivor");
                }
                current.insert(*outcome.added_survivor);
            }
            if (current.size() != outcome.survivor_count)
            {
                v.fail("survivor count drift at " + std::to_string(b.index));
            }
        }
        const auto final_list = engine.survivors();
        if (!std::equal(current.begin(), current.end(), final_list.begin(), final_list.end()))
        {
            v.fail("tracked survivor set differs from engine snapshot");
        }
        return v;
    }

    Verdict check_front_addition(const std::vector<Bullet>& bullets, TieTolerance tolerance)
    {
        Verdict v;
        if (bullets.size() < 2)
        {
            throw ConfigError("front addition needs at least two bullets");
        }
        const std::vector<Bullet> rest(bullets.begin() + 1, bullets.end());
        const auto with_front = oracle::brute_final(bullets, tolerance).survivors;
        const auto without = oracle::brute_final(rest, tolerance).survivors;

        const std::string context = " (S_[0,n]=" + list(with_front) + ", S_[1,n]=" + list(without) + ")";
        if (without.empty())
        {
            if (with_front.size() != 1)
            {
                v.fail("empty S_[1,n] but |S_[0,n]| != 1" + context);
            }
            return v;
        }

        const bool dropped_first = with_front.size() + 1 == without.size() &&
                                   std::equal(with_front.begin(), with_front.end(), without.begin() + 1);
        const bool added_front = with_front.size() == without.size() + 1 &&
                                 std::equal(without.begin(), without.end(), with_front.begin() + 1) &&
                                 with_front.front() < without.front();
        if (!dropped_first && !added_front)
        {
            v.fail("front addition rule violated" + context);
        }
        return v;
    }

    Verdict shift_reindex_check(const std::vector<Bullet>& bullets, std::size_t k, TieTolerance tolerance)
    {
        if (k >= bullets.size())
        {
            throw std::out_of_range("shift index beyond the sequence");
        }
        Verdict v;
        const std::vector<Bullet> suffix(bullets.begin() + static_cast<std::ptrdiff_t>(k), bullets.end());
        std::vector<Bullet> shifted = suffix;
        const std::uint64_t base_index = suffix.front().index;
        const double base_time = suffix.front().fire_time;
        for (auto& b : shifted)
        {
            b.index -= base_index;
            b.fire_time -= base_time;
        }

        const Resolution a = resolve_truncation(suffix, tolerance);
        const Resolution b = resolve_truncation(shifted, tolerance);

        if (a.collisions.size() != b.collisions.size())
        {
            v.fail("shift by " + std::to_string(k) + ": collision counts differ");
        }
        else
        {
            for (std::size_t i = 0; i < a.collisions.size(); ++i)
            {
                if (a.collisions[i].back_index - base_index != b.collisions[i].back_index ||
                    a.collisions[i].front_index - base_index != b.collisions[i].front_index)
                {
                    v.fail("shift by " + std::to_string(k) + ": matchings differ at pair " + std::to_string(i));
                    break;
                }
            }
        }
        std::vector<double> va;
        std::vector<double> vb;
        for (auto s : a.survivors)
        {
            va.push_back(suffix[position_of(suffix, s)].velocity);
        }
        for (auto s : b.survivors)
        {
            vb.push_back(shifted[position_of(shifted, s)].velocity);
        }
        if (va != vb)
        {
            v.fail("shift by " + std::to_string(k) + ": survivor velocities differ");
        }
        if (a.sn_sizes != b.sn_sizes || a.ps_flags != b.ps_flags)
        {
            v.fail("shift by " + std::to_string(k) + ": prefix survivor counts differ");
        }
        return v;
    }

    ShieldReport shield_scenario(double v, std::size_t m, double v_slow, double v_fast,
                                 const std::vector<double>& delays)
    {
        if (!(std::isfinite(v) && v >= 0.0 && std::isfinite(v_slow) && v_slow >= 0.0 && std::isfinite(v_fast) &&
              v_fast >= 0.0))
        {
            throw ConfigError("shield: speeds must be finite and >= 0");
        }
        if (v_slow > v)
        {
            throw ConfigError("shield: a slow bullet faster than b_0 would catch it");
        }
        if (delays.size() != 2 * m)
        {
            throw ConfigError("shield: need exactly 2m delays");
        }
        std::vector<double> velocities{v};
        std::vector<double> times{0.0};
        for (std::size_t i = 0; i < delays.size(); ++i)
        {
            if (!(std::isfinite(delays[i]) && delays[i] > 0.0))
            {
                throw ConfigError("shield: delays must be > 0");
            }
            velocities.push_back(i % 2 == 0 ? v_slow : v_fast);
            times.push_back(times.back() + delays[i]);
        }

        ShieldReport report;
        report.resolution = resolve_truncation(make_bullets(velocities, times));
        const auto& r = report.resolution;

        if (!(v_fast > v))
        {
            report.outcome = ShieldOutcome::non_shield;
            report.detail = "fast speed does not exceed v; nothing to shield against";
            return report;
        }

        bool paired = r.collisions.size() == m;
        for (std::size_t i = 0; paired && i < m; ++i)
        {
            const auto& c = r.collisions[i];
            paired = c.back_index == 2 * (i + 1) && c.front_index == 2 * (i + 1) - 1;
        }
        const bool first_survives = !r.survivors.empty() && r.survivors.front() == 0;
        if (paired && first_survives)
        {
            report.outcome = ShieldOutcome::shielded;
            report.detail = "each fast bullet annihilates the slow one ahead of it; b_0 survives";
        }
        else
        {
            report.outcome = ShieldOutcome::breached;
            report.detail = paired ? "b_0 was annihilated" : "fast bullets did not pair with the slow ones";
        }
        return report;
    }

} // namespace ricochet
