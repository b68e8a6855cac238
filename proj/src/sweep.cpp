#include "ricochet/sweep.hpp"
#include "ricochet/engine.hpp"
#include "ricochet/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

namespace ricochet
{
    namespace
    {
        struct Family
        {
            const char* mu;
            const char* nu;
        };

        constexpr Family kFamilies[] = {
            {"uniform:0,1", "point:1"},
            {"point:0.5", "exp:1"},
            {"finite:0.05,0.1,0.15,0.2,0.25,0.3,0.35,0.4,0.45,0.5,0.55,0.6,0.65,0.7,0.75,0.8,0.85,0.9,0.95,1;0.0002",
             "point:1"},
            {"exp:1", "uniform:0.5,1.5"},
            {"uniform:0.5,1.5", "exp:2"},
            {"finite:0,0.5,1", "exp:1"},
            {"finite:0.25,0.5,0.75,1;jitter=0.0002", "point:1"},
        };

        constexpr std::size_t kMessageCap = 20;

        void note(SweepReport& report, std::string message)
        {
            ++report.failures;
            if (report.messages.size() < kMessageCap)
            {
                report.messages.push_back(std::move(message));
            }
        }

        std::string tag(const SweepInstance& inst)
        {
            return "case " + std::to_string(inst.case_id) + " [" + inst.family + ", n=" +
                   std::to_string(inst.bullets.size()) + "]: ";
        }

        template <typename F>
        std::optional<Resolution> try_resolve(F&& f, std::optional<TripleCollision>& triple)
        {
            try
            {
                return f();
            }
            catch (const TripleCollision& e)
            {
                triple = e;
                return std::nullopt;
            }
        }
    } // namespace

    std::size_t sweep_family_count() noexcept { return std::size(kFamilies); }

    SweepInstance random_instance(std::uint64_t seed, std::uint64_t case_id, std::size_t nmin, std::size_t nmax)
    {
        if (nmin < 1 || nmax < nmin)
        {
            throw ConfigError("sweep size range must satisfy 1 <= nmin <= nmax");
        }
        const Family& family = kFamilies[case_id % std::size(kFamilies)];
        RngStream sizing(mix64(seed) + 0x5eed, case_id);
        const std::size_t count = nmin + static_cast<std::size_t>(sizing.next_u64() % (nmax - nmin + 1));

        const ProcessConfig config{DistributionSpec::parse(family.mu), DistributionSpec::parse(family.nu), seed,
                                   case_id, std::nullopt, false};

        SweepInstance inst;
        inst.case_id = case_id;
        inst.family = std::string(family.mu) + " / " + family.nu;
        inst.bullets = generate_sequence(config, count);
        return inst;
    }

    SweepReport run_oracle_sweep(std::uint64_t seed, std::uint64_t cases, double time_tolerance)
    {
        SweepReport report;
        for (std::uint64_t c = 0; c < cases; ++c)
        {
            const SweepInstance inst = random_instance(seed, c);
            ++report.cases;

            std::optional<TripleCollision> engine_triple;
            std::optional<TripleCollision> oracle_triple;
            const auto fast = try_resolve([&] { return resolve_truncation(inst.bullets); }, engine_triple);
            const auto slow = try_resolve([&] { return oracle::brute_resolve(inst.bullets); }, oracle_triple);

            if (!fast || !slow)
            {
                if (fast.has_value() != slow.has_value())
                {
                    note(report, tag(inst) + "only one resolver reported a triple collision");
                }
                else
                {
                    ++report.triple_collisions;
                }
                continue;
            }

            bool same = fast->survivors == slow->survivors && fast->sn_sizes == slow->sn_sizes &&
                        fast->ps_flags == slow->ps_flags && fast->insertion_partner == slow->insertion_partner &&
                        fast->collisions.size() == slow->collisions.size();
            for (std::size_t i = 0; same && i < fast->collisions.size(); ++i)
            {
                const auto& a = fast->collisions[i];
                const auto& b = slow->collisions[i];
                if (a.back_index != b.back_index || a.front_index != b.front_index)
                {
                    same = false;
                    break;
                }
                const double scale = std::max({1.0, std::fabs(a.time), std::fabs(b.time)});
                const double err = std::fabs(a.time - b.time) / scale;
                report.max_relative_time_error = std::max(report.max_relative_time_error, err);
                if (err > time_tolerance)
                {
                    same = false;
                }
            }
            if (!same)
            {
                note(report, tag(inst) + "engine and reference resolver disagree");
                continue;
            }

            const Verdict invariants = check_invariants(inst.bullets);
            if (!invariants)
            {
                note(report, tag(inst) + invariants.summary());
            }
        }
        return report;
    }

    SweepReport run_lemma_sweep(std::uint64_t seed, std::uint64_t cases)
    {
        SweepReport report;
        for (std::uint64_t c = 0; c < cases; ++c)
        {
            const SweepInstance inst = random_instance(seed, c);
            ++report.cases;
            RngStream pick(mix64(seed) + 0x5417, c);
            const std::size_t k = static_cast<std::size_t>(pick.next_u64() % inst.bullets.size());

            try
            {
                if (inst.bullets.size() >= 2)
                {
                    const Verdict front = check_front_addition(inst.bullets);
                    if (!front)
                    {
                        note(report, tag(inst) + front.summary());
                        continue;
                    }
                }
                const Verdict shift = shift_reindex_check(inst.bullets, k);
                if (!shift)
                {
                    note(report, tag(inst) + shift.summary());
                }
            }
            catch (const TripleCollision&)
            {
                ++report.triple_collisions;
            }
        }
        return report;
    }

} // namespace ricochet
