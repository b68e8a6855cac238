#pragma once

// Streaming resolver for truncations of the bullet process.
//
// After ingesting b_0..b_n the engine holds the complete future of B_n: every
// live bullet is either unpaired (a survivor of B_n) or doomed to meet a
// partner at a known time and place. Pairs are properly nested by index, so
// walking the live slots from the back and jumping from each doomed bullet to
// its partner visits exactly the bullets a newly fired one can reach.

#include "ricochet/catch_time.hpp"
#include "ricochet/core.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace ricochet
{
    struct Collision
    {
        std::uint64_t back_index = 0;
        std::uint64_t front_index = 0;
        double time = 0.0;
        double position = 0.0;

        friend bool operator==(const Collision&, const Collision&) = default;
    };

    /// Two candidate events share a bullet and coincide within tolerance.
    class TripleCollision : public std::runtime_error
    {
    public:
        TripleCollision(std::uint64_t front, std::uint64_t middle, std::uint64_t back, double time);

        std::uint64_t front_index() const noexcept { return front_; }
        std::uint64_t middle_index() const noexcept { return middle_; }
        std::uint64_t back_index() const noexcept { return back_; }
        double time() const noexcept { return time_; }

    private:
        std::uint64_t front_;
        std::uint64_t middle_;
        std::uint64_t back_;
        double time_;
    };

    class NonMonotoneFireTime : public std::invalid_argument
    {
    public:
        using std::invalid_argument::invalid_argument;
    };

    /// Complete outcome of one finite truncation.
    ///
    /// Per-prefix arrays (sn_sizes, ps_flags, insertion_partner) are indexed
    /// by position in `bullets`; every stored bullet identity is a
    /// Bullet::index.
    struct Resolution
    {
        std::vector<Bullet> bullets;
        std::vector<Collision> collisions; // sorted by back_index
        std::vector<std::uint64_t> survivors;
        std::vector<std::size_t> sn_sizes;
        std::vector<bool> ps_flags;
        std::vector<std::optional<std::uint64_t>> insertion_partner;
    };

    struct InsertionOutcome
    {
        std::size_t survivor_count = 0;
        bool potential_survivor = false;
        /// The bullet the new one annihilates in its own truncation.
        std::optional<std::uint64_t> insertion_partner;
        /// Exactly one of these is set.
        std::optional<std::uint64_t> removed_survivor;
        std::optional<std::uint64_t> added_survivor;
        /// Scheduled pairs broken by the cascade.
        std::size_t pairs_broken = 0;
    };

    struct EngineOptions
    {
        TieTolerance tolerance{};
        /// Receives every collision once it is final (confirmed or drained).
        std::function<void(const Collision&)> sink;
        /// Keep evicted collisions in memory for confirmed_collisions().
        bool keep_confirmed = true;
        bool record_ps_flags = true;
        std::size_t compaction_floor = 1024;
    };

    enum class BulletStatus
    {
        survivor,
        doomed,
        dead, // death already confirmed and evicted
    };

    struct BulletState
    {
        BulletStatus status = BulletStatus::dead;
        std::optional<std::uint64_t> partner;
        double death_time = 0.0;
    };

    class Engine
    {
    public:
        explicit Engine(EngineOptions options = {});

        /// Fires `bullet` behind everything ingested so far. Throws
        /// NonMonotoneFireTime or TripleCollision; after a TripleCollision the
        /// engine refuses further input.
        InsertionOutcome ingest(const Bullet& bullet);

        /// S_n in increasing index order.
        std::vector<std::uint64_t> survivors() const;
        std::vector<Bullet> survivor_bullets() const;
        std::size_t survivor_count() const noexcept { return survivors_; }

        /// Scheduled collisions at or before the latest fire time. These belong
        /// to the untruncated process and never change. Requires keep_confirmed
        /// for the evicted part.
        std::vector<Collision> confirmed_collisions() const;

        /// Whether the k-th ingested bullet survived its own truncation.
        bool is_potential_survivor(std::size_t k) const;

        /// Status of an ingested bullet in the current truncation.
        BulletState state_of(std::uint64_t index) const;

        /// Emits and returns every collision of B_n not yet emitted. The engine
        /// accepts no input afterwards.
        std::vector<Collision> finish();

        std::uint64_t ingested() const noexcept { return ingested_; }
        std::uint64_t collisions_emitted() const noexcept { return emitted_; }
        std::size_t live_slots() const noexcept { return slots_.size(); }
        std::size_t peak_live_slots() const noexcept { return peak_slots_; }
        std::size_t resident_bytes() const noexcept;
        double last_fire_time() const noexcept { return last_fire_; }

    private:
        struct Slot
        {
            std::uint64_t index;
            double velocity;
            double fire_time;
            double death_time;
            std::int64_t partner; // slot position, -1 when unpaired
        };

        static Trajectory path(const Slot& s) noexcept { return {s.velocity, s.fire_time}; }

        void pair_up(std::size_t front, std::size_t back, double time);
        Collision collision_of(std::size_t back) const;
        void emit(const Collision& c);
        void compact();
        std::size_t find_slot(std::uint64_t index) const; // slots_.size() if absent

        EngineOptions options_;
        std::vector<Slot> slots_;
        std::vector<std::int64_t> remap_;
        std::vector<bool> ps_flags_;
        std::vector<Collision> confirmed_log_;
        std::size_t survivors_ = 0;
        std::size_t compact_at_;
        std::size_t peak_slots_ = 0;
        std::uint64_t ingested_ = 0;
        std::uint64_t emitted_ = 0;
        double last_fire_ = 0.0;
        std::uint64_t last_index_ = 0;
        bool poisoned_ = false;
        bool finished_ = false;
    };

    /// Resolves B_I for the given bullets from scratch.
    Resolution resolve_truncation(const std::vector<Bullet>& bullets, TieTolerance tolerance = {});

    /// Survivors of the current truncation (same as engine.survivors()).
    inline std::vector<std::uint64_t> survivors_snapshot(const Engine& engine) { return engine.survivors(); }

} // namespace ricochet
