#include "ricochet/estimators.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>

using namespace ricochet;

namespace
{
    Experiment experiment(const char* mu, const char* nu, std::uint64_t seed = 7, unsigned workers = 1)
    {
        Experiment e{DistributionSpec::parse(mu), DistributionSpec::parse(nu)};
        e.seed = seed;
        e.workers = workers;
        return e;
    }
}

TEST_CASE("wilson interval")
{
    const auto none = wilson_interval(0, 0);
    CHECK(none.lo == 0.0);
    CHECK(none.hi == 1.0);

    const auto zero = wilson_interval(0, 10);
    CHECK(zero.lo == 0.0);
    CHECK(zero.hi == doctest::Approx(0.2775).epsilon(1e-3));

    const auto all = wilson_interval(10, 10);
    CHECK(all.hi == 1.0);
    CHECK(all.lo == doctest::Approx(0.7225).epsilon(1e-3));

    const auto half = wilson_interval(50, 100);
    CHECK(half.lo + half.hi == doctest::Approx(1.0));
}

TEST_CASE("theta: trivial cases")
{
    const auto e = experiment("uniform:0,1", "point:1");
    CHECK(theta_hat(e, 0.3, 0, 20).point == 1.0);

    const auto top = theta_hat(e, 1.0, 500, 30);
    CHECK(top.successes == 30);
    CHECK(top.point == 1.0);
    CHECK(top.ci_hi == 1.0);
    CHECK(top.aborted.empty());
}

TEST_CASE("theta: estimates do not depend on the worker count")
{
    const auto grid = make_grid(0.0, 1.0, 0.1);
    const auto one = theta_curve(experiment("uniform:0,1", "point:1", 3, 1), grid, 400, 40);
    const auto four = theta_curve(experiment("uniform:0,1", "point:1", 3, 4), grid, 400, 40);
    REQUIRE(one.size() == four.size());
    for (std::size_t i = 0; i < one.size(); ++i)
    {
        CHECK(one[i].successes == four[i].successes);
    }
}

TEST_CASE("theta: bisection agrees with the exhaustive scan")
{
    const auto e = experiment("uniform:0,1", "point:1", 11);
    const auto grid = make_grid(0.0, 1.0, 0.05);
    const auto fast = theta_curve(e, grid, 300, 60, CurveMethod::bisection);
    const auto full = theta_curve(e, grid, 300, 60, CurveMethod::exhaustive);
    for (std::size_t i = 0; i < grid.size(); ++i)
    {
        CAPTURE(grid[i]);
        CHECK(fast[i].successes == full[i].successes);
        if (i > 0)
        {
            CHECK(full[i].successes >= full[i - 1].successes);
        }
    }
    CHECK(full.back().point == 1.0);
}

TEST_CASE("theta: curve rows agree with single-speed estimates")
{
    const auto e = experiment("uniform:0,1", "exp:1", 5);
    const auto curve = theta_curve(e, {0.6, 0.8}, 200, 50);
    CHECK(curve[0].successes == theta_hat(e, 0.6, 200, 50).successes);
    CHECK(curve[1].successes == theta_hat(e, 0.8, 200, 50).successes);
}

TEST_CASE("critical velocity")
{
    CHECK(vc_hat(experiment("point:0.5", "exp:1"), {0.5}, 100, 10) == 0.5);
    const auto e = experiment("uniform:0,1", "point:1");
    CHECK(vc_hat(e, make_grid(0.0, 1.0, 0.1), 200, 20) <= 1.0);
    CHECK(std::isinf(vc_from_curve({})));
}

TEST_CASE("grids")
{
    const auto g = make_grid(0.0, 1.0, 0.05);
    REQUIRE(g.size() == 21);
    CHECK(g[3] == 0.15);
    CHECK(g.back() == 1.0);
    CHECK(make_grid(0.0, 1.0, 0.01).size() == 101);
    CHECK_THROWS_AS(make_grid(1.0, 0.0, 0.1), ConfigError);
}

TEST_CASE("vhat: a point mass makes every bullet a potential survivor")
{
    const auto est = vhat_hat(experiment("point:0.5", "exp:1"), 100, 0.001);
    CHECK(est.max_ps_velocity == 0.5);
    CHECK(est.window_potential_survivors == 50);
    REQUIRE(est.histogram.size() == 1);
    CHECK(est.histogram[0].count == 50);
    CHECK(est.histogram[0].height == doctest::Approx(1000.0));
}

TEST_CASE("vhat: histogram bookkeeping")
{
    const auto est = vhat_hat(experiment("uniform:0,1", "point:1"), 20000, 0.01);
    std::uint64_t total = 0;
    for (const auto& b : est.histogram)
    {
        total += b.count;
        CHECK(b.height >= 0.0);
        CHECK(b.hi == doctest::Approx(b.lo + 0.01));
    }
    CHECK(total == est.window_potential_survivors);
    CHECK(est.histogram.back().lo <= est.max_ps_velocity);
    CHECK(est.max_ps_velocity < est.histogram.back().hi);
    CHECK_THROWS_AS(vhat_hat(experiment("uniform:0,1", "point:1"), 7), ConfigError);
}

TEST_CASE("census")
{
    const auto single = census(experiment("finite:0.4", "exp:1"), 30);
    REQUIRE(single.rows.size() == 1);
    CHECK(single.rows[0].survivors == 31);
    CHECK(single.total_survivors == 31);

    const auto c = census(experiment("finite:0.25,0.5,0.75,1;0.0002", "point:1"), 5000);
    std::uint64_t s = 0;
    std::uint64_t ps = 0;
    for (const auto& r : c.rows)
    {
        s += r.survivors;
        ps += r.potential_survivors;
    }
    CHECK(s == c.total_survivors);
    CHECK(ps == c.total_potential_survivors);
    CHECK(c.total_survivors % 2 == 5001 % 2);
    CHECK_THROWS_AS(census(experiment("uniform:0,1", "point:1"), 10), ConfigError);
}

TEST_CASE("nearest support value, ties to the slower one")
{
    const std::vector<double> v{0.25, 0.5, 1.0};
    CHECK(nearest_support(v, 0.0) == 0);
    CHECK(nearest_support(v, 0.75) == 1);
    CHECK(nearest_support(v, 0.76) == 2);
    CHECK(nearest_support(v, 3.0) == 2);
}

TEST_CASE("survivor-count trajectories")
{
    const auto cascade = make_bullets({0.6, 0.2, 1.0, 10.0}, {0.0, 1.0, 2.0, 2.1});
    CHECK(sn_trajectory(cascade) == std::vector<std::size_t>{1, 2, 1, 2});

    const auto flat = sn_trajectory(experiment("point:2", "exp:1"), 9);
    std::vector<std::size_t> expected(10);
    std::iota(expected.begin(), expected.end(), 1);
    CHECK(flat == expected);

    const auto walk = sn_trajectory(experiment("uniform:0,1", "point:1"), 5000);
    for (std::size_t k = 1; k < walk.size(); ++k)
    {
        REQUIRE((walk[k] == walk[k - 1] + 1 || walk[k] + 1 == walk[k - 1]));
    }
}

TEST_CASE("parallel_for runs every index once and surfaces errors")
{
    std::vector<int> hits(100, 0);
    parallel_for(100, 4, [&](std::uint64_t i) { hits[i]++; });
    CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
    CHECK_THROWS_AS(parallel_for(10, 3,
                                 [](std::uint64_t i) {
                                     if (i == 5)
                                     {
                                         throw std::runtime_error("boom");
                                     }
                                 }),
                    std::runtime_error);
}
