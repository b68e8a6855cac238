#include "ricochet/cli.hpp"

#include "ricochet/analysis.hpp"
#include "ricochet/core.hpp"
#include "ricochet/diagram.hpp"
#include "ricochet/engine.hpp"
#include "ricochet/estimators.hpp"
#include "ricochet/sweep.hpp"
#include "ricochet/table.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <ostream>

#ifndef RICOCHET_VERSION
#define RICOCHET_VERSION "0.0.0"
#endif

namespace ricochet::cli
{
    namespace fs = std::filesystem;
    using json = nlohmann::ordered_json;

    const char* version() noexcept { return RICOCHET_VERSION; }

    namespace
    {
        struct Common
        {
            std::string mu = "uniform:0,1";
            std::string nu = "point:1";
            std::uint64_t n = 1000;
            std::uint64_t seed = 0;
            std::string out = ".";
            unsigned workers = 1;
            bool force = false;
        };

        struct Options
        {
            Common common;
            // theta
            std::vector<double> v;
            std::string grid;
            std::uint64_t replicas = 100;
            bool exhaustive = false;
            // vhat
            double bucket = 0.001;
            // threats
            std::uint64_t target = 0;
            // diagram
            double tmax = 20.0;
            // simulate
            bool no_collisions = false;
            bool settling = false;
            // check
            std::string suite = "oracle";
            std::uint64_t cases = 10000;
            // replay
            std::string manifest;
        };

        /// Shared state of one invocation: timing, outputs, manifest contents.
        struct Run
        {
            std::string subcommand;
            std::vector<std::string> args;
            json config = json::object();
            std::vector<std::string> outputs;
            RunCounters counters;
            std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
        };

        Experiment make_experiment(const Common& c)
        {
            Experiment e{DistributionSpec::parse(c.mu), DistributionSpec::parse(c.nu)};
            e.seed = c.seed;
            e.force = c.force;
            e.workers = std::max(1u, c.workers);
            e.config(0).validate();
            return e;
        }

        void describe(Run& run, const Experiment& e, const Common& c)
        {
            run.config["mu"] = e.mu.to_string();
            run.config["nu"] = e.nu.to_string();
            run.config["n"] = c.n;
            run.config["seed"] = c.seed;
            run.config["force"] = c.force;
        }

        fs::path ensure_dir(const std::string& dir)
        {
            fs::path p(dir.empty() ? "." : dir);
            fs::create_directories(p);
            return p;
        }

        void write_manifest(const fs::path& dir, const Run& run)
        {
            const auto seconds =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - run.start).count();
            json m;
            m["subcommand"] = run.subcommand;
            m["argv"] = run.args;
            m["config"] = run.config;
            m["seed"] = run.config.value("seed", std::uint64_t{0});
            m["version"] = version();
            m["outputs"] = run.outputs;
            m["duration_seconds"] = seconds;
            m["counters"] = {{"bullets", run.counters.bullets},
                             {"collisions", run.counters.collisions},
                             {"triple_collision_aborts", run.counters.triple_aborts}};
            std::ofstream f(dir / "manifest.json", std::ios::binary | std::ios::trunc);
            f << m.dump(2) << '\n';
            if (!f)
            {
                throw std::runtime_error("cannot write " + (dir / "manifest.json").string());
            }
        }

        std::vector<double> parse_grid(const std::string& text)
        {
            const auto a = text.find(':');
            const auto b = a == std::string::npos ? a : text.find(':', a + 1);
            if (b == std::string::npos)
            {
                throw ConfigError("grid must be LO:HI:STEP, got '" + text + "'");
            }
            const auto number = [&](const std::string& s) {
                char* end = nullptr;
                const double x = std::strtod(s.c_str(), &end);
                if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(x))
                {
                    throw ConfigError("grid must be LO:HI:STEP, got '" + text + "'");
                }
                return x;
            };
            return make_grid(number(text.substr(0, a)), number(text.substr(a + 1, b - a - 1)),
                             number(text.substr(b + 1)));
        }

        int cmd_simulate(const Options& o, Run& run, std::ostream& out)
        {
            const Common& c = o.common;
            const Experiment e = make_experiment(c);
            describe(run, e, c);
            run.config["collisions"] = !o.no_collisions;
            run.config["settling"] = o.settling;
            const fs::path dir = ensure_dir(c.out);

            std::vector<Collision> collisions;
            EngineOptions eo;
            eo.tolerance = e.tolerance;
            eo.keep_confirmed = false;
            eo.record_ps_flags = false;
            if (!o.no_collisions)
            {
                eo.sink = [&](const Collision& col) { collisions.push_back(col); };
            }
            Engine engine(std::move(eo));
            BulletSource source(e.config(0));

            CsvWriter sn(dir / "sn.csv", {"k", "s_k", "is_ps"});
            run.outputs.push_back("sn.csv");
            std::vector<std::uint64_t> last_flip;
            for (std::uint64_t k = 0; k <= c.n; ++k)
            {
                const Bullet b = source.next();
                const auto r = engine.ingest(b);
                sn.cell(k).cell(static_cast<std::uint64_t>(r.survivor_count)).cell(r.potential_survivor);
                sn.end_row();
                if (o.settling)
                {
                    last_flip.push_back(k);
                    last_flip[r.added_survivor ? *r.added_survivor : *r.removed_survivor] = k;
                }
            }
            sn.close();

            const auto survivors = engine.survivor_bullets();
            engine.finish();
            CsvWriter sv(dir / "survivors.csv", {"index", "velocity", "fire_time"});
            run.outputs.push_back("survivors.csv");
            for (const auto& b : survivors)
            {
                sv.cell(b.index).cell(b.velocity).cell(b.fire_time);
                sv.end_row();
            }
            sv.close();

            if (!o.no_collisions)
            {
                std::sort(collisions.begin(), collisions.end(),
                          [](const Collision& a, const Collision& b) { return a.back_index < b.back_index; });
                CsvWriter cw(dir / "collisions.csv", {"back", "front", "time", "position"});
                run.outputs.push_back("collisions.csv");
                for (const auto& col : collisions)
                {
                    cw.cell(col.back_index).cell(col.front_index).cell(col.time).cell(col.position);
                    cw.end_row();
                }
                cw.close();
            }
            if (o.settling)
            {
                CsvWriter st(dir / "settling.csv", {"index", "last_flip"});
                run.outputs.push_back("settling.csv");
                for (std::uint64_t i = 0; i < last_flip.size(); ++i)
                {
                    st.cell(i).cell(last_flip[i]);
                    st.end_row();
                }
                st.close();
            }

            run.counters.bullets = engine.ingested();
            run.counters.collisions = engine.collisions_emitted();
            out << "survivors=" << survivors.size() << " collisions=" << engine.collisions_emitted() << '\n';
            write_manifest(dir, run);
            return exit_ok;
        }

        int cmd_theta(const Options& o, Run& run, std::ostream& out, std::ostream& err)
        {
            const Common& c = o.common;
            const Experiment e = make_experiment(c);
            describe(run, e, c);
            if (!o.v.empty() && !o.grid.empty())
            {
                throw ConfigError("theta takes --v or --grid, not both");
            }
            const bool curve = o.v.empty();
            std::vector<double> grid = curve ? parse_grid(o.grid.empty() ? "0:1:0.01" : o.grid) : o.v;
            run.config["N"] = o.replicas;
            run.config["grid"] = grid;
            run.config["method"] = o.exhaustive ? "exhaustive" : "bisection";
            const fs::path dir = ensure_dir(c.out);

            std::vector<ThetaEstimate> rows;
            if (curve)
            {
                rows = theta_curve(e, grid, c.n, o.replicas,
                                   o.exhaustive ? CurveMethod::exhaustive : CurveMethod::bisection, &run.counters);
            }
            else
            {
                for (double v : grid)
                {
                    rows.push_back(theta_hat(e, v, c.n, o.replicas, &run.counters));
                }
            }

            CsvWriter w(dir / "theta.csv", {"v", "n", "N", "successes", "theta_hat", "ci_lo", "ci_hi"});
            run.outputs.push_back("theta.csv");
            std::size_t aborted = 0;
            for (const auto& r : rows)
            {
                w.cell(r.v).cell(r.n).cell(r.completed()).cell(r.successes).cell(r.point).cell(r.ci_lo).cell(r.ci_hi);
                w.end_row();
                aborted = std::max(aborted, r.aborted.size());
            }
            w.close();
            if (curve)
            {
                out << "vc_hat=" << format_real(vc_from_curve(rows)) << '\n';
            }
            if (aborted > 0)
            {
                for (const auto& a : rows.front().aborted)
                {
                    err << "replica aborted (seed " << c.seed << ", stream " << a.stream_id << "): " << a.reason << '\n';
                }
            }
            write_manifest(dir, run);
            return aborted > 0 ? exit_triple_collision : exit_ok;
        }

        int cmd_vhat(const Options& o, Run& run, std::ostream& out)
        {
            const Common& c = o.common;
            const Experiment e = make_experiment(c);
            describe(run, e, c);
            run.config["bucket"] = o.bucket;
            const fs::path dir = ensure_dir(c.out);

            const VhatEstimate est = vhat_hat(e, c.n, o.bucket);
            run.counters = est.counters;
            CsvWriter w(dir / "vhat_hist.csv", {"bucket_lo", "bucket_hi", "count", "height"});
            run.outputs.push_back("vhat_hist.csv");
            for (const auto& b : est.histogram)
            {
                w.cell(b.lo).cell(b.hi).cell(b.count).cell(b.height);
                w.end_row();
            }
            w.close();
            out << "max_ps_velocity=" << format_real(est.max_ps_velocity)
                << " window_potential_survivors=" << est.window_potential_survivors << '\n';
            write_manifest(dir, run);
            return exit_ok;
        }

        int cmd_census(const Options& o, Run& run, std::ostream& out)
        {
            const Common& c = o.common;
            const Experiment e = make_experiment(c);
            describe(run, e, c);
            const fs::path dir = ensure_dir(c.out);

            const CensusResult res = census(e, c.n);
            run.counters = res.counters;
            CsvWriter w(dir / "census.csv", {"velocity", "survivors", "potential_survivors"});
            run.outputs.push_back("census.csv");
            for (const auto& r : res.rows)
            {
                w.cell(r.velocity).cell(r.survivors).cell(r.potential_survivors);
                w.end_row();
            }
            w.close();
            out << "survivors=" << res.total_survivors << " potential_survivors=" << res.total_potential_survivors
                << " modal_velocity=" << format_real(res.modal_velocity())
                << " modal_survivors=" << res.modal_survivors() << '\n';
            write_manifest(dir, run);
            return exit_ok;
        }

        int cmd_threats(const Options& o, Run& run, std::ostream& out)
        {
            const Common& c = o.common;
            const Experiment e = make_experiment(c);
            describe(run, e, c);
            run.config["i"] = o.target;
            if (o.target > c.n)
            {
                throw ConfigError("--i must be within 0..n");
            }
            const fs::path dir = ensure_dir(c.out);

            const auto bullets = generate_sequence(e.config(0), c.n + 1);
            const Resolution r = resolve_truncation(bullets, e.tolerance);
            const ThreatRecord rec = threats_of(r, o.target);
            run.counters.bullets = bullets.size();
            run.counters.collisions = r.collisions.size();

            CsvWriter w(dir / "threats.csv", {"target", "threat"});
            run.outputs.push_back("threats.csv");
            for (auto j : rec.threat_indices)
            {
                w.cell(rec.target_index).cell(j);
                w.end_row();
            }
            w.close();
            out << "threats=" << rec.threat_indices.size() << '\n';
            write_manifest(dir, run);
            return exit_ok;
        }

        int cmd_diagram(const Options& o, Run& run, std::ostream& out)
        {
            const Common& c = o.common;
            const Experiment e = make_experiment(c);
            describe(run, e, c);
            run.config["tmax"] = o.tmax;

            fs::path file(c.out == "." ? "diagram.svg" : c.out);
            const fs::path dir = ensure_dir(file.has_parent_path() ? file.parent_path().string() : ".");

            DiagramOptions opt;
            opt.tmax = o.tmax;
            BulletSource source(e.config(0));
            std::vector<Bullet> bullets;
            for (std::uint64_t k = 0; k <= c.n; ++k)
            {
                const Bullet b = source.next();
                if (b.fire_time > o.tmax)
                {
                    break;
                }
                bullets.push_back(b);
            }
            DiagramSummary summary;
            const std::string svg = render_diagram(bullets, opt, &summary);
            std::ofstream f(file, std::ios::binary | std::ios::trunc);
            f << svg;
            if (!f)
            {
                throw std::runtime_error("cannot write " + file.string());
            }
            run.outputs.push_back(file.filename().string());
            run.counters.bullets = summary.bullets;
            run.counters.collisions = summary.collisions;
            out << "bullets=" << summary.bullets << " drawn=" << summary.drawn
                << " collisions=" << summary.collisions << '\n';
            write_manifest(dir, run);
            return exit_ok;
        }

        int cmd_check(const Options& o, Run& run, std::ostream& out, bool out_given)
        {
            run.config["suite"] = o.suite;
            run.config["cases"] = o.cases;
            run.config["seed"] = o.common.seed;
            SweepReport report;
            if (o.suite == "oracle")
            {
                report = run_oracle_sweep(o.common.seed, o.cases);
            }
            else if (o.suite == "lemmas")
            {
                report = run_lemma_sweep(o.common.seed, o.cases);
            }
            else
            {
                throw ConfigError("unknown suite '" + o.suite + "' (oracle or lemmas)");
            }
            run.counters.triple_aborts = report.triple_collisions;
            for (const auto& m : report.messages)
            {
                out << "  " << m << '\n';
            }
            out << o.suite << ": " << report.cases << " cases, " << report.failures << " failures, "
                << report.triple_collisions << " triple collisions" << (report.passed() ? " -> PASS" : " -> FAIL")
                << '\n';
            if (out_given)
            {
                write_manifest(ensure_dir(o.common.out), run);
            }
            return report.passed() ? exit_ok : exit_check_failed;
        }

        /// Strips --out/--workers (with their values) so a replay can supply new ones.
        std::vector<std::string> strip_placement(const std::vector<std::string>& args)
        {
            std::vector<std::string> kept;
            for (std::size_t i = 0; i < args.size(); ++i)
            {
                const std::string& a = args[i];
                if (a == "--out" || a == "--workers")
                {
                    ++i;
                    continue;
                }
                if (a.rfind("--out=", 0) == 0 || a.rfind("--workers=", 0) == 0)
                {
                    continue;
                }
                kept.push_back(a);
            }
            return kept;
        }

        std::uint64_t default_seed()
        {
            const char* env = std::getenv("RICOCHET_SEED");
            if (!env || !*env)
            {
                return 0;
            }
            char* end = nullptr;
            const unsigned long long s = std::strtoull(env, &end, 10);
            if (*end != '\0')
            {
                throw ConfigError(std::string("RICOCHET_SEED is not an integer: '") + env + "'");
            }
            return s;
        }
    } // namespace

    int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
    {
        Options o;
        try
        {
            o.common.seed = default_seed();
        }
        catch (const ConfigError& e)
        {
            err << "error: " << e.what() << '\n';
            return exit_config;
        }

        CLI::App app{"Bullet-process simulator and experiment harness", "ricochet"};
        app.set_version_flag("--version", std::string(version()));
        app.require_subcommand(1);

        const auto add_common = [&](CLI::App* sub, bool with_n = true) {
            sub->add_option("--mu", o.common.mu, "velocity distribution")->capture_default_str();
            sub->add_option("--nu", o.common.nu, "delay distribution")->capture_default_str();
            if (with_n)
            {
                sub->add_option("--n", o.common.n, "bullets fired after b_0")->capture_default_str();
            }
            sub->add_option("--seed", o.common.seed, "master seed (default: $RICOCHET_SEED or 0)");
            sub->add_option("--out", o.common.out, "output directory")->capture_default_str();
            sub->add_option("--workers", o.common.workers, "worker threads")->check(CLI::PositiveNumber);
            sub->add_flag("--force", o.common.force, "accept a pair that is not provably valid");
        };

        auto* simulate = app.add_subcommand("simulate", "resolve one realization of b_0..b_n");
        add_common(simulate);
        simulate->add_flag("--no-collisions", o.no_collisions, "skip collisions.csv");
        simulate->add_flag("--settling", o.settling, "also write settling.csv");

        auto* theta = app.add_subcommand("theta", "survival probability of the first bullet");
        add_common(theta);
        theta->add_option("--v", o.v, "first-bullet speed(s)");
        theta->add_option("--grid", o.grid, "LO:HI:STEP speed grid (default 0:1:0.01)");
        theta->add_option("--N", o.replicas, "replicas")->capture_default_str();
        theta->add_flag("--exhaustive", o.exhaustive, "simulate every grid point instead of bisecting");

        auto* vhat = app.add_subcommand("vhat", "potential-survivor velocities in the second half");
        add_common(vhat);
        vhat->add_option("--bucket", o.bucket, "histogram bucket width")->capture_default_str();

        auto* cens = app.add_subcommand("census", "survivor tallies by support value");
        add_common(cens);

        auto* threats = app.add_subcommand("threats", "bullets that threaten b_i");
        add_common(threats);
        threats->add_option("--i", o.target, "target index")->required();

        auto* diagram = app.add_subcommand("diagram", "time-space diagram as SVG");
        add_common(diagram);
        diagram->add_option("--tmax", o.tmax, "time horizon")->capture_default_str();

        auto* check = app.add_subcommand("check", "randomized oracle or lemma sweeps");
        check->add_option("--suite", o.suite, "oracle or lemmas")->capture_default_str();
        check->add_option("--cases", o.cases, "instances")->capture_default_str();
        check->add_option("--seed", o.common.seed, "master seed");
        check->add_option("--out", o.common.out, "directory for manifest.json");

        auto* replay = app.add_subcommand("replay", "rerun the configuration stored in a manifest");
        replay->add_option("--manifest", o.manifest, "manifest.json")->required();
        replay->add_option("--out", o.common.out, "output directory")->required();
        replay->add_option("--workers", o.common.workers, "worker threads")->check(CLI::PositiveNumber);

        // The diagram writes a file rather than a directory; default n covers tmax.
        diagram->preparse_callback([&](std::size_t) { o.common.n = 1000000; });

        try
        {
            std::vector<std::string> reversed(args.rbegin(), args.rend());
            app.parse(reversed);
        }
        catch (const CLI::ParseError& e)
        {
            const int code = app.exit(e, out, err);
            return code == 0 ? exit_ok : exit_config;
        }

        Run run;
        run.args = args;
        try
        {
            if (replay->parsed())
            {
                std::ifstream f(o.manifest);
                if (!f)
                {
                    throw ConfigError("cannot read manifest " + o.manifest);
                }
                json m;
                try
                {
                    f >> m;
                }
                catch (const json::exception& e)
                {
                    throw ConfigError("malformed manifest: " + std::string(e.what()));
                }
                if (m.value("version", std::string()) != version())
                {
                    err << "warning: manifest from version " << m.value("version", std::string("?"))
                        << ", running " << version() << '\n';
                }
                auto again = strip_placement(m.at("argv").get<std::vector<std::string>>());
                again.push_back("--out");
                again.push_back(o.common.out);
                if (replay->count("--workers") > 0)
                {
                    again.push_back("--workers");
                    again.push_back(std::to_string(o.common.workers));
                }
                return cli::run(again, out, err);
            }

            if (simulate->parsed())
            {
                run.subcommand = "simulate";
                return cmd_simulate(o, run, out);
            }
            if (theta->parsed())
            {
                run.subcommand = "theta";
                return cmd_theta(o, run, out, err);
            }
            if (vhat->parsed())
            {
                run.subcommand = "vhat";
                return cmd_vhat(o, run, out);
            }
            if (cens->parsed())
            {
                run.subcommand = "census";
                return cmd_census(o, run, out);
            }
            if (threats->parsed())
            {
                run.subcommand = "threats";
                return cmd_threats(o, run, out);
            }
            if (diagram->parsed())
            {
                run.subcommand = "diagram";
                return cmd_diagram(o, run, out);
            }
            run.subcommand = "check";
            return cmd_check(o, run, out, check->count("--out") > 0);
        }
        catch (const ConfigError& e)
        {
            err << "configuration error: " << e.what() << '\n';
            return exit_config;
        }
        catch (const TripleCollision& e)
        {
            err << "triple collision (seed " << o.common.seed << "): " << e.what() << '\n';
            return exit_triple_collision;
        }
        catch (const ReplicaAborted& e)
        {
            err << e.what() << '\n';
            return exit_triple_collision;
        }
        catch (const std::invalid_argument& e)
        {
            err << "invalid input: " << e.what() << '\n';
            return exit_config;
        }
        catch (const std::exception& e)
        {
            err << "error: " << e.what() << '\n';
            return 1;
        }
    }

    int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
    {
        std::vector<std::string> args;
        for (int i = 1; i < argc; ++i)
        {
            args.emplace_back(argv[i]);
        }
        return run(args, out, err);
    }

} // namespace ricochet::cli
