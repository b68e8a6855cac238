#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ricochet::cli
{
    enum ExitCode : int
    {
        exit_ok = 0,
        exit_config = 2,
        exit_triple_collision = 3,
        exit_check_failed = 4,
    };

    /// Parses argv, runs one subcommand and returns the process exit status.
    int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
    int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

    const char* version() noexcept;

} // namespace ricochet::cli
