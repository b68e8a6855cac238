#pragma once

// Canonical CSV output: one header row, LF line endings, reals in shortest
// round-trip form, so identical runs give identical bytes.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace ricochet
{
    class CsvWriter
    {
    public:
        CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);

        CsvWriter& cell(double x);
        CsvWriter& cell(std::uint64_t x);
        CsvWriter& cell(std::int64_t x);
        CsvWriter& cell(int x) { return cell(static_cast<std::int64_t>(x)); }
        CsvWriter& cell(bool x) { return cell(static_cast<std::uint64_t>(x ? 1 : 0)); }
        CsvWriter& cell(std::string_view text);

        /// Ends the row; throws if the cell count differs from the header.
        void end_row();
        void close();

        std::uint64_t rows() const noexcept { return rows_; }

    private:
        void separator();

        std::filesystem::path path_;
        std::ofstream out_;
        std::size_t columns_;
        std::size_t cells_ = 0;
        std::uint64_t rows_ = 0;
    };

} // namespace ricochet
