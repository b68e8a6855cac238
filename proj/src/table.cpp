#include "ricochet/table.hpp"
#include "ricochet/core.hpp"

#include <stdexcept>

namespace ricochet
{
    CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
        : path_(path), out_(path, std::ios::binary | std::ios::trunc), columns_(header.size())
    {
        if (!out_)
        {
            throw std::runtime_error("cannot write " + path.string());
        }
        for (const auto& h : header)
        {
            cell(std::string_view(h));
        }
        end_row();
        rows_ = 0;
    }

    void CsvWriter::separator()
    {
        if (cells_++ > 0)
        {
            out_.put(',');
        }
    }

    CsvWriter& CsvWriter::cell(double x)
    {
        separator();
        out_ << format_real(x);
        return *this;
    }

    CsvWriter& CsvWriter::cell(std::uint64_t x)
    {
        separator();
        out_ << x;
        return *this;
    }

    CsvWriter& CsvWriter::cell(std::int64_t x)
    {
        separator();
        out_ << x;
        return *this;
    }

    CsvWriter& CsvWriter::cell(std::string_view text)
    {
        separator();
        if (text.find_first_of(",\"\n") == std::string_view::npos)
        {
            out_ << text;
            return *this;
        }
        out_.put('"');
        for (char ch : text)
        {
            if (ch == '"')
            {
                out_.put('"');
            }
            out_.put(ch);
        }
        out_.put('"');
        return *this;
    }

    void CsvWriter::end_row()
    {
        if (cells_ != columns_)
        {
            throw std::logic_error(path_.string() + ": row has " + std::to_string(cells_) + " cells, expected " +
                                   std::to_string(columns_));
        }
        out_.put('\n');
        cells_ = 0;
        ++rows_;
    }

    void CsvWriter::close()
    {
        out_.close();
        if (!out_)
        {
            throw std::runtime_error("failed writing " + path_.string());
        }
    }

} // namespace ricochet
