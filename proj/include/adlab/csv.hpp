// csv.hpp - numeric text formatting shared by every exporter.
#pragma once

#include <initializer_list>
#include <string>
#include <string_view>
#include <vector>

namespace adlab {

// 17 significant digits, round-trips doubles. Non-finite values print as
// inf, -inf or nan.
std::string format_number(double v);

class CsvWriter {
public:
    explicit CsvWriter(const std::vector<std::string>& header);

    void row(const std::vector<double>& values);
    const std::string& str() const { return text_; }

private:
    std::size_t columns_;
    std::string text_;
};

}  // namespace adlab
