#pragma once

#include <lfs/search.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>

namespace lfs::experiment {

/// 17 significant digits; "null" for NaN and infinities. Negative zero prints as 0.
std::string format_number(double value);
std::string format_digest(std::uint64_t digest);

/// Builds one flat JSON object, keys in insertion order.
class JsonLine {
public:
    JsonLine& add(std::string_view key, double value);
    JsonLine& add(std::string_view key, std::optional<double> value);
    JsonLine& add(std::string_view key, std::size_t value);
    JsonLine& add(std::string_view key, std::string_view value);
    JsonLine& add(std::string_view key, const char* value) { return add(key, std::string_view(value)); }
    JsonLine& add_null(std::string_view key);
    /// `json` must already be valid JSON.
    JsonLine& add_raw(std::string_view key, std::string_view json);

    std::string str() const { return body_ + "}"; }

private:
    void key(std::string_view key);
    std::string body_ = "{";
};

std::string quote(std::string_view text);

/// Every metric line carries the same keys; fields that do not apply to a mode are null.
std::string metric_line(std::string_view run_id, std::string_view mode, const EpochRecord& record);
std::string metric_line(std::string_view run_id, std::string_view mode, const SearchEpochRecord& record);

/// Appends one line at a time and flushes, so a crashed run leaves a parseable prefix.
class LineWriter {
public:
    explicit LineWriter(const std::filesystem::path& path);
    void write(std::string_view line);

private:
    std::filesystem::path path_;
    std::ofstream out_;
};

} // namespace lfs::experiment
