#include "lfs/experiment/metrics.hpp"

#include <lfs/error.hpp>

#include <fmt/format.h>

#include <cmath>

namespace lfs::experiment {

std::string format_number(double value)
{
    if (!std::isfinite(value)) {
        return "null";
    }
    return fmt::format("{:.17g}", value + 0.0);
}

std::string format_digest(std::uint64_t digest) { return fmt::format("{:016x}", digest); }

std::string quote(std::string_view text)
{
    std::string out = "\"";
    for (char c : text) {
        switch (c) {
        case '"': out += "\\\""; break;
        case '\\': out += "\\\\"; break;
        case '\n': out += "\\n"; break;
        case '\t': out += "\\t"; break;
        case '\r': out += "\\r"; break;
        default:
            if (static_cast<unsigned char>(c) < 0x20) {
                out += fmt::format("\\u{:04x}", static_cast<unsigned>(c));
            } else {
                out += c;
            }
        }
    }
    return out + "\"";
}

void JsonLine::key(std::string_view key)
{
    if (body_.size() > 1) {
        body_ += ',';
    }
    body_ += quote(key);
    body_ += ':';
}

JsonLine& JsonLine::add(std::string_view k, double value)
{
    key(k);
    body_ += format_number(value);
    return *this;
}

JsonLine& JsonLine::add(std::string_view k, std::optional<double> value)
{
    return value ? add(k, *value) : add_null(k);
}

JsonLine& JsonLine::add(std::string_view k, std::size_t value)
{
    key(k);
    body_ += std::to_string(value);
    return *this;
}

JsonLine& JsonLine::add(std::string_view k, std::string_view value)
{
    key(k);
    body_ += quote(value);
    return *this;
}

JsonLine& JsonLine::add_null(std::string_view k)
{
    key(k);
    body_ += "null";
    return *this;
}

JsonLine& JsonLine::add_raw(std::string_view k, std::string_view json)
{
    key(k);
    body_ += json;
    return *this;
}

std::string metric_line(std::string_view run_id, std::string_view mode, const EpochRecord& r)
{
    return JsonLine()
        .add("run_id", run_id)
        .add("mode", mode)
        .add("epoch", r.epoch)
        .add("lr", r.lr)
        .add("a", r.factor)
        .add_null("mu_before")
        .add_null("mu_after")
        .add("mean_loss", r.mean_loss)
        .add("reward", r.reward)
        .add_null("winner")
        .add_raw("candidates", "[]")
        .add_null("start_digest")
        .add("digest", format_digest(r.digest))
        .str();
}

std::string metric_line(std::string_view run_id, std::string_view mode, const SearchEpochRecord& r)
{
    std::string candidates = "[";
    for (const auto& c : r.candidates) {
        if (candidates.size() > 1) {
            candidates += ',';
        }
        candidates += JsonLine()
                          .add("index", c.index)
                          .add("draw", c.draw)
                          .add("a", c.factor)
                          .add("mean_loss", c.mean_loss)
                          .add("raw_reward", c.raw_reward)
                          .add("normalized_reward", c.normalized_reward)
                          .add("digest", format_digest(c.digest))
                          .str();
    }
    candidates += ']';

    const auto& w = r.candidates.at(r.winner);
    return JsonLine()
        .add("run_id", run_id)
        .add("mode", mode)
        .add("epoch", r.epoch)
        .add("lr", r.lr)
        .add("a", w.factor)
        .add("mu_before", r.mu_before)
        .add("mu_after", r.mu_after)
        .add("mean_loss", w.mean_loss)
        .add("reward", w.raw_reward)
        .add("winner", r.winner)
        .add_raw("candidates", candidates)
        .add("start_digest", format_digest(r.start_digest))
        .add("digest", format_digest(w.digest))
        .str();
}

LineWriter::LineWriter(const std::filesystem::path& path) : path_(path), out_(path, std::ios::binary | std::ios::trunc)
{
    if (!out_) {
        throw DataError("cannot open " + path.string() + " for writing");
    }
}

void LineWriter::write(std::string_view line)
{
    out_ << line << '\n';
    out_.flush();
    if (!out_) {
        throw DataError("write failed: " + path_.string());
    }
}

} // namespace lfs::experiment
