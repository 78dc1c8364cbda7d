#include "lfs/datasets.hpp"

#include "lfs/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

namespace lfs {

void validate(const LabeledDataset& data)
{
    require(data.features.rows() == data.labels.size(), "LabeledDataset: feature rows must equal label count");
    std::vector<bool> seen(data.identity_count, false);
    for (std::size_t label : data.labels) {
        require(label < data.identity_count, "LabeledDataset: label out of range");
        seen[label] = true;
    }
    require(std::all_of(seen.begin(), seen.end(), [](bool b) { return b; }),
            "LabeledDataset: every identity needs at least one sample");
}

LabeledDataset generate_synthetic(const SyntheticSpec& spec)
{
    require(spec.classes >= 2, "SyntheticSpec: classes must be >= 2");
    require(spec.dim >= 1, "SyntheticSpec: dim must be >= 1");
    require(spec.samples_per_class >= 1, "SyntheticSpec: samples_per_class must be >= 1");
    require(spec.noise_sigma > 0.0, "SyntheticSpec: noise_sigma must be > 0");

    const RngStream root(spec.seed, "synthetic");
    auto center_engine = root.derive("centers").engine();
    auto noise_engine = root.derive("noise").engine();

    LabeledDataset out;
    out.identity_count = spec.classes;
    out.features = DenseMatrix(spec.classes * spec.samples_per_class, spec.dim);
    out.labels.reserve(spec.classes * spec.samples_per_class);

    std::vector<double> center(spec.dim);
    std::vector<double> sample(spec.dim);
    std::size_t row = 0;
    for (std::size_t c = 0; c < spec.classes; ++c) {
        for (double& x : center) {
            x = center_engine.normal();
        }
        center = l2_normalize(center);
        for (std::size_t i = 0; i < spec.samples_per_class; ++i) {
            for (std::size_t j = 0; j < spec.dim; ++j) {
                sample[j] = center[j] + spec.noise_sigma * noise_engine.normal();
            }
            const auto unit = l2_normalize(sample);
            std::copy(unit.begin(), unit.end(), out.features.row(row).begin());
            out.labels.push_back(c);
            ++row;
        }
    }
    return out;
}

namespace {

std::string_view trim(std::string_view s)
{
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

[[noreturn]] void fail_line(const std::string& source, std::size_t line, const std::string& what)
{
    throw DataError(source + ":" + std::to_string(line) + ": " + what);
}

} // namespace

LabeledDataset parse_csv(std::istream& in, const std::string& source)
{
    std::vector<double> values;
    std::vector<long long> raw_labels;
    std::size_t columns = 0;
    std::string line;
    std::size_t line_no = 0;

    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        std::vector<std::string_view> fields;
        std::string_view rest(line);
        for (;;) {
            const auto comma = rest.find(',');
            fields.push_back(trim(rest.substr(0, comma)));
            if (comma == std::string_view::npos) {
                break;
            }
            rest.remove_prefix(comma + 1);
        }
        if (fields.size() < 2) {
            fail_line(source, line_no, "expected at least one feature column and a label");
        }
        if (columns == 0) {
            columns = fields.size();
        } else if (fields.size() != columns) {
            fail_line(source, line_no,
                      "inconsistent column count: expected " + std::to_string(columns) + ", got " +
                          std::to_string(fields.size()));
        }
        for (std::size_t j = 0; j + 1 < fields.size(); ++j) {
            double v = 0.0;
            const auto f = fields[j];
            const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
            if (ec != std::errc() || ptr != f.data() + f.size() || !std::isfinite(v)) {
                fail_line(source, line_no, "cannot parse feature '" + std::string(f) + "'");
            }
            values.push_back(v);
        }
        long long label = 0;
        const auto l = fields.back();
        const auto [ptr, ec] = std::from_chars(l.data(), l.data() + l.size(), label);
        if (ec != std::errc() || ptr != l.data() + l.size()) {
            fail_line(source, line_no, "cannot parse integer label '" + std::string(l) + "'");
        }
        raw_labels.push_back(label);
    }
    if (raw_labels.empty()) {
        throw DataError(source + ": no samples");
    }

    LabeledDataset out;
    out.features = DenseMatrix(raw_labels.size(), columns - 1, std::move(values));
    std::unordered_map<long long, std::size_t> dense;
    for (long long raw : raw_labels) {
        const auto [it, inserted] = dense.try_emplace(raw, dense.size());
        out.labels.push_back(it->second);
    }
    out.identity_count = dense.size();
    return out;
}

LabeledDataset load_flat_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open dataset: " + path.string());
    }
    return parse_csv(in, path.string());
}

void write_flat_file(const std::filesystem::path& path, const LabeledDataset& data)
{
    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw DataError("cannot open dataset for writing: " + path.string());
    }
    char buf[64];
    for (std::size_t i = 0; i < data.size(); ++i) {
        for (double v : data.features.row(i)) {
            const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
            out.write(buf, end - buf);
            out.put(',');
        }
        out << data.labels[i] << '\n';
    }
}

LabeledDataset subset(const LabeledDataset& data, std::span<const std::size_t> rows)
{
    LabeledDataset out;
    out.features = DenseMatrix(rows.size(), data.dim());
    std::map<std::size_t, std::size_t> dense;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        require(rows[i] < data.size(), "subset: row index out of range");
        const auto src = data.features.row(rows[i]);
        std::copy(src.begin(), src.end(), out.features.row(i).begin());
        const auto [it, inserted] = dense.try_emplace(data.labels[rows[i]], dense.size());
        out.labels.push_back(it->second);
    }
    out.identity_count = dense.size();
    return out;
}

OpenSetSplit split_open_set(const LabeledDataset& data, double train_frac, std::uint64_t seed)
{
    require(train_frac > 0.0 && train_frac < 1.0, "split_open_set: train_frac must lie in (0, 1)");
    validate(data);
    const std::size_t k = data.identity_count;
    const auto n_train = static_cast<std::size_t>(std::llround(train_frac * static_cast<double>(k)));
    require(n_train >= 2 && k - std::min(n_train, k) >= 2,
            "split_open_set: need at least two identities on each side (have " + std::to_string(k) + ")");

    auto engine = RngStream(seed, "split").engine();
    const auto order = random_permutation(k, engine);
    std::vector<bool> is_train(k, false);
    OpenSetSplit out;
    for (std::size_t i = 0; i < k; ++i) {
        if (i < n_train) {
            is_train[order[i]] = true;
            out.train_identities.push_back(order[i]);
        } else {
            out.eval_identities.push_back(order[i]);
        }
    }
    std::sort(out.train_identities.begin(), out.train_identities.end());
    std::sort(out.eval_identities.begin(), out.eval_identities.end());

    std::vector<std::size_t> train_rows;
    std::vector<std::size_t> eval_rows;
    for (std::size_t i = 0; i < data.size(); ++i) {
        (is_train[data.labels[i]] ? train_rows : eval_rows).push_back(i);
    }
    out.train = subset(data, train_rows);
    out.eval = subset(data, eval_rows);
    return out;
}

void validate(const PairSet& pairs, const LabeledDataset& data)
{
    bool any_same = false;
    bool any_diff = false;
    for (const auto& p : pairs.pairs) {
        require(p.first < data.size() && p.second < data.size(), "PairSet: index out of range");
        require(p.same == (data.labels[p.first] == data.labels[p.second]), "PairSet: flag disagrees with labels");
        any_same = any_same || p.same;
        any_diff = any_diff || !p.same;
    }
    require(any_same && any_diff, "PairSet: need at least one same and one different pair");
}

namespace {

constexpr std::size_t kEnumerationLimit = 1u << 21;

std::uint64_t choose2(std::uint64_t n)
{
    return n * (n - (n > 0 ? 1 : 0)) / 2;
}

std::vector<Pair> pick_without_replacement(std::vector<Pair> pool, std::size_t count, RandomEngine& engine)
{
    for (std::size_t i = 0; i < count; ++i) {
        const auto j = i + static_cast<std::size_t>(engine.below(pool.size() - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(count);
    return pool;
}

} // namespace

PairSet make_pairs(const LabeledDataset& data, std::size_t n_pairs, std::uint64_t seed)
{
    validate(data);
    require(n_pairs > 0 && n_pairs % 2 == 0, "make_pairs: n_pairs must be positive and even");
    require(data.identity_count >= 2, "make_pairs: need at least two identities");

    std::vector<std::vector<std::size_t>> members(data.identity_count);
    for (std::size_t i = 0; i < data.size(); ++i) {
        members[data.labels[i]].push_back(i);
    }
    std::uint64_t same_available = 0;
    for (const auto& m : members) {
        same_available += choose2(m.size());
    }
    const std::uint64_t diff_available = choose2(data.size()) - same_available;
    const std::size_t half = n_pairs / 2;
    require(same_available >= half, "make_pairs: only " + std::to_string(same_available) +
                                        " distinct same-identity pairs exist, " + std::to_string(half) + " requested");
    require(diff_available >= half, "make_pairs: only " + std::to_string(diff_available) +
                                        " distinct different-identity pairs exist, " + std::to_string(half) +
                                        " requested");

    auto engine = RngStream(seed, "pairs").engine();
    std::vector<Pair> out;
    out.reserve(n_pairs);

    if (same_available <= kEnumerationLimit) {
        std::vector<Pair> pool;
        for (const auto& m : members) {
            for (std::size_t a = 0; a < m.size(); ++a) {
                for (std::size_t b = a + 1; b < m.size(); ++b) {
                    pool.push_back({m[a], m[b], true});
                }
            }
        }
        auto picked = pick_without_replacement(std::move(pool), half, engine);
        out.insert(out.end(), picked.begin(), picked.end());
    } else {
        // Identity chosen proportionally to its pair count makes each same pair equally likely.
        std::vector<std::uint64_t> cumulative;
        std::uint64_t total = 0;
        for (const auto& m : members) {
            total += choose2(m.size());
            cumulative.push_back(total);
        }
        std::set<std::pair<std::size_t, std::size_t>> seen;
        while (out.size() < half) {
            const auto ticket = engine.below(total);
            const auto id = static_cast<std::size_t>(
                std::upper_bound(cumulative.begin(), cumulative.end(), ticket) - cumulative.begin());
            const auto& m = members[id];
            auto a = m[engine.below(m.size())];
            auto b = m[engine.below(m.size())];
            if (a == b) {
                continue;
            }
            if (a > b) {
                std::swap(a, b);
            }
            if (seen.emplace(a, b).second) {
                out.push_back({a, b, true});
            }
        }
    }

    if (diff_available <= kEnumerationLimit) {
        std::vector<Pair> pool;
        for (std::size_t a = 0; a < data.size(); ++a) {
            for (std::size_t b = a + 1; b < data.size(); ++b) {
                if (data.labels[a] != data.labels[b]) {
                    pool.push_back({a, b, false});
                }
            }
        }
        auto picked = pick_without_replacement(std::move(pool), half, engine);
        out.insert(out.end(), picked.begin(), picked.end());
    } else {
        std::set<std::pair<std::size_t, std::size_t>> seen;
        std::size_t found = 0;
        while (found < half) {
            auto a = static_cast<std::size_t>(engine.below(data.size()));
            auto b = static_cast<std::size_t>(engine.below(data.size()));
            if (data.labels[a] == data.labels[b]) {
                continue;
            }
            if (a > b) {
                std::swap(a, b);
            }
            if (seen.emplace(a, b).second) {
                out.push_back({a, b, false});
                ++found;
            }
        }
    }

    const auto order = random_permutation(out.size(), engine);
    PairSet result;
    result.pairs.reserve(out.size());
    for (std::size_t i : order) {
        result.pairs.push_back(out[i]);
    }
    return result;
}

} // namespace lfs
