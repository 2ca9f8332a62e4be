#include "classy/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <queue>

#include <zlib.h>

#include "classy/error.hpp"

namespace classy {

namespace {

class LineReader {
public:
    explicit LineReader(const std::filesystem::path& path)
        : file_(gzopen(path.c_str(), "rb"))
    {
        if (file_ == nullptr)
            throw DataError(DataErrorKind::missing_file, "cannot open '" + path.string() + "'");
    }
    LineReader(const LineReader&) = delete;
    LineReader& operator=(const LineReader&) = delete;
    ~LineReader() { gzclose(file_); }

    bool next(std::string& line)
    {
        line.clear();
        char buf[8192];
        while (gzgets(file_, buf, sizeof buf) != nullptr) {
            line += buf;
            if (!line.empty() && line.back() == '\n')
                break;
        }
        if (line.empty())
            return false;
        while (!line.empty() && (line.back() == '\n' || line.back() == '\r'))
            line.pop_back();
        return true;
    }

private:
    gzFile file_;
};

std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '"'))
        s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_fields(std::string_view line, char delim)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        auto pos = line.find(delim, start);
        out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos)
            break;
        start = pos + 1;
    }
    return out;
}

std::optional<double> parse_number(std::string_view s)
{
    if (s.empty())
        return std::nullopt;
    if (s.front() == '+')
        s.remove_prefix(1);
    double v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v))
        return std::nullopt;
    return v;
}

char detect_delimiter(const std::filesystem::path& path)
{
    auto p = path;
    if (p.extension() == ".gz")
        p = p.stem();
    const auto ext = p.extension().string();
    return (ext == ".tsv" || ext == ".tab") ? '\t' : ',';
}

bool is_blank(std::string_view line)
{
    return std::all_of(line.begin(), line.end(), [](char c) { return c == ' ' || c == '\t'; });
}

} // namespace

Dataset Dataset::subset(const std::vector<Eigen::Index>& rows) const
{
    Dataset out;
    out.features = features(rows, Eigen::all);
    out.labels = labels(rows);
    out.n_classes = n_classes;
    out.feature_names = feature_names;
    out.source_name = source_name;
    return out;
}

void validate(const Dataset& d)
{
    if (d.labels.size() != d.features.rows())
        throw DataError(DataErrorKind::dimension_mismatch, "label count differs from feature row count");
    if (d.n_classes < 2)
        throw DataError(DataErrorKind::single_class, "single-class dataset");
    std::vector<char> seen(static_cast<std::size_t>(d.n_classes), 0);
    for (Eigen::Index i = 0; i < d.labels.size(); ++i) {
        const int y = d.labels[i];
        if (y < 0 || y >= d.n_classes)
            throw DataError(DataErrorKind::dimension_mismatch,
                            "label " + std::to_string(y) + " at row " + std::to_string(i) + " outside [0, n_classes)");
        seen[static_cast<std::size_t>(y)] = 1;
    }
    for (int c = 0; c < d.n_classes; ++c)
        if (!seen[static_cast<std::size_t>(c)])
            throw DataError(DataErrorKind::single_class, "class " + std::to_string(c) + " has no samples");
}

Dataset load_csv(const std::filesystem::path& path, const CsvOptions& options)
{
    if (!std::filesystem::exists(path))
        throw DataError(DataErrorKind::missing_file, "missing file '" + path.string() + "'");
    const char delim = options.delimiter.value_or(detect_delimiter(path));
    LineReader reader(path);

    std::string line;
    std::size_t line_no = 0;
    std::vector<std::string> names;
    std::size_t n_cols = 0;
    std::size_t target = 0;

    auto resolve_columns = [&](std::size_t width) {
        n_cols = width;
        if (options.has_header) {
            auto it = std::find(names.begin(), names.end(), options.target_column);
            if (it == names.end())
                throw DataError(DataErrorKind::missing_column,
                                "target column '" + options.target_column + "' not found in header");
            target = static_cast<std::size_t>(it - names.begin());
        } else {
            if (options.target_column == "target") {
                target = width - 1;
            } else {
                auto idx = parse_number(options.target_column);
                if (!idx || *idx < 0 || *idx >= static_cast<double>(width) || *idx != std::floor(*idx))
                    throw DataError(DataErrorKind::missing_column,
                                    "target column '" + options.target_column + "' is not a valid column index");
                target = static_cast<std::size_t>(*idx);
            }
            names.clear();
            for (std::size_t j = 0; j < width; ++j)
                names.push_back(j == target ? "target" : "x" + std::to_string(j));
        }
        if (n_cols < 2)
            throw DataError(DataErrorKind::missing_column, "need at least one feature column besides the target");
    };

    if (options.has_header) {
        while (reader.next(line)) {
            ++line_no;
            if (is_blank(line))
                continue;
            for (auto f : split_fields(line, delim))
                names.emplace_back(f);
            resolve_columns(names.size());
            break;
        }
        if (names.empty())
            throw DataError(DataErrorKind::empty, "'" + path.string() + "' is empty");
    }

    std::vector<double> values;
    std::vector<std::string> raw_targets;
    std::size_t n_rows = 0;
    while (reader.next(line)) {
        ++line_no;
        if (is_blank(line))
            continue;
        const auto fields = split_fields(line, delim);
        if (n_cols == 0)
            resolve_columns(fields.size());
        if (fields.size() != n_cols)
            throw DataError(DataErrorKind::ragged_row, "row " + std::to_string(line_no) + " has " +
                                                           std::to_string(fields.size()) + " fields, expected " +
                                                           std::to_string(n_cols));
        for (std::size_t j = 0; j < n_cols; ++j) {
            if (j == target) {
                if (fields[j].empty())
                    throw DataError(DataErrorKind::non_numeric, "empty target at row " + std::to_string(line_no));
                raw_targets.emplace_back(fields[j]);
                continue;
            }
            auto v = parse_number(fields[j]);
            if (!v)
                throw DataError(DataErrorKind::non_numeric, "non-numeric cell '" + std::string(fields[j]) +
                                                                "' at row " + std::to_string(line_no) +
                                                                ", column '" + names[j] + "'");
            values.push_back(*v);
        }
        ++n_rows;
    }
    if (n_rows == 0)
        throw DataError(DataErrorKind::empty, "'" + path.string() + "' has no data rows");

    // Dense label re-indexing over sorted distinct values (numeric order when all parse).
    const bool numeric = std::all_of(raw_targets.begin(), raw_targets.end(), [](const std::string& s) {
        return parse_number(s).has_value();
    });
    std::vector<int> dense(raw_targets.size());
    if (numeric) {
        std::map<double, int> index;
        for (const auto& s : raw_targets)
            index.emplace(*parse_number(s), 0);
        int next = 0;
        for (auto& [value, id] : index)
            id = next++;
        for (std::size_t i = 0; i < raw_targets.size(); ++i)
            dense[i] = index.at(*parse_number(raw_targets[i]));
    } else {
        std::map<std::string, int> index;
        for (const auto& s : raw_targets)
            index.emplace(s, 0);
        int next = 0;
        for (auto& [value, id] : index)
            id = next++;
        for (std::size_t i = 0; i < raw_targets.size(); ++i)
            dense[i] = index.at(raw_targets[i]);
    }

    Dataset d;
    const auto n_features = static_cast<Eigen::Index>(n_cols - 1);
    d.features = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        values.data(), static_cast<Eigen::Index>(n_rows), n_features);
    d.labels.resize(static_cast<Eigen::Index>(n_rows));
    for (std::size_t i = 0; i < n_rows; ++i)
        d.labels[static_cast<Eigen::Index>(i)] = dense[i];
    d.n_classes = d.labels.maxCoeff() + 1;
    for (std::size_t j = 0; j < n_cols; ++j)
        if (j != target)
            d.feature_names.push_back(names[j]);
    d.source_name = path.filename().string();
    if (d.n_classes < 2)
        throw DataError(DataErrorKind::single_class, "single-class dataset: target column '" + names[target] +
                                                         "' has one distinct value");
    return d;
}

void write_csv(const Dataset& d, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out)
        throw DataError(DataErrorKind::missing_file, "cannot write '" + path.string() + "'");
    write_csv(d, out);
}

void write_csv(const Dataset& d, std::ostream& out)
{
    for (Eigen::Index j = 0; j < d.n_features(); ++j) {
        const auto idx = static_cast<std::size_t>(j);
        out << (idx < d.feature_names.size() ? d.feature_names[idx] : "x" + std::to_string(j)) << ',';
    }
    out << "target\n";
    char buf[64];
    for (Eigen::Index i = 0; i < d.size(); ++i) {
        for (Eigen::Index j = 0; j < d.n_features(); ++j) {
            auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, d.features(i, j));
            out.write(buf, ptr - buf);
            out << ',';
        }
        out << d.labels[i] << '\n';
    }
}

std::array<Eigen::Index, 3> apportion(Eigen::Index n, const Fractions& fractions)
{
    std::array<Eigen::Index, 3> counts{};
    std::array<double, 3> remainder{};
    Eigen::Index assigned = 0;
    for (std::size_t p = 0; p < 3; ++p) {
        const double quota = static_cast<double>(n) * fractions[p];
        counts[p] = static_cast<Eigen::Index>(std::floor(quota + 1e-9));
        remainder[p] = quota - static_cast<double>(counts[p]);
        assigned += counts[p];
    }
    std::array<std::size_t, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return remainder[a] > remainder[b] + 1e-12; });
    for (std::size_t r = 0; assigned < n; ++r, ++assigned)
        ++counts[order[r % 3]];
    return counts;
}

namespace {

void check_fractions(const Fractions& f)
{
    for (double x : f)
        if (!(x > 0))
            throw ConfigError("split fractions must be positive");
    if (std::abs(f[0] + f[1] + f[2] - 1.0) > 1e-9)
        throw ConfigError("split fractions must sum to 1");
}

// Rounds the class-by-part quota table so that every class total is its size and
// every part total is the global apportionment. Largest fractional quotas are
// rounded up first; remaining demand is routed by augmenting paths.
std::vector<std::array<Eigen::Index, 3>> stratified_counts(const std::vector<Eigen::Index>& class_sizes,
                                                          const Fractions& fractions)
{
    const std::size_t n_classes = class_sizes.size();
    const Eigen::Index total = std::accumulate(class_sizes.begin(), class_sizes.end(), Eigen::Index{0});
    const auto part_target = apportion(total, fractions);

    std::vector<std::array<Eigen::Index, 3>> counts(n_classes);
    std::vector<std::array<double, 3>> frac(n_classes);
    std::vector<Eigen::Index> class_need(n_classes);
    std::array<Eigen::Index, 3> part_need = part_target;
    for (std::size_t c = 0; c < n_classes; ++c) {
        Eigen::Index sum = 0;
        for (std::size_t p = 0; p < 3; ++p) {
            const double quota = static_cast<double>(class_sizes[c]) * fractions[p];
            counts[c][p] = static_cast<Eigen::Index>(std::floor(quota + 1e-9));
            frac[c][p] = quota - static_cast<double>(counts[c][p]);
            sum += counts[c][p];
            part_need[p] -= counts[c][p];
        }
        class_need[c] = class_sizes[c] - sum;
    }

    std::vector<std::array<bool, 3>> extra(n_classes, {false, false, false});
    std::vector<std::pair<std::size_t, std::size_t>> cells;
    for (std::size_t c = 0; c < n_classes; ++c)
        for (std::size_t p = 0; p < 3; ++p)
            cells.emplace_back(c, p);
    std::stable_sort(cells.begin(), cells.end(), [&](auto a, auto b) {
        return frac[a.first][a.second] > frac[b.first][b.second] + 1e-12;
    });
    for (auto [c, p] : cells) {
        if (frac[c][p] > 1e-12 && class_need[c] > 0 && part_need[p] > 0) {
            extra[c][p] = true;
            --class_need[c];
            --part_need[p];
        }
    }

    // Augment: class c (needs a row) -> part p without extra; if p is saturated,
    // move to a class holding an extra in p and continue from it.
    for (std::size_t start = 0; start < n_classes; ++start) {
        while (class_need[start] > 0) {
            std::vector<int> part_prev(3, -1);  // class that reached part p
            std::vector<int> class_prev(n_classes, -2);  // part that reached class c
            std::queue<std::size_t> frontier;
            frontier.push(start);
            class_prev[start] = -1;
            int found = -1;
            while (!frontier.empty() && found < 0) {
                const auto c = frontier.front();
                frontier.pop();
                for (std::size_t p = 0; p < 3 && found < 0; ++p) {
                    if (extra[c][p] || part_prev[p] >= 0)
                        continue;
                    part_prev[p] = static_cast<int>(c);
                    if (part_need[p] > 0) {
                        found = static_cast<int>(p);
                        break;
                    }
                    for (std::size_t c2 = 0; c2 < n_classes; ++c2) {
                        if (extra[c2][p] && class_prev[c2] == -2) {
                            class_prev[c2] = static_cast<int>(p);
                            frontier.push(c2);
                        }
                    }
                }
            }
            if (found < 0)
                throw DataError(DataErrorKind::empty_part, "cannot apportion stratified split");
            --part_need[static_cast<std::size_t>(found)];
            --class_need[start];
            for (auto p = static_cast<std::size_t>(found);;) {
                const auto c = static_cast<std::size_t>(part_prev[p]);
                extra[c][p] = true;
                if (class_prev[c] == -1)
                    break;
                const auto back = static_cast<std::size_t>(class_prev[c]);
                extra[c][back] = false;
                p = back;
            }
        }
    }

    for (std::size_t c = 0; c < n_classes; ++c)
        for (std::size_t p = 0; p < 3; ++p)
            counts[c][p] += extra[c][p] ? 1 : 0;
    return counts;
}

} // namespace

Split split(const Dataset& dataset, const Fractions& fractions, bool stratified, Rng& rng)
{
    check_fractions(fractions);
    const Eigen::Index n = dataset.size();
    std::array<std::vector<Eigen::Index>, 3> rows;

    if (stratified) {
        std::vector<std::vector<Eigen::Index>> by_class(static_cast<std::size_t>(dataset.n_classes));
        for (Eigen::Index i = 0; i < n; ++i)
            by_class[static_cast<std::size_t>(dataset.labels[i])].push_back(i);
        std::vector<Eigen::Index> sizes;
        for (const auto& members : by_class)
            sizes.push_back(static_cast<Eigen::Index>(members.size()));
        const auto counts = stratified_counts(sizes, fractions);
        for (std::size_t c = 0; c < by_class.size(); ++c) {
            auto& members = by_class[c];
            std::shuffle(members.begin(), members.end(), rng);
            auto it = members.begin();
            for (std::size_t p = 0; p < 3; ++p) {
                rows[p].insert(rows[p].end(), it, it + counts[c][p]);
                it += counts[c][p];
            }
        }
    } else {
        std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
        std::iota(order.begin(), order.end(), Eigen::Index{0});
        std::shuffle(order.begin(), order.end(), rng);
        const auto counts = apportion(n, fractions);
        auto it = order.begin();
        for (std::size_t p = 0; p < 3; ++p) {
            rows[p].assign(it, it + counts[p]);
            it += counts[p];
        }
    }

    static constexpr const char* part_names[] = {"training", "validation", "test"};
    for (std::size_t p = 0; p < 3; ++p) {
        if (rows[p].empty())
            throw DataError(DataErrorKind::empty_part,
                            std::string(part_names[p]) + " part would be empty (" + std::to_string(n) + " rows)");
        std::sort(rows[p].begin(), rows[p].end());
    }

    Split s;
    s.train = dataset.subset(rows[0]);
    s.validation = dataset.subset(rows[1]);
    s.test = dataset.subset(rows[2]);
    s.rows = std::move(rows);
    return s;
}

Scaler fit_scaler(const Dataset& train)
{
    if (train.size() == 0)
        throw DataError(DataErrorKind::empty, "cannot fit scaler on an empty dataset");
    return fit_scaler(train.features);
}

Eigen::MatrixXd apply_scaler(const Scaler& scaler, const Eigen::MatrixXd& x)
{
    if (x.cols() != scaler.dimension())
        throw DataError(DataErrorKind::dimension_mismatch, "scaler expects " + std::to_string(scaler.dimension()) +
                                                               " features, got " + std::to_string(x.cols()));
    return (x.rowwise() - scaler.means.transpose()).array().rowwise() / scaler.scales.transpose().array();
}

Dataset apply_scaler(const Scaler& scaler, const Dataset& d)
{
    Dataset out = d;
    out.features = apply_scaler(scaler, d.features);
    return out;
}

Eigen::MatrixXd inverse_scaler(const Scaler& scaler, const Eigen::MatrixXd& z)
{
    if (z.cols() != scaler.dimension())
        throw DataError(DataErrorKind::dimension_mismatch, "scaler dimension mismatch");
    return (z.array().rowwise() * scaler.scales.transpose().array()).rowwise() + scaler.means.transpose().array();
}

} // namespace classy
