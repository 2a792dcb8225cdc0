#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gtboost/common.hpp"

namespace gtboost {

// ---------------------------------------------------------------------------
// Data model: column-major features, squared-loss targets, optional query
// groups. Standardization maps every feature into [0, 1].
// ---------------------------------------------------------------------------

struct FeatureMatrix {
    std::vector<std::vector<double>> columns;  // columns[j][i], all length m
    std::vector<std::string> feature_names;    // empty or size d

    std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
    std::size_t cols() const { return columns.size(); }
};

/// Per-feature affine transform x -> (x - min) / range; range == 0 marks a
/// constant raw column, which standardizes to all zeros.
struct StandardizationParams {
    std::vector<double> min;
    std::vector<double> range;

    bool empty() const { return min.empty(); }
    std::size_t size() const { return min.size(); }

    double apply(std::size_t j, double x) const {
        if (range[j] <= 0.0) return 0.0;
        return (x - min[j]) / range[j];
    }
    double apply_clamped(std::size_t j, double x) const {
        return std::clamp(apply(j, x), 0.0, 1.0);
    }
};

struct LabeledDataset {
    FeatureMatrix features;
    std::vector<double> targets;
    std::vector<long long> group_ids;        // empty when ungrouped
    StandardizationParams standardization;   // empty until standardize()

    std::size_t rows() const { return targets.size(); }
    std::size_t cols() const { return features.cols(); }
    bool grouped() const { return !group_ids.empty(); }
    bool standardized() const { return !standardization.empty(); }
};

/// T tasks sharing one feature dimension (zero-pad upstream if they differ).
struct TaskBundle {
    std::vector<LabeledDataset> tasks;
    std::vector<std::string> task_names;

    std::size_t size() const { return tasks.size(); }
};

struct SyntheticSpec {
    std::size_t n = 0;
    std::size_t d = 0;
    double noise_sd = 0.0;
    std::uint64_t seed = 0;
};

// ---------------------------------------------------------------------------
// Parsing helpers
// ---------------------------------------------------------------------------

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline bool parse_double(std::string_view s, double& out) {
    s = trim(s);
    if (s.empty()) return false;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
}

inline bool parse_ll(std::string_view s, long long& out) {
    s = trim(s);
    if (s.empty()) return false;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
}

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
    std::vector<std::string_view> cells;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
        if (i == line.size() || line[i] == ',') {
            cells.push_back(line.substr(start, i - start));
            start = i + 1;
        }
    }
    return cells;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Loaders
// ---------------------------------------------------------------------------

/// Dense CSV loader (header row required, '.' decimal separator). The target
/// column is selected by header name or by 0-based index given as digits.
/// Missing / non-finite cells are hard errors, reported with row and column.
inline LabeledDataset load_csv(const std::string& path, const std::string& target_column,
                               const std::string& group_column = "") {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open CSV file: " + path);

    std::string line;
    if (!std::getline(in, line)) throw DataError(path + ": empty file");
    auto header_cells = detail::split_csv_line(detail::trim(line));
    std::vector<std::string> header;
    header.reserve(header_cells.size());
    for (auto c : header_cells) header.emplace_back(detail::trim(c));

    auto resolve = [&](const std::string& spec, const char* what) -> std::size_t {
        for (std::size_t j = 0; j < header.size(); ++j)
            if (header[j] == spec) return j;
        long long idx = -1;
        if (detail::parse_ll(spec, idx) && idx >= 0 && static_cast<std::size_t>(idx) < header.size())
            return static_cast<std::size_t>(idx);
        throw DataError(path + ": " + what + " '" + spec + "' not found in header");
    };

    const std::size_t target_idx = resolve(target_column, "target column");
    std::optional<std::size_t> group_idx;
    if (!group_column.empty()) group_idx = resolve(group_column, "group column");
    if (group_idx && *group_idx == target_idx)
        throw DataError(path + ": target and group columns coincide");

    LabeledDataset ds;
    for (std::size_t j = 0; j < header.size(); ++j)
        if (j != target_idx && (!group_idx || j != *group_idx)) {
            ds.features.columns.emplace_back();
            ds.features.feature_names.push_back(header[j]);
        }

    std::size_t row = 1;  // 1-based data row numbers, header is row 0
    while (std::getline(in, line)) {
        auto trimmed = detail::trim(line);
        if (trimmed.empty()) { ++row; continue; }
        auto cells = detail::split_csv_line(trimmed);
        if (cells.size() != header.size())
            throw DataError(path + ": row " + std::to_string(row) + " has " +
                            std::to_string(cells.size()) + " cells, expected " +
                            std::to_string(header.size()));
        std::size_t feat = 0;
        for (std::size_t j = 0; j < cells.size(); ++j) {
            if (group_idx && j == *group_idx) {
                long long g;
                if (!detail::parse_ll(cells[j], g) || g < 0)
                    throw DataError(path + ": row " + std::to_string(row) + ", column '" +
                                    header[j] + "': invalid group id '" + std::string(cells[j]) + "'");
                ds.group_ids.push_back(g);
                continue;
            }
            double v;
            if (!detail::parse_double(cells[j], v) || !std::isfinite(v))
                throw DataError(path + ": row " + std::to_string(row) + ", column '" +
                                header[j] + "': cannot parse '" + std::string(cells[j]) +
                                "' as a finite number");
            if (j == target_idx) ds.targets.push_back(v);
            else ds.features.columns[feat++].push_back(v);
        }
        ++row;
    }
    if (ds.targets.empty()) throw DataError(path + ": no data rows");
    return ds;
}

/// Dense CSV without a target column: every column is a feature. Used for
/// prediction inputs.
inline FeatureMatrix load_csv_features(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open CSV file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw DataError(path + ": empty file");
    auto header_cells = detail::split_csv_line(detail::trim(line));
    FeatureMatrix fm;
    for (auto c : header_cells) fm.feature_names.emplace_back(detail::trim(c));
    fm.columns.resize(fm.feature_names.size());
    std::size_t row = 1;
    while (std::getline(in, line)) {
        auto trimmed = detail::trim(line);
        if (trimmed.empty()) { ++row; continue; }
        auto cells = detail::split_csv_line(trimmed);
        if (cells.size() != fm.columns.size())
            throw DataError(path + ": row " + std::to_string(row) + " has " +
                            std::to_string(cells.size()) + " cells, expected " +
                            std::to_string(fm.columns.size()));
        for (std::size_t j = 0; j < cells.size(); ++j) {
            double v;
            if (!detail::parse_double(cells[j], v) || !std::isfinite(v))
                throw DataError(path + ": row " + std::to_string(row) + ", column '" +
                                fm.feature_names[j] + "': cannot parse '" + std::string(cells[j]) +
                                "' as a finite number");
            fm.columns[j].push_back(v);
        }
        ++row;
    }
    if (fm.rows() == 0) throw DataError(path + ": no data rows");
    return fm;
}

/// svmlight text format: one sample per line, "label idx:val ...", 1-based
/// strictly increasing indices, absent indices are 0. d = max index seen.
inline LabeledDataset load_svmlight(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open svmlight file: " + path);

    std::vector<double> labels;
    std::vector<std::vector<std::pair<std::size_t, double>>> rows;
    std::size_t max_idx = 0;

    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto tv = detail::trim(line);
        if (tv.empty() || tv.front() == '#') continue;
        std::istringstream ls{std::string(tv)};
        std::string tok;
        if (!(ls >> tok))
            continue;
        double label;
        if (!detail::parse_double(tok, label) || !std::isfinite(label))
            throw DataError(path + ": line " + std::to_string(lineno) + ": bad label '" + tok + "'");
        labels.push_back(label);
        rows.emplace_back();
        std::size_t prev = 0;
        while (ls >> tok) {
            auto colon = tok.find(':');
            if (colon == std::string::npos)
                throw DataError(path + ": line " + std::to_string(lineno) + ": bad token '" + tok + "'");
            long long idx;
            double val;
            if (!detail::parse_ll(std::string_view(tok).substr(0, colon), idx) || idx < 1)
                throw DataError(path + ": line " + std::to_string(lineno) + ": bad index in '" + tok + "'");
            if (!detail::parse_double(std::string_view(tok).substr(colon + 1), val) || !std::isfinite(val))
                throw DataError(path + ": line " + std::to_string(lineno) + ": bad value in '" + tok + "'");
            if (static_cast<std::size_t>(idx) <= prev)
                throw DataError(path + ": line " + std::to_string(lineno) +
                                ": feature indices must be strictly increasing at '" + tok + "'");
            prev = static_cast<std::size_t>(idx);
            rows.back().emplace_back(prev, val);
            max_idx = std::max(max_idx, prev);
        }
    }
    if (labels.empty()) throw DataError(path + ": no samples");

    LabeledDataset ds;
    ds.targets = std::move(labels);
    ds.features.columns.assign(max_idx, std::vector<double>(ds.targets.size(), 0.0));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (auto [idx, val] : rows[i]) ds.features.columns[idx - 1][i] = val;
    return ds;
}

// ---------------------------------------------------------------------------
// Standardization
// ---------------------------------------------------------------------------

/// Min-shift then range-divide each column into [0, 1]; constant columns map
/// to zeros with range 0. Parameters are recorded for inference-time reuse.
inline std::pair<LabeledDataset, StandardizationParams> standardize(const LabeledDataset& ds) {
    LabeledDataset out = ds;
    StandardizationParams p;
    const std::size_t d = ds.cols();
    p.min.resize(d);
    p.range.resize(d);
    for (std::size_t j = 0; j < d; ++j) {
        const auto& col = ds.features.columns[j];
        auto [mn, mx] = std::minmax_element(col.begin(), col.end());
        p.min[j] = *mn;
        p.range[j] = *mx - *mn;
        auto& oc = out.features.columns[j];
        if (p.range[j] > 0.0) {
            for (std::size_t i = 0; i < col.size(); ++i) oc[i] = (col[i] - p.min[j]) / p.range[j];
        } else {
            std::fill(oc.begin(), oc.end(), 0.0);
        }
    }
    out.standardization = p;
    return {std::move(out), std::move(p)};
}

// ---------------------------------------------------------------------------
// Splitting
// ---------------------------------------------------------------------------

/// Deterministic train/validation partition. With group ids present, whole
/// groups stay on one side.
inline std::pair<LabeledDataset, LabeledDataset> train_valid_split(const LabeledDataset& ds,
                                                                   double fraction,
                                                                   std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction < 1.0))
        throw ConfigError("train fraction must lie strictly inside (0, 1)");
    const std::size_t m = ds.rows();
    if (m < 2) throw DataError("need at least 2 samples to split");

    auto engine = make_engine(seed);
    std::vector<std::uint32_t> train_rows, valid_rows;
    const std::size_t want = std::clamp<std::size_t>(
        static_cast<std::size_t>(std::llround(fraction * static_cast<double>(m))), 1, m - 1);

    if (!ds.grouped()) {
        std::vector<std::uint32_t> idx(m);
        std::iota(idx.begin(), idx.end(), 0u);
        std::shuffle(idx.begin(), idx.end(), engine);
        train_rows.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(want));
        valid_rows.assign(idx.begin() + static_cast<std::ptrdiff_t>(want), idx.end());
    } else {
        std::vector<long long> gids;  // first-appearance order
        for (auto g : ds.group_ids)
            if (std::find(gids.begin(), gids.end(), g) == gids.end()) gids.push_back(g);
        if (gids.size() < 2) throw DataError("group-aware split needs at least 2 groups");
        std::shuffle(gids.begin(), gids.end(), engine);
        std::vector<std::size_t> gsize(gids.size(), 0);
        auto gpos = [&](long long g) {
            return static_cast<std::size_t>(std::find(gids.begin(), gids.end(), g) - gids.begin());
        };
        for (auto g : ds.group_ids) ++gsize[gpos(g)];
        // Take shuffled groups until the train side reaches the target count,
        // always leaving at least one group for validation.
        std::vector<bool> in_train(gids.size(), false);
        std::size_t taken = 0;
        for (std::size_t k = 0; k + 1 < gids.size() && taken < want; ++k) {
            in_train[k] = true;
            taken += gsize[k];
        }
        if (taken == 0) { in_train[0] = true; }
        for (std::uint32_t i = 0; i < m; ++i)
            (in_train[gpos(ds.group_ids[i])] ? train_rows : valid_rows).push_back(i);
    }
    std::sort(train_rows.begin(), train_rows.end());
    std::sort(valid_rows.begin(), valid_rows.end());

    auto take = [&](const std::vector<std::uint32_t>& rows) {
        LabeledDataset part;
        part.standardization = ds.standardization;
        part.features.feature_names = ds.features.feature_names;
        part.features.columns.resize(ds.cols());
        for (std::size_t j = 0; j < ds.cols(); ++j) {
            part.features.columns[j].reserve(rows.size());
            for (auto i : rows) part.features.columns[j].push_back(ds.features.columns[j][i]);
        }
        part.targets.reserve(rows.size());
        for (auto i : rows) part.targets.push_back(ds.targets[i]);
        if (ds.grouped())
            for (auto i : rows) part.group_ids.push_back(ds.group_ids[i]);
        return part;
    };
    return {take(train_rows), take(valid_rows)};
}

// ---------------------------------------------------------------------------
// Synthetic sparse additive instance
// ---------------------------------------------------------------------------

/// Response surface of the synthetic instance; active features are the first
/// three columns.
inline double synthetic_response(double x1, double x2, double x3) {
    return 2.0 * x1 - 3.0 * std::exp2(x2) + std::log2(1.0 + x3);
}

/// All d features i.i.d. U[0,1], y = synthetic_response(x1,x2,x3) + N(0, sd^2).
/// The result is already standardized (identity parameters).
inline LabeledDataset generate_synthetic(const SyntheticSpec& spec) {
    if (spec.d < 3) throw ConfigError("synthetic data needs d >= 3");
    if (spec.n < 1) throw ConfigError("synthetic data needs n >= 1");
    if (spec.noise_sd < 0.0) throw ConfigError("noise_sd must be >= 0");

    auto engine = make_engine(spec.seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    LabeledDataset ds;
    ds.features.columns.assign(spec.d, std::vector<double>(spec.n));
    for (std::size_t j = 0; j < spec.d; ++j)
        for (std::size_t i = 0; i < spec.n; ++i) ds.features.columns[j][i] = unif(engine);

    ds.targets.resize(spec.n);
    std::normal_distribution<double> noise(0.0, spec.noise_sd > 0.0 ? spec.noise_sd : 1.0);
    for (std::size_t i = 0; i < spec.n; ++i) {
        const double eps = spec.noise_sd > 0.0 ? noise(engine) : 0.0;
        ds.targets[i] = synthetic_response(ds.features.columns[0][i], ds.features.columns[1][i],
                                           ds.features.columns[2][i]) +
                        eps;
    }
    ds.standardization.min.assign(spec.d, 0.0);
    ds.standardization.range.assign(spec.d, 1.0);
    return ds;
}

}  // namespace gtboost
