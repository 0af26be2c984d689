#ifndef DMCD_DATASET_HPP
#define DMCD_DATASET_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "dmcd/errors.hpp"

namespace dmcd {

enum class ColumnKind { Continuous, Discrete };

struct VariableMeta {
    std::string id;
    std::string name;
    std::string description;
    std::string unit;
    std::optional<ColumnKind> declared_kind;
};

// A column holds either numeric values or string labels. String columns are
// always discrete; their level codes are assigned by first appearance.
struct Column {
    std::vector<double> numeric;        // used when textual is empty
    std::vector<std::string> textual;   // raw labels for string columns
    bool is_text() const { return !textual.empty(); }
    std::size_t size() const { return is_text() ? textual.size() : numeric.size(); }
};

// Decide column kind from values: strings are discrete; integer-valued
// numeric columns with few distinct values are discrete; everything else is
// continuous. The distinct-count cutoff is max(10, 0.05 N).
inline ColumnKind infer_kind(const Column& col) {
    if (col.size() == 0) throw EmptyColumn();
    if (col.is_text()) return ColumnKind::Discrete;
    const double cutoff = std::max(10.0, 0.05 * static_cast<double>(col.numeric.size()));
    std::set<double> distinct;
    bool all_integer = true;
    for (double v : col.numeric) {
        if (v != std::floor(v)) {
            all_integer = false;
            break;
        }
        distinct.insert(v);
        if (static_cast<double>(distinct.size()) > cutoff) break;
    }
    if (all_integer && static_cast<double>(distinct.size()) <= cutoff) return ColumnKind::Discrete;
    return ColumnKind::Continuous;
}

class Dataset {
public:
    Dataset(std::vector<VariableMeta> metadata,
            std::map<std::string, Column> columns,
            std::size_t dropped_rows = 0)
        : metadata_(std::move(metadata)), dropped_rows_(dropped_rows) {
        if (metadata_.empty()) throw EmptyMetadata();
        std::set<std::string> ids;
        for (const auto& m : metadata_) {
            if (m.id.empty()) throw ParseError("empty variable id in metadata");
            if (!ids.insert(m.id).second) throw ParseError("duplicate variable id: " + m.id);
        }
        std::size_t n = 0;
        bool first = true;
        for (const auto& m : metadata_) {
            const auto it = columns.find(m.id);
            if (it == columns.end()) throw HeaderMismatch("no column for metadata id " + m.id);
            if (first) {
                n = it->second.size();
                first = false;
            } else if (it->second.size() != n) {
                throw ParseError("column length mismatch for " + m.id);
            }
        }
        if (columns.size() != metadata_.size()) throw HeaderMismatch("columns without metadata present");
        if (n == 0) throw EmptyTable();
        sample_count_ = n;
        for (const auto& m : metadata_) {
            Column& col = columns.at(m.id);
            kinds_[m.id] = m.declared_kind ? *m.declared_kind : infer_kind(col);
            columns_[m.id] = std::move(col);
        }
    }

    std::size_t sample_count() const { return sample_count_; }
    std::size_t variable_count() const { return metadata_.size(); }
    std::size_t dropped_rows() const { return dropped_rows_; }
    const std::vector<VariableMeta>& metadata() const { return metadata_; }

    std::vector<std::string> variable_ids() const {
        std::vector<std::string> ids;
        ids.reserve(metadata_.size());
        for (const auto& m : metadata_) ids.push_back(m.id);
        return ids;
    }

    bool has_variable(const std::string& id) const { return columns_.count(id) > 0; }

    ColumnKind kind(const std::string& id) const {
        const auto it = kinds_.find(id);
        if (it == kinds_.end()) throw UnknownNode("no such variable: " + id);
        return it->second;
    }

    const Column& column(const std::string& id) const {
        const auto it = columns_.find(id);
        if (it == columns_.end()) throw UnknownNode("no such variable: " + id);
        return it->second;
    }

    // Numeric view: text labels are coded 0,1,2,... by first appearance.
    std::vector<double> numeric(const std::string& id) const {
        const Column& col = column(id);
        if (!col.is_text()) return col.numeric;
        std::unordered_map<std::string, double> codes;
        std::vector<double> out;
        out.reserve(col.textual.size());
        for (const auto& s : col.textual) {
            auto [it, inserted] = codes.emplace(s, static_cast<double>(codes.size()));
            out.push_back(it->second);
        }
        return out;
    }

private:
    std::vector<VariableMeta> metadata_;
    std::map<std::string, Column> columns_;
    std::map<std::string, ColumnKind> kinds_;
    std::size_t sample_count_ = 0;
    std::size_t dropped_rows_ = 0;
};

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    // RFC 4180: quoted fields may contain commas and doubled quotes.
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

inline bool parse_number(const std::string& s, double& out) {
    if (s.empty()) return false;
    char* end = nullptr;
    out = std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size() && std::isfinite(out);
}

}  // namespace detail

// Load a CSV table with a header row. Rows with any empty cell are dropped;
// the drop count is recorded on the Dataset. A column is textual if any
// retained cell fails numeric parsing, in which case every cell is kept as a
// label.
inline Dataset load_table(const std::string& path, std::vector<VariableMeta> metadata) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw EmptyTable("file has no header row: " + path);
    const auto header = detail::split_csv_line(line);

    std::set<std::string> header_set(header.begin(), header.end());
    std::set<std::string> meta_set;
    for (const auto& m : metadata) meta_set.insert(m.id);
    if (header_set != meta_set) throw HeaderMismatch("header ids do not match metadata ids in " + path);
    if (header_set.size() != header.size()) throw HeaderMismatch("duplicate header column in " + path);

    std::vector<std::vector<std::string>> rows;
    std::size_t dropped = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        auto fields = detail::split_csv_line(line);
        if (fields.size() != header.size()) throw ParseError("ragged row in " + path);
        const bool complete =
            std::none_of(fields.begin(), fields.end(), [](const std::string& f) { return f.empty(); });
        if (!complete) {
            ++dropped;
            continue;
        }
        rows.push_back(std::move(fields));
    }
    if (rows.empty()) throw EmptyTable("no complete rows in " + path);

    std::map<std::string, Column> columns;
    for (std::size_t c = 0; c < header.size(); ++c) {
        bool numeric = true;
        for (const auto& row : rows) {
            double v;
            if (!detail::parse_number(row[c], v)) {
                numeric = false;
                break;
            }
        }
        Column col;
        if (numeric) {
            col.numeric.reserve(rows.size());
            for (const auto& row : rows) {
                double v;
                detail::parse_number(row[c], v);
                col.numeric.push_back(v);
            }
        } else {
            col.textual.reserve(rows.size());
            for (const auto& row : rows) col.textual.push_back(row[c]);
        }
        columns.emplace(header[c], std::move(col));
    }
    // Declared-numeric columns that ended up textual are a data error.
    for (const auto& m : metadata) {
        if (m.declared_kind == ColumnKind::Continuous && columns.at(m.id).is_text())
            throw ParseError("non-numeric cell in numeric column " + m.id);
    }
    return Dataset(std::move(metadata), std::move(columns), dropped);
}

enum class NeutralizeMode { StripDescriptions, FullNeutralize };

struct NeutralizeResult {
    std::vector<VariableMeta> metadata;
    std::map<std::string, std::string> old_to_new;  // identity map for StripDescriptions
};

// Metadata-neutralization transform. StripDescriptions blanks names,
// descriptions, and units but keeps ids. FullNeutralize renames ids and
// names to X1..Xn in original order; descriptions come from the caller's
// rephrasings when given, otherwise are blanked. Already-neutral ids map to
// themselves so the transform is idempotent.
inline NeutralizeResult neutralize_metadata(
    const std::vector<VariableMeta>& metadata,
    NeutralizeMode mode,
    const std::vector<std::string>& rephrased_descriptions = {}) {
    if (metadata.empty()) throw EmptyMetadata();
    NeutralizeResult result;
    if (mode == NeutralizeMode::StripDescriptions) {
        for (const auto& m : metadata) {
            result.metadata.push_back({m.id, "", "", "", m.declared_kind});
            result.old_to_new[m.id] = m.id;
        }
        return result;
    }
    // FullNeutralize: check whether ids are already X1..Xn in order.
    bool already_neutral = true;
    for (std::size_t i = 0; i < metadata.size(); ++i) {
        if (metadata[i].id != "X" + std::to_string(i + 1)) {
            already_neutral = false;
            break;
        }
    }
    for (std::size_t i = 0; i < metadata.size(); ++i) {
        const std::string fresh = already_neutral ? metadata[i].id : "X" + std::to_string(i + 1);
        std::string desc = i < rephrased_descriptions.size() ? rephrased_descriptions[i] : "";
        result.metadata.push_back({fresh, fresh, desc, "", metadata[i].declared_kind});
        result.old_to_new[metadata[i].id] = fresh;
    }
    return result;
}

}  // namespace dmcd

#endif
