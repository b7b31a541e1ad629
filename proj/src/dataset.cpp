#include "kpc/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "kpc/error.hpp"

namespace kpc {

std::size_t Column::size() const {
    if (const auto* p = std::get_if<NumericPayload>(&payload)) return p->values.size();
    if (const auto* p = std::get_if<CategoricalPayload>(&payload)) return p->codes.size();
    return std::get<RotationPayload>(payload).values.size();
}

const NumericPayload& Column::numeric() const {
    if (const auto* p = std::get_if<NumericPayload>(&payload)) return *p;
    fail(errc::type_mismatch, "column '" + name + "' is not numeric");
}

const CategoricalPayload& Column::categorical() const {
    if (const auto* p = std::get_if<CategoricalPayload>(&payload)) return *p;
    fail(errc::type_mismatch, "column '" + name + "' is not categorical");
}

const RotationPayload& Column::rotation() const {
    if (const auto* p = std::get_if<RotationPayload>(&payload)) return *p;
    fail(errc::type_mismatch, "column '" + name + "' is not rotation-valued");
}

Dataset::Dataset(std::vector<Column> columns) : columns_(std::move(columns)) {
    if (columns_.empty()) fail(errc::empty_data, "dataset has no columns");
    n_ = columns_.front().size();
    if (n_ == 0) fail(errc::empty_data, "dataset has no rows");
    std::unordered_set<std::string> names;
    for (const auto& col : columns_) {
        if (col.size() != n_)
            fail(errc::size_mismatch, "column '" + col.name + "' has mismatched length");
        if (!names.insert(col.name).second)
            fail(errc::invalid_argument, "duplicate column name '" + col.name + "'");
        if (const auto* rot = std::get_if<RotationPayload>(&col.payload)) {
            for (const auto& r : rot->values) {
                if (!is_rotation(r))
                    fail(errc::invalid_rotation, "column '" + col.name + "' contains a non-rotation matrix");
            }
        }
    }
}

std::size_t Dataset::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < columns_.size(); ++i) {
        if (columns_[i].name == name) return i;
    }
    fail(errc::invalid_argument, "no column named '" + name + "'");
}

bool Dataset::has_column(const std::string& name) const {
    return std::any_of(columns_.begin(), columns_.end(),
                       [&](const Column& c) { return c.name == name; });
}

void VariableRoles::validate(const Dataset& ds) const {
    if (y_cols.empty()) fail(errc::invalid_argument, "y_cols must be non-empty");
    if (z_cols.empty()) fail(errc::invalid_argument, "z_cols must be non-empty");
    std::unordered_set<std::size_t> seen;
    auto check = [&](const std::vector<std::size_t>& cols, const char* role) {
        for (std::size_t c : cols) {
            if (c >= ds.num_columns())
                fail(errc::invalid_argument, std::string(role) + " column index out of range");
            if (!seen.insert(c).second)
                fail(errc::invalid_argument, "role column lists must be disjoint");
        }
    };
    check(y_cols, "y");
    check(z_cols, "z");
    check(x_cols, "x");
}

bool is_rotation(const Rotation& r, double tol) {
    // ||R^T R - I||_max
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            double dotij = 0.0;
            for (int k = 0; k < 3; ++k) dotij += r[3 * k + i] * r[3 * k + j];
            const double target = (i == j) ? 1.0 : 0.0;
            if (std::fabs(dotij - target) > tol) return false;
        }
    }
    const double det = r[0] * (r[4] * r[8] - r[5] * r[7]) - r[1] * (r[3] * r[8] - r[5] * r[6]) +
                       r[2] * (r[3] * r[7] - r[4] * r[6]);
    return std::fabs(det - 1.0) <= tol;
}

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

// RFC-4180-ish field splitter: quoted fields may contain commas and doubled quotes.
std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool in_quotes = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                cur.push_back(c);
            }
        } else if (c == '"') {
            in_quotes = true;
        } else if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

double parse_double(const std::string& field, std::size_t row, const std::string& col) {
    const std::string t = trim(field);
    double value = 0.0;
    const char* first = t.data();
    const char* last = t.data() + t.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last)
        fail(errc::malformed_csv,
             "row " + std::to_string(row) + ", column '" + col + "': cannot parse '" + t + "'");
    return value;
}

std::string format_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace

ColumnSchema ColumnSchema::parse_text(const std::string& text) {
    ColumnSchema schema;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            fail(errc::invalid_argument, "schema line missing '=': " + t);
        const std::string name = trim(t.substr(0, eq));
        const std::string type = trim(t.substr(eq + 1));
        ColumnType ct;
        if (type == "numeric") {
            ct = ColumnType::numeric;
        } else if (type == "categorical") {
            ct = ColumnType::categorical;
        } else if (type == "rotation9") {
            ct = ColumnType::rotation;
        } else {
            fail(errc::invalid_argument, "unknown schema type '" + type + "'");
        }
        schema.entries.emplace_back(name, ct);
    }
    return schema;
}

ColumnSchema ColumnSchema::parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(errc::invalid_argument, "cannot open schema file " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_text(buf.str());
}

namespace {

ColumnType schema_type_for(const ColumnSchema& schema, const std::string& name) {
    for (const auto& [n, t] : schema.entries) {
        if (n == name) return t;
    }
    return ColumnType::numeric;
}

// Rotation columns occupy 9 consecutive CSV fields row-major; the block is
// addressed by its first header cell, either the bare name or `name_11`.
const std::array<const char*, 9> kRotSuffix = {"_11", "_12", "_13", "_21", "_22",
                                               "_23", "_31", "_32", "_33"};

}  // namespace

Dataset load_csv_text(const std::string& text, const ColumnSchema& schema) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) fail(errc::empty_data, "missing header row");
    const std::vector<std::string> header = split_csv_line(line);

    struct Pending {
        std::string name;
        ColumnType type;
        std::size_t field_begin;  // first CSV field index
        NumericPayload num;
        CategoricalPayload cat;
        RotationPayload rot;
        std::unordered_map<std::string, std::int32_t> code_of;
    };

    std::vector<Pending> pending;
    std::size_t f = 0;
    while (f < header.size()) {
        std::string name = trim(header[f]);
        ColumnType type = ColumnType::numeric;
        // A header cell `R_11` with `R=rotation9` in the schema starts a block.
        if (name.size() > 3 && name.ends_with("_11")) {
            const std::string base = name.substr(0, name.size() - 3);
            if (schema_type_for(schema, base) == ColumnType::rotation) {
                name = base;
                type = ColumnType::rotation;
            }
        }
        if (type != ColumnType::rotation) type = schema_type_for(schema, name);
        Pending p;
        p.name = name;
        p.type = type;
        p.field_begin = f;
        pending.push_back(std::move(p));
        f += (type == ColumnType::rotation) ? 9 : 1;
    }
    if (f != header.size())
        fail(errc::malformed_csv, "header does not align with rotation blocks");

    std::size_t row = 0;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        const std::vector<std::string> fields = split_csv_line(line);
        if (fields.size() != header.size())
            fail(errc::malformed_csv, "row " + std::to_string(row) + " has " +
                                          std::to_string(fields.size()) + " fields, expected " +
                                          std::to_string(header.size()));
        for (auto& p : pending) {
            switch (p.type) {
                case ColumnType::numeric:
                    p.num.values.push_back(parse_double(fields[p.field_begin], row, p.name));
                    break;
                case ColumnType::categorical: {
                    const std::string label = trim(fields[p.field_begin]);
                    auto [it, inserted] =
                        p.code_of.try_emplace(label, static_cast<std::int32_t>(p.cat.labels.size()));
                    if (inserted) p.cat.labels.push_back(label);
                    p.cat.codes.push_back(it->second);
                    break;
                }
                case ColumnType::rotation: {
                    Rotation r;
                    for (std::size_t k = 0; k < 9; ++k)
                        r[k] = parse_double(fields[p.field_begin + k], row, p.name);
                    if (!is_rotation(r))
                        fail(errc::invalid_rotation,
                             "row " + std::to_string(row) + ", column '" + p.name +
                                 "': matrix is not a rotation");
                    p.rot.values.push_back(r);
                    break;
                }
            }
        }
    }
    if (row == 0) fail(errc::empty_data, "no data rows");

    std::vector<Column> cols;
    cols.reserve(pending.size());
    for (auto& p : pending) {
        Column c;
        c.name = p.name;
        switch (p.type) {
            case ColumnType::numeric: c.payload = std::move(p.num); break;
            case ColumnType::categorical: c.payload = std::move(p.cat); break;
            case ColumnType::rotation: c.payload = std::move(p.rot); break;
        }
        cols.push_back(std::move(c));
    }
    return Dataset(std::move(cols));
}

Dataset load_csv(const std::string& path, const ColumnSchema& schema) {
    std::ifstream in(path);
    if (!in) fail(errc::invalid_argument, "cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return load_csv_text(buf.str(), schema);
}

Dataset load_csv(const std::string& path) { return load_csv(path, ColumnSchema{}); }

std::string to_csv(const Dataset& ds) {
    std::ostringstream os;
    bool first = true;
    for (const auto& col : ds.columns()) {
        switch (col.type()) {
            case ColumnType::rotation:
                for (const char* suffix : kRotSuffix) {
                    if (!first) os << ',';
                    os << col.name << suffix;
                    first = false;
                }
                break;
            default:
                if (!first) os << ',';
                os << col.name;
                first = false;
        }
    }
    os << '\n';
    for (std::size_t i = 0; i < ds.n(); ++i) {
        first = true;
        for (const auto& col : ds.columns()) {
            if (!first) os << ',';
            first = false;
            switch (col.type()) {
                case ColumnType::numeric:
                    os << format_double(col.numeric().values[i]);
                    break;
                case ColumnType::categorical:
                    os << col.categorical().labels[static_cast<std::size_t>(
                        col.categorical().codes[i])];
                    break;
                case ColumnType::rotation: {
                    const Rotation& r = col.rotation().values[i];
                    for (std::size_t k = 0; k < 9; ++k) {
                        if (k > 0) os << ',';
                        os << format_double(r[k]);
                    }
                    break;
                }
            }
        }
        os << '\n';
    }
    return os.str();
}

void save_csv(const Dataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) fail(errc::invalid_argument, "cannot write " + path);
    out << to_csv(ds);
}

std::string schema_text(const Dataset& ds) {
    std::ostringstream os;
    for (const auto& col : ds.columns()) {
        switch (col.type()) {
            case ColumnType::numeric: os << col.name << "=numeric\n"; break;
            case ColumnType::categorical: os << col.name << "=categorical\n"; break;
            case ColumnType::rotation: os << col.name << "=rotation9\n"; break;
        }
    }
    return os.str();
}

std::vector<double> column_mean_sd(const Dataset& ds, std::size_t col) {
    const auto& values = ds.column(col).numeric().values;
    const std::size_t n = values.size();
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    const double var = (n > 1) ? ss / static_cast<double>(n - 1) : 0.0;
    return {mean, std::sqrt(var)};
}

Dataset standardize(const Dataset& ds, std::span<const std::size_t> cols) {
    std::vector<Column> out = ds.columns();
    for (std::size_t c : cols) {
        if (c >= out.size()) fail(errc::invalid_argument, "standardize: column index out of range");
        auto* num = std::get_if<NumericPayload>(&out[c].payload);
        if (num == nullptr)
            fail(errc::type_mismatch, "standardize: column '" + out[c].name + "' is not numeric");
        const auto ms = column_mean_sd(ds, c);
        if (!(ms[1] > 0.0))
            fail(errc::zero_variance, "standardize: column '" + out[c].name + "' is constant");
        for (double& v : num->values) v = (v - ms[0]) / ms[1];
    }
    return Dataset(std::move(out));
}

}  // namespace kpc
