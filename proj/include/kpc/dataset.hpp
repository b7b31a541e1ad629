#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace kpc {

// 3x3 rotation stored row-major.
using Rotation = std::array<double, 9>;

struct NumericPayload {
    std::vector<double> values;
};

struct CategoricalPayload {
    std::vector<std::int32_t> codes;   // first-appearance order
    std::vector<std::string> labels;   // code -> label
};

struct RotationPayload {
    std::vector<Rotation> values;
};

enum class ColumnType { numeric, categorical, rotation };

struct Column {
    std::string name;
    std::variant<NumericPayload, CategoricalPayload, RotationPayload> payload;

    ColumnType type() const {
        return static_cast<ColumnType>(payload.index());
    }
    std::size_t size() const;

    const NumericPayload& numeric() const;
    const CategoricalPayload& categorical() const;
    const RotationPayload& rotation() const;
};

// Immutable after construction; safe for concurrent reads.
class Dataset {
  public:
    Dataset() = default;
    explicit Dataset(std::vector<Column> columns);

    std::size_t n() const { return n_; }
    std::size_t num_columns() const { return columns_.size(); }
    const Column& column(std::size_t idx) const { return columns_.at(idx); }
    const std::vector<Column>& columns() const { return columns_; }

    // Index of the column with this name; throws if absent.
    std::size_t index_of(const std::string& name) const;
    bool has_column(const std::string& name) const;

  private:
    std::vector<Column> columns_;
    std::size_t n_ = 0;
};

struct VariableRoles {
    std::vector<std::size_t> y_cols;
    std::vector<std::size_t> z_cols;
    std::vector<std::size_t> x_cols;  // may be empty (unconditional case)

    void validate(const Dataset& ds) const;
};

// Schema file: one `name=type` per line, type in {numeric, categorical, rotation9}.
struct ColumnSchema {
    std::vector<std::pair<std::string, ColumnType>> entries;

    static ColumnSchema parse_file(const std::string& path);
    static ColumnSchema parse_text(const std::string& text);
};

// Rotation validation tolerance: ||R^T R - I||_max and |det(R) - 1|.
inline constexpr double kRotationTol = 1e-8;

bool is_rotation(const Rotation& r, double tol = kRotationTol);

Dataset load_csv(const std::string& path, const ColumnSchema& schema);
Dataset load_csv_text(const std::string& text, const ColumnSchema& schema);

// All columns numeric; convenience for plain matrices.
Dataset load_csv(const std::string& path);

std::string to_csv(const Dataset& ds);
void save_csv(const Dataset& ds, const std::string& path);
std::string schema_text(const Dataset& ds);

// Returns a copy with the listed numeric columns shifted/scaled to sample
// mean 0 and variance 1 (n-1 denominator). Throws ZeroVariance on constant
// columns, TypeMismatch on non-numeric targets.
Dataset standardize(const Dataset& ds, std::span<const std::size_t> cols);

std::vector<double> column_mean_sd(const Dataset& ds, std::size_t col);

}  // namespace kpc
