#include "kpc/metric.hpp"

#include <algorithm>
#include <cmath>

#include "kpc/error.hpp"

namespace kpc {

namespace {

void check_family(const MetricSpec& m, const Column& col) {
    switch (m.family) {
        case MetricFamily::euclidean:
            if (col.type() != ColumnType::numeric)
                fail(errc::incompatible_metric, "euclidean metric requires numeric columns");
            break;
        case MetricFamily::hamming01:
            if (col.type() != ColumnType::categorical)
                fail(errc::incompatible_metric, "hamming01 metric requires categorical columns");
            break;
        case MetricFamily::frobenius:
            if (col.type() != ColumnType::rotation)
                fail(errc::incompatible_metric, "frobenius metric requires rotation columns");
            break;
        case MetricFamily::product:
            break;
    }
}

}  // namespace

double distance(const MetricSpec& m, const Dataset& ds, std::span<const std::size_t> cols,
                std::size_t i, std::size_t j) {
    double acc = 0.0;
    for (std::size_t b = 0; b < cols.size(); ++b) {
        const Column& col = ds.column(cols[b]);
        check_family(m, col);
        const double w = m.weight(b);
        if (w < 0.0) fail(errc::incompatible_metric, "metric weights must be nonnegative");
        double d2 = 0.0;
        switch (col.type()) {
            case ColumnType::numeric: {
                const double d = col.numeric().values[i] - col.numeric().values[j];
                d2 = d * d;
                break;
            }
            case ColumnType::categorical:
                d2 = (col.categorical().codes[i] != col.categorical().codes[j]) ? 1.0 : 0.0;
                break;
            case ColumnType::rotation: {
                const Rotation& a = col.rotation().values[i];
                const Rotation& b2 = col.rotation().values[j];
                for (std::size_t k = 0; k < 9; ++k) {
                    const double d = a[k] - b2[k];
                    d2 += d * d;
                }
                break;
            }
        }
        acc += w * d2;
    }
    return std::sqrt(acc);
}

PointMatrix embed_points(const MetricSpec& m, const Dataset& ds,
                         std::span<const std::size_t> cols) {
    const std::size_t n = ds.n();
    std::size_t dim = 0;
    for (std::size_t b = 0; b < cols.size(); ++b) {
        const Column& col = ds.column(cols[b]);
        check_family(m, col);
        switch (col.type()) {
            case ColumnType::numeric: dim += 1; break;
            case ColumnType::categorical: dim += col.categorical().labels.size(); break;
            case ColumnType::rotation: dim += 9; break;
        }
    }
    PointMatrix pts;
    pts.n = n;
    pts.dim = dim;
    pts.data.assign(n * dim, 0.0);
    std::size_t offset = 0;
    constexpr double kOneHotScale = 0.70710678118654752440;  // 1/sqrt(2)
    for (std::size_t b = 0; b < cols.size(); ++b) {
        const Column& col = ds.column(cols[b]);
        const double w = m.weight(b);
        if (w < 0.0) fail(errc::incompatible_metric, "metric weights must be nonnegative");
        const double scale = std::sqrt(w);
        switch (col.type()) {
            case ColumnType::numeric: {
                const auto& values = col.numeric().values;
                for (std::size_t i = 0; i < n; ++i) pts.data[i * dim + offset] = scale * values[i];
                offset += 1;
                break;
            }
            case ColumnType::categorical: {
                const auto& cat = col.categorical();
                const std::size_t cards = cat.labels.size();
                for (std::size_t i = 0; i < n; ++i) {
                    const auto code = static_cast<std::size_t>(cat.codes[i]);
                    pts.data[i * dim + offset + code] = scale * kOneHotScale;
                }
                offset += cards;
                break;
            }
            case ColumnType::rotation: {
                const auto& values = col.rotation().values;
                for (std::size_t i = 0; i < n; ++i) {
                    for (std::size_t k = 0; k < 9; ++k)
                        pts.data[i * dim + offset + k] = scale * values[i][k];
                }
                offset += 9;
                break;
            }
        }
    }
    return pts;
}

PointMatrix pack_numeric(const Dataset& ds, std::span<const std::size_t> cols) {
    const std::size_t n = ds.n();
    PointMatrix pts;
    pts.n = n;
    pts.dim = cols.size();
    pts.data.resize(n * cols.size());
    for (std::size_t b = 0; b < cols.size(); ++b) {
        const auto& values = ds.column(cols[b]).numeric().values;
        for (std::size_t i = 0; i < n; ++i) pts.data[i * pts.dim + b] = values[i];
    }
    return pts;
}

}  // namespace kpc
