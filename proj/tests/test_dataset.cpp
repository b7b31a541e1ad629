#include <doctest.h>

#include <cmath>
#include <functional>

#include "kpc/dataset.hpp"
#include "kpc/error.hpp"
#include "kpc/metric.hpp"
#include "kpc/rng.hpp"
#include "kpc/simd/ops.hpp"

using namespace kpc;

namespace {

bool throws_with(errc code, const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code() == code;
    }
    return false;
}

}  // namespace

TEST_SUITE_BEGIN("dataset");

TEST_CASE("load_csv parses numeric columns") {
    const Dataset ds = load_csv_text("a,b\n1,2\n3,4\n5,6\n", ColumnSchema{});
    CHECK(ds.n() == 3);
    CHECK(ds.num_columns() == 2);
    CHECK(ds.column(0).numeric().values == std::vector<double>{1, 3, 5});
    CHECK(ds.column(1).numeric().values == std::vector<double>{2, 4, 6});
}

TEST_CASE("load_csv decodes a rotation block") {
    const auto schema = ColumnSchema::parse_text("r=rotation9\n");
    const Dataset ds =
        load_csv_text("r_11,r_12,r_13,r_21,r_22,r_23,r_31,r_32,r_33\n1,0,0,0,1,0,0,0,1\n",
                      schema);
    CHECK(ds.column(0).type() == ColumnType::rotation);
    const Rotation expected = {1, 0, 0, 0, 1, 0, 0, 0, 1};
    CHECK(ds.column(0).rotation().values[0] == expected);
}

TEST_CASE("reflections are rejected") {
    const auto schema = ColumnSchema::parse_text("r=rotation9\n");
    // det = -1: not in SO(3).
    CHECK(throws_with(errc::invalid_rotation, [&] {
        load_csv_text("r_11,r_12,r_13,r_21,r_22,r_23,r_31,r_32,r_33\n-1,0,0,0,1,0,0,0,1\n",
                      schema);
    }));
}

TEST_CASE("csv error paths") {
    CHECK(throws_with(errc::malformed_csv,
                      [] { load_csv_text("a,b\n1,2\n3\n", ColumnSchema{}); }));
    CHECK(throws_with(errc::malformed_csv,
                      [] { load_csv_text("a,b\n1,x\n", ColumnSchema{}); }));
    CHECK(throws_with(errc::empty_data, [] { load_csv_text("a,b\n", ColumnSchema{}); }));
    // Missing values are rejected, not imputed.
    CHECK(throws_with(errc::malformed_csv,
                      [] { load_csv_text("a,b\n1,\n2,3\n", ColumnSchema{}); }));
}

TEST_CASE("categorical codes follow first appearance") {
    const auto schema = ColumnSchema::parse_text("c=categorical\n");
    const Dataset ds = load_csv_text("c\nred\nblue\nred\ngreen\n", schema);
    const auto& cat = ds.column(0).categorical();
    CHECK(cat.codes == std::vector<std::int32_t>{0, 1, 0, 2});
    CHECK(cat.labels == std::vector<std::string>{"red", "blue", "green"});
}

TEST_CASE("standardize hits mean 0 and variance 1") {
    std::vector<Column> cols(1);
    cols[0] = {"v", NumericPayload{{1.0, 3.0}}};
    const Dataset ds(std::move(cols));
    const std::size_t idx[] = {0};
    const Dataset out = standardize(ds, idx);
    const auto& v = out.column(0).numeric().values;
    CHECK(v[0] == doctest::Approx(-0.70710678118654752).epsilon(1e-12));
    CHECK(v[1] == doctest::Approx(0.70710678118654752).epsilon(1e-12));

    // Idempotence to 1e-12.
    const Dataset twice = standardize(out, idx);
    for (std::size_t i = 0; i < 2; ++i)
        CHECK(std::fabs(twice.column(0).numeric().values[i] - v[i]) < 1e-12);
}

TEST_CASE("standardize rejects constant columns") {
    std::vector<Column> cols(1);
    cols[0] = {"v", NumericPayload{{5.0, 5.0, 5.0}}};
    const Dataset ds(std::move(cols));
    const std::size_t idx[] = {0};
    CHECK(throws_with(errc::zero_variance, [&] { standardize(ds, idx); }));
}

TEST_CASE("distance examples") {
    std::vector<Column> cols(2);
    cols[0] = {"a", NumericPayload{{0.0, 3.0}}};
    cols[1] = {"b", NumericPayload{{0.0, 4.0}}};
    const Dataset ds(std::move(cols));
    const std::size_t both[] = {0, 1};
    MetricSpec euclid;
    euclid.family = MetricFamily::euclidean;
    CHECK(distance(euclid, ds, both, 0, 1) == doctest::Approx(5.0));

    std::vector<Column> cat_cols(1);
    cat_cols[0] = {"c", CategoricalPayload{{0, 0, 1}, {"u", "v"}}};
    const Dataset cat_ds(std::move(cat_cols));
    const std::size_t one[] = {0};
    MetricSpec hamming;
    hamming.family = MetricFamily::hamming01;
    CHECK(distance(hamming, cat_ds, one, 0, 1) == 0.0);
    CHECK(distance(hamming, cat_ds, one, 0, 2) == 1.0);

    std::vector<Column> rot_cols(1);
    RotationPayload rp;
    rp.values.push_back({1, 0, 0, 0, 1, 0, 0, 0, 1});
    rp.values.push_back({-1, 0, 0, 0, -1, 0, 0, 0, 1});  // pi about z
    rot_cols[0] = {"r", std::move(rp)};
    const Dataset rot_ds(std::move(rot_cols));
    MetricSpec frob;
    frob.family = MetricFamily::frobenius;
    CHECK(distance(frob, rot_ds, one, 0, 1) == doctest::Approx(std::sqrt(8.0)).epsilon(1e-12));
}

TEST_CASE("incompatible metric families are rejected") {
    std::vector<Column> cols(1);
    cols[0] = {"c", CategoricalPayload{{0, 1}, {"u", "v"}}};
    const Dataset ds(std::move(cols));
    const std::size_t one[] = {0};
    MetricSpec euclid;
    euclid.family = MetricFamily::euclidean;
    CHECK(throws_with(errc::incompatible_metric, [&] { distance(euclid, ds, one, 0, 1); }));
}

TEST_CASE("product metric: symmetry and triangle inequality on random triples") {
    RngStream rng(11);
    NumericPayload num;
    CategoricalPayload cat;
    RotationPayload rot;
    const std::size_t n = 40;
    for (std::size_t i = 0; i < n; ++i) {
        num.values.push_back(rng.normal());
        cat.codes.push_back(static_cast<std::int32_t>(rng.below(3)));
        const double angle = rng.uniform(0.0, 3.0);
        const Rotation r{std::cos(angle), -std::sin(angle), 0, std::sin(angle), std::cos(angle),
                         0, 0, 0, 1};
        rot.values.push_back(r);
    }
    cat.labels = {"a", "b", "c"};
    std::vector<Column> cols(3);
    cols[0] = {"num", std::move(num)};
    cols[1] = {"cat", std::move(cat)};
    cols[2] = {"rot", std::move(rot)};
    const Dataset ds(std::move(cols));
    const std::size_t all[] = {0, 1, 2};
    MetricSpec m;
    m.weights = {1.0, 2.0, 0.5};
    for (int trial = 0; trial < 200; ++trial) {
        const auto i = static_cast<std::size_t>(rng.below(n));
        const auto j = static_cast<std::size_t>(rng.below(n));
        const auto k = static_cast<std::size_t>(rng.below(n));
        const double dij = distance(m, ds, all, i, j);
        const double dji = distance(m, ds, all, j, i);
        const double dik = distance(m, ds, all, i, k);
        const double dkj = distance(m, ds, all, k, j);
        CHECK(dij == doctest::Approx(dji).epsilon(1e-15));
        CHECK(dij <= dik + dkj + 1e-9);
        if (i == j) CHECK(dij == 0.0);
    }

    // The packed embedding reproduces the metric exactly.
    const PointMatrix pts = embed_points(m, ds, all);
    for (int trial = 0; trial < 100; ++trial) {
        const auto i = static_cast<std::size_t>(rng.below(n));
        const auto j = static_cast<std::size_t>(rng.below(n));
        const double direct = distance(m, ds, all, i, j);
        const double embedded = std::sqrt(simd::sqdist(pts.row(i), pts.row(j)));
        CHECK(embedded == doctest::Approx(direct).epsilon(1e-12));
    }
}

TEST_CASE("csv round trip is bit exact for finite decimals") {
    const auto schema = ColumnSchema::parse_text("c=categorical\nr=rotation9\n");
    const std::string text =
        "a,c,r_11,r_12,r_13,r_21,r_22,r_23,r_31,r_32,r_33\n"
        "1.25,red,1,0,0,0,1,0,0,0,1\n"
        "-3.5,blue,0,-1,0,1,0,0,0,0,1\n";
    const Dataset ds = load_csv_text(text, schema);
    const Dataset again = load_csv_text(to_csv(ds), schema);
    CHECK(again.column(0).numeric().values == ds.column(0).numeric().values);
    CHECK(again.column(1).categorical().codes == ds.column(1).categorical().codes);
    CHECK(again.column(2).rotation().values == ds.column(2).rotation().values);
}

TEST_CASE("role validation") {
    const Dataset ds = load_csv_text("a,b,c\n1,2,3\n4,5,6\n", ColumnSchema{});
    VariableRoles ok{{0}, {1}, {2}};
    ok.validate(ds);
    VariableRoles overlap{{0}, {0}, {}};
    CHECK(throws_with(errc::invalid_argument, [&] { overlap.validate(ds); }));
    VariableRoles empty_y{{}, {1}, {}};
    CHECK(throws_with(errc::invalid_argument, [&] { empty_y.validate(ds); }));
}

TEST_SUITE_END();
