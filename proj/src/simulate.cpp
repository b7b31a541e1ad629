#include "kpc/simulate.hpp"

#include <cmath>

#include "kpc/error.hpp"
#include "kpc/rng.hpp"

namespace kpc {

SimModelName sim_model_from_name(const std::string& name) {
    if (name == "model_I") return SimModelName::model_I;
    if (name == "model_II") return SimModelName::model_II;
    if (name == "model_III") return SimModelName::model_III;
    if (name == "model_IV_so3") return SimModelName::model_IV_so3;
    if (name == "model_V_so3") return SimModelName::model_V_so3;
    if (name == "LM") return SimModelName::lm;
    if (name == "GAM") return SimModelName::gam;
    if (name == "Nonlin1") return SimModelName::nonlin1;
    if (name == "Nonlin2") return SimModelName::nonlin2;
    if (name == "Nonlin3") return SimModelName::nonlin3;
    if (name == "SO3_select") return SimModelName::so3_select;
    if (name == "crt_additive") return SimModelName::crt_additive;
    if (name == "crt_multiplicative") return SimModelName::crt_multiplicative;
    fail(errc::invalid_argument, "unknown simulation model '" + name + "'");
}

const char* sim_model_name(SimModelName name) {
    switch (name) {
        case SimModelName::model_I: return "model_I";
        case SimModelName::model_II: return "model_II";
        case SimModelName::model_III: return "model_III";
        case SimModelName::model_IV_so3: return "model_IV_so3";
        case SimModelName::model_V_so3: return "model_V_so3";
        case SimModelName::lm: return "LM";
        case SimModelName::gam: return "GAM";
        case SimModelName::nonlin1: return "Nonlin1";
        case SimModelName::nonlin2: return "Nonlin2";
        case SimModelName::nonlin3: return "Nonlin3";
        case SimModelName::so3_select: return "SO3_select";
        case SimModelName::crt_additive: return "crt_additive";
        case SimModelName::crt_multiplicative: return "crt_multiplicative";
    }
    return "unknown";
}

Rotation rotation_about_x(double angle) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    return {1, 0, 0, 0, c, -s, 0, s, c};
}

Rotation rotation_about_z(double angle) {
    const double c = std::cos(angle);
    const double s = std::sin(angle);
    return {c, -s, 0, s, c, 0, 0, 0, 1};
}

Rotation rotation_multiply(const Rotation& a, const Rotation& b) {
    Rotation out{};
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            double acc = 0.0;
            for (int k = 0; k < 3; ++k) acc += a[3 * i + k] * b[3 * k + j];
            out[3 * i + j] = acc;
        }
    }
    return out;
}

namespace {

Dataset xyz_dataset(NumericPayload x, NumericPayload z, Column y) {
    std::vector<Column> cols(3);
    cols[0] = {"x", std::move(x)};
    cols[1] = {"z", std::move(z)};
    cols[2] = std::move(y);
    return Dataset(std::move(cols));
}

Dataset predictors_dataset(NumericPayload y, std::vector<NumericPayload> xs) {
    std::vector<Column> cols;
    cols.reserve(xs.size() + 1);
    cols.push_back({"y", std::move(y)});
    for (std::size_t j = 0; j < xs.size(); ++j)
        cols.push_back({"x" + std::to_string(j + 1), std::move(xs[j])});
    return Dataset(std::move(cols));
}

Dataset predictors_dataset_rot(RotationPayload y, std::vector<NumericPayload> xs) {
    std::vector<Column> cols;
    cols.reserve(xs.size() + 1);
    cols.push_back({"y", std::move(y)});
    for (std::size_t j = 0; j < xs.size(); ++j)
        cols.push_back({"x" + std::to_string(j + 1), std::move(xs[j])});
    return Dataset(std::move(cols));
}

}  // namespace

Dataset simulate(const SimModel& model) {
    const std::size_t n = model.n;
    if (n < 1) fail(errc::invalid_argument, "n must be >= 1");
    RngStream rng = RngStream::from(model.seed, {stream_tag::simulate});

    switch (model.name) {
        case SimModelName::model_I: {
            NumericPayload x, z, y;
            x.values.resize(n);
            z.values.resize(n);
            y.values.resize(n);
            for (std::size_t i = 0; i < n; ++i) {
                x.values[i] = rng.normal();
                z.values[i] = rng.normal();
                y.values[i] = x.values[i] + z.values[i] + rng.normal(1.0, 1.0);
            }
            return xyz_dataset(std::move(x), std::move(z), {"y", std::move(y)});
        }
        case SimModelName::model_II: {
            NumericPayload x, z, y;
            x.values.resize(n);
            z.values.resize(n);
            y.values.resize(n);
            for (std::size_t i = 0; i < n; ++i) {
                x.values[i] = rng.normal();
                z.values[i] = rng.normal();
                const double prob = std::exp(-z.values[i] * z.values[i] / 2.0);
                y.values[i] = rng.uniform() < prob ? 1.0 : 0.0;
            }
            return xyz_dataset(std::move(x), std::move(z), {"y", std::move(y)});
        }
        case SimModelName::model_III: {
            NumericPayload x, z, y;
            x.values.resize(n);
            z.values.resize(n);
            y.values.resize(n);
            for (std::size_t i = 0; i < n; ++i) {
                x.values[i] = rng.uniform();
                z.values[i] = rng.uniform();
                y.values[i] = std::fmod(x.values[i] + z.values[i], 1.0);
            }
            return xyz_dataset(std::move(x), std::move(z), {"y", std::move(y)});
        }
        case SimModelName::model_IV_so3:
        case SimModelName::model_V_so3: {
            NumericPayload x, z;
            RotationPayload y;
            x.values.resize(n);
            z.values.resize(n);
            y.values.resize(n);
            for (std::size_t i = 0; i < n; ++i) {
                x.values[i] = rng.normal();
                z.values[i] = rng.normal();
                const double second =
                    model.name == SimModelName::model_IV_so3 ? z.values[i] : rng.normal();
                y.values[i] =
                    rotation_multiply(rotation_about_x(x.values[i]), rotation_about_z(second));
            }
            return xyz_dataset(std::move(x), std::move(z), {"y", std::move(y)});
        }
        case SimModelName::lm:
        case SimModelName::gam:
        case SimModelName::nonlin1:
        case SimModelName::nonlin2:
        case SimModelName::nonlin3:
        case SimModelName::so3_select: {
            const std::size_t p = model.p;
            if (p < 3) fail(errc::invalid_argument, "selection models need p >= 3");
            std::vector<NumericPayload> xs(p);
            for (auto& col : xs) col.values.resize(n);
            NumericPayload y;
            RotationPayload y_rot;
            const bool rotation_response = model.name == SimModelName::so3_select;
            if (rotation_response) {
                y_rot.values.resize(n);
            } else {
                y.values.resize(n);
            }
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < p; ++j) xs[j].values[i] = rng.normal();
                const double x1 = xs[0].values[i];
                const double x2 = xs[1].values[i];
                const double x3 = xs[2].values[i];
                switch (model.name) {
                    case SimModelName::lm:
                        y.values[i] = 3.0 * x1 + 2.0 * x2 - x3 + rng.normal();
                        break;
                    case SimModelName::gam:
                        y.values[i] =
                            std::sin(x1) + 2.0 * std::cos(x2) + std::exp(x3) + rng.normal();
                        break;
                    case SimModelName::nonlin1:
                        y.values[i] = x1 * x2 + std::sin(x1 * x3);
                        break;
                    case SimModelName::nonlin2: {
                        // t_1 noise as a ratio of standard normals.
                        const double t1 = rng.normal() / rng.normal();
                        y.values[i] =
                            2.0 * std::log(x1 * x1 + x2 * x2 * x2 * x2) /
                                (std::cos(x1) + std::sin(x3)) +
                            t1;
                        break;
                    }
                    case SimModelName::nonlin3: {
                        const double u = rng.uniform();
                        y.values[i] =
                            std::pow(std::fabs(x1 + u), std::sin(x2 - x3));
                        break;
                    }
                    case SimModelName::so3_select:
                        y_rot.values[i] = rotation_multiply(rotation_about_x(x1),
                                                            rotation_about_z(x2 * x3));
                        break;
                    default:
                        break;
                }
            }
            if (rotation_response) return predictors_dataset_rot(std::move(y_rot), std::move(xs));
            return predictors_dataset(std::move(y), std::move(xs));
        }
        case SimModelName::crt_additive: {
            const double g = model.gamma;
            if (g < 0.0 || g > 1.0) fail(errc::invalid_argument, "gamma must lie in [0,1]");
            NumericPayload x, z, y;
            x.values.resize(n);
            z.values.resize(n);
            y.values.resize(n);
            for (std::size_t i = 0; i < n; ++i) {
                const double xv = rng.normal();
                const double zv = xv + rng.uniform(-1.0, 1.0);
                const double eps = rng.normal();
                x.values[i] = xv;
                z.values[i] = zv;
                y.values[i] = g * std::sin(zv * xv) +
                              (1.0 - g) * (std::exp(xv) / (xv * xv) + eps);
            }
            return xyz_dataset(std::move(x), std::move(z), {"y", std::move(y)});
        }
        case SimModelName::crt_multiplicative: {
            const double g = model.gamma;
            if (g < 0.0 || g > 1.0) fail(errc::invalid_argument, "gamma must lie in [0,1]");
            NumericPayload x, z, y;
            x.values.resize(n);
            z.values.resize(n);
            y.values.resize(n);
            for (std::size_t i = 0; i < n; ++i) {
                const double xv = rng.normal();
                const double zv = xv * rng.normal();
                const double eps = rng.normal();
                x.values[i] = xv;
                z.values[i] = zv;
                y.values[i] = std::pow(std::fabs(std::tanh(xv) + eps), 1.0 - g) *
                              std::pow(std::cosh(zv * xv), g);
            }
            return xyz_dataset(std::move(x), std::move(z), {"y", std::move(y)});
        }
    }
    fail(errc::invalid_argument, "unhandled model");
}

}  // namespace kpc
