#include "kpc/oracle.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <map>

#include "kpc/error.hpp"
#include "kpc/graph_estimator.hpp"
#include "kpc/numeric.hpp"
#include "kpc/parallel.hpp"

namespace kpc {

void DiscreteJoint::validate() const {
    if (atoms.empty()) fail(errc::invalid_argument, "discrete joint has no atoms");
    double total = 0.0;
    for (const Atom& a : atoms) {
        if (!(a.p > 0.0)) fail(errc::invalid_argument, "atom probabilities must be positive");
        total += a.p;
    }
    if (std::fabs(total - 1.0) > 1e-12)
        fail(errc::invalid_argument, "atom probabilities must sum to 1");
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        for (std::size_t j = i + 1; j < atoms.size(); ++j) {
            if (atoms[i].x == atoms[j].x && atoms[i].y == atoms[j].y && atoms[i].z == atoms[j].z)
                fail(errc::invalid_argument, "atoms must be distinct");
        }
    }
}

Dataset DiscreteJoint::sample(std::size_t n, RngStream& rng) const {
    std::vector<double> cum(atoms.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < atoms.size(); ++i) {
        acc += atoms[i].p;
        cum[i] = acc;
    }
    NumericPayload x, y, z;
    x.values.resize(n);
    y.values.resize(n);
    z.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double u = rng.uniform();
        const std::size_t a = static_cast<std::size_t>(
            std::lower_bound(cum.begin(), cum.end(), u) - cum.begin());
        const Atom& atom = atoms[std::min(a, atoms.size() - 1)];
        x.values[i] = atom.x;
        y.values[i] = atom.y;
        z.values[i] = atom.z;
    }
    std::vector<Column> cols(3);
    cols[0] = {"x", std::move(x)};
    cols[1] = {"y", std::move(y)};
    cols[2] = {"z", std::move(z)};
    return Dataset(std::move(cols));
}

ScalarKernel scalar_kernel(const KernelSpec& spec) {
    const ResolvedKernel rk = [&] {
        if ((spec.family == KernelFamily::gaussian || spec.family == KernelFamily::laplace) &&
            spec.bandwidth.kind != BandwidthRule::Kind::fixed)
            fail(errc::invalid_argument, "scalar_kernel needs a fixed bandwidth");
        PointMatrix empty;
        empty.n = 0;
        empty.dim = 1;
        return resolve_kernel(spec, empty);
    }();
    return [rk](double a, double b) {
        return rk.eval(std::span<const double>(&a, 1), std::span<const double>(&b, 1));
    };
}

ScalarKernel scalar_foci_kernel(const DiscreteJoint& dj) {
    dj.validate();
    std::map<double, double> marginal;
    for (const auto& atom : dj.atoms) marginal[atom.y] += atom.p;
    std::vector<double> values;
    std::vector<double> weights;
    for (const auto& [y, p] : marginal) {
        values.push_back(y);
        weights.push_back(p);
    }
    return scalar_kernel(KernelSpec::foci_cdf(std::move(values), std::move(weights)));
}

namespace {

// Sum_{a,b in group} p_a p_b k(y_a, y_b) / P(group), accumulated over groups.
double conditional_term(const std::vector<std::vector<const DiscreteJoint::Atom*>>& groups,
                        const ScalarKernel& kernel) {
    std::vector<double> terms;
    for (const auto& group : groups) {
        double mass = 0.0;
        for (const auto* a : group) mass += a->p;
        std::vector<double> inner;
        inner.reserve(group.size() * group.size());
        for (const auto* a : group) {
            for (const auto* b : group) inner.push_back(a->p * b->p * kernel(a->y, b->y));
        }
        terms.push_back(kahan_sum(inner) / mass);
    }
    return kahan_sum(terms);
}

std::vector<std::vector<const DiscreteJoint::Atom*>> group_by(
    const DiscreteJoint& dj, const std::function<std::pair<double, double>(
                                 const DiscreteJoint::Atom&)>& key) {
    std::map<std::pair<double, double>, std::vector<const DiscreteJoint::Atom*>> buckets;
    for (const auto& atom : dj.atoms) buckets[key(atom)].push_back(&atom);
    std::vector<std::vector<const DiscreteJoint::Atom*>> out;
    out.reserve(buckets.size());
    for (auto& [k, v] : buckets) out.push_back(std::move(v));
    return out;
}

}  // namespace

double population_rho2(const DiscreteJoint& dj, const ScalarKernel& kernel) {
    dj.validate();
    std::vector<double> diag_terms;
    diag_terms.reserve(dj.atoms.size());
    for (const auto& atom : dj.atoms) diag_terms.push_back(atom.p * kernel(atom.y, atom.y));
    const double diag = kahan_sum(diag_terms);

    const auto by_x = group_by(dj, [](const DiscreteJoint::Atom& a) {
        return std::make_pair(a.x, 0.0);
    });
    const auto by_xz = group_by(dj, [](const DiscreteJoint::Atom& a) {
        return std::make_pair(a.x, a.z);
    });
    const double t_x = conditional_term(by_x, kernel);
    const double t_xz = conditional_term(by_xz, kernel);

    const double denominator = diag - t_x;
    if (denominator < 1e-12 * std::max(1.0, std::fabs(diag)))
        fail(errc::degenerate_y, "Y is a deterministic function of X on the support");
    return (t_xz - t_x) / denominator;
}

double ac_functional(const DiscreteJoint& dj) {
    dj.validate();
    // Thresholds run over the support of Y with weights P_Y(t).
    std::map<double, double> marginal;
    for (const auto& atom : dj.atoms) marginal[atom.y] += atom.p;

    std::map<double, double> px;
    std::map<std::pair<double, double>, double> pxz;
    for (const auto& atom : dj.atoms) {
        px[atom.x] += atom.p;
        pxz[{atom.x, atom.z}] += atom.p;
    }

    std::vector<double> num_terms;
    std::vector<double> den_terms;
    for (const auto& [t, pt] : marginal) {
        // g_t(x, z) = P(Y >= t | x, z), h_t(x) = P(Y >= t | x).
        std::map<std::pair<double, double>, double> ge_xz;
        std::map<double, double> ge_x;
        for (const auto& atom : dj.atoms) {
            if (atom.y >= t) {
                ge_xz[{atom.x, atom.z}] += atom.p;
                ge_x[atom.x] += atom.p;
            }
        }
        double e_g2 = 0.0;  // E[g_t(X,Z)^2]
        for (const auto& [key, mass] : pxz) {
            const auto it = ge_xz.find(key);
            const double g = (it == ge_xz.end()) ? 0.0 : it->second / mass;
            e_g2 += mass * g * g;
        }
        double e_h2 = 0.0;  // E[h_t(X)^2] = E[(E[g_t|X])^2]
        double e_h = 0.0;
        for (const auto& [x, mass] : px) {
            const auto it = ge_x.find(x);
            const double h = (it == ge_x.end()) ? 0.0 : it->second / mass;
            e_h2 += mass * h * h;
            e_h += mass * h;
        }
        num_terms.push_back(pt * (e_g2 - e_h2));
        den_terms.push_back(pt * (e_h - e_h2));
    }
    const double num = kahan_sum(num_terms);
    const double den = kahan_sum(den_terms);
    if (den < 1e-14) fail(errc::degenerate_y, "Y degenerate given X");
    return num / den;
}

double classical_partial_correlation(const Dataset& ds, std::size_t y_col, std::size_t z_col,
                                     std::span<const std::size_t> x_cols) {
    const auto n = static_cast<Eigen::Index>(ds.n());
    const auto p = static_cast<Eigen::Index>(x_cols.size());
    Eigen::MatrixXd design(n, p + 1);
    design.col(0).setOnes();
    for (Eigen::Index j = 0; j < p; ++j) {
        const auto& values = ds.column(x_cols[static_cast<std::size_t>(j)]).numeric().values;
        for (Eigen::Index i = 0; i < n; ++i)
            design(i, j + 1) = values[static_cast<std::size_t>(i)];
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    if (qr.rank() < design.cols())
        fail(errc::rank_deficient, "design matrix is rank deficient");

    auto residuals = [&](std::size_t col) {
        const auto& values = ds.column(col).numeric().values;
        Eigen::VectorXd v(n);
        for (Eigen::Index i = 0; i < n; ++i) v(i) = values[static_cast<std::size_t>(i)];
        return (v - design * qr.solve(v)).eval();
    };
    const Eigen::VectorXd ry = residuals(y_col);
    const Eigen::VectorXd rz = residuals(z_col);
    const double denom = std::sqrt(ry.squaredNorm() * rz.squaredNorm());
    if (!(denom > 0.0)) fail(errc::rank_deficient, "residuals have zero variance");
    return ry.dot(rz) / denom;
}

namespace {

Dataset probe_sample(ProbeFamily family, double parameter, double noise_sd, std::size_t n,
                     RngStream& rng) {
    NumericPayload x, y, z;
    x.values.resize(n);
    y.values.resize(n);
    z.values.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double xv = rng.normal();
        double yv;
        double zv;
        if (family == ProbeFamily::gaussian_parcor) {
            // (Y, Z) | X jointly normal with partial correlation `parameter`
            // and Var(Y | X) = 1 held fixed across the grid.
            const double r = parameter;
            const double e1 = rng.normal();
            const double e2 = rng.normal();
            yv = xv + e1;
            zv = xv + r * e1 + std::sqrt(1.0 - r * r) * e2;
        } else {
            // Y = (1-l) g(X) + l f(X, Z) + noise.
            zv = rng.normal();
            const double g = std::sin(xv);
            const double f = xv * zv;
            yv = (1.0 - parameter) * g + parameter * f +
                 (noise_sd > 0.0 ? rng.normal(0.0, noise_sd) : 0.0);
        }
        x.values[i] = xv;
        y.values[i] = yv;
        z.values[i] = zv;
    }
    std::vector<Column> cols(3);
    cols[0] = {"x", std::move(x)};
    cols[1] = {"y", std::move(y)};
    cols[2] = {"z", std::move(z)};
    return Dataset(std::move(cols));
}

}  // namespace

std::vector<ProbePoint> monotonicity_probe(ProbeFamily family, std::span<const double> grid,
                                           const KernelSpec& kernel_y, const ProbeConfig& cfg) {
    std::vector<ProbePoint> out(grid.size());
    for (std::size_t g = 0; g < grid.size(); ++g) {
        std::vector<double> estimates(cfg.replications);
        parallel_for(cfg.replications, [&](std::size_t r) {
            RngStream rng = RngStream::from(cfg.seed, {stream_tag::replication, g, r});
            const Dataset ds = probe_sample(family, grid[g], cfg.noise_sd, cfg.n, rng);
            const VariableRoles roles{{1}, {2}, {0}};
            const GraphSpec spec = GraphSpec::knn(1, true, RngStream::derive_key(cfg.seed, {g, r}));
            estimates[r] = kpc_graph(ds, roles, kernel_y, spec, spec, MetricSpec{}).value;
        });
        const double mean =
            pairwise_sum(estimates) / static_cast<double>(estimates.size());
        double ss = 0.0;
        for (double e : estimates) ss += (e - mean) * (e - mean);
        const double reps = static_cast<double>(estimates.size());
        out[g] = {grid[g], mean,
                  reps > 1 ? std::sqrt(ss / (reps - 1.0) / reps) : 0.0};
    }
    return out;
}

}  // namespace kpc
