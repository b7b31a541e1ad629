// kpc: kernel partial correlation estimation, model-free variable selection,
// and conditional-independence inference from the command line.

#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "kpc/error.hpp"
#include "kpc/experiment.hpp"
#include "kpc/graph_estimator.hpp"
#include "kpc/inference.hpp"
#include "kpc/oracle.hpp"
#include "kpc/rkhs.hpp"
#include "kpc/simulate.hpp"
#include "kpc/var_select.hpp"

namespace {

using nlohmann::json;

struct CsvArgs {
    std::string path;
    std::string schema_path;
};

kpc::Dataset load_data(const CsvArgs& args) {
    if (!args.schema_path.empty())
        return kpc::load_csv(args.path, kpc::ColumnSchema::parse_file(args.schema_path));
    // A sibling .schema file is picked up automatically when present.
    std::ifstream probe(args.path + ".schema");
    if (probe.good())
        return kpc::load_csv(args.path, kpc::ColumnSchema::parse_file(args.path + ".schema"));
    return kpc::load_csv(args.path);
}

std::vector<std::size_t> column_indices(const kpc::Dataset& ds,
                                        const std::vector<std::string>& names) {
    std::vector<std::size_t> out;
    out.reserve(names.size());
    for (const auto& name : names) out.push_back(ds.index_of(name));
    return out;
}

kpc::KernelSpec kernel_from_args(const std::string& family, const std::string& bandwidth,
                                 double alpha) {
    kpc::KernelSpec spec;
    spec.family = kpc::kernel_family_from_name(family);
    spec.alpha = alpha;
    if (bandwidth == "median") {
        spec.bandwidth = kpc::BandwidthRule::median();
    } else {
        spec.bandwidth = kpc::BandwidthRule::fixed(std::stod(bandwidth));
    }
    return spec;
}

void emit(const json& j, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << j.dump(2) << '\n';
    } else {
        std::ofstream out(out_path);
        if (!out) kpc::fail(kpc::errc::invalid_argument, "cannot write " + out_path);
        out << j.dump(2) << '\n';
    }
}

json estimate_json(const kpc::KpcEstimate& est) {
    json j;
    j["value"] = est.value;
    j["numerator"] = est.numerator;
    j["denominator"] = est.denominator;
    j["clamped"] = est.clamped;
    for (const auto& [key, value] : est.diagnostics) j["diagnostics"][key] = value;
    return j;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"kernel partial correlation toolkit"};
    app.require_subcommand(1);
    app.set_config("--config", "", "key-value config file mirroring the flags");

    // ---- estimate ----------------------------------------------------------
    auto* estimate = app.add_subcommand("estimate", "estimate rho^2(Y,Z|X)");
    CsvArgs est_csv;
    std::string est_method = "graph";
    std::vector<std::string> est_y, est_z, est_x;
    int est_k = 1;
    bool est_mst = false;
    bool est_undirected = false;
    std::string est_kernel = "gaussian";
    std::string est_bandwidth = "median";
    std::string est_kernel_x = "gaussian";
    std::string est_bandwidth_x = "median";
    std::string est_kernel_xz = "gaussian";
    std::string est_bandwidth_xz = "median";
    double est_alpha = 1.0;
    double est_eps = 1e-3;
    bool est_eps_schedule = false;
    bool est_uncentered = false;
    int est_rank = 0;
    bool est_no_clamp = false;
    std::uint64_t est_seed = 0;
    std::string est_out;
    estimate->add_option("data", est_csv.path, "input CSV")->required();
    estimate->add_option("--schema", est_csv.schema_path, "schema file");
    estimate->add_option("--method", est_method, "graph | rkhs")
        ->check(CLI::IsMember({"graph", "rkhs"}));
    estimate->add_option("--y", est_y, "response columns")->required();
    estimate->add_option("--z", est_z, "z columns")->required();
    estimate->add_option("--x", est_x, "conditioning columns (may be empty for rkhs)");
    estimate->add_option("--k", est_k, "K for the K-NN graph");
    estimate->add_flag("--mst", est_mst, "use the minimum spanning tree");
    estimate->add_flag("--undirected", est_undirected, "undirected K-NN graph");
    estimate->add_option("--kernel-y", est_kernel, "kernel family for Y");
    estimate->add_option("--bandwidth", est_bandwidth, "median or a number");
    estimate->add_option("--kernel-x", est_kernel_x, "rkhs: kernel family for X");
    estimate->add_option("--bandwidth-x", est_bandwidth_x, "median or a number");
    estimate->add_option("--kernel-xz", est_kernel_xz, "rkhs: kernel family for (X,Z)");
    estimate->add_option("--bandwidth-xz", est_bandwidth_xz, "median or a number");
    estimate->add_option("--alpha", est_alpha, "distance kernel exponent");
    estimate->add_option("--eps", est_eps, "rkhs regularization");
    estimate->add_flag("--eps-schedule", est_eps_schedule, "eps = 1e-3 n^-0.4");
    estimate->add_flag("--uncentered", est_uncentered, "uncentered rkhs variant");
    estimate->add_option("--rank", est_rank, "low-rank cap (rkhs); 0 = dense");
    estimate->add_flag("--no-clamp", est_no_clamp, "report the raw value");
    estimate->add_option("--seed", est_seed, "tie-breaking seed");
    estimate->add_option("--out", est_out, "output file (default stdout)");

    // ---- select ------------------------------------------------------------
    auto* select = app.add_subcommand("select", "variable selection");
    CsvArgs sel_csv;
    std::string sel_method = "kfoci";
    std::string sel_y;
    std::vector<std::string> sel_candidates;
    int sel_k = 1;
    std::size_t sel_budget = 0;
    std::string sel_kernel = "gaussian";
    std::string sel_bandwidth = "median";
    double sel_eps = 1e-3;
    std::uint64_t sel_seed = 0;
    std::size_t sel_max_vars = 0;
    bool sel_knockoff = false;
    double sel_q = 0.1;
    bool sel_plus = false;
    std::vector<std::string> sel_knock_cols;
    bool sel_gen_knockoffs = false;
    std::string sel_out;
    select->add_option("data", sel_csv.path, "input CSV")->required();
    select->add_option("--schema", sel_csv.schema_path, "schema file");
    select->add_option("--method", sel_method, "kfoci | rkhs")
        ->check(CLI::IsMember({"kfoci", "rkhs"}));
    select->add_option("--y", sel_y, "response column")->required();
    select->add_option("--candidates", sel_candidates,
                       "candidate columns (default: all but Y)");
    select->add_option("--k", sel_k, "K for the K-NN graph");
    select->add_option("--budget", sel_budget, "number of variables (rkhs)");
    select->add_option("--max-vars", sel_max_vars, "cap for kfoci");
    select->add_option("--kernel-y", sel_kernel, "kernel family for Y");
    select->add_option("--bandwidth", sel_bandwidth, "median or a number");
    select->add_option("--eps", sel_eps, "rkhs regularization");
    select->add_option("--seed", sel_seed, "tie-breaking seed");
    select->add_flag("--knockoff", sel_knockoff, "knockoff FDR selection");
    select->add_option("--q", sel_q, "target FDR level");
    select->add_flag("--plus", sel_plus, "knockoff+ threshold");
    select->add_option("--knockoffs", sel_knock_cols, "knockoff columns, pair order");
    select->add_flag("--gen-knockoffs", sel_gen_knockoffs,
                     "generate Gaussian knockoffs from the sample moments");
    select->add_option("--out", sel_out, "output file (default stdout)");

    // ---- test --------------------------------------------------------------
    auto* test = app.add_subcommand("test", "conditional randomization test");
    CsvArgs test_csv;
    bool test_crt = false;
    std::vector<std::string> test_y, test_z, test_x;
    int test_b = 100;
    std::string test_stat = "rkhs";
    int test_k = 1;
    double test_eps = 1e-3;
    std::string test_sampler = "gaussian-linear";
    std::uint64_t test_seed = 0;
    std::string test_out;
    test->add_option("data", test_csv.path, "input CSV")->required();
    test->add_option("--schema", test_csv.schema_path, "schema file");
    test->add_flag("--crt", test_crt, "conditional randomization test");
    test->add_option("--y", test_y, "response columns")->required();
    test->add_option("--z", test_z, "z columns")->required();
    test->add_option("--x", test_x, "conditioning columns")->required();
    test->add_option("--b", test_b, "resample count");
    test->add_option("--stat", test_stat, "graph | rkhs")
        ->check(CLI::IsMember({"graph", "rkhs"}));
    test->add_option("--k", test_k, "K for the graph statistic");
    test->add_option("--eps", test_eps, "rkhs regularization");
    test->add_option("--sampler", test_sampler, "conditional sampler (gaussian-linear)")
        ->check(CLI::IsMember({"gaussian-linear"}));
    test->add_option("--seed", test_seed, "resampling seed");
    test->add_option("--out", test_out, "output file (default stdout)");

    // ---- simulate ----------------------------------------------------------
    auto* simulate_cmd = app.add_subcommand("simulate", "draw from a simulation model");
    std::string sim_model = "model_I";
    std::size_t sim_n = 100;
    std::size_t sim_p = 10;
    double sim_gamma = 0.0;
    std::uint64_t sim_seed = 0;
    std::string sim_out;
    simulate_cmd->add_option("--model", sim_model, "model name")->required();
    simulate_cmd->add_option("--n", sim_n, "sample size");
    simulate_cmd->add_option("--p", sim_p, "predictor count");
    simulate_cmd->add_option("--gamma", sim_gamma, "CRT dependence strength");
    simulate_cmd->add_option("--seed", sim_seed, "seed");
    simulate_cmd->add_option("--out", sim_out, "output CSV")->required();

    // ---- report ------------------------------------------------------------
    auto* report = app.add_subcommand("report", "run a replicated experiment plan");
    std::string report_plan;
    std::string report_out;
    report->add_option("--plan", report_plan, "plan config file")->required();
    report->add_option("--out", report_out,
                       "output prefix (writes <out>.summary.json and <out>.records.jsonl)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (*estimate) {
            const kpc::Dataset ds = load_data(est_csv);
            kpc::VariableRoles roles;
            roles.y_cols = column_indices(ds, est_y);
            roles.z_cols = column_indices(ds, est_z);
            roles.x_cols = column_indices(ds, est_x);
            const kpc::KernelSpec ky = kernel_from_args(est_kernel, est_bandwidth, est_alpha);
            json j;
            j["seed"] = est_seed;
            if (est_method == "graph") {
                kpc::GraphSpec spec =
                    est_mst ? kpc::GraphSpec::mst(est_seed)
                            : kpc::GraphSpec::knn(est_k, !est_undirected, est_seed);
                const kpc::KpcEstimate est = kpc::kpc_graph(ds, roles, ky, spec, spec,
                                                            kpc::MetricSpec{}, !est_no_clamp);
                j.update(estimate_json(est));
                j["method"] = "graph";
                j["graph"] = {{"kind", est_mst ? "mst" : "knn"},
                              {"k", est_k},
                              {"directed", !est_undirected}};
            } else {
                kpc::RkhsConfig cfg;
                cfg.kernel_y = ky;
                cfg.kernel_x = kernel_from_args(est_kernel_x, est_bandwidth_x, 1.0);
                cfg.kernel_xz = kernel_from_args(est_kernel_xz, est_bandwidth_xz, 1.0);
                cfg.eps(est_eps_schedule ? kpc::RkhsConfig::eps_schedule(ds.n()) : est_eps);
                if (est_rank > 0) cfg.lowrank = kpc::LowRankConfig{-1.0, est_rank};
                kpc::KpcEstimate est;
                if (est_rank > 0) {
                    est = kpc::kpc_rkhs_lowrank(ds, roles, cfg, !est_no_clamp);
                } else if (est_uncentered) {
                    est = kpc::kpc_rkhs_uncentered(ds, roles, cfg, !est_no_clamp);
                } else {
                    est = kpc::kpc_rkhs(ds, roles, cfg, !est_no_clamp);
                }
                j.update(estimate_json(est));
                j["method"] = "rkhs";
                j["eps"] = cfg.eps1;
                if (est_rank > 0) j["rank"] = est_rank;
            }
            emit(j, est_out);
        } else if (*select) {
            const kpc::Dataset ds = load_data(sel_csv);
            const std::size_t y_col = ds.index_of(sel_y);
            json j;
            if (sel_knockoff) {
                std::vector<std::string> x_names = sel_candidates;
                if (x_names.empty())
                    kpc::fail(kpc::errc::invalid_argument,
                              "--knockoff requires --candidates (the X columns)");
                const auto x_cols = column_indices(ds, x_names);
                const auto n = static_cast<Eigen::Index>(ds.n());
                const auto p = static_cast<Eigen::Index>(x_cols.size());
                Eigen::MatrixXd x(n, p);
                for (Eigen::Index c = 0; c < p; ++c) {
                    const auto& v = ds.column(x_cols[static_cast<std::size_t>(c)]).numeric().values;
                    for (Eigen::Index i = 0; i < n; ++i) x(i, c) = v[static_cast<std::size_t>(i)];
                }
                Eigen::MatrixXd xk;
                if (sel_gen_knockoffs) {
                    const Eigen::VectorXd mean = x.colwise().mean();
                    const Eigen::MatrixXd centered = x.rowwise() - mean.transpose();
                    const Eigen::MatrixXd cov =
                        centered.transpose() * centered / static_cast<double>(n - 1);
                    xk = kpc::gaussian_knockoffs(x, mean, cov, sel_seed);
                } else {
                    if (sel_knock_cols.size() != x_names.size())
                        kpc::fail(kpc::errc::invalid_argument,
                                  "--knockoffs must list one column per candidate");
                    const auto k_cols = column_indices(ds, sel_knock_cols);
                    xk.resize(n, p);
                    for (Eigen::Index c = 0; c < p; ++c) {
                        const auto& v =
                            ds.column(k_cols[static_cast<std::size_t>(c)]).numeric().values;
                        for (Eigen::Index i = 0; i < n; ++i)
                            xk(i, c) = v[static_cast<std::size_t>(i)];
                    }
                }
                kpc::KnockoffInput ki;
                ki.x = std::move(x);
                ki.x_knock = std::move(xk);
                ki.y.resize(n);
                const auto& yv = ds.column(y_col).numeric().values;
                for (Eigen::Index i = 0; i < n; ++i) ki.y(i) = yv[static_cast<std::size_t>(i)];
                ki.q = sel_q;
                kpc::KnockoffStatConfig stat_cfg;
                stat_cfg.k = sel_k;
                const std::vector<double> w = kpc::knockoff_w(ki, stat_cfg, sel_seed);
                const kpc::KnockoffSelection sel = kpc::knockoff_select(w, sel_q, sel_plus);
                j["W"] = w;
                j["threshold"] = sel.threshold;
                json names = json::array();
                for (std::size_t idx : sel.selected) names.push_back(x_names[idx]);
                j["selected"] = names;
                j["q"] = sel_q;
                j["plus"] = sel_plus;
            } else {
                std::vector<std::size_t> candidates;
                if (sel_candidates.empty()) {
                    for (std::size_t c = 0; c < ds.num_columns(); ++c) {
                        if (c != y_col) candidates.push_back(c);
                    }
                } else {
                    candidates = column_indices(ds, sel_candidates);
                }
                const std::vector<std::size_t> y_cols = {y_col};
                const kpc::KernelSpec ky = kernel_from_args(sel_kernel, sel_bandwidth, 1.0);
                kpc::SelectionTrace trace;
                if (sel_method == "kfoci") {
                    const kpc::GraphSpec spec = kpc::GraphSpec::knn(sel_k, true, sel_seed);
                    std::optional<std::size_t> cap;
                    if (sel_max_vars > 0) cap = sel_max_vars;
                    trace = kpc::kfoci(ds, y_cols, candidates, ky, spec, kpc::MetricSpec{}, cap);
                } else {
                    if (sel_budget == 0)
                        kpc::fail(kpc::errc::invalid_argument,
                                  "--method rkhs requires --budget");
                    kpc::RkhsConfig cfg;
                    cfg.kernel_y = ky;
                    cfg.eps(sel_eps);
                    trace = kpc::rkhs_forward_select(ds, y_cols, candidates, sel_budget, cfg);
                }
                json order = json::array();
                for (std::size_t c : trace.order) order.push_back(ds.column(c).name);
                j["order"] = order;
                j["objective"] = trace.objective;
                j["stopped_by"] = kpc::stopped_by_name(trace.stopped_by);
            }
            j["seed"] = sel_seed;
            emit(j, sel_out);
        } else if (*test) {
            if (!test_crt)
                kpc::fail(kpc::errc::invalid_argument, "only --crt is available");
            const kpc::Dataset ds = load_data(test_csv);
            kpc::VariableRoles roles;
            roles.y_cols = column_indices(ds, test_y);
            roles.z_cols = column_indices(ds, test_z);
            roles.x_cols = column_indices(ds, test_x);
            if (roles.z_cols.size() != 1)
                kpc::fail(kpc::errc::invalid_argument, "the CLI sampler draws a single Z column");
            kpc::CrtConfig cfg;
            cfg.stat = test_stat == "graph" ? kpc::CrtConfig::Stat::graph
                                            : kpc::CrtConfig::Stat::rkhs;
            cfg.k = test_k;
            cfg.eps = test_eps;
            const kpc::GaussianLinearSampler sampler =
                kpc::GaussianLinearSampler::fit(ds, roles.x_cols, roles.z_cols[0]);
            const kpc::CrtResult result =
                kpc::crt_pvalue(ds, roles, cfg, sampler, test_b, test_seed);
            json j;
            j["pvalue"] = result.pvalue;
            j["statistic"] = result.statistic;
            j["b"] = result.b;
            j["seed"] = test_seed;
            emit(j, test_out);
        } else if (*simulate_cmd) {
            kpc::SimModel model;
            model.name = kpc::sim_model_from_name(sim_model);
            model.n = sim_n;
            model.p = sim_p;
            model.gamma = sim_gamma;
            model.seed = sim_seed;
            const kpc::Dataset ds = kpc::simulate(model);
            kpc::save_csv(ds, sim_out);
            bool non_numeric = false;
            for (const auto& col : ds.columns()) {
                if (col.type() != kpc::ColumnType::numeric) non_numeric = true;
            }
            if (non_numeric) {
                std::ofstream schema(sim_out + ".schema");
                schema << kpc::schema_text(ds);
            }
            json j;
            j["model"] = sim_model;
            j["n"] = sim_n;
            j["seed"] = sim_seed;
            j["out"] = sim_out;
            emit(j, "");
        } else if (*report) {
            std::ifstream in(report_plan);
            if (!in) kpc::fail(kpc::errc::invalid_argument, "cannot open " + report_plan);
            std::ostringstream buf;
            buf << in.rdbuf();
            const kpc::ExperimentPlan plan = kpc::plan_from_config(buf.str());
            const kpc::ExperimentReport rep = kpc::run_experiment(plan);
            const json summary = kpc::report_json(plan, rep);
            if (report_out.empty()) {
                emit(summary, "");
            } else {
                std::ofstream records(report_out + ".records.jsonl");
                for (const auto& r : rep.records) records << kpc::record_json(r).dump() << '\n';
                emit(summary, report_out + ".summary.json");
            }
        }
    } catch (const kpc::Error& e) {
        std::cerr << "error (" << kpc::errc_name(e.code()) << "): " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
