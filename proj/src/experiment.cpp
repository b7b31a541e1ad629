#include "kpc/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <map>
#include <memory>
#include <sstream>

#include "kpc/error.hpp"
#include "kpc/numeric.hpp"
#include "kpc/rng.hpp"
#include "kpc/parallel.hpp"

namespace kpc {

namespace {

VariableRoles roles_for(const SimModel& model, const Dataset& ds) {
    VariableRoles roles;
    roles.y_cols = {ds.index_of("y")};
    if (ds.has_column("z")) {
        roles.z_cols = {ds.index_of("z")};
        roles.x_cols = {ds.index_of("x")};
    }
    (void)model;
    return roles;
}

std::vector<std::size_t> candidate_cols(const Dataset& ds) {
    std::vector<std::size_t> cols;
    for (std::size_t c = 0; c < ds.num_columns(); ++c) {
        if (ds.column(c).name != "y") cols.push_back(c);
    }
    return cols;
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
    if (sorted.empty()) return 0.0;
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = static_cast<std::size_t>(std::ceil(pos));
    const double frac = pos - std::floor(pos);
    return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
}

std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

ReplicationRecord run_one(const ExperimentPlan& plan, std::size_t r) {
    SimModel model = plan.model;
    model.seed = RngStream::derive_key(plan.seed, {stream_tag::replication, r});
    const Dataset ds = simulate(model);
    const std::uint64_t rep_seed = RngStream::derive_key(plan.seed, {stream_tag::replication, r, 1});

    ReplicationRecord record;
    record.index = r;

    switch (plan.task) {
        case ExperimentPlan::Task::estimate: {
            const VariableRoles roles = roles_for(model, ds);
            if (plan.method == ExperimentPlan::Method::graph) {
                GraphSpec spec = plan.graph;
                spec.seed = rep_seed;
                record.value =
                    kpc_graph(ds, roles, plan.kernel_y, spec, spec, MetricSpec{}, plan.clamp)
                        .value;
            } else {
                RkhsConfig cfg = plan.rkhs;
                if (plan.eps_schedule) cfg.eps(RkhsConfig::eps_schedule(ds.n()));
                if (plan.method == ExperimentPlan::Method::rkhs) {
                    record.value = kpc_rkhs(ds, roles, cfg, plan.clamp).value;
                } else if (plan.method == ExperimentPlan::Method::rkhs_uncentered) {
                    record.value = kpc_rkhs_uncentered(ds, roles, cfg, plan.clamp).value;
                } else {
                    record.value = kpc_rkhs_lowrank(ds, roles, cfg, plan.clamp).value;
                }
            }
            break;
        }
        case ExperimentPlan::Task::select: {
            const std::vector<std::size_t> candidates = candidate_cols(ds);
            const std::vector<std::size_t> y_cols = {ds.index_of("y")};
            SelectionTrace trace;
            if (plan.selector == ExperimentPlan::Selector::kfoci) {
                GraphSpec spec = plan.graph;
                spec.seed = rep_seed;
                trace = kfoci(ds, y_cols, candidates, plan.kernel_y, spec, MetricSpec{},
                              plan.max_vars);
            } else {
                RkhsConfig cfg = plan.rkhs;
                trace = rkhs_forward_select(ds, y_cols, candidates, plan.budget, cfg);
            }
            record.value = static_cast<double>(trace.order.size());
            record.stopped_by = stopped_by_name(trace.stopped_by);
            for (std::size_t c : trace.order) record.selected.push_back(ds.column(c).name);
            break;
        }
        case ExperimentPlan::Task::crt: {
            const VariableRoles roles = roles_for(model, ds);
            std::unique_ptr<ConditionalSampler> sampler;
            if (model.name == SimModelName::crt_additive) {
                sampler = std::make_unique<AdditiveUniformSampler>();
            } else if (model.name == SimModelName::crt_multiplicative) {
                sampler = std::make_unique<MultiplicativeNormalSampler>();
            } else {
                fail(errc::invalid_argument, "CRT task requires a crt_* model");
            }
            record.value = crt_pvalue(ds, roles, plan.crt, *sampler, plan.b, rep_seed).pvalue;
            break;
        }
    }
    return record;
}

}  // namespace

ExperimentSummary summarize(const ExperimentPlan& plan,
                            const std::vector<ReplicationRecord>& records) {
    ExperimentSummary s;
    s.replications = records.size();
    if (records.empty()) return s;

    std::vector<double> values;
    values.reserve(records.size());
    for (const auto& r : records) values.push_back(r.value);
    s.mean = pairwise_sum(values) / static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.sd = values.size() > 1 ? std::sqrt(ss / static_cast<double>(values.size() - 1)) : 0.0;
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    s.q025 = quantile_sorted(sorted, 0.025);
    s.median = quantile_sorted(sorted, 0.5);
    s.q975 = quantile_sorted(sorted, 0.975);

    if (plan.task == ExperimentPlan::Task::select) {
        const std::set<std::string> truth(plan.true_set.begin(), plan.true_set.end());
        std::size_t exact = 0;
        std::size_t contains = 0;
        double total = 0.0;
        for (const auto& r : records) {
            const std::set<std::string> picked(r.selected.begin(), r.selected.end());
            if (!truth.empty()) {
                if (picked == truth) ++exact;
                if (std::includes(picked.begin(), picked.end(), truth.begin(), truth.end()))
                    ++contains;
            }
            total += static_cast<double>(r.selected.size());
        }
        const double reps = static_cast<double>(records.size());
        s.exact_recovery = static_cast<double>(exact) / reps;
        s.contains_true = static_cast<double>(contains) / reps;
        s.avg_selected = total / reps;
    }
    if (plan.task == ExperimentPlan::Task::crt) {
        std::size_t rejections = 0;
        for (const auto& r : records) {
            if (r.value <= plan.alpha) ++rejections;
        }
        s.rejection_rate = static_cast<double>(rejections) / static_cast<double>(records.size());
    }
    return s;
}

ExperimentReport run_experiment(const ExperimentPlan& plan) {
    ExperimentReport report;
    report.seed = plan.seed;
    report.config_hash = fnv1a(plan_json(plan).dump());
    report.records.resize(plan.replications);
    parallel_for(plan.replications, [&](std::size_t r) { report.records[r] = run_one(plan, r); });
    report.summary = summarize(plan, report.records);
    return report;
}

nlohmann::json record_json(const ReplicationRecord& r) {
    nlohmann::json j;
    j["index"] = r.index;
    j["value"] = r.value;
    if (!r.selected.empty()) j["selected"] = r.selected;
    if (!r.stopped_by.empty()) j["stopped_by"] = r.stopped_by;
    return j;
}

namespace {

nlohmann::json kernel_json(const KernelSpec& k) {
    nlohmann::json j;
    j["family"] = kernel_family_name(k.family);
    if (k.family == KernelFamily::gaussian || k.family == KernelFamily::laplace) {
        if (k.bandwidth.kind == BandwidthRule::Kind::median) {
            j["bandwidth"] = "median";
        } else {
            j["bandwidth"] = k.bandwidth.value;
        }
    }
    if (k.family == KernelFamily::distance) j["alpha"] = k.alpha;
    return j;
}

}  // namespace

nlohmann::json plan_json(const ExperimentPlan& plan) {
    nlohmann::json j;
    j["model"] = sim_model_name(plan.model.name);
    j["n"] = plan.model.n;
    j["p"] = plan.model.p;
    j["gamma"] = plan.model.gamma;
    j["replications"] = plan.replications;
    j["seed"] = plan.seed;
    switch (plan.task) {
        case ExperimentPlan::Task::estimate: {
            j["task"] = "estimate";
            const char* method = plan.method == ExperimentPlan::Method::graph ? "graph"
                                 : plan.method == ExperimentPlan::Method::rkhs ? "rkhs"
                                 : plan.method == ExperimentPlan::Method::rkhs_uncentered
                                     ? "rkhs_uncentered"
                                     : "rkhs_lowrank";
            j["method"] = method;
            if (plan.method == ExperimentPlan::Method::graph) {
                j["graph"] = {{"kind", plan.graph.kind == GraphSpec::Kind::mst ? "mst" : "knn"},
                              {"k", plan.graph.k},
                              {"directed", plan.graph.directed}};
                j["kernel_y"] = kernel_json(plan.kernel_y);
            } else {
                j["eps"] = plan.eps_schedule ? nlohmann::json("schedule")
                                             : nlohmann::json(plan.rkhs.eps1);
                j["kernel_y"] = kernel_json(plan.rkhs.kernel_y);
                j["kernel_x"] = kernel_json(plan.rkhs.kernel_x);
                j["kernel_xz"] = kernel_json(plan.rkhs.kernel_xz);
            }
            break;
        }
        case ExperimentPlan::Task::select:
            j["task"] = "select";
            j["selector"] = plan.selector == ExperimentPlan::Selector::kfoci ? "kfoci" : "rkhs";
            j["k"] = plan.graph.k;
            j["budget"] = plan.budget;
            j["kernel_y"] = kernel_json(plan.kernel_y);
            break;
        case ExperimentPlan::Task::crt:
            j["task"] = "crt";
            j["stat"] = plan.crt.stat == CrtConfig::Stat::graph ? "graph" : "rkhs";
            j["b"] = plan.b;
            j["alpha"] = plan.alpha;
            break;
    }
    return j;
}

nlohmann::json report_json(const ExperimentPlan& plan, const ExperimentReport& report) {
    nlohmann::json j;
    j["plan"] = plan_json(plan);
    j["config_hash"] = report.config_hash;
    j["seed"] = report.seed;
    nlohmann::json s;
    s["replications"] = report.summary.replications;
    s["mean"] = report.summary.mean;
    s["sd"] = report.summary.sd;
    s["q025"] = report.summary.q025;
    s["median"] = report.summary.median;
    s["q975"] = report.summary.q975;
    if (plan.task == ExperimentPlan::Task::select) {
        s["exact_recovery"] = report.summary.exact_recovery;
        s["contains_true"] = report.summary.contains_true;
        s["avg_selected"] = report.summary.avg_selected;
    }
    if (plan.task == ExperimentPlan::Task::crt) {
        s["rejection_rate"] = report.summary.rejection_rate;
        s["alpha"] = plan.alpha;
    }
    j["summary"] = s;
    return j;
}

ExperimentPlan plan_from_config(const std::string& key_value_text) {
    std::istringstream in(key_value_text);
    std::string line;
    ExperimentPlan plan;
    auto bad = [](const std::string& what) {
        fail(errc::invalid_argument, "plan config: " + what);
    };
    std::map<std::string, std::string> kv;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) continue;
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            if (b == std::string::npos) return std::string();
            const auto e = s.find_last_not_of(" \t\r");
            return s.substr(b, e - b + 1);
        };
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    auto get = [&](const std::string& key) -> std::optional<std::string> {
        const auto it = kv.find(key);
        if (it == kv.end()) return std::nullopt;
        return it->second;
    };

    if (const auto v = get("model")) plan.model.name = sim_model_from_name(*v);
    if (const auto v = get("n")) plan.model.n = std::stoul(*v);
    if (const auto v = get("p")) plan.model.p = std::stoul(*v);
    if (const auto v = get("gamma")) plan.model.gamma = std::stod(*v);
    if (const auto v = get("replications")) plan.replications = std::stoul(*v);
    if (const auto v = get("seed")) plan.seed = std::stoull(*v);
    if (const auto v = get("task")) {
        if (*v == "estimate") {
            plan.task = ExperimentPlan::Task::estimate;
        } else if (*v == "select") {
            plan.task = ExperimentPlan::Task::select;
        } else if (*v == "crt") {
            plan.task = ExperimentPlan::Task::crt;
        } else {
            bad("unknown task " + *v);
        }
    }
    if (const auto v = get("method")) {
        if (*v == "graph") {
            plan.method = ExperimentPlan::Method::graph;
        } else if (*v == "rkhs") {
            plan.method = ExperimentPlan::Method::rkhs;
        } else if (*v == "rkhs_uncentered") {
            plan.method = ExperimentPlan::Method::rkhs_uncentered;
        } else if (*v == "rkhs_lowrank") {
            plan.method = ExperimentPlan::Method::rkhs_lowrank;
        } else {
            bad("unknown method " + *v);
        }
    }
    if (const auto v = get("selector"))
        plan.selector = (*v == "rkhs") ? ExperimentPlan::Selector::rkhs
                                       : ExperimentPlan::Selector::kfoci;
    if (const auto v = get("k")) plan.graph.k = std::stoi(*v);
    if (const auto v = get("mst"); v && *v == "true") plan.graph.kind = GraphSpec::Kind::mst;
    if (const auto v = get("budget")) plan.budget = std::stoul(*v);
    if (const auto v = get("max_vars")) plan.max_vars = std::stoul(*v);
    if (const auto v = get("b")) plan.b = std::stoi(*v);
    if (const auto v = get("alpha")) plan.alpha = std::stod(*v);
    if (const auto v = get("clamp")) plan.clamp = (*v == "true");
    if (const auto v = get("true_set")) {
        std::istringstream names(*v);
        std::string name;
        while (std::getline(names, name, ',')) {
            if (!name.empty()) plan.true_set.push_back(name);
        }
    }
    auto parse_kernel = [&](const std::string& prefix,
                            KernelSpec& out) {
        if (const auto fam = get(prefix)) {
            KernelSpec spec;
            spec.family = kernel_family_from_name(*fam);
            if (const auto bw = get(prefix + "_bandwidth")) {
                spec.bandwidth = (*bw == "median") ? BandwidthRule::median()
                                                   : BandwidthRule::fixed(std::stod(*bw));
            }
            if (const auto a = get(prefix + "_alpha")) spec.alpha = std::stod(*a);
            out = spec;
        }
    };
    parse_kernel("kernel_y", plan.kernel_y);
    parse_kernel("kernel_y", plan.rkhs.kernel_y);
    parse_kernel("kernel_x", plan.rkhs.kernel_x);
    parse_kernel("kernel_xz", plan.rkhs.kernel_xz);
    if (const auto v = get("eps")) {
        if (*v == "schedule") {
            plan.eps_schedule = true;
        } else {
            plan.rkhs.eps(std::stod(*v));
        }
    }
    if (const auto v = get("crt_stat"))
        plan.crt.stat = (*v == "graph") ? CrtConfig::Stat::graph : CrtConfig::Stat::rkhs;
    if (const auto v = get("crt_k")) plan.crt.k = std::stoi(*v);
    if (const auto v = get("crt_eps")) plan.crt.eps = std::stod(*v);
    return plan;
}

}  // namespace kpc
