#pragma once

#include <json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "kpc/graph_estimator.hpp"
#include "kpc/inference.hpp"
#include "kpc/simulate.hpp"
#include "kpc/var_select.hpp"

namespace kpc {

// Z | X for the CRT simulation models (exact model-X samplers).
class AdditiveUniformSampler final : public ConditionalSampler {
  public:
    std::size_t z_dim() const override { return 1; }
    void draw(std::span<const double> x, RngStream& rng, std::span<double> z_out) const override {
        z_out[0] = x[0] + rng.uniform(-1.0, 1.0);
    }
};

class MultiplicativeNormalSampler final : public ConditionalSampler {
  public:
    std::size_t z_dim() const override { return 1; }
    void draw(std::span<const double> x, RngStream& rng, std::span<double> z_out) const override {
        z_out[0] = x[0] * rng.normal();
    }
};

struct ExperimentPlan {
    enum class Task { estimate, select, crt };
    enum class Method { graph, rkhs, rkhs_uncentered, rkhs_lowrank };
    enum class Selector { kfoci, rkhs };

    SimModel model;
    Task task = Task::estimate;
    std::size_t replications = 100;
    std::uint64_t seed = 0;

    // estimate
    Method method = Method::graph;
    GraphSpec graph = GraphSpec::knn(1);
    KernelSpec kernel_y = KernelSpec::gaussian();
    RkhsConfig rkhs;
    bool eps_schedule = false;  // eps = 1e-3 n^-0.4 resolved at run time
    bool clamp = false;

    // select
    Selector selector = Selector::kfoci;
    std::size_t budget = 3;
    std::optional<std::size_t> max_vars;
    std::vector<std::string> true_set;  // names, e.g. {"x1","x2","x3"}

    // crt
    CrtConfig crt;
    int b = 100;
    double alpha = 0.05;
};

struct ReplicationRecord {
    std::size_t index = 0;
    double value = 0.0;                  // estimate or p-value
    std::vector<std::string> selected;   // selection tasks
    std::string stopped_by;
};

struct ExperimentSummary {
    std::size_t replications = 0;
    double mean = 0.0;
    double sd = 0.0;
    double q025 = 0.0;
    double median = 0.0;
    double q975 = 0.0;
    // selection tasks
    double exact_recovery = 0.0;
    double contains_true = 0.0;
    double avg_selected = 0.0;
    // crt tasks
    double rejection_rate = 0.0;
};

struct ExperimentReport {
    std::vector<ReplicationRecord> records;
    ExperimentSummary summary;
    std::uint64_t config_hash = 0;
    std::uint64_t seed = 0;
};

// R independent seeded replications (replication r draws from stream
// (seed, r)), merged in replication order. The summary is a pure function of
// the records.
ExperimentReport run_experiment(const ExperimentPlan& plan);

ExperimentSummary summarize(const ExperimentPlan& plan,
                            const std::vector<ReplicationRecord>& records);

nlohmann::json record_json(const ReplicationRecord& r);
nlohmann::json report_json(const ExperimentPlan& plan, const ExperimentReport& report);
nlohmann::json plan_json(const ExperimentPlan& plan);
ExperimentPlan plan_from_config(const std::string& key_value_text);

}  // namespace kpc
