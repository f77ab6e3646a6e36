#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "szero/baselines.hpp"
#include "szero/dataset.hpp"
#include "szero/sigma_zero.hpp"

namespace szero {

/// Which attack to run and how. RandomSparse seeds are offset by the sample
/// index so every sample draws an independent stream.
struct AttackSpec {
    std::variant<AttackConfig, BaselineConfig> config;

    std::string name() const;
    std::size_t steps() const;
    std::optional<std::size_t> budget_k() const;
    AttackResult run(const Model& model, const Tensor& x, std::size_t y, std::size_t index) const;
    nlohmann::json to_json() const;
};

/// A budget k (nullopt = infinity) and the fraction of samples with l0 <= k.
struct CurvePoint {
    std::optional<std::size_t> k;
    double asr = 0.0;

    friend bool operator==(const CurvePoint&, const CurvePoint&) = default;
};

struct SampleSummary {
    std::size_t index = 0;
    std::size_t label = 0;
    bool clean_correct = true;
    std::optional<std::size_t> l0;  // nullopt = attack failed
    std::size_t forwards = 0;
    std::size_t backwards = 0;
    std::optional<std::size_t> iterations_to_first_adv;
    bool early_stopped = false;
    double runtime_s = 0.0;
    /// Nonzero components of the best perturbation as (index, value).
    std::vector<std::pair<std::size_t, double>> witness;
};

struct EvalReport {
    std::string attack;
    std::size_t steps = 0;
    std::optional<std::size_t> budget_k;
    nlohmann::json config_echo;
    std::vector<SampleSummary> per_sample;
    std::vector<CurvePoint> asr_curve;  // k_grid entries, then k = infinity
    std::optional<std::size_t> median_l0;
    double asr_inf = 0.0;
    double clean_error = 0.0;
    double mean_forwards = 0.0;
    double mean_backwards = 0.0;
    double mean_runtime_s = 0.0;

    /// ASR at budget k, computed from per_sample.
    double asr_at(std::size_t k) const;
};

/// ASR_k for each k in the grid plus a final k = infinity point.
std::vector<CurvePoint> asr_curve(const std::vector<std::optional<std::size_t>>& l0s,
                                  const std::vector<std::size_t>& k_grid);

/// Median with infinity (nullopt) larger than every integer. For even counts
/// the lower middle value is taken if either middle value is infinite,
/// otherwise the floor of their mean.
std::optional<std::size_t> median_l0(std::vector<std::optional<std::size_t>> l0s);

struct EvalOptions {
    /// Dataset indices to attack; empty means every sample.
    std::vector<std::size_t> indices;
    std::size_t workers = 1;
};

/// Attacks every selected sample and aggregates the metrics. Samples run on
/// a pool of `workers` threads; results are ordered by sample index so the
/// report does not depend on scheduling.
EvalReport evaluate(const Model& model, const Dataset& data, const AttackSpec& spec,
                    const std::vector<std::size_t>& k_grid, const EvalOptions& options = {});

/// First `count` indices from `offset` on that the model classifies correctly.
std::vector<std::size_t> select_correct(const Model& model, const Dataset& data, std::size_t count,
                                        std::size_t offset = 0);

nlohmann::json report_to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& j);

/// Copy of a report JSON with wall-clock fields removed.
nlohmann::json without_runtime(nlohmann::json j);

void write_report(const EvalReport& report, const std::filesystem::path& path);
EvalReport read_report(const std::filesystem::path& path);

/// CSV with header `k,asr`, one row per curve point; infinity is `inf`.
/// Values use shortest round-trip formatting.
void write_curve_csv(const std::vector<CurvePoint>& curve, const std::filesystem::path& path);
std::vector<CurvePoint> read_curve_csv(const std::filesystem::path& path);

/// Line chart of ASR against the l0 budget. Infinity is not plotted.
void write_curve_svg(const std::vector<CurvePoint>& curve, const std::filesystem::path& path);

struct QueryAudit {
    std::size_t samples = 0;
    double mean_queries = 0.0;
    /// 2N + 1 for unbudgeted sigma-zero runs.
    std::optional<std::size_t> expected_per_sample;
};

/// Recomputes mean queries from the per-sample counters and checks them
/// against the stored means and the attack's counting rules. Throws
/// IntegrityError on any mismatch.
QueryAudit query_audit(const EvalReport& report);

/// Re-runs a forward pass on every reported success and checks it is in the
/// box and misclassified. Throws IntegrityError on the first failure.
void verify_report_witnesses(const Model& model, const Dataset& data, const EvalReport& report);

}  // namespace szero
