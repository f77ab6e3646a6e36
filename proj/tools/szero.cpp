// Command-line entry point: train desk models, run attacks and sweeps,
// certify with the brute-force oracle, audit reports and export curves.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "cli_support.hpp"
#include "szero/container.hpp"
#include "szero/errors.hpp"
#include "szero/eval.hpp"
#include "szero/oracle.hpp"
#include "szero/train.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace szero;
using namespace szero::cli;

namespace {

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string l0_text(const std::optional<std::size_t>& v) { return v ? std::to_string(*v) : "inf"; }

struct DataFlags {
    std::string data;
    std::string labels;
    std::size_t n = 100;
    std::size_t offset = 0;
    bool correct_only = false;

    void add(CLI::App* app) {
        app->add_option("--data", data, "IDX image file or CSV dataset")->required();
        app->add_option("--labels", labels, "IDX label file (derived from --data when omitted)");
        app->add_option("--n", n, "number of samples to attack")->capture_default_str();
        app->add_option("--offset", offset, "first sample index considered")->capture_default_str();
        app->add_flag("--correct-only", correct_only, "skip samples the model misclassifies");
    }

    json to_json() const {
        return {{"data", data}, {"labels", labels}, {"n", n}, {"offset", offset}, {"correct_only", correct_only}};
    }

    std::vector<std::size_t> select(const Model& model, const Dataset& ds) const {
        if (n == 0) throw UsageError("--n must be at least 1");
        std::vector<std::size_t> out;
        if (correct_only) {
            out = select_correct(model, ds, n, offset);
        } else {
            for (std::size_t i = offset; i < ds.size() && out.size() < n; ++i) out.push_back(i);
        }
        if (out.empty()) throw ConfigError("no samples selected");
        return out;
    }
};

struct SigmaFlags {
    std::size_t steps = 1000;
    double eta0 = 1.0;
    double sigma = 1e-3;
    double tau0 = 0.3;
    double t = 0.01;
    long long budget_k = -1;
    CLI::Option* budget_opt = nullptr;
    bool no_normalize = false;
    bool no_adaptive_tau = false;
    bool no_projection = false;

    void add(CLI::App* app) {
        app->add_option("--steps", steps, "iterations N")->capture_default_str();
        app->add_option("--eta0", eta0, "initial step size")->capture_default_str();
        app->add_option("--sigma", sigma, "l0 surrogate smoothing")->capture_default_str();
        app->add_option("--tau0", tau0, "initial sparsity threshold")->capture_default_str();
        app->add_option("--t", t, "threshold adjustment factor")->capture_default_str();
        budget_opt = app->add_option("--budget-k", budget_k, "fixed budget k; enables early stop");
        app->add_flag("--no-normalize", no_normalize, "disable gradient normalization");
        app->add_flag("--no-adaptive-tau", no_adaptive_tau, "keep tau fixed at tau0");
        app->add_flag("--no-projection", no_projection, "disable the sparsity projection");
    }

    std::optional<std::size_t> budget() const {
        if (!budget_opt || budget_opt->count() == 0) return std::nullopt;
        if (budget_k < 0) throw UsageError("--budget-k must be nonnegative");
        return static_cast<std::size_t>(budget_k);
    }

    AttackConfig config() const {
        AttackConfig c;
        c.steps = steps;
        c.eta0 = eta0;
        c.sigma = sigma;
        c.tau0 = tau0;
        c.t = t;
        c.budget_k = budget();
        c.grad_normalization = !no_normalize;
        c.adaptive_tau = !no_adaptive_tau;
        c.projection = !no_projection;
        try {
            c.validate();
        } catch (const ConfigError& e) {
            throw UsageError(e.what());
        }
        return c;
    }

    json to_json() const {
        return {{"steps", steps},
                {"eta0", eta0},
                {"sigma", sigma},
                {"tau0", tau0},
                {"t", t},
                {"budget_k", budget_opt && budget_opt->count() ? json(budget_k) : json(nullptr)},
                {"no_normalize", no_normalize},
                {"no_adaptive_tau", no_adaptive_tau},
                {"no_projection", no_projection}};
    }
};

std::vector<std::size_t> default_k_grid() { return {0, 1, 2, 3, 5, 10, 15, 20, 24, 30, 50, 100}; }

fs::path prepare_out(const std::string& out) {
    if (out.empty()) throw UsageError("--out is required");
    fs::create_directories(out);
    return fs::path(out);
}

void print_report(const EvalReport& r) {
    std::cout << r.attack << ": samples=" << r.per_sample.size() << " ASR_inf=" << r.asr_inf
              << " median_l0=" << l0_text(r.median_l0) << " mean_queries="
              << r.mean_forwards + r.mean_backwards << " clean_error=" << r.clean_error << '\n';
    for (const auto& p : r.asr_curve) {
        std::cout << "  ASR_" << l0_text(p.k) << " = " << p.asr << '\n';
    }
}

// ---------------------------------------------------------------- train

struct TrainFlags {
    std::string data, labels, test_data, test_labels;
    std::string arch = "mlp:784-64-10";
    TrainOptions opts;
    std::string out;
};

int run_train(TrainFlags& f) {
    const fs::path out = prepare_out(f.out);
    auto train_data = load_dataset(f.data, f.labels);
    std::optional<LoadedData> test_data;
    if (!f.test_data.empty()) test_data = load_dataset(f.test_data, f.test_labels);

    const Model tmpl = parse_arch(f.arch);
    const TrainResult r = train(tmpl, train_data.data, test_data ? &test_data->data : nullptr, f.opts);
    save_model(r.model, out / "model.szm");

    json summary = {{"train_accuracy", r.train_accuracy},
                    {"test_accuracy", r.test_accuracy ? json(*r.test_accuracy) : json(nullptr)},
                    {"epoch_loss", r.epoch_loss}};
    std::ofstream(out / "training.json") << summary.dump(2) << '\n';

    json flags = {{"data", f.data},          {"labels", f.labels},       {"test_data", f.test_data},
                  {"test_labels", f.test_labels}, {"arch", f.arch},        {"epochs", f.opts.epochs},
                  {"lr", f.opts.lr},          {"batch_size", f.opts.batch_size}, {"seed", f.opts.seed}};
    json extra = {{"seeds", {{"train", f.opts.seed}}},
                  {"dataset_sha256", train_data.sha256},
                  {"model_sha256", sha256_file(out / "model.szm")}};
    if (test_data) extra["test_dataset_sha256"] = test_data->sha256;
    write_manifest(out, "train", flags, extra);

    std::cout << "train accuracy " << r.train_accuracy;
    if (r.test_accuracy) std::cout << ", test accuracy " << *r.test_accuracy;
    std::cout << "\nwrote " << (out / "model.szm").string() << '\n';
    return kOk;
}

// ---------------------------------------------------------------- synth

struct SynthFlags {
    std::string kind = "two_gaussians";
    std::size_t n = 200;
    std::uint64_t seed = 0;
    std::string out;
};

int run_synth(const SynthFlags& f) {
    const fs::path out = prepare_out(f.out);
    SynthKind kind;
    try {
        kind = parse_synth_kind(f.kind);
    } catch (const ConfigError& e) {
        throw UsageError(e.what());
    }
    const SynthDataset s = synth2d(kind, f.n, f.seed);
    save_csv(s.data, out / "data.csv");
    std::ofstream(out / "generator.json") << s.record.dump(2) << '\n';
    write_manifest(out, "synth", {{"kind", f.kind}, {"n", f.n}, {"seed", f.seed}},
                   {{"seeds", {{"generator", f.seed}}}, {"dataset_sha256", sha256_file(out / "data.csv")}});
    std::cout << "wrote " << f.n << " samples to " << (out / "data.csv").string() << '\n';
    return kOk;
}

// ---------------------------------------------------------------- attack

struct AttackFlags {
    std::string model;
    DataFlags data;
    SigmaFlags sigma;
    std::string attack = "sigma-zero";
    double step = 0.5;
    std::size_t restarts = 0;
    std::uint64_t seed = 0;
    std::vector<std::size_t> k_grid = default_k_grid();
    std::optional<std::size_t> workers;
    std::string out;
    bool svg = false;
};

AttackSpec build_spec(const AttackFlags& f) {
    if (f.attack == "sigma-zero") return AttackSpec{f.sigma.config()};
    BaselineConfig b;
    if (f.attack == "topk-pgd") {
        b.kind = BaselineKind::TopKPGD;
    } else if (f.attack == "random-sparse") {
        b.kind = BaselineKind::RandomSparse;
    } else {
        throw UsageError("unknown --attack '" + f.attack + "'");
    }
    const auto k = f.sigma.budget();
    if (!k) throw UsageError("--attack " + f.attack + " requires --budget-k");
    b.budget_k = *k;
    b.steps = f.sigma.steps;
    b.step = f.step;
    b.restarts = f.restarts;
    b.seed = f.seed;
    if (b.steps < 1 || !(b.step > 0)) throw UsageError("--steps and --step must be positive");
    return AttackSpec{b};
}

int run_attack(AttackFlags& f) {
    std::sort(f.k_grid.begin(), f.k_grid.end());
    const AttackSpec spec = build_spec(f);
    const fs::path out = prepare_out(f.out);
    const Model model = load_model(f.model);
    const LoadedData data = load_dataset(f.data.data, f.data.labels);
    const auto indices = f.data.select(model, data.data);

    EvalOptions opts{indices, resolve_workers(f.workers)};
    EvalReport report = evaluate(model, data.data, spec, f.k_grid, opts);
    const std::string model_hash = sha256_file(f.model);
    report.config_echo["model"] = f.model;
    report.config_echo["model_sha256"] = model_hash;
    report.config_echo["dataset_sha256"] = data.sha256;

    write_report(report, out / "report.json");
    write_curve_csv(report.asr_curve, out / "curve.csv");
    if (f.svg) write_curve_svg(report.asr_curve, out / "curve.svg");

    json flags = f.sigma.to_json();
    flags.update(f.data.to_json());
    flags.update({{"model", f.model},
                  {"attack", f.attack},
                  {"step", f.step},
                  {"restarts", f.restarts},
                  {"seed", f.seed},
                  {"k_grid", f.k_grid},
                  {"workers", opts.workers},
                  {"out", f.out},
                  {"svg", f.svg}});
    write_manifest(out, "attack", flags,
                   {{"seeds", {{"attack", f.seed}}},
                    {"model_sha256", model_hash},
                    {"dataset_sha256", data.sha256},
                    {"attack_config", spec.to_json()}});
    print_report(report);
    return kOk;
}

// ---------------------------------------------------------------- sweep

struct SweepFlags {
    std::string model;
    DataFlags data;
    SigmaFlags base;
    std::vector<double> sigmas{1e-3};
    std::vector<double> tau0s{0.3};
    std::vector<double> ts{0.01};
    std::size_t max_cells = 200;
    bool allow_large = false;
    std::optional<std::size_t> workers;
    std::string out;
};

std::string cell_label(double sigma, double tau0, double t) {
    if (sigma == 1e-3 && tau0 == 0.3 && t == 0.01) return "default";
    if (sigma == 1.0 && tau0 == 0.1 && t == 0.01) return "l0-robust";
    return "";
}

int run_sweep(SweepFlags& f) {
    const std::size_t cells = f.sigmas.size() * f.tau0s.size() * f.ts.size();
    if (cells == 0) throw UsageError("every sweep axis needs at least one value");
    if (cells > f.max_cells && !f.allow_large) {
        throw UsageError("sweep has " + std::to_string(cells) + " cells, above the limit of " +
                         std::to_string(f.max_cells) + " (pass --allow-large-grid to override)");
    }
    AttackConfig base = f.base.config();
    const fs::path out = prepare_out(f.out);
    const Model model = load_model(f.model);
    const LoadedData data = load_dataset(f.data.data, f.data.labels);
    const auto indices = f.data.select(model, data.data);
    const std::string model_hash = sha256_file(f.model);
    EvalOptions opts{indices, resolve_workers(f.workers)};

    std::vector<std::size_t> k_grid = default_k_grid();
    std::ofstream summary(out / "summary.csv");
    summary << "cell,label,sigma,tau0,t,asr_24,asr_50,asr_100,median_l0\n";
    double asr50_min = 1.0, asr50_max = 0.0;
    std::size_t cell = 0;
    for (double sigma : f.sigmas) {
        for (double tau0 : f.tau0s) {
            for (double t : f.ts) {
                AttackConfig c = base;
                c.sigma = sigma;
                c.tau0 = tau0;
                c.t = t;
                try {
                    c.validate();
                } catch (const ConfigError& e) {
                    throw UsageError(e.what());
                }
                EvalReport r = evaluate(model, data.data, AttackSpec{c}, k_grid, opts);
                r.config_echo["model_sha256"] = model_hash;
                r.config_echo["dataset_sha256"] = data.sha256;
                std::ostringstream name;
                name << "report_cell_" << std::setw(3) << std::setfill('0') << cell << ".json";
                write_report(r, out / name.str());
                const double a50 = r.asr_at(50);
                asr50_min = std::min(asr50_min, a50);
                asr50_max = std::max(asr50_max, a50);
                summary << cell << ',' << cell_label(sigma, tau0, t) << ',' << sigma << ',' << tau0
                        << ',' << t << ',' << r.asr_at(24) << ',' << a50 << ',' << r.asr_at(100) << ','
                        << l0_text(r.median_l0) << '\n';
                std::cout << "cell " << cell << " sigma=" << sigma << " tau0=" << tau0 << " t=" << t
                          << " ASR_50=" << a50 << " median_l0=" << l0_text(r.median_l0) << '\n';
                ++cell;
            }
        }
    }
    std::cout << "ASR_50 spread across the sweep: " << asr50_max - asr50_min << '\n';

    json flags = f.base.to_json();
    flags.update(f.data.to_json());
    flags.update({{"model", f.model},
                  {"sweep_sigma", f.sigmas},
                  {"sweep_tau0", f.tau0s},
                  {"sweep_t", f.ts},
                  {"max_cells", f.max_cells},
                  {"allow_large_grid", f.allow_large},
                  {"workers", opts.workers},
                  {"out", f.out}});
    write_manifest(out, "sweep", flags,
                   {{"seeds", json::object()},
                    {"model_sha256", model_hash},
                    {"dataset_sha256", data.sha256},
                    {"cells", cells},
                    {"asr50_spread", asr50_max - asr50_min}});
    return kOk;
}

// ---------------------------------------------------------------- oracle

struct OracleFlags {
    std::string model;
    DataFlags data;
    SigmaFlags sigma;
    std::size_t max_support = 2;
    std::vector<double> grid{0.0, 1.0};
    std::string check;
    std::string out;
};

// Dominance: sigma-zero can never beat the exhaustive optimum.
std::vector<std::size_t> dominance_violations(const json& cert) {
    std::vector<std::size_t> bad;
    const std::size_t max_support = cert.at("max_support").get<std::size_t>();
    for (const auto& s : cert.at("samples")) {
        const auto& k = s.at("k_min");
        const auto& l0 = s.at("l0_star");
        if (l0.is_null()) continue;
        const std::size_t v = l0.get<std::size_t>();
        const bool violated = k.is_null() ? v <= max_support : v < k.get<std::size_t>();
        if (violated) bad.push_back(s.at("index").get<std::size_t>());
    }
    return bad;
}

int report_dominance(const json& cert) {
    const auto bad = dominance_violations(cert);
    if (!bad.empty()) {
        std::cerr << "dominance violated for " << bad.size() << " sample(s), first index " << bad.front() << '\n';
        return kInvariantViolation;
    }
    std::cout << "dominance holds for " << cert.at("samples").size() << " sample(s)\n";
    return kOk;
}

int run_oracle(OracleFlags& f) {
    if (!f.check.empty()) {
        std::ifstream in(f.check);
        if (!in) throw IoError("cannot open " + f.check);
        json cert;
        try {
            in >> cert;
            return report_dominance(cert);
        } catch (const json::exception& e) {
            throw ParseError(f.check + ": " + e.what());
        }
    }
    if (f.model.empty() || f.data.data.empty()) throw UsageError("--model and --data are required");
    const AttackConfig cfg = f.sigma.config();
    OracleConfig oc;
    oc.max_support = f.max_support;
    oc.grid_levels = f.grid;
    try {
        oc.validate();
    } catch (const ConfigError& e) {
        throw UsageError(e.what());
    }
    const fs::path out = prepare_out(f.out);
    const Model model = load_model(f.model);
    const LoadedData data = load_dataset(f.data.data, f.data.labels);
    if (model.input_size() > oc.feature_limit) {
        throw UsageError("input size " + std::to_string(model.input_size()) +
                         " exceeds the oracle feature limit of " + std::to_string(oc.feature_limit));
    }
    const auto indices = f.data.select(model, data.data);

    json samples = json::array();
    std::size_t equal = 0, solved = 0;
    for (std::size_t idx : indices) {
        const Tensor x = data.data.sample(idx);
        const std::size_t y = data.data.labels[idx];
        const OracleResult o = min_l0_bruteforce(model, x, y, oc);
        const AttackResult r = sigma_zero_attack(model, x, y, cfg);
        if (o.k_min) {
            ++solved;
            equal += r.l0_star == o.k_min;
        }
        samples.push_back({{"index", idx},
                           {"label", y},
                           {"k_min", o.k_min ? json(*o.k_min) : json(nullptr)},
                           {"l0_star", r.l0_star ? json(*r.l0_star) : json(nullptr)}});
        std::cout << "sample " << idx << ": k_min=" << l0_text(o.k_min) << " sigma-zero=" << l0_text(r.l0_star) << '\n';
    }
    json cert = {{"max_support", oc.max_support},
                 {"grid_levels", oc.grid_levels},
                 {"samples", samples},
                 {"solved", solved},
                 {"sigma_zero_equals_k_min", equal}};
    const bool ok = dominance_violations(cert).empty();
    cert["dominance_holds"] = ok;
    std::ofstream(out / "certification.json") << cert.dump(2) << '\n';

    json flags = f.sigma.to_json();
    flags.update(f.data.to_json());
    flags.update({{"model", f.model}, {"max_support", f.max_support}, {"grid", f.grid}, {"out", f.out}});
    write_manifest(out, "oracle", flags,
                   {{"seeds", json::object()},
                    {"model_sha256", sha256_file(f.model)},
                    {"dataset_sha256", data.sha256}});
    return report_dominance(cert);
}

// ---------------------------------------------------------------- audit / curve

int run_audit(const std::string& path) {
    const EvalReport r = read_report(path);
    const QueryAudit a = query_audit(r);
    std::cout << "audit passed: " << a.samples << " samples, mean queries " << a.mean_queries;
    if (a.expected_per_sample) std::cout << " (expected " << *a.expected_per_sample << " per sample)";
    std::cout << '\n';
    return kOk;
}

int run_curve(const std::string& report_path, const std::string& out_dir, bool svg) {
    const fs::path out = prepare_out(out_dir);
    const EvalReport r = read_report(report_path);
    write_curve_csv(r.asr_curve, out / "curve.csv");
    if (svg) write_curve_svg(r.asr_curve, out / "curve.svg");
    write_manifest(out, "curve", {{"report", report_path}, {"out", out_dir}, {"svg", svg}},
                   {{"seeds", json::object()}, {"report_sha256", sha256_file(report_path)}});
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sigma-zero minimum-l0 adversarial attacks on small classifiers"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    TrainFlags train_flags;
    train_flags.opts.seed = 42;
    auto* train_cmd = app.add_subcommand("train", "train a desk-scale model");
    train_cmd->add_option("--data", train_flags.data, "training set (IDX images or CSV)")->required();
    train_cmd->add_option("--labels", train_flags.labels, "training labels (IDX)");
    train_cmd->add_option("--test-data", train_flags.test_data, "held-out set");
    train_cmd->add_option("--test-labels", train_flags.test_labels, "held-out labels (IDX)");
    train_cmd->add_option("--arch", train_flags.arch, "mlp:784-64-10 | linear:D-C | cnn:CxHxW-F-C")
        ->capture_default_str();
    train_cmd->add_option("--epochs", train_flags.opts.epochs)->capture_default_str();
    train_cmd->add_option("--lr", train_flags.opts.lr)->capture_default_str();
    train_cmd->add_option("--batch-size", train_flags.opts.batch_size)->capture_default_str();
    train_cmd->add_option("--seed", train_flags.opts.seed)->capture_default_str();
    train_cmd->add_option("--out", train_flags.out, "output directory")->required();

    SynthFlags synth_flags;
    auto* synth_cmd = app.add_subcommand("synth", "generate a 2-D toy dataset");
    synth_cmd->add_option("--kind", synth_flags.kind, "two_gaussians | moons")->capture_default_str();
    synth_cmd->add_option("--n", synth_flags.n)->capture_default_str();
    synth_cmd->add_option("--seed", synth_flags.seed)->capture_default_str();
    synth_cmd->add_option("--out", synth_flags.out, "output directory")->required();

    AttackFlags attack_flags;
    auto* attack_cmd = app.add_subcommand("attack", "attack a dataset and write a report");
    attack_cmd->add_option("--model", attack_flags.model, "SZM1 model file")->required();
    attack_flags.data.add(attack_cmd);
    attack_flags.sigma.add(attack_cmd);
    attack_cmd->add_option("--attack", attack_flags.attack, "sigma-zero | topk-pgd | random-sparse")
        ->capture_default_str();
    attack_cmd->add_option("--step", attack_flags.step, "topk-pgd initial step")->capture_default_str();
    attack_cmd->add_option("--restarts", attack_flags.restarts, "random-sparse restarts")->capture_default_str();
    attack_cmd->add_option("--seed", attack_flags.seed, "baseline seed")->capture_default_str();
    attack_cmd->add_option("--k-grid", attack_flags.k_grid, "budgets for the ASR curve")->delimiter(',');
    attack_cmd->add_option("--workers", attack_flags.workers, "worker threads (env SZERO_WORKERS)");
    attack_cmd->add_option("--out", attack_flags.out, "output directory")->required();
    attack_cmd->add_flag("--svg", attack_flags.svg, "also write curve.svg");

    SweepFlags sweep_flags;
    auto* sweep_cmd = app.add_subcommand("sweep", "grid over sigma, tau0 and t");
    sweep_cmd->add_option("--model", sweep_flags.model, "SZM1 model file")->required();
    sweep_flags.data.add(sweep_cmd);
    sweep_cmd->add_option("--steps", sweep_flags.base.steps)->capture_default_str();
    sweep_cmd->add_option("--eta0", sweep_flags.base.eta0)->capture_default_str();
    sweep_cmd->add_option("--sigma", sweep_flags.sigmas, "values of sigma")->delimiter(',');
    sweep_cmd->add_option("--tau0", sweep_flags.tau0s, "values of tau0")->delimiter(',');
    sweep_cmd->add_option("--t", sweep_flags.ts, "values of t")->delimiter(',');
    sweep_cmd->add_option("--max-cells", sweep_flags.max_cells)->capture_default_str();
    sweep_cmd->add_flag("--allow-large-grid", sweep_flags.allow_large, "lift the cell limit");
    sweep_cmd->add_option("--workers", sweep_flags.workers, "worker threads (env SZERO_WORKERS)");
    sweep_cmd->add_option("--out", sweep_flags.out, "output directory")->required();

    OracleFlags oracle_flags;
    oracle_flags.data.n = 20;
    auto* oracle_cmd = app.add_subcommand("oracle", "compare sigma-zero with the brute-force optimum");
    oracle_cmd->add_option("--model", oracle_flags.model, "SZM1 model file");
    oracle_cmd->add_option("--data", oracle_flags.data.data, "IDX images or CSV");
    oracle_cmd->add_option("--labels", oracle_flags.data.labels);
    oracle_cmd->add_option("--n", oracle_flags.data.n)->capture_default_str();
    oracle_cmd->add_option("--offset", oracle_flags.data.offset)->capture_default_str();
    oracle_cmd->add_option("--steps", oracle_flags.sigma.steps)->capture_default_str();
    oracle_cmd->add_option("--max-support", oracle_flags.max_support)->capture_default_str();
    oracle_cmd->add_option("--grid", oracle_flags.grid, "grid levels")->delimiter(',');
    oracle_cmd->add_option("--check", oracle_flags.check, "only verify dominance in a certification file");
    oracle_cmd->add_option("--out", oracle_flags.out, "output directory");

    std::string audit_report;
    auto* audit_cmd = app.add_subcommand("audit", "cross-check the query counters of a report");
    audit_cmd->add_option("--report", audit_report)->required();

    std::string curve_report, curve_out;
    bool curve_svg = false;
    auto* curve_cmd = app.add_subcommand("curve", "export the ASR curve of a report");
    curve_cmd->add_option("--report", curve_report)->required();
    curve_cmd->add_option("--out", curve_out)->required();
    curve_cmd->add_flag("--svg", curve_svg);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }

    try {
        if (*train_cmd) return run_train(train_flags);
        if (*synth_cmd) return run_synth(synth_flags);
        if (*attack_cmd) return run_attack(attack_flags);
        if (*sweep_cmd) return run_sweep(sweep_flags);
        if (*oracle_cmd) return run_oracle(oracle_flags);
        if (*audit_cmd) return run_audit(audit_report);
        if (*curve_cmd) return run_curve(curve_report, curve_out, curve_svg);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const IntegrityError& e) {
        std::cerr << "invariant violation: " << e.what() << '\n';
        return kInvariantViolation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kDataError;
    }
    return kUsage;
}
