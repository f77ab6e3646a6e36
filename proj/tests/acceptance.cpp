// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails. Trains the desk MNIST model itself, so it needs nothing
// but the bundled data.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "support.hpp"
#include "szero/attack_common.hpp"
#include "szero/baselines.hpp"
#include "szero/errors.hpp"
#include "szero/eval.hpp"
#include "szero/oracle.hpp"
#include "szero/sigma_zero.hpp"

using namespace szero;

namespace {

int failures = 0;

void verdict(const std::string& name, bool ok, const std::string& detail) {
    std::cout << (ok ? "PASS " : "FAIL ") << name << ": " << detail << std::endl;
    failures += !ok;
}

std::string l0_text(const std::optional<std::size_t>& v) { return v ? std::to_string(*v) : "inf"; }

const std::vector<std::size_t> kGrid{0, 1, 2, 3, 5, 10, 15, 20, 24, 30, 50, 100};

struct Desk {
    Model model;
    Dataset test;
    double test_accuracy = 0.0;
    std::vector<std::size_t> samples;
};

EvalReport run_sigma(const Desk& desk, const AttackConfig& cfg) {
    return evaluate(desk.model, desk.test, AttackSpec{cfg}, kGrid, {desk.samples, 1});
}

// Criterion: 2001 queries per sample at N = 1000 without early stop.
void query_accounting(const EvalReport& full) {
    bool ok = full.steps == 1000 && !full.budget_k;
    for (const auto& s : full.per_sample) ok &= s.forwards == 1001 && s.backwards == 1000;
    std::string audit_msg;
    try {
        const QueryAudit a = query_audit(full);
        ok &= a.expected_per_sample == 2001u && a.mean_queries == 2001.0;
        std::ostringstream m;
        m << "audit mean " << a.mean_queries << " queries";
        audit_msg = m.str();
    } catch (const IntegrityError& e) {
        ok = false;
        audit_msg = e.what();
    }
    std::ostringstream d;
    d << full.per_sample.size() << " samples, forwards/backwards " << full.mean_forwards << "/"
      << full.mean_backwards << ", " << audit_msg;
    verdict("query_accounting", ok, d.str());
}

void asr_inf(const Desk& desk, const EvalReport& full) {
    std::size_t failed = 0;
    for (const auto& s : full.per_sample) failed += !s.l0;
    const bool ok = desk.test_accuracy >= 0.90 && full.per_sample.size() == 100 && full.clean_error == 0.0 &&
                    failed == 0;
    std::ostringstream d;
    d << "test accuracy " << desk.test_accuracy << ", " << full.per_sample.size()
      << " correctly classified samples, " << failed << " failures, ASR_inf " << full.asr_inf;
    verdict("asr_inf_100", ok, d.str());
}

void ablation(const Desk& desk, const EvalReport& full, std::vector<EvalReport>& reports) {
    AttackConfig no_proj;
    no_proj.projection = false;
    AttackConfig no_tau;
    no_tau.adaptive_tau = false;
    reports.push_back(run_sigma(desk, no_proj));
    const auto& rp = reports.back();
    reports.push_back(run_sigma(desk, no_tau));
    const auto& rt = reports.back();
    const auto m = full.median_l0;
    // Infinity dominates every finite median.
    const auto at_least = [](const std::optional<std::size_t>& v, std::size_t bound) { return !v || *v >= bound; };
    const bool ok = m && at_least(rp.median_l0, 5 * *m) && at_least(rt.median_l0, *m);
    verdict("ablation_direction", ok,
            "median l0 full " + l0_text(m) + ", no projection " + l0_text(rp.median_l0) + ", fixed tau " +
                l0_text(rt.median_l0));
}

// Random linear instances with d <= 16, half of them needing more than one
// feature, so the comparison is not dominated by single-feature flips.
void oracle_tightness() {
    std::mt19937_64 rng(2718);
    OracleConfig oc;
    oc.max_support = 3;
    std::size_t ones = 0, more = 0, instances = 0, equal = 0, within_one = 0, violations = 0;
    while (ones + more < 40) {
        const std::size_t d = 4 + rng() % 13;
        auto inst = test::random_linear_instance(rng, d, 2 + rng() % 3);
        const OracleResult o = min_l0_bruteforce(inst.model, inst.x, inst.y, oc);
        if (!o.k_min || *o.k_min == 0) continue;
        if (*o.k_min == 1 ? ones >= 20 : more >= 20) continue;
        (*o.k_min == 1 ? ones : more)++;
        const AttackResult a = sigma_zero_attack(inst.model, inst.x, inst.y, {});
        ++instances;
        if (!a.l0_star) continue;
        violations += *a.l0_star < *o.k_min;
        equal += *a.l0_star == *o.k_min;
        within_one += *a.l0_star <= *o.k_min + 1;
    }
    const double rate = static_cast<double>(equal) / static_cast<double>(instances);
    std::ostringstream d;
    d << instances << " instances (" << ones << " with k_min=1, " << more << " with k_min>1), dominance violations "
      << violations << ", equal " << equal << " (" << rate << "), within k_min+1 " << within_one;
    verdict("oracle_dominance_tightness", instances >= 20 && violations == 0 && rate >= 0.8 && within_one == instances, d.str());
}

void baseline_ordering(const Desk& desk, const EvalReport& full, std::vector<EvalReport>& reports) {
    bool ok = true;
    std::ostringstream d;
    for (std::size_t k : {10u, 24u, 50u}) {
        BaselineConfig rs;
        rs.kind = BaselineKind::RandomSparse;
        rs.budget_k = k;
        rs.steps = 2 * full.steps;  // matched query budget 2N
        rs.seed = 1;
        reports.push_back(evaluate(desk.model, desk.test, AttackSpec{rs}, kGrid, {desk.samples, 1}));
        const double sz = full.asr_at(k), base = reports.back().asr_at(k);
        ok &= sz >= base;
        d << (k == 10 ? "" : "; ") << "k=" << k << " sigma-zero " << sz << " vs random-sparse " << base;
    }
    verdict("baseline_ordering", ok, d.str());
}

void numerical_properties(const Desk& desk, const std::vector<EvalReport>& reports) {
    std::ostringstream d;
    bool ok = true;

    std::mt19937_64 rng(99);
    double worst = 0.0;
    std::size_t cases = 0;
    while (cases < 100) {
        const Model m = test::random_model(rng);
        const Tensor x = test::uniform_tensor(m.input_shape(), rng);
        const Tensor c = test::uniform_tensor({m.num_classes()}, rng, -1, 1);
        const auto fd = test::fd_input_grad(m, x, c);
        if (!fd) continue;
        auto fwd = m.forward(x);
        worst = std::max(worst, test::max_rel_err(m.backward_input(fwd.tape, c), *fd));
        ++cases;
    }
    ok &= worst < 1e-4;
    d << "fd max rel err " << worst << " over " << cases << " cases; ";

    bool sandwich = true;
    for (int rep = 0; rep < 200; ++rep) {
        Tensor v = test::uniform_tensor({16}, rng, -1, 1);
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (rng() % 3 == 0) v[i] = 0.0;
        }
        double prev = -1.0;
        for (double sigma : {1.0, 1e-1, 1e-3, 1e-6}) {
            const double s = smooth_l0(v, sigma);
            sandwich &= s <= static_cast<double>(v.count_nonzero()) && s >= prev;
            prev = s;
        }
    }
    ok &= sandwich;
    d << "sandwich " << (sandwich ? "ok" : "violated") << "; ";

    bool projection = true;
    for (int rep = 0; rep < 200; ++rep) {
        const Tensor v = test::uniform_tensor({16}, rng, -1, 1);
        const double tau = std::uniform_real_distribution<double>(0, 1)(rng);
        const Tensor p = project_tau(v, tau);
        projection &= project_tau(p, tau) == p;
        for (double c : p.data()) projection &= c == 0.0 ? !std::signbit(c) : std::abs(c) >= tau;
    }
    ok &= projection;
    d << "projection " << (projection ? "ok" : "violated") << "; ";

    bool monotone = true;
    std::size_t verified = 0;
    std::string witness_error;
    for (const auto& r : reports) {
        for (std::size_t i = 1; i < r.asr_curve.size(); ++i) monotone &= r.asr_curve[i - 1].asr <= r.asr_curve[i].asr;
        try {
            verify_report_witnesses(desk.model, desk.test, r);
            for (const auto& s : r.per_sample) verified += s.l0.has_value();
        } catch (const IntegrityError& e) {
            witness_error = e.what();
        }
    }
    ok &= monotone && witness_error.empty();
    d << "asr monotone " << (monotone ? "ok" : "violated") << " on " << reports.size() << " reports; "
      << verified << " witnesses re-verified" << (witness_error.empty() ? "" : ", " + witness_error);
    verdict("numerical_properties", ok, d.str());
}

void determinism(const Desk& desk, const EvalReport& full) {
    const EvalReport again = run_sigma(desk, AttackConfig{});
    const bool ok = without_runtime(report_to_json(again)) == without_runtime(report_to_json(full));
    verdict("determinism", ok, "repeat of the default run " + std::string(ok ? "matches" : "differs"));
}

}  // namespace

int main() {
    const auto t0 = std::chrono::steady_clock::now();
    try {
        const TrainResult tr = test::desk_mlp();
        Desk desk{tr.model, test::mnist_test(), tr.test_accuracy.value_or(0.0), {}};
        desk.samples = select_correct(desk.model, desk.test, 100);

        std::vector<EvalReport> reports;
        reports.push_back(run_sigma(desk, AttackConfig{}));
        const EvalReport full = reports.front();

        query_accounting(full);
        asr_inf(desk, full);
        ablation(desk, full, reports);
        oracle_tightness();
        baseline_ordering(desk, full, reports);
        numerical_properties(desk, reports);
        determinism(desk, full);
    } catch (const std::exception& e) {
        std::cout << "FAIL acceptance: " << e.what() << std::endl;
        return 1;
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::cout << (failures ? "FAILED " : "ALL PASSED ") << "(" << failures << " failing, " << secs << " s)"
              << std::endl;
    return failures ? 1 : 0;
}
