#include "szero/eval.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <sstream>
#include <thread>

#include "szero/errors.hpp"

namespace szero {

using nlohmann::json;

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::string format_double(double v) {
    std::array<char, 64> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), ptr);
}

json optional_size(const std::optional<std::size_t>& v) { return v ? json(*v) : json(nullptr); }

std::optional<std::size_t> read_optional_size(const json& j) {
    if (j.is_null()) return std::nullopt;
    return j.get<std::size_t>();
}

json k_to_json(const std::optional<std::size_t>& k) { return k ? json(*k) : json("inf"); }

std::optional<std::size_t> k_from_json(const json& j) {
    if (j.is_string()) {
        if (j.get<std::string>() != "inf") throw ParseError("curve k must be an integer or \"inf\"");
        return std::nullopt;
    }
    return j.get<std::size_t>();
}

bool l0_within(const std::optional<std::size_t>& l0, std::size_t k) { return l0 && *l0 <= k; }

}  // namespace

std::string AttackSpec::name() const {
    return std::visit(Overloaded{
                          [](const AttackConfig&) { return std::string("sigma-zero"); },
                          [](const BaselineConfig& b) {
                              return std::string(b.kind == BaselineKind::TopKPGD ? "topk-pgd"
                                                                                 : "random-sparse");
                          },
                      },
                      config);
}

std::size_t AttackSpec::steps() const {
    return std::visit([](const auto& c) { return c.steps; }, config);
}

std::optional<std::size_t> AttackSpec::budget_k() const {
    return std::visit(Overloaded{
                          [](const AttackConfig& c) { return c.budget_k; },
                          [](const BaselineConfig& b) { return std::optional<std::size_t>(b.budget_k); },
                      },
                      config);
}

AttackResult AttackSpec::run(const Model& model, const Tensor& x, std::size_t y,
                             std::size_t index) const {
    return std::visit(Overloaded{
                          [&](const AttackConfig& c) { return sigma_zero_attack(model, x, y, c); },
                          [&](BaselineConfig b) {
                              b.seed += index;
                              return run_baseline(model, x, y, b);
                          },
                      },
                      config);
}

json AttackSpec::to_json() const {
    return std::visit(Overloaded{
                          [&](const AttackConfig& c) {
                              return json{{"attack", name()},
                                          {"steps", c.steps},
                                          {"eta0", c.eta0},
                                          {"sigma", c.sigma},
                                          {"tau0", c.tau0},
                                          {"t", c.t},
                                          {"budget_k", optional_size(c.budget_k)},
                                          {"grad_normalization", c.grad_normalization},
                                          {"adaptive_tau", c.adaptive_tau},
                                          {"projection", c.projection}};
                          },
                          [&](const BaselineConfig& b) {
                              return json{{"attack", name()},   {"steps", b.steps},
                                          {"budget_k", b.budget_k}, {"step", b.step},
                                          {"restarts", b.restarts}, {"seed", b.seed}};
                          },
                      },
                      config);
}

double EvalReport::asr_at(std::size_t k) const {
    if (per_sample.empty()) return 0.0;
    std::size_t hits = 0;
    for (const auto& s : per_sample) hits += l0_within(s.l0, k);
    return static_cast<double>(hits) / static_cast<double>(per_sample.size());
}

std::vector<CurvePoint> asr_curve(const std::vector<std::optional<std::size_t>>& l0s,
                                  const std::vector<std::size_t>& k_grid) {
    if (!std::is_sorted(k_grid.begin(), k_grid.end())) throw ConfigError("k grid must be ascending");
    const double n = static_cast<double>(l0s.size());
    std::vector<CurvePoint> curve;
    for (std::size_t k : k_grid) {
        const auto hits = std::count_if(l0s.begin(), l0s.end(),
                                        [k](const auto& v) { return l0_within(v, k); });
        curve.push_back({k, n > 0 ? static_cast<double>(hits) / n : 0.0});
    }
    const auto finite = std::count_if(l0s.begin(), l0s.end(), [](const auto& v) { return v.has_value(); });
    curve.push_back({std::nullopt, n > 0 ? static_cast<double>(finite) / n : 0.0});
    return curve;
}

std::optional<std::size_t> median_l0(std::vector<std::optional<std::size_t>> l0s) {
    if (l0s.empty()) throw ConfigError("median of an empty set");
    // nullopt sorts last.
    std::sort(l0s.begin(), l0s.end(), [](const auto& a, const auto& b) {
        if (!a) return false;
        if (!b) return true;
        return *a < *b;
    });
    const std::size_t n = l0s.size();
    if (n % 2 == 1) return l0s[n / 2];
    const auto& lo = l0s[n / 2 - 1];
    const auto& hi = l0s[n / 2];
    if (!lo || !hi) return lo;
    return (*lo + *hi) / 2;
}

std::vector<std::size_t> select_correct(const Model& model, const Dataset& data, std::size_t count,
                                        std::size_t offset) {
    std::vector<std::size_t> out;
    for (std::size_t i = offset; i < data.size() && out.size() < count; ++i) {
        if (model.classify(data.sample(i)) == data.labels[i]) out.push_back(i);
    }
    return out;
}

EvalReport evaluate(const Model& model, const Dataset& data, const AttackSpec& spec,
                    const std::vector<std::size_t>& k_grid, const EvalOptions& options) {
    std::vector<std::size_t> indices = options.indices;
    if (indices.empty()) {
        indices.resize(data.size());
        for (std::size_t i = 0; i < data.size(); ++i) indices[i] = i;
    }
    if (indices.empty()) throw ConfigError("cannot evaluate an empty dataset");
    if (!std::is_sorted(k_grid.begin(), k_grid.end())) throw ConfigError("k grid must be ascending");
    for (std::size_t i : indices) {
        if (i >= data.size()) throw ConfigError("sample index " + std::to_string(i) + " out of range");
    }

    const std::size_t n = indices.size();
    std::vector<SampleSummary> summaries(n);
    std::vector<std::exception_ptr> errors(n);
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        for (std::size_t slot = next++; slot < n; slot = next++) {
            try {
                const std::size_t idx = indices[slot];
                const Tensor x = data.sample(idx);
                const std::size_t y = data.labels[idx];
                SampleSummary& s = summaries[slot];
                s.index = idx;
                s.label = y;
                s.clean_correct = model.classify(x) == y;
                const auto start = std::chrono::steady_clock::now();
                AttackResult r = spec.run(model, x, y, idx);
                s.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
                s.l0 = r.l0_star;
                s.forwards = r.forwards;
                s.backwards = r.backwards;
                s.iterations_to_first_adv = r.iterations_to_first_adv;
                s.early_stopped = r.early_stopped;
                if (r.delta_star) {
                    for (std::size_t j = 0; j < r.delta_star->size(); ++j) {
                        if ((*r.delta_star)[j] != 0.0) s.witness.emplace_back(j, (*r.delta_star)[j]);
                    }
                }
            } catch (...) {
                errors[slot] = std::current_exception();
            }
        }
    };

    const std::size_t workers = std::clamp<std::size_t>(options.workers, 1, n);
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    }
    for (const auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
    std::sort(summaries.begin(), summaries.end(),
              [](const auto& a, const auto& b) { return a.index < b.index; });

    EvalReport report;
    report.attack = spec.name();
    report.steps = spec.steps();
    report.budget_k = spec.budget_k();
    report.config_echo = spec.to_json();
    report.config_echo["dataset"] = data.id;
    report.config_echo["k_grid"] = k_grid;
    report.config_echo["samples"] = n;
    report.per_sample = std::move(summaries);

    std::vector<std::optional<std::size_t>> l0s;
    double forwards = 0, backwards = 0, runtime = 0;
    std::size_t clean_wrong = 0;
    for (const auto& s : report.per_sample) {
        l0s.push_back(s.l0);
        forwards += static_cast<double>(s.forwards);
        backwards += static_cast<double>(s.backwards);
        runtime += s.runtime_s;
        clean_wrong += !s.clean_correct;
    }
    const double dn = static_cast<double>(n);
    report.asr_curve = asr_curve(l0s, k_grid);
    report.asr_inf = report.asr_curve.back().asr;
    report.median_l0 = median_l0(l0s);
    report.clean_error = static_cast<double>(clean_wrong) / dn;
    report.mean_forwards = forwards / dn;
    report.mean_backwards = backwards / dn;
    report.mean_runtime_s = runtime / dn;
    return report;
}

json report_to_json(const EvalReport& report) {
    json samples = json::array();
    for (const auto& s : report.per_sample) {
        json witness = json::array();
        for (const auto& [i, v] : s.witness) witness.push_back({i, v});
        samples.push_back({{"index", s.index},
                           {"label", s.label},
                           {"clean_correct", s.clean_correct},
                           {"l0", optional_size(s.l0)},
                           {"forwards", s.forwards},
                           {"backwards", s.backwards},
                           {"iterations_to_first_adv", optional_size(s.iterations_to_first_adv)},
                           {"early_stopped", s.early_stopped},
                           {"runtime_s", s.runtime_s},
                           {"witness", std::move(witness)}});
    }
    json curve = json::array();
    for (const auto& p : report.asr_curve) curve.push_back({{"k", k_to_json(p.k)}, {"asr", p.asr}});
    return {{"attack", report.attack},
            {"steps", report.steps},
            {"budget_k", optional_size(report.budget_k)},
            {"config", report.config_echo},
            {"samples", std::move(samples)},
            {"asr_curve", std::move(curve)},
            {"median_l0", k_to_json(report.median_l0)},
            {"asr_inf", report.asr_inf},
            {"clean_error", report.clean_error},
            {"mean_forwards", report.mean_forwards},
            {"mean_backwards", report.mean_backwards},
            {"mean_queries", report.mean_forwards + report.mean_backwards},
            {"mean_runtime_s", report.mean_runtime_s}};
}

EvalReport report_from_json(const json& j) {
    try {
        EvalReport r;
        r.attack = j.at("attack").get<std::string>();
        r.steps = j.at("steps").get<std::size_t>();
        r.budget_k = read_optional_size(j.at("budget_k"));
        r.config_echo = j.value("config", json::object());
        for (const auto& s : j.at("samples")) {
            SampleSummary out;
            out.index = s.at("index").get<std::size_t>();
            out.label = s.at("label").get<std::size_t>();
            out.clean_correct = s.at("clean_correct").get<bool>();
            out.l0 = read_optional_size(s.at("l0"));
            out.forwards = s.at("forwards").get<std::size_t>();
            out.backwards = s.at("backwards").get<std::size_t>();
            out.iterations_to_first_adv = read_optional_size(s.at("iterations_to_first_adv"));
            out.early_stopped = s.at("early_stopped").get<bool>();
            out.runtime_s = s.value("runtime_s", 0.0);
            for (const auto& w : s.at("witness")) {
                out.witness.emplace_back(w.at(0).get<std::size_t>(), w.at(1).get<double>());
            }
            r.per_sample.push_back(std::move(out));
        }
        for (const auto& p : j.at("asr_curve")) {
            r.asr_curve.push_back({k_from_json(p.at("k")), p.at("asr").get<double>()});
        }
        r.median_l0 = k_from_json(j.at("median_l0"));
        r.asr_inf = j.at("asr_inf").get<double>();
        r.clean_error = j.at("clean_error").get<double>();
        r.mean_forwards = j.at("mean_forwards").get<double>();
        r.mean_backwards = j.at("mean_backwards").get<double>();
        r.mean_runtime_s = j.value("mean_runtime_s", 0.0);
        return r;
    } catch (const json::exception& e) {
        throw ParseError(std::string("malformed report: ") + e.what());
    }
}

json without_runtime(json j) {
    j.erase("mean_runtime_s");
    if (j.contains("samples")) {
        for (auto& s : j["samples"]) s.erase("runtime_s");
    }
    return j;
}

void write_report(const EvalReport& report, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << report_to_json(report).dump(2) << '\n';
    if (!out) throw IoError("failed writing " + path.string());
}

EvalReport read_report(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    return report_from_json(j);
}

void write_curve_csv(const std::vector<CurvePoint>& curve, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "k,asr\n";
    for (const auto& p : curve) {
        out << (p.k ? std::to_string(*p.k) : std::string("inf")) << ',' << format_double(p.asr) << '\n';
    }
    if (!out) throw IoError("failed writing " + path.string());
}

std::vector<CurvePoint> read_curve_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != "k,asr") throw ParseError(path.string() + ": expected header k,asr");
    std::vector<CurvePoint> curve;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw ParseError(path.string() + ": malformed row '" + line + "'");
        const std::string ks = line.substr(0, comma);
        const std::string as = line.substr(comma + 1);
        CurvePoint p;
        if (ks != "inf") {
            std::size_t k = 0;
            auto [ptr, ec] = std::from_chars(ks.data(), ks.data() + ks.size(), k);
            if (ec != std::errc() || ptr != ks.data() + ks.size()) throw ParseError("bad k '" + ks + "'");
            p.k = k;
        }
        auto [ptr, ec] = std::from_chars(as.data(), as.data() + as.size(), p.asr);
        if (ec != std::errc() || ptr != as.data() + as.size()) throw ParseError("bad asr '" + as + "'");
        curve.push_back(p);
    }
    return curve;
}

void write_curve_svg(const std::vector<CurvePoint>& curve, const std::filesystem::path& path) {
    constexpr double width = 480, height = 320, margin = 48;
    std::size_t k_max = 1;
    for (const auto& p : curve) {
        if (p.k) k_max = std::max(k_max, *p.k);
    }
    auto px = [&](std::size_t k) {
        return margin + (width - 2 * margin) * static_cast<double>(k) / static_cast<double>(k_max);
    };
    auto py = [&](double asr) { return height - margin - (height - 2 * margin) * asr; };

    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\">\n";
    out << "<line x1=\"" << margin << "\" y1=\"" << height - margin << "\" x2=\"" << width - margin
        << "\" y2=\"" << height - margin << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << margin << "\" y1=\"" << margin << "\" x2=\"" << margin << "\" y2=\""
        << height - margin << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << width / 2 << "\" y=\"" << height - 10
        << "\" text-anchor=\"middle\">\xE2\x80\x96\xCE\xB4\xE2\x80\x96\xE2\x82\x80</text>\n";
    out << "<text x=\"14\" y=\"" << height / 2 << "\" transform=\"rotate(-90 14 " << height / 2
        << ")\" text-anchor=\"middle\">ASR</text>\n";
    out << "<text x=\"" << margin << "\" y=\"" << height - margin + 16 << "\" text-anchor=\"middle\">0</text>\n";
    out << "<text x=\"" << width - margin << "\" y=\"" << height - margin + 16
        << "\" text-anchor=\"middle\">" << k_max << "</text>\n";
    out << "<text x=\"" << margin - 6 << "\" y=\"" << margin + 4 << "\" text-anchor=\"end\">1</text>\n";
    out << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"";
    for (const auto& p : curve) {
        if (p.k) out << px(*p.k) << ',' << py(p.asr) << ' ';
    }
    out << "\"/>\n</svg>\n";
    if (!out) throw IoError("failed writing " + path.string());
}

QueryAudit query_audit(const EvalReport& report) {
    if (report.per_sample.empty()) throw IntegrityError("report has no samples");
    QueryAudit audit;
    audit.samples = report.per_sample.size();
    const std::size_t N = report.steps;
    const bool sigma_zero = report.attack == "sigma-zero";
    if (sigma_zero && !report.budget_k) audit.expected_per_sample = 2 * N + 1;

    double forwards = 0, backwards = 0;
    for (const auto& s : report.per_sample) {
        const std::string who = "sample " + std::to_string(s.index);
        const std::size_t q = s.forwards + s.backwards;
        forwards += static_cast<double>(s.forwards);
        backwards += static_cast<double>(s.backwards);
        const bool short_circuit = s.forwards == 1 && s.backwards == 0;
        if (short_circuit) {
            if (s.clean_correct && report.attack != "random-sparse" && report.attack != "topk-pgd") {
                throw IntegrityError(who + ": single forward but the input was classified correctly");
            }
            continue;
        }
        if (report.attack == "random-sparse") {
            if (s.backwards != 0) throw IntegrityError(who + ": random-sparse issued backward queries");
            const std::size_t restarts = report.config_echo.value("restarts", std::size_t{0});
            if (s.forwards > N * (restarts + 1) + 1) throw IntegrityError(who + ": too many forwards");
            continue;
        }
        if (s.forwards != s.backwards + 1) {
            throw IntegrityError(who + ": expected forwards = backwards + 1, got " +
                                 std::to_string(s.forwards) + "/" + std::to_string(s.backwards));
        }
        if (s.backwards > N) throw IntegrityError(who + ": more backwards than iterations");
        if (audit.expected_per_sample && q != *audit.expected_per_sample) {
            throw IntegrityError(who + ": " + std::to_string(q) + " queries, expected " +
                                 std::to_string(*audit.expected_per_sample));
        }
        if (s.early_stopped && q >= 2 * N + 1) {
            throw IntegrityError(who + ": flagged early stop but used the full query budget");
        }
        if (sigma_zero && !s.early_stopped && s.backwards != N) {
            throw IntegrityError(who + ": stopped before N iterations without an early stop");
        }
    }
    const double n = static_cast<double>(audit.samples);
    const auto close = [](double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(b)); };
    if (!close(forwards / n, report.mean_forwards) || !close(backwards / n, report.mean_backwards)) {
        throw IntegrityError("per-sample counters do not reproduce the stored mean queries");
    }
    audit.mean_queries = (forwards + backwards) / n;
    return audit;
}

void verify_report_witnesses(const Model& model, const Dataset& data, const EvalReport& report) {
    for (const auto& s : report.per_sample) {
        if (!s.l0) continue;
        if (s.witness.size() != *s.l0) {
            throw IntegrityError("sample " + std::to_string(s.index) + ": witness has " +
                                 std::to_string(s.witness.size()) + " components, l0 is " +
                                 std::to_string(*s.l0));
        }
        const Tensor x = data.sample(s.index);
        Tensor delta(x.shape());
        for (const auto& [i, v] : s.witness) {
            if (i >= delta.size()) throw IntegrityError("witness index out of range");
            delta[i] = v;
        }
        if (!verify_adversarial(model, x, s.label, delta)) {
            throw IntegrityError("sample " + std::to_string(s.index) +
                                 ": reported perturbation does not re-verify as adversarial");
        }
    }
}

}  // namespace szero
