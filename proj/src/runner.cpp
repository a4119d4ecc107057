#include "ncwwlab/runner.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <thread>

#include "ncwwlab/spectral.hpp"

namespace ncwwlab {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
}

constexpr double kVerdictResidualThreshold = 1e-2;

struct ExperimentOutput {
    std::vector<ReportRow> rows;
    ordered_json summary;
};

// rows + verdict for one diagnostics stream
void emit_stream(ExperimentOutput& out, const std::string& exp_id, const std::string& weight_id,
                 const ConvergenceDiagnostics& diag, ordered_json& stream_summary) {
    const double tau_perp = diag.truncation ? diag.truncation->tau_perp : 0.0;
    std::vector<double> full_curve;
    for (const auto& row : diag.rows) {
        out.rows.push_back({exp_id, weight_id, row.n, row.cauchy_2, row.cauchy_inf,
                            row.resid_limit_2, tau_perp, row.trunc_resid_inf});
        full_curve.push_back(row.resid_limit_inf);
    }

    // verdict: decayed iff the final (meaningful) truncated residual is below
    // the threshold and the last three Cauchy residuals are nonincreasing.
    std::size_t last = diag.rows.size() - 1;
    if (diag.limit_is_last_iterate && diag.rows.size() >= 2) --last;
    const double final_resid = diag.rows[last].trunc_resid_inf;
    bool cauchy_monotone = true;
    if (diag.rows.size() >= 3) {
        const std::size_t m = diag.rows.size();
        for (std::size_t i = m - 2; i < m; ++i)
            if (diag.rows[i].cauchy_2 > diag.rows[i - 1].cauchy_2 + 1e-15)
                cauchy_monotone = false;
    }
    std::string verdict;
    if (final_resid <= kVerdictResidualThreshold && cauchy_monotone)
        verdict = "decayed-below-threshold";
    else if (final_resid > std::max(kVerdictResidualThreshold,
                                    diag.rows.front().trunc_resid_inf))
        verdict = "diverged";
    else
        verdict = "plateaued";

    stream_summary["weight"] = weight_id;
    stream_summary["verdict"] = verdict;
    stream_summary["final_truncated_residual_inf"] = final_resid;
    stream_summary["trunc_tau_perp"] = tau_perp;
    stream_summary["trunc_cut_possible"] = diag.truncation ? diag.truncation->cut_possible : false;
    stream_summary["limit_policy"] =
        diag.limit_is_last_iterate ? "last_iterate" : "spectral_prediction";
    stream_summary["full_residual_inf_curve"] = full_curve;  // the e = 1 curve
}

std::vector<std::string> weighted_ids(const Scenario& sc, const Scenario::Experiment& exp) {
    std::vector<std::string> ids;
    if (exp.params.contains("weights"))
        for (const auto& w : exp.params.at("weights")) ids.push_back(w.get<std::string>());
    else
        for (const auto& w : sc.weights) ids.push_back(w.id);
    if (ids.empty()) throw ValidationError("weighted experiment '" + exp.id + "' has no weights");
    return ids;
}

Checkpoints experiment_checkpoints(const Scenario& sc, const Scenario::Experiment& exp) {
    if (exp.params.contains("n_max"))
        return dyadic_checkpoints(exp.params.at("n_max").get<std::uint64_t>());
    return sc.checkpoints;
}

// One orbit pass feeds every weighted experiment of the scenario: the dominant
// cost is applying T, so the union of all requested weights and checkpoints is
// streamed together and sliced per experiment afterwards.
struct SharedOrbit {
    std::vector<std::string> ids;
    Checkpoints union_cps;
    std::vector<std::vector<AlgElement>> iterates;  // [weight][checkpoint]

    std::size_t weight_index(const std::string& id) const {
        for (std::size_t i = 0; i < ids.size(); ++i)
            if (ids[i] == id) return i;
        throw ValidationError("weight '" + id + "' missing from the shared orbit");
    }
    std::size_t cp_index(std::uint64_t n) const {
        const auto it = std::lower_bound(union_cps.begin(), union_cps.end(), n);
        if (it == union_cps.end() || *it != n)
            throw ValidationError("checkpoint missing from the shared orbit");
        return static_cast<std::size_t>(it - union_cps.begin());
    }
};

SharedOrbit build_shared_orbit(const Scenario& sc) {
    SharedOrbit orbit;
    std::vector<std::uint64_t> cps;
    for (const auto& exp : sc.experiments) {
        if (exp.kind != "weighted") continue;
        for (const auto& id : weighted_ids(sc, exp))
            if (std::find(orbit.ids.begin(), orbit.ids.end(), id) == orbit.ids.end())
                orbit.ids.push_back(id);
        const Checkpoints ecps = experiment_checkpoints(sc, exp);
        cps.insert(cps.end(), ecps.begin(), ecps.end());
    }
    if (orbit.ids.empty()) return orbit;
    std::sort(cps.begin(), cps.end());
    cps.erase(std::unique(cps.begin(), cps.end()), cps.end());
    orbit.union_cps = std::move(cps);

    std::vector<WeightSequence> seqs;
    for (const auto& id : orbit.ids) seqs.push_back(sc.weight_by_id(id).seq);
    orbit.iterates = weighted_iterates_multi(sc.op, sc.initial, seqs, orbit.union_cps);
    return orbit;
}

ExperimentOutput run_weighted(const Scenario& sc, const Scenario::Experiment& exp,
                              const SharedOrbit& orbit, const StreamOptions& base_opts) {
    const std::vector<std::string> ids = weighted_ids(sc, exp);
    const Checkpoints cps = experiment_checkpoints(sc, exp);

    const std::string limit_policy = exp.params.value("limit", "last_iterate");
    if (limit_policy != "spectral" && limit_policy != "last_iterate")
        throw ValidationError("unknown limit policy '" + limit_policy + "'");

    std::optional<JdlgSplit> split;
    if (limit_policy == "spectral") split = jdlg_split(sc.op);

    ExperimentOutput out;
    out.summary["streams"] = ordered_json::array();
    for (const auto& id : ids) {
        const std::size_t wi = orbit.weight_index(id);
        std::vector<AlgElement> iterates;
        iterates.reserve(cps.size());
        for (const std::uint64_t n : cps) iterates.push_back(orbit.iterates[wi][orbit.cp_index(n)]);

        StreamOptions opts = base_opts;
        if (split) {
            std::vector<Complex> lams;
            for (const auto& p : split->unimodular_eigenpairs) lams.push_back(p.value);
            const std::uint64_t n_coeff = exp.params.value("n_coeff", 100000ULL);
            opts.limit = spectral_weighted_limit(sc.op, sc.weight_by_id(id).seq, sc.initial,
                                                 lams, n_coeff);
        }
        const auto diag =
            diagnostics_from_iterates(sc.algebra, cps, std::move(iterates), opts);
        ordered_json s;
        emit_stream(out, exp.id, id, diag, s);
        out.summary["streams"].push_back(s);
    }
    return out;
}

ExperimentOutput run_subsequence(const Scenario& sc, const Scenario::Experiment& exp,
                                 const Checkpoints& cps, const StreamOptions& opts,
                                 const std::string& kind) {
    ExperimentOutput out;
    ordered_json s;
    if (kind == "primes") {
        const auto diag = prime_average_stream(sc.op, sc.initial, cps, opts);
        emit_stream(out, exp.id, "primes", diag, s);
    } else {
        const auto diag = mangoldt_average_stream(sc.op, sc.initial, cps, opts);
        emit_stream(out, exp.id, "mangoldt", diag, s);
    }
    out.summary["streams"] = ordered_json::array({s});
    return out;
}

MovingWindow parse_window(const json& params) {
    if (params.contains("pairs")) {
        std::vector<std::pair<std::uint64_t, std::uint64_t>> pairs;
        for (const auto& p : params.at("pairs"))
            pairs.emplace_back(p[0].get<std::uint64_t>(), p[1].get<std::uint64_t>());
        return MovingWindow::explicit_list(std::move(pairs));
    }
    const json w = params.value("window", json::object());
    auto coeffs = [](const json& r, double default_a) -> std::pair<double, double> {
        if (r.is_null()) return {default_a, 0.0};
        const std::string kind = r.value("kind", "affine");
        if (kind == "n") return {1.0, 0.0};
        if (kind == "zero" || kind == "const")
            return {0.0, r.value("value", kind == "zero" ? 0.0 : 1.0)};
        return {r.value("a", default_a), r.value("b", 0.0)};
    };
    const auto [ka, kb] = coeffs(w.contains("k") ? w.at("k") : json(), 1.0);
    const auto [ma, mb] = coeffs(w.contains("m") ? w.at("m") : json(), 0.0);
    return MovingWindow::affine(ka, kb, ma, mb);
}

ExperimentOutput run_moving(const Scenario& sc, const Scenario::Experiment& exp,
                            const Checkpoints& cps, const StreamOptions& opts) {
    const MovingWindow window = parse_window(exp.params);
    const auto diag = moving_average_stream(sc.op, sc.initial, window, cps, opts);
    ExperimentOutput out;
    ordered_json s;
    emit_stream(out, exp.id, "window", diag, s);
    s["window"] = window.description();
    out.summary["streams"] = ordered_json::array({s});
    return out;
}

ExperimentOutput run_uniform_ww(const Scenario& sc, const Scenario::Experiment& exp,
                                const Checkpoints& cps, const StreamOptions& opts) {
    const double r = exp.params.value("r", 2.0);
    const double b = exp.params.value("b", 1.0);
    const int family = exp.params.value("family_size", 100);
    const std::uint64_t seed = sc.seed ^ 0x9e3779b97f4a7c15ULL;
    const auto scan = uniform_ww_scan(sc.op, sc.initial, r, b, family, seed, cps, opts);

    ExperimentOutput out;
    std::vector<double> full_curve;
    for (std::size_t i = 0; i < cps.size(); ++i) {
        out.rows.push_back({exp.id, "family_sup", cps[i], 0.0, 0.0, 0.0,
                            scan.truncation.tau_perp, scan.sup_trunc_resid[i]});
        full_curve.push_back(scan.sup_full_resid[i]);
    }
    out.summary["r"] = r;
    out.summary["b"] = b;
    out.summary["family_size"] = family;
    out.summary["trunc_tau_perp"] = scan.truncation.tau_perp;
    out.summary["sup_full_residual_inf_curve"] = full_curve;
    out.summary["sup_trunc_residual_inf_curve"] = scan.sup_trunc_resid;
    const double first = scan.sup_trunc_resid.front();
    const double last = scan.sup_trunc_resid.back();
    out.summary["decay_factor"] =
        last > 0.0 ? ordered_json(first / last) : ordered_json("inf");
    return out;
}

ExperimentOutput run_return_time(const Scenario& sc, const Scenario::Experiment& exp,
                                 const Checkpoints& cps, const StreamOptions& opts) {
    const double theta = exp.params.value("theta", 0.41421356237309503);
    const int samples = exp.params.value("samples", 1);
    double a = 0.0, b = 0.5;
    if (exp.params.contains("interval")) {
        a = exp.params.at("interval")[0].get<double>();
        b = exp.params.at("interval")[1].get<double>();
    }
    const auto res = return_time_experiment(theta, samples, a, b, sc.op, sc.initial, cps,
                                            sc.seed ^ 0x51ed2701ULL, opts);
    ExperimentOutput out;
    out.summary["theta"] = theta;
    out.summary["interval"] = {a, b};
    out.summary["samples"] = ordered_json::array();
    for (std::size_t i = 0; i < res.size(); ++i) {
        ordered_json sw, sv;
        emit_stream(out, exp.id, "omega" + std::to_string(i) + "_weighted", res[i].weighted, sw);
        emit_stream(out, exp.id, "omega" + std::to_string(i) + "_visits", res[i].visits, sv);
        ordered_json s;
        s["omega"] = res[i].omega;
        s["weighted"] = sw;
        s["visits"] = sv;
        out.summary["samples"].push_back(s);
    }
    return out;
}

ExperimentOutput run_jdlg(const Scenario& sc, const Scenario::Experiment& exp) {
    const double tol = exp.params.value("unimodular_tol", 1e-8);
    const auto split = jdlg_split(sc.op, tol);
    ExperimentOutput out;
    out.summary["unimodular_tol"] = tol;
    out.summary["reversible_dim"] = split.reversible_basis.size();
    out.summary["flight_dim"] = split.flight_basis.size();
    out.summary["flight_spectral_radius"] = split.flight_spectral_radius;
    out.summary["flight_condition"] = std::isfinite(split.flight_condition)
                                          ? ordered_json(split.flight_condition)
                                          : ordered_json("inf");
    out.summary["oblique"] = split.oblique;
    ordered_json eigs = ordered_json::array();
    for (const auto& p : split.unimodular_eigenpairs)
        eigs.push_back({{"re", p.value.real()},
                        {"im", p.value.imag()},
                        {"multiplicity", p.basis.size()}});
    out.summary["unimodular_eigenvalues"] = eigs;
    return out;
}

ExperimentOutput run_validate(const Scenario& sc, const Scenario::Experiment& exp) {
    const int samples = exp.params.value("samples", 100);
    const double tol = exp.params.value("tol", 1e-10);
    const auto rep = validate_ds(sc.op, samples, sc.seed ^ 0xda7a5eedULL, tol);
    ExperimentOutput out;
    auto verdict_json = [](const Verdict& v) {
        return ordered_json{{"verdict", to_string(v.kind)}, {"bound", v.bound},
                            {"witness", v.witness}};
    };
    out.summary["positivity"] = verdict_json(rep.positivity);
    out.summary["l1_contraction"] = verdict_json(rep.l1_contraction);
    out.summary["linf_contraction"] = verdict_json(rep.linf_contraction);
    out.summary["l2_restriction"] = {{"self_adjoint_residual", rep.l2_restriction.self_adjoint_residual},
                                     {"positive_min_eig", rep.l2_restriction.positive_min_eig},
                                     {"normal_residual", rep.l2_restriction.normal_residual}};
    out.summary["stoltz"] = {{"delta", std::isfinite(rep.stoltz.delta)
                                           ? ordered_json(rep.stoltz.delta)
                                           : ordered_json("inf")},
                             {"verdict", rep.stoltz.verdict}};
    out.summary["tol"] = tol;
    out.summary["samples"] = samples;
    return out;
}

ExperimentOutput run_stability_probe(const Scenario& sc, const Scenario::Experiment& exp,
                                     const Checkpoints& cps, const StreamOptions& opts) {
    std::vector<std::string> ids;
    if (exp.params.contains("weights"))
        for (const auto& w : exp.params.at("weights")) ids.push_back(w.get<std::string>());
    else
        for (const auto& w : sc.weights) ids.push_back(w.id);
    std::vector<WeightSequence> family;
    for (const auto& id : ids) family.push_back(sc.weight_by_id(id).seq);

    std::vector<double> scales = {1.0, 0.1, 0.01};
    if (exp.params.contains("scales")) {
        scales.clear();
        for (const auto& s : exp.params.at("scales")) scales.push_back(s.get<double>());
    }
    DetRng rng(sc.seed ^ 0x57ab1e00ULL ^ exp.params.value("perturbation_seed", 0ULL));
    const AlgElement y = random_element(sc.algebra, rng);
    std::vector<AlgElement> xs;
    for (double s : scales) xs.push_back(sc.initial + Complex(s) * y);

    const auto rep = approximation_stability_probe(sc.op, xs, sc.initial, family, cps,
                                                   exp.params.value("p", 2.0), opts);
    ExperimentOutput out;
    out.summary["seminorm_bound"] = rep.seminorm_bound;
    out.summary["measured_constant"] = rep.measured_constant;
    ordered_json rows = ordered_json::array();
    for (const auto& r : rep.rows)
        rows.push_back({{"distance", r.distance}, {"worst_sup", r.worst_sup}, {"ratio", r.ratio}});
    out.summary["rows"] = rows;
    return out;
}

ExperimentOutput run_experiment(const Scenario& sc, const Scenario::Experiment& exp,
                                const SharedOrbit& orbit) {
    StreamOptions opts;
    opts.trace_budget_fraction = sc.trace_budget_fraction;
    opts.mode = exp.params.value("truncation", "bilateral") == "right"
                    ? TruncationMode::right
                    : TruncationMode::bilateral;

    const Checkpoints cps = experiment_checkpoints(sc, exp);

    ExperimentOutput out;
    if (exp.kind == "weighted")
        out = run_weighted(sc, exp, orbit, opts);
    else if (exp.kind == "primes" || exp.kind == "mangoldt")
        out = run_subsequence(sc, exp, cps, opts, exp.kind);
    else if (exp.kind == "moving")
        out = run_moving(sc, exp, cps, opts);
    else if (exp.kind == "uniform_ww")
        out = run_uniform_ww(sc, exp, cps, opts);
    else if (exp.kind == "return_time")
        out = run_return_time(sc, exp, cps, opts);
    else if (exp.kind == "jdlg")
        out = run_jdlg(sc, exp);
    else if (exp.kind == "validate")
        out = run_validate(sc, exp);
    else if (exp.kind == "stability_probe")
        out = run_stability_probe(sc, exp, cps, opts);
    else
        throw ValidationError("unknown experiment kind '" + exp.kind + "'");

    ordered_json wrapped;
    wrapped["id"] = exp.id;
    wrapped["kind"] = exp.kind;
    wrapped["status"] = "completed";
    for (auto& [k, v] : out.summary.items()) wrapped[k] = v;
    out.summary = std::move(wrapped);
    return out;
}

}  // namespace

std::string ExperimentReport::rows_csv() const {
    std::string out =
        "experiment,weight,n,residual_cauchy_2,residual_cauchy_inf,residual_to_limit_2,"
        "trunc_tau_perp,trunc_residual_inf\n";
    for (const auto& r : rows) {
        out += r.experiment;
        out += ',';
        out += r.weight;
        out += ',';
        out += std::to_string(r.n);
        out += ',';
        out += fmt_double(r.residual_cauchy_2);
        out += ',';
        out += fmt_double(r.residual_cauchy_inf);
        out += ',';
        out += fmt_double(r.residual_to_limit_2);
        out += ',';
        out += fmt_double(r.trunc_tau_perp);
        out += ',';
        out += fmt_double(r.trunc_residual_inf);
        out += '\n';
    }
    return out;
}

std::string ExperimentReport::summary_json() const { return summary.dump(2) + "\n"; }

ExperimentReport execute_scenario(const Scenario& sc, int threads) {
    if (sc.require_ds) {
        const auto rep = validate_ds(sc.op, 50, sc.seed ^ 0xd5c4ec00ULL, 1e-10);
        auto check = [](const Verdict& v, const char* name) {
            if (v.kind == Verdict::Kind::fail)
                throw ValidationError(std::string("operator fails validate_ds: ") + name +
                                      " (bound " + std::to_string(v.bound) + ")");
        };
        check(rep.positivity, "positivity");
        check(rep.l1_contraction, "l1_contraction");
        check(rep.linf_contraction, "linf_contraction");
    }

    const SharedOrbit orbit = build_shared_orbit(sc);

    std::vector<ExperimentOutput> outputs(sc.experiments.size());
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mu;

    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= sc.experiments.size()) return;
            try {
                outputs[i] = run_experiment(sc, sc.experiments[i], orbit);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mu);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };

    const int nthreads = std::max(1, std::min<int>(threads, static_cast<int>(
                                                                 sc.experiments.size())));
    if (nthreads <= 1 || sc.experiments.size() <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    if (first_error) std::rethrow_exception(first_error);

    ExperimentReport report;
    report.scenario_hash = sc.source_hash;
    report.seed = sc.seed;

    ordered_json header;
    header["schema"] = "ncwwlab-summary-v1";
    header["library_version"] = kLibraryVersion;
    header["scenario_hash"] = sc.source_hash;
    header["seed"] = sc.seed;
    header["n_max"] = sc.n_max;
    header["trace_budget_fraction"] = sc.trace_budget_fraction;
    header["tolerances"] = {{"selfadjoint_tol", numeric::selfadjoint_tol},
                            {"projection_tol", numeric::projection_tol},
                            {"unimodular_tol_weights", numeric::unimodular_tol},
                            {"jdlg_unimodular_tol_default", 1e-8},
                            {"verdict_residual_threshold", kVerdictResidualThreshold}};
    header["policies"] = {
        {"limsup_tail_window", 0.1},
        {"checkpoints", "dyadic up to n_max"},
        {"truncation_envelope_weights", "2^-(n+1)"},
        {"verdict", "decayed iff final truncated residual <= threshold and last three Cauchy "
                    "residuals nonincreasing"}};
    header["disclosures"] = ordered_json::array(
        {"finite-dimensional model: b.a.u., a.u. and norm convergence coincide; "
         "truncated curves are diagnostics, not a distinct convergence mode",
         "limsup-style seminorms are finite-horizon proxies: max of running means over "
         "the disclosed tail window",
         "e = 1 residual curves are reported alongside every budgeted-projection curve",
         "1-Besicovich weights are treated as W1 weights; the separable-predual "
         "hypothesis is vacuous in finite dimension",
         "hartman coefficients average alpha_k * conj(lambda)^k; spectral limits sum "
         "coefficient(lambda) * eigenprojection(conj(lambda))",
         "flight part = spectral subspace for |lambda| < 1 (orbit tends to zero); "
         "projections are oblique for non-normal L2 restrictions and the condition "
         "number is reported"});

    ordered_json weights = ordered_json::array();
    for (const auto& w : sc.weights) {
        ordered_json wj;
        wj["id"] = w.id;
        wj["class"] = to_string(w.seq.declared_class());
        wj["drift_warning"] = w.seq.drift_warning();
        if (w.seq.drift_warning()) wj["drift_message"] = w.seq.drift_message();
        weights.push_back(wj);
    }
    header["weights"] = weights;

    ordered_json experiments = ordered_json::array();
    for (auto& out : outputs) {
        experiments.push_back(out.summary);
        report.rows.insert(report.rows.end(), out.rows.begin(), out.rows.end());
    }
    header["experiments"] = experiments;
    report.summary = std::move(header);

    std::sort(report.rows.begin(), report.rows.end(), [](const ReportRow& a, const ReportRow& b) {
        if (a.experiment != b.experiment) return a.experiment < b.experiment;
        if (a.weight != b.weight) return a.weight < b.weight;
        return a.n < b.n;
    });
    return report;
}

int resolve_thread_count(const Overrides& ov) {
    if (ov.threads) return std::max(1, *ov.threads);
    if (const char* env = std::getenv("NCWWLAB_THREADS")) {
        const int v = std::atoi(env);
        if (v >= 1) return v;
    }
    return 1;
}

RunResult run_scenario_file(const std::string& path, const Overrides& ov) {
    const Scenario sc = load_scenario(path, ov);
    const int threads = resolve_thread_count(ov);
    ExperimentReport report = execute_scenario(sc, threads);

    const std::string out_dir = ov.out_dir.value_or(sc.out_dir);
    std::filesystem::create_directories(out_dir);
    RunResult res;
    res.rows_path = out_dir + "/rows.csv";
    res.summary_path = out_dir + "/summary.json";
    {
        std::ofstream rows(res.rows_path, std::ios::binary);
        rows << report.rows_csv();
    }
    {
        std::ofstream summary(res.summary_path, std::ios::binary);
        summary << report.summary_json();
    }

    res.exit_code = 0;
    if (ov.strict) {
        for (const auto& exp : report.summary.at("experiments")) {
            if (exp.contains("streams"))
                for (const auto& s : exp.at("streams"))
                    if (s.at("verdict") != "decayed-below-threshold") res.exit_code = 1;
        }
    }
    return res;
}

std::string describe_scenario_file(const std::string& path, const Overrides& ov) {
    const Scenario sc = load_scenario(path, ov);
    std::string out;
    out += "scenario " + path + " (hash " + sc.source_hash + ")\n";
    out += "algebra: " + std::to_string(sc.algebra.block_count()) + " block(s) [";
    for (int b = 0; b < sc.algebra.block_count(); ++b) {
        if (b) out += ", ";
        out += "dim " + std::to_string(sc.algebra.dim(b)) + " x weight " +
               std::to_string(sc.algebra.weight(b));
    }
    out += "], tau(1) = " + std::to_string(sc.algebra.total_trace()) +
           ", hs dim = " + std::to_string(sc.algebra.hs_dim()) + "\n";

    const auto& tags = sc.op.tags();
    out += "operator: " + sc.op.kind() + " | proof tags:";
    if (tags.positive) out += " positive";
    if (tags.l1_contraction) out += " l1-contraction";
    if (tags.linf_contraction) out += " linf-contraction";
    if (tags.trace_preserving) out += " trace-preserving";
    if (tags.unital) out += " unital";
    if (tags.l2_self_adjoint) out += " l2-self-adjoint";
    if (tags.l2_positive) out += " l2-positive";
    if (tags.l2_normal) out += " l2-normal";
    if (!tags.positive && !tags.l1_contraction) out += " (none; sampled verdicts)";
    out += "\n";

    out += "initial element: " + sc.initial_desc + "\n";
    out += "weights:\n";
    for (const auto& w : sc.weights) {
        out += "  " + w.id + ": " + to_string(w.seq.declared_class());
        if (w.seq.drift_warning()) out += "  [drift warning]";
        out += "\n";
    }

    out += "experiments (n_max " + std::to_string(sc.n_max) + "):\n";
    std::uint64_t total_applies = 0;
    // weighted experiments share one orbit pass at the maximal horizon
    std::uint64_t weighted_horizon = 0;
    for (const auto& e : sc.experiments)
        if (e.kind == "weighted")
            weighted_horizon = std::max(weighted_horizon,
                                        e.params.contains("n_max")
                                            ? e.params.at("n_max").get<std::uint64_t>()
                                            : sc.n_max);
    bool weighted_seen = false;
    for (const auto& e : sc.experiments) {
        const std::uint64_t n = e.params.contains("n_max")
                                    ? e.params.at("n_max").get<std::uint64_t>()
                                    : sc.n_max;
        std::uint64_t applies = 0;
        if (e.kind == "weighted") {
            applies = weighted_seen ? 0 : weighted_horizon;
            weighted_seen = true;
        } else if (e.kind == "primes") {
            const double nn = static_cast<double>(n);
            applies = static_cast<std::uint64_t>(nn * (std::log(nn + 2) + std::log(std::log(nn + 3))));
        } else if (e.kind == "mangoldt" || e.kind == "uniform_ww") {
            applies = n;
        } else if (e.kind == "moving") {
            applies = 2 * n;
        } else if (e.kind == "return_time") {
            applies = static_cast<std::uint64_t>(e.params.value("samples", 1)) * 3 * n;
        } else {
            applies = 0;  // jdlg / validate / stability_probe are matrix-level
        }
        total_applies += applies;
        out += "  " + e.id + " (" + e.kind + "): ~" + std::to_string(applies) +
               " T-applications\n";
    }
    out += "estimated total T-applications: " + std::to_string(total_applies) + "\n";
    return out;
}

}  // namespace ncwwlab
