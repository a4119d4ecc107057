#include "ncwwlab/scenario.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <fstream>
#include <sstream>

#include "ncwwlab/detrng.hpp"
#include "ncwwlab/spectral.hpp"

namespace ncwwlab {

using nlohmann::json;

std::string fnv1a64_hex(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

Complex parse_complex(const json& j) {
    if (j.is_number()) return Complex(j.get<double>(), 0.0);
    if (j.is_array() && j.size() == 2) return Complex(j[0].get<double>(), j[1].get<double>());
    if (j.is_object())
        return Complex(j.value("re", 0.0), j.value("im", 0.0));
    throw ParseError("expected a complex number (number, [re,im] or {re,im}), got " + j.dump());
}

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
    throw ParseError(where + ": " + what);
}

const json& need(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key)) fail(where, std::string("missing field '") + key + "'");
    return j.at(key);
}

TracialAlgebra parse_algebra(const json& j) {
    if (!j.is_object() || !j.contains("blocks")) fail("algebra", "expected {blocks: [...]}");
    std::vector<std::pair<int, double>> blocks;
    for (const auto& b : j.at("blocks"))
        blocks.emplace_back(need(b, "dim", "algebra.blocks").get<int>(),
                            need(b, "weight", "algebra.blocks").get<double>());
    return new_algebra(blocks);
}

AlgElement parse_element(const json& j, const TracialAlgebra& alg, DetRng& rng);

AlgElement parse_explicit_blocks(const json& j, const TracialAlgebra& alg) {
    const auto& blocks = need(j, "blocks", "element");
    if (static_cast<int>(blocks.size()) != alg.block_count())
        fail("element", "wrong number of blocks");
    AlgElement x = AlgElement::zero(alg);
    for (int b = 0; b < alg.block_count(); ++b) {
        const auto& rows = blocks[static_cast<std::size_t>(b)];
        const int d = alg.dim(b);
        if (static_cast<int>(rows.size()) != d) fail("element", "wrong row count in block");
        for (int i = 0; i < d; ++i) {
            if (static_cast<int>(rows[i].size()) != d)
                fail("element", "wrong column count in block");
            for (int jj = 0; jj < d; ++jj) x.block(b)(i, jj) = parse_complex(rows[i][jj]);
        }
    }
    return x;
}

AlgElement parse_element(const json& j, const TracialAlgebra& alg, DetRng& rng) {
    const std::string kind = j.value("kind", j.contains("blocks") ? "explicit" : "");
    if (kind == "explicit") return parse_explicit_blocks(j, alg);
    if (kind == "identity") return AlgElement::identity(alg);
    if (kind == "zero") return AlgElement::zero(alg);
    if (kind == "diagonal") {
        std::vector<Complex> entries;
        for (const auto& e : need(j, "entries", "element.diagonal")) entries.push_back(parse_complex(e));
        return AlgElement::diagonal(alg, entries);
    }
    if (kind == "random") {
        DetRng local = rng.fork(j.value("seed", 0ULL));
        return random_element(alg, local);
    }
    fail("element", "unknown kind '" + kind + "'");
}

SuperOperator parse_operator(const json& j, const TracialAlgebra& alg, DetRng& rng) {
    const std::string kind = need(j, "kind", "operator").get<std::string>();
    if (kind == "identity") return make_identity(alg);
    if (kind == "conjugation")
        return make_conjugation(parse_element(need(j, "u", "operator.conjugation"), alg, rng));
    if (kind == "convolution") {
        std::vector<std::pair<long, double>> mu;
        for (const auto& entry : need(j, "mu", "operator.convolution")) {
            if (!entry.is_array() || entry.size() != 2)
                fail("operator.convolution", "mu entries must be [n, weight]");
            mu.emplace_back(entry[0].get<long>(), entry[1].get<double>());
        }
        const auto phi = parse_operator(need(j, "phi", "operator.convolution"), alg, rng);
        return make_convolution(phi, mu);
    }
    if (kind == "expectation_product") {
        std::vector<structure::SubalgebraSpec> specs;
        for (const auto& s : need(j, "subalgebras", "operator.expectation_product")) {
            const std::string sk = need(s, "kind", "subalgebra").get<std::string>();
            if (sk == "diagonal")
                specs.push_back({structure::SubalgebraSpec::Kind::diagonal});
            else if (sk == "scalars")
                specs.push_back({structure::SubalgebraSpec::Kind::scalars});
            else if (sk == "block_scalars")
                specs.push_back({structure::SubalgebraSpec::Kind::block_scalars});
            else if (sk == "tensor_factor")
                specs.push_back({structure::SubalgebraSpec::Kind::tensor_factor,
                                 need(s, "factor_dim", "subalgebra").get<int>()});
            else
                fail("subalgebra", "unknown kind '" + sk + "'");
        }
        return make_expectation_product(alg, specs);
    }
    if (kind == "nc_torus_heat")
        return make_nc_torus_heat(need(j, "q", "operator.heat").get<int>(),
                                  need(j, "p", "operator.heat").get<int>(),
                                  need(j, "t", "operator.heat").get<double>(), alg);
    if (kind == "matrix") {
        const auto& rows = need(j, "data", "operator.matrix");
        const int d = alg.hs_dim();
        if (static_cast<int>(rows.size()) != d) fail("operator.matrix", "wrong row count");
        Eigen::MatrixXcd m(d, d);
        for (int i = 0; i < d; ++i) {
            if (static_cast<int>(rows[i].size()) != d) fail("operator.matrix", "wrong column count");
            for (int jj = 0; jj < d; ++jj) m(i, jj) = parse_complex(rows[i][jj]);
        }
        return make_generic(alg, std::move(m));
    }
    fail("operator", "unknown kind '" + kind + "'");
}

WeightSequence parse_weight(const json& j) {
    const std::string kind = need(j, "kind", "weight").get<std::string>();
    if (kind == "constant") return gen_constant(parse_complex(need(j, "value", "weight.constant")));
    if (kind == "rotation") return gen_rotation(parse_complex(need(j, "mu", "weight.rotation")));
    if (kind == "trig_poly") {
        std::vector<std::pair<Complex, Complex>> coeffs;
        for (const auto& t : need(j, "terms", "weight.trig_poly"))
            coeffs.emplace_back(parse_complex(need(t, "r", "trig_poly term")),
                                parse_complex(need(t, "lambda", "trig_poly term")));
        return gen_trig_poly(coeffs);
    }
    if (kind == "von_mangoldt") return gen_von_mangoldt();
    if (kind == "ergodic_sample") {
        const double theta = need(j, "theta", "weight.ergodic_sample").get<double>();
        const double omega = j.value("omega", 0.0);
        const std::string f = j.value("f", "exponential");
        if (f == "exponential")
            return gen_ergodic_sample(theta, omega, CircleFunction::exponential());
        if (f == "indicator")
            return gen_ergodic_sample(theta, omega,
                                      CircleFunction::indicator(j.value("a", 0.0),
                                                                j.value("b", 0.5)));
        fail("weight.ergodic_sample", "unknown f '" + f + "'");
    }
    if (kind == "convergent") {
        // α_k = value + a/(k+1), limit = value
        const Complex value = parse_complex(need(j, "value", "weight.convergent"));
        const Complex a = j.contains("a") ? parse_complex(j.at("a")) : Complex(0.0);
        return gen_convergent(
            [value, a](std::uint64_t k) {
                return value + a / Complex(static_cast<double>(k + 1));
            },
            value);
    }
    if (kind == "random_phases")
        return gen_random_phases(need(j, "seed", "weight.random_phases").get<std::uint64_t>());
    fail("weight", "unknown kind '" + kind + "'");
}

}  // namespace

const Scenario::WeightEntry& Scenario::weight_by_id(const std::string& id) const {
    for (const auto& w : weights)
        if (w.id == id) return w;
    throw ValidationError("unknown weight id '" + id + "'");
}

Scenario parse_scenario(const json& doc, const std::string& source_bytes, const Overrides& ov) {
    Scenario sc;
    sc.source_hash = fnv1a64_hex(source_bytes);
    try {
        sc.seed = ov.seed ? *ov.seed : doc.value("seed", 0ULL);
        sc.n_max = ov.n_max ? *ov.n_max : doc.value("n_max", 1ULL << 17);
        if (sc.n_max < 1) fail("scenario", "n_max must be >= 1");
        sc.trace_budget_fraction = doc.value("trace_budget", 0.05);
        sc.require_ds = doc.value("require_ds", false);
        sc.out_dir = doc.value("out", "out");

        // any random spec needs an explicit seed
        const bool has_seed = ov.seed.has_value() || doc.contains("seed");
        if (!has_seed) {
            bool random_used = false;
            if (doc.contains("initial_element")) {
                const auto& ie = doc.at("initial_element");
                random_used = ie.value("kind", "") == "random" ||
                              (ie.value("kind", "") == "flight_component_of" &&
                               ie.contains("element") &&
                               ie.at("element").value("kind", "") == "random");
            }
            if (doc.contains("experiments"))
                for (const auto& e : doc.at("experiments")) {
                    const std::string k = e.value("kind", "");
                    if (k == "uniform_ww" || k == "validate" || k == "stability_probe" ||
                        k == "return_time")
                        random_used = true;
                }
            if (random_used)
                throw ValidationError(
                    "scenario uses random specs but declares no seed (add \"seed\" or pass "
                    "--seed)");
        }

        DetRng rng(sc.seed);

        sc.algebra = parse_algebra(need(doc, "algebra", "scenario"));
        sc.op = parse_operator(need(doc, "operator", "scenario"), sc.algebra, rng);
        // heat operators may rebuild the algebra handle; keep them consistent
        sc.algebra = sc.op.algebra();

        if (doc.contains("weights"))
            for (const auto& w : doc.at("weights"))
                sc.weights.push_back(
                    {need(w, "id", "weight").get<std::string>(), parse_weight(w)});

        // initial element; operator-derived kinds are resolved here
        const json ej = doc.contains("initial_element") ? doc.at("initial_element")
                                                        : json{{"kind", "random"}, {"seed", 1}};
        const std::string ekind = ej.value("kind", ej.contains("blocks") ? "explicit" : "");
        if (ekind == "eigenvector_of_operator") {
            const int index = ej.value("index", 0);
            Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(sc.op.hs_matrix());
            std::vector<int> order(static_cast<std::size_t>(es.eigenvalues().size()));
            for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
            std::sort(order.begin(), order.end(), [&](int a, int b) {
                const Complex za = es.eigenvalues()(a), zb = es.eigenvalues()(b);
                if (std::abs(std::abs(za) - std::abs(zb)) > 1e-12)
                    return std::abs(za) > std::abs(zb);
                return std::arg(za) < std::arg(zb);
            });
            if (index < 0 || index >= static_cast<int>(order.size()))
                fail("initial_element", "eigenvector index out of range");
            Eigen::VectorXcd v = es.eigenvectors().col(order[static_cast<std::size_t>(index)]);
            int arg_max = 0;
            for (int i = 1; i < v.size(); ++i)
                if (std::abs(v(i)) > std::abs(v(arg_max))) arg_max = i;
            v *= std::abs(v(arg_max)) / v(arg_max);  // deterministic phase
            v.normalize();
            sc.initial = unvec(sc.algebra, v);
            sc.initial_desc = "eigenvector[" + std::to_string(index) + "]";
        } else if (ekind == "flight_component_of") {
            DetRng local = rng.fork(17);
            const AlgElement base =
                parse_element(need(ej, "element", "initial_element"), sc.algebra, local);
            sc.initial = jdlg_split(sc.op).project_flight(base);
            sc.initial_desc = "flight_component";
        } else {
            DetRng local = rng.fork(17);
            sc.initial = parse_element(ej, sc.algebra, local);
            sc.initial_desc = ekind;
        }

        // experiments; ids must be unique so report rows sort unambiguously
        int auto_id = 0;
        if (doc.contains("experiments"))
            for (const auto& e : doc.at("experiments")) {
                Scenario::Experiment exp;
                exp.kind = need(e, "kind", "experiment").get<std::string>();
                exp.id = e.value("id", exp.kind + "_" + std::to_string(auto_id));
                exp.params = e;
                for (const auto& prev : sc.experiments)
                    if (prev.id == exp.id)
                        throw ValidationError("duplicate experiment id '" + exp.id + "'");
                sc.experiments.push_back(std::move(exp));
                ++auto_id;
            }
        for (std::size_t i = 0; i < sc.weights.size(); ++i)
            for (std::size_t j = i + 1; j < sc.weights.size(); ++j)
                if (sc.weights[i].id == sc.weights[j].id)
                    throw ValidationError("duplicate weight id '" + sc.weights[i].id + "'");

        // checkpoints policy
        if (doc.contains("checkpoints") && doc.at("checkpoints").is_array()) {
            for (const auto& c : doc.at("checkpoints"))
                sc.checkpoints.push_back(c.get<std::uint64_t>());
            if (sc.checkpoints.empty() || sc.checkpoints.back() > sc.n_max)
                fail("checkpoints", "explicit checkpoints must be nonempty and <= n_max");
        } else {
            sc.checkpoints = dyadic_checkpoints(sc.n_max);
        }
    } catch (const ParseError&) {
        throw;
    } catch (const json::exception& e) {
        throw ParseError(std::string("scenario json: ") + e.what());
    }
    return sc;
}

Scenario load_scenario(const std::string& path, const Overrides& ov) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open scenario file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    const std::string bytes = buf.str();
    json doc;
    try {
        doc = json::parse(bytes);
    } catch (const json::exception& e) {
        throw ParseError("scenario '" + path + "' is not valid json: " + e.what());
    }
    return parse_scenario(doc, bytes, ov);
}

}  // namespace ncwwlab
