#include "fastr/config.hpp"

#include <algorithm>
#include <cmath>

#include "fastr/errors.hpp"
#include "fastr/io.hpp"
#include "spec_json.hpp"

namespace fastr {

namespace detail {

ObjectReader::ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError("'" + (path_.empty() ? std::string("<root>") : path_) + "' must be an object");
}

const json& ObjectReader::raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
}

std::optional<std::string> ObjectReader::string(const std::string& key) {
    if (!has(key)) return std::nullopt;
    const json& v = raw(key);
    if (!v.is_string()) throw ConfigError("'" + path(key) + "' must be a string");
    return v.get<std::string>();
}

std::optional<double> ObjectReader::number(const std::string& key) {
    if (!has(key)) return std::nullopt;
    const json& v = raw(key);
    if (!v.is_number()) throw ConfigError("'" + path(key) + "' must be a number");
    return v.get<double>();
}

std::optional<std::uint64_t> ObjectReader::count(const std::string& key) {
    if (!has(key)) return std::nullopt;
    const json& v = raw(key);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return static_cast<std::uint64_t>(v.get<std::int64_t>());
    throw ConfigError("'" + path(key) + "' must be a non-negative integer");
}

std::optional<bool> ObjectReader::boolean(const std::string& key) {
    if (!has(key)) return std::nullopt;
    const json& v = raw(key);
    if (!v.is_boolean()) throw ConfigError("'" + path(key) + "' must be true or false");
    return v.get<bool>();
}

std::optional<std::vector<std::string>> ObjectReader::strings(const std::string& key) {
    if (!has(key)) return std::nullopt;
    const json& v = raw(key);
    if (!v.is_array()) throw ConfigError("'" + path(key) + "' must be an array of strings");
    std::vector<std::string> out;
    for (const auto& e : v) {
        if (!e.is_string()) throw ConfigError("'" + path(key) + "' must be an array of strings");
        out.push_back(e.get<std::string>());
    }
    return out;
}

std::optional<std::vector<std::size_t>> ObjectReader::counts(const std::string& key) {
    if (!has(key)) return std::nullopt;
    const json& v = raw(key);
    if (!v.is_array()) throw ConfigError("'" + path(key) + "' must be an array of non-negative integers");
    std::vector<std::size_t> out;
    for (const auto& e : v) {
        if (!e.is_number_integer() || e.get<std::int64_t>() < 0) {
            throw ConfigError("'" + path(key) + "' must be an array of non-negative integers");
        }
        out.push_back(static_cast<std::size_t>(e.get<std::int64_t>()));
    }
    return out;
}

void ObjectReader::finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
        if (!seen_.contains(it.key())) throw ConfigError("unknown key '" + path(it.key()) + "'");
    }
}

json term_to_json(const TermSpec& s) {
    json j;
    j["kind"] = std::string(kind_name(s.kind));
    j["name"] = s.name.empty() ? default_term_name(s) : s.name;
    if (!s.cat_a.empty()) j["i"] = s.cat_a;
    if (!s.cat_b.empty()) j["u"] = s.cat_b;
    if (!s.num_a.empty()) j["x"] = s.num_a;
    if (!s.num_b.empty()) j["z"] = s.num_b;
    if (has_smoothing(s.kind)) {
        j["L"] = s.num_basis;
        if (uses_basis_b(s.kind)) j["L_b"] = s.num_basis_b;
        j["degree"] = s.degree;
        j["order"] = s.order;
    }
    if (s.kind == TermKind::factorized_bias || s.kind == TermKind::factorized_vc) j["D"] = s.latent_dim;
    if (s.lambda) j["lambda"] = *s.lambda;
    if (s.df) j["df"] = *s.df;
    j["l2"] = s.l2;
    return j;
}

TermSpec term_from_json(const json& j, const std::string& path, double default_l2) {
    ObjectReader r(j, path);
    TermSpec s;
    const auto kind = r.string("kind");
    if (!kind) throw ConfigError("'" + r.path("kind") + "' is required");
    s.kind = parse_kind(*kind);
    s.cat_a = r.string("i").value_or("");
    s.cat_b = r.string("u").value_or("");
    s.num_a = r.string("x").value_or("");
    s.num_b = r.string("z").value_or("");
    s.num_basis = r.count("L").value_or(s.num_basis);
    s.num_basis_b = r.count("L_b").value_or(s.num_basis_b);
    s.degree = static_cast<int>(r.count("degree").value_or(static_cast<std::uint64_t>(s.degree)));
    s.order = static_cast<int>(r.count("order").value_or(static_cast<std::uint64_t>(s.order)));
    s.latent_dim = r.count("D").value_or(s.latent_dim);
    s.lambda = r.number("lambda");
    s.df = r.number("df");
    s.l2 = r.number("l2").value_or(default_l2);
    s.name = r.string("name").value_or("");
    r.finish();
    if (s.lambda && s.df) throw ConfigError("'" + path + "': give either lambda or df, not both");
    try {
        validate_term_spec(s);
    } catch (const ConfigError& e) {
        throw ConfigError("'" + path + "': " + e.what());
    }
    if (s.name.empty()) s.name = default_term_name(s);
    if (s.name.find_first_of(",\n\r\"") != std::string::npos) {
        throw ConfigError("'" + r.path("name") + "' must not contain commas, quotes or line breaks");
    }
    return s;
}

} // namespace detail

namespace {

using detail::json;
using detail::ObjectReader;

FamilyKind family_at(ObjectReader& r, const std::string& key, FamilyKind fallback) {
    const auto name = r.string(key);
    if (!name) return fallback;
    try {
        return parse_family(*name);
    } catch (const Error& e) {
        throw ConfigError("'" + r.path(key) + "': " + e.what());
    }
}

void parse_fit(ObjectReader& r, FitConfig& fit, double& l2) {
    fit.batch_size = r.count("batch_size").value_or(fit.batch_size);
    fit.max_epochs = r.count("max_epochs").value_or(fit.max_epochs);
    fit.learning_rate = r.number("learning_rate").value_or(fit.learning_rate);
    if (auto o = r.string("optimizer")) fit.optimizer = parse_optimizer(*o);
    fit.validation_fraction = r.number("validation_fraction").value_or(fit.validation_fraction);
    fit.patience = r.count("patience").value_or(fit.patience);
    fit.seed = r.count("seed").value_or(fit.seed);
    fit.df = r.number("df").value_or(fit.df);
    l2 = r.number("l2").value_or(0.0);
    if (!(l2 >= 0.0)) throw ConfigError("'" + r.path("l2") + "' must be >= 0");
    r.finish();
    try {
        validate_fit_config(fit);
    } catch (const ConfigError& e) {
        throw ConfigError(std::string("fit: ") + e.what());
    }
}

DGPSpec parse_simulate(ObjectReader& r, FamilyKind fallback) {
    DGPSpec s;
    s.family = fallback;
    s.n = r.count("n").value_or(s.n);
    s.family = family_at(r, "family", s.family);
    s.seed = r.count("seed").value_or(s.seed);
    s.univariate = r.strings("univariate").value_or(s.univariate);
    s.bivariate = r.boolean("bivariate").value_or(s.bivariate);
    s.vc_levels = r.count("vc_levels").value_or(s.vc_levels);
    s.interaction_levels = r.count("interaction_levels").value_or(s.interaction_levels);
    s.levels_i = r.count("levels_i").value_or(s.levels_i);
    s.levels_u = r.count("levels_u").value_or(s.levels_u);
    s.factorized = r.boolean("factorized").value_or(s.factorized);
    s.pair_vc = r.boolean("pair_vc").value_or(s.pair_vc);
    s.latent_dim = r.count("latent_dim").value_or(s.latent_dim);
    s.true_basis = r.count("true_basis").value_or(s.true_basis);
    s.intercept = r.number("intercept").value_or(s.intercept);
    s.sigma = r.number("sigma").value_or(s.sigma);
    s.phi = r.number("phi").value_or(s.phi);
    s.wide_domain = r.boolean("wide_domain").value_or(s.wide_domain);
    r.finish();
    validate_dgp_spec(s);
    return s;
}

void parse_bench(ObjectReader& r, BenchConfig& b) {
    b.levels = r.counts("levels").value_or(b.levels);
    b.n = r.counts("n").value_or(b.n);
    b.kinds = r.strings("kinds").value_or(b.kinds);
    b.epochs = r.count("epochs").value_or(b.epochs);
    b.batch_size = r.count("batch_size").value_or(b.batch_size);
    b.validation_fraction = r.number("validation_fraction").value_or(b.validation_fraction);
    b.num_basis = r.count("num_basis").value_or(b.num_basis);
    b.seed = r.count("seed").value_or(b.seed);
    r.finish();
    validate_bench_config(b);
}

} // namespace

RunConfig parse_config(const std::string& text, const std::string& source) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(source + ": invalid JSON: " + e.what());
    }
    try {
        RunConfig cfg;
        ObjectReader root(doc, "");
        const auto schema = root.string("schema");
        if (!schema) throw ConfigError("'schema' is required and must be \"" + std::string(config_schema_id) + "\"");
        if (*schema != config_schema_id) {
            throw ConfigError("unsupported config schema '" + *schema + "' (expected " +
                              std::string(config_schema_id) + ")");
        }

        double default_l2 = 0.0;
        if (root.has("fit")) {
            ObjectReader r(root.raw("fit"), "fit");
            parse_fit(r, cfg.fit, default_l2);
        }

        bool has_data = false;
        if (root.has("data")) {
            has_data = true;
            ObjectReader r(root.raw("data"), "data");
            cfg.schema.outcome = r.string("outcome").value_or("y");
            cfg.schema.numeric = r.strings("numeric").value_or(std::vector<std::string>{});
            cfg.schema.categorical = r.strings("categorical").value_or(std::vector<std::string>{});
            r.finish();
            for (const auto& n : cfg.schema.numeric) {
                if (std::find(cfg.schema.categorical.begin(), cfg.schema.categorical.end(), n) !=
                    cfg.schema.categorical.end()) {
                    throw ConfigError("data: column '" + n + "' declared both numeric and categorical");
                }
            }
        }

        if (root.has("model")) {
            cfg.has_model = true;
            ObjectReader r(root.raw("model"), "model");
            cfg.model.family = family_at(r, "family", FamilyKind::gaussian);
            if (!r.has("terms")) throw ConfigError("'model.terms' is required");
            const json& terms = r.raw("terms");
            if (!terms.is_array()) throw ConfigError("'model.terms' must be an array");
            for (std::size_t k = 0; k < terms.size(); ++k) {
                cfg.model.terms.push_back(
                    detail::term_from_json(terms[k], "model.terms[" + std::to_string(k) + "]", default_l2));
            }
            r.finish();
            validate_model_spec(cfg.model);
            const Schema need = required_schema(cfg.model, cfg.schema.outcome.empty() ? "y" : cfg.schema.outcome);
            if (!has_data) {
                cfg.schema = need;
            } else {
                for (const auto& n : need.numeric) {
                    if (std::find(cfg.schema.numeric.begin(), cfg.schema.numeric.end(), n) == cfg.schema.numeric.end()) {
                        throw ConfigError("model uses numeric feature '" + n + "' which is not declared in data.numeric");
                    }
                }
                for (const auto& n : need.categorical) {
                    if (std::find(cfg.schema.categorical.begin(), cfg.schema.categorical.end(), n) ==
                        cfg.schema.categorical.end()) {
                        throw ConfigError("model uses categorical feature '" + n +
                                          "' which is not declared in data.categorical");
                    }
                }
            }
        }
        if (cfg.schema.outcome.empty()) cfg.schema.outcome = "y";

        if (root.has("simulate")) {
            ObjectReader r(root.raw("simulate"), "simulate");
            cfg.simulate = parse_simulate(r, cfg.has_model ? cfg.model.family : FamilyKind::gaussian);
        }
        if (root.has("bench")) {
            ObjectReader r(root.raw("bench"), "bench");
            parse_bench(r, cfg.bench);
        }
        if (root.has("evaluate")) {
            ObjectReader r(root.raw("evaluate"), "evaluate");
            cfg.grid_size = r.count("grid_size").value_or(cfg.grid_size);
            r.finish();
            if (cfg.grid_size < 2) throw ConfigError("'evaluate.grid_size' must be >= 2");
        }
        root.finish();
        return cfg;
    } catch (const ConfigError& e) {
        throw ConfigError(source + ": " + e.what());
    }
}

RunConfig load_config(const std::string& path) { return parse_config(read_file(path), path); }

void override_seed(RunConfig& cfg, std::uint64_t seed) {
    cfg.fit.seed = seed;
    cfg.bench.seed = seed;
    if (cfg.simulate) cfg.simulate->seed = seed;
}

} // namespace fastr
