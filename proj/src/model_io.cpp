#include "fastr/model_io.hpp"

#include <cmath>

#include "fastr/errors.hpp"
#include "fastr/io.hpp"
#include "spec_json.hpp"

namespace fastr {

namespace {

using detail::json;

std::vector<double> doubles(const json& j, const std::string& what) {
    if (!j.is_array()) throw DataError("model file: '" + what + "' must be an array of numbers");
    std::vector<double> out;
    out.reserve(j.size());
    for (const auto& v : j) {
        if (!v.is_number()) throw DataError("model file: '" + what + "' must be an array of numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

const json& field(const json& j, const std::string& key, const std::string& where) {
    if (!j.is_object() || !j.contains(key)) throw DataError("model file: missing '" + where + key + "'");
    return j.at(key);
}

} // namespace

std::string model_to_json(const Model& model) {
    json doc;
    doc["format"] = std::string(model_format_id);
    doc["family"] = std::string(family_name(model.spec().family));
    doc["schema"] = {{"outcome", model.schema().outcome},
                     {"numeric", model.schema().numeric},
                     {"categorical", model.schema().categorical}};
    json dicts = json::array();
    for (const auto& d : model.dictionaries()) dicts.push_back({{"name", d.name}, {"levels", d.levels}});
    doc["dictionaries"] = dicts;
    if (model.has_auxiliary()) {
        doc["auxiliary"] = {{"name", model.spec().family == FamilyKind::gaussian ? "log_sigma" : "log_phi"},
                            {"value", model.params()[0]}};
    } else {
        doc["auxiliary"] = nullptr;
    }

    json terms = json::array();
    for (std::size_t t = 0; t < model.terms().size(); ++t) {
        const Term& term = model.terms()[t];
        json jt;
        jt["spec"] = detail::term_to_json(term.spec());
        if (term.basis_a()) jt["knots"] = term.basis_a()->knots();
        if (term.basis_b()) jt["knots_b"] = term.basis_b()->knots();
        if (has_smoothing(term.spec().kind)) jt["smoothing"] = term.smoothing();
        if (!term.basis_means().empty()) jt["basis_means"] = term.basis_means();
        json blocks = json::array();
        auto p = model.term_params(t);
        std::size_t off = 0;
        for (const auto& b : term.layout()) {
            const std::size_t n = b.size();
            blocks.push_back({{"name", b.name},
                              {"shape", b.shape},
                              {"data", std::vector<double>(p.begin() + off, p.begin() + off + n)}});
            off += n;
        }
        jt["blocks"] = blocks;
        terms.push_back(jt);
    }
    doc["terms"] = terms;

    const auto& m = model.metadata();
    doc["metadata"] = {{"epochs_run", m.epochs_run},
                       {"best_epoch", m.best_epoch},
                       {"best_validation_loss", std::isfinite(m.best_validation_loss) ? json(m.best_validation_loss)
                                                                                      : json(nullptr)},
                       {"stop_reason", m.stop_reason},
                       {"training_rows", m.training_rows},
                       {"seed", m.seed}};
    return doc.dump(1) + "\n";
}

Model model_from_json(const std::string& text, const std::string& source) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw DataError(source + ": invalid JSON: " + e.what());
    }
    try {
        if (!doc.is_object() || doc.value("format", std::string()) != model_format_id) {
            throw DataError("not a " + std::string(model_format_id) + " document");
        }
        ModelSpec spec;
        spec.family = parse_family(field(doc, "family", "").get<std::string>());
        const json& js = field(doc, "schema", "");
        Schema schema;
        schema.outcome = field(js, "outcome", "schema.").get<std::string>();
        schema.numeric = field(js, "numeric", "schema.").get<std::vector<std::string>>();
        schema.categorical = field(js, "categorical", "schema.").get<std::vector<std::string>>();

        std::vector<CategoricalColumn> dicts;
        for (const auto& d : field(doc, "dictionaries", "")) {
            dicts.push_back({field(d, "name", "dictionaries[].").get<std::string>(), {},
                             field(d, "levels", "dictionaries[].").get<std::vector<std::string>>()});
        }
        if (dicts.size() != schema.categorical.size()) {
            throw DataError("dictionary count does not match the categorical schema");
        }

        std::vector<double> params;
        const json& aux = field(doc, "auxiliary", "");
        if (Family(spec.family).has_auxiliary()) {
            if (!aux.is_object()) throw DataError("family needs an auxiliary parameter");
            params.push_back(field(aux, "value", "auxiliary.").get<double>());
        }

        std::vector<Term> terms;
        const json& jterms = field(doc, "terms", "");
        for (std::size_t t = 0; t < jterms.size(); ++t) {
            const json& jt = jterms[t];
            const std::string where = "terms[" + std::to_string(t) + "].";
            TermSpec ts = detail::term_from_json(field(jt, "spec", where), where + "spec");
            spec.terms.push_back(ts);
            std::optional<SplineBasis> ba;
            std::optional<SplineBasis> bb;
            if (jt.contains("knots")) ba.emplace(ts.degree, doubles(jt["knots"], where + "knots"));
            if (jt.contains("knots_b")) bb.emplace(ts.degree, doubles(jt["knots_b"], where + "knots_b"));
            Term term(ts, bind_term(ts, schema, dicts), ba, bb);
            if (jt.contains("smoothing")) term.set_smoothing(jt["smoothing"].get<double>());
            if (jt.contains("basis_means")) term.set_basis_means(doubles(jt["basis_means"], where + "basis_means"));
            const auto layout = term.layout();
            const json& blocks = field(jt, "blocks", where);
            if (blocks.size() != layout.size()) throw DataError(where + "blocks: wrong number of blocks");
            for (std::size_t k = 0; k < layout.size(); ++k) {
                const auto shape = field(blocks[k], "shape", where + "blocks[].").get<std::vector<std::size_t>>();
                if (shape != layout[k].shape) {
                    throw DataError(where + "blocks: shape of '" + layout[k].name + "' does not match the spec");
                }
                const auto data = doubles(field(blocks[k], "data", where + "blocks[]."), where + "data");
                if (data.size() != layout[k].size()) throw DataError(where + "blocks: data length mismatch");
                params.insert(params.end(), data.begin(), data.end());
            }
            terms.push_back(std::move(term));
        }

        Model model(std::move(spec), std::move(schema), std::move(dicts), std::move(terms), std::move(params));
        if (doc.contains("metadata") && doc["metadata"].is_object()) {
            const json& jm = doc["metadata"];
            auto& m = model.metadata();
            m.epochs_run = jm.value("epochs_run", std::size_t{0});
            m.best_epoch = jm.value("best_epoch", std::size_t{0});
            m.best_validation_loss = jm.contains("best_validation_loss") && jm["best_validation_loss"].is_number()
                                         ? jm["best_validation_loss"].get<double>()
                                         : std::numeric_limits<double>::infinity();
            m.stop_reason = jm.value("stop_reason", std::string());
            m.training_rows = jm.value("training_rows", std::size_t{0});
            m.seed = jm.value("seed", std::uint64_t{0});
        }
        return model;
    } catch (const json::exception& e) {
        throw DataError(source + ": malformed model file: " + e.what());
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::validation) throw DataError(source + ": " + e.what());
        throw;
    }
}

void save_model(const Model& model, const std::string& path) { write_file_atomic(path, model_to_json(model)); }

Model load_model(const std::string& path) { return model_from_json(read_file(path), path); }

} // namespace fastr
