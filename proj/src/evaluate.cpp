#include "fastr/evaluate.hpp"

#include <algorithm>
#include <filesystem>
#include <map>
#include <numeric>
#include <sstream>

#include "fastr/errors.hpp"
#include "fastr/fit.hpp"
#include "fastr/io.hpp"
#include "fastr/simulate.hpp"

namespace fastr {

namespace {

std::vector<std::string> header_columns(const std::string& text) {
    std::vector<std::string> cols;
    const auto end = text.find('\n');
    std::string line = text.substr(0, end);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cols.push_back(c);
    return cols;
}

double grouped_mise(std::span<const double> t, std::span<const double> fh, std::span<const double> ft,
                    const std::vector<std::int64_t>& group, std::size_t& groups) {
    std::map<std::int64_t, std::vector<std::size_t>> rows;
    for (std::size_t r = 0; r < group.size(); ++r) rows[group[r]].push_back(r);
    double total = 0.0;
    for (const auto& [g, idx] : rows) {
        std::vector<double> tt, a, b;
        for (auto r : idx) {
            tt.push_back(t[r]);
            a.push_back(fh[r]);
            b.push_back(ft[r]);
        }
        total += mise_on_points(tt, a, b);
    }
    groups = rows.size();
    return groups ? total / static_cast<double>(groups) : 0.0;
}

std::string file_stem(const std::string& term) {
    std::string s = term;
    for (auto& c : s)
        if (c == ':' || c == '/' || c == '\\') c = '_';
    return s;
}

} // namespace

Dataset read_truth_csv(const Model& model, const std::string& path) {
    const std::string text = read_file(path);
    Schema schema;
    schema.numeric = model.schema().numeric;
    schema.categorical = model.schema().categorical;
    for (const auto& c : header_columns(text)) {
        if (c.rfind(truth_prefix, 0) == 0) schema.numeric.push_back(c);
    }
    return parse_csv(text, schema, false, path);
}

std::vector<double> term_contribution(const Model& model, std::size_t term, const Dataset& data) {
    const Dataset aligned = model.align(data);
    std::vector<std::size_t> rows(data.rows());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    const EncodedBatch batch = encode_batch(aligned, rows);
    const Term& t = model.terms().at(term);
    const TermCache cache = t.prepare(batch, std::pmr::get_default_resource());
    std::vector<double> out(rows.size(), 0.0);
    t.forward(batch, cache, model.term_params(term), out);
    return out;
}

std::vector<TermEvaluation> evaluate_terms(const Model& model, const Dataset& truth) {
    std::vector<std::string> truth_terms;
    for (const auto& c : truth.numeric_columns()) {
        if (c.name.rfind(truth_prefix, 0) == 0) truth_terms.push_back(c.name.substr(truth_prefix.size()));
    }
    if (truth_terms.empty()) throw DataError("truth table has no 'f:<term>' columns");
    const Dataset aligned = model.align(truth);
    std::vector<TermEvaluation> out;
    for (const auto& name : truth_terms) {
        std::size_t idx = 0;
        try {
            idx = model.term_index(name);
        } catch (const ConfigError&) {
            throw ConfigError("truth term '" + name + "' does not match any model term");
        }
        const Term& term = model.terms()[idx];
        const auto& s = term.spec();
        const auto& b = term.binding();
        const auto fh = term_contribution(model, idx, truth);
        const auto& ft = truth.numeric(std::string(truth_prefix) + name).values;
        TermEvaluation ev{name, std::string(kind_name(s.kind)), 0.0, 1};
        switch (s.kind) {
        case TermKind::smooth:
            ev.mise = mise_on_points(aligned.numeric_columns()[b.num_a].values, fh, ft);
            break;
        case TermKind::varying_coefficient:
        case TermKind::factorized_vc: {
            std::vector<std::int64_t> group(fh.size());
            const auto& ci = aligned.categorical_columns()[b.cat_a].codes;
            for (std::size_t r = 0; r < group.size(); ++r) {
                group[r] = ci[r];
                if (s.kind == TermKind::factorized_vc) {
                    group[r] = group[r] * static_cast<std::int64_t>(b.levels_b + 1) +
                               aligned.categorical_columns()[b.cat_b].codes[r];
                }
            }
            ev.mise = grouped_mise(aligned.numeric_columns()[b.num_a].values, fh, ft, group, ev.groups);
            break;
        }
        default: {
            const std::vector<double> ones(fh.size(), 1.0);
            ev.mise = mise(fh, ft, ones);
            break;
        }
        }
        out.push_back(ev);
    }
    return out;
}

std::string format_evaluation_csv(const std::vector<TermEvaluation>& rows) {
    std::string s = "term,kind,mise,groups\n";
    for (const auto& r : rows) {
        s += r.term + "," + r.kind + "," + format_double(r.mise) + "," + std::to_string(r.groups) + "\n";
    }
    return s;
}

std::vector<std::string> write_effect_tables(const Model& model, std::size_t grid_size, const std::string& dir) {
    std::vector<std::string> paths;
    for (const auto& tab : export_effects(model, grid_size)) {
        const std::string path =
            (std::filesystem::path(dir) / (file_stem(tab.term) + "_" + tab.kind + ".csv")).string();
        write_file_atomic(path, format_effect_csv(tab));
        paths.push_back(path);
    }
    return paths;
}

} // namespace fastr
