#include "fastr/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "fastr/errors.hpp"

namespace fastr {

namespace {

constexpr std::size_t predict_chunk = 4096;

void add_unique(std::vector<std::string>& names, const std::string& name) {
    if (!name.empty() && std::find(names.begin(), names.end(), name) == names.end()) {
        names.push_back(name);
    }
}

std::size_t index_of(const std::vector<std::string>& names, const std::string& name) {
    return static_cast<std::size_t>(std::find(names.begin(), names.end(), name) - names.begin());
}

std::vector<double> column_means(ConstMatrixView m) {
    std::vector<double> means(m.cols, 0.0);
    for (std::size_t r = 0; r < m.rows; ++r) {
        auto row = m.row(r);
        for (std::size_t c = 0; c < m.cols; ++c) means[c] += row[c];
    }
    for (auto& v : means) v /= static_cast<double>(std::max<std::size_t>(m.rows, 1));
    return means;
}

std::uint64_t term_seed(std::uint64_t seed, std::size_t t) {
    return seed ^ (0x9e3779b97f4a7c15ull * (t + 1));
}

} // namespace

void validate_model_spec(const ModelSpec& spec) {
    if (spec.terms.empty()) throw ConfigError("model has no terms");
    std::set<std::string> names;
    for (const auto& t : spec.terms) {
        validate_term_spec(t);
        const std::string name = t.name.empty() ? default_term_name(t) : t.name;
        if (!names.insert(name).second) throw ConfigError("duplicate term name '" + name + "'");
    }
}

Schema required_schema(const ModelSpec& spec, const std::string& outcome) {
    Schema s;
    s.outcome = outcome;
    for (const auto& t : spec.terms) {
        add_unique(s.categorical, t.cat_a);
        add_unique(s.categorical, t.cat_b);
        add_unique(s.numeric, t.num_a);
        add_unique(s.numeric, t.num_b);
    }
    for (const auto& n : s.numeric) {
        if (std::find(s.categorical.begin(), s.categorical.end(), n) != s.categorical.end()) {
            throw ConfigError("feature '" + n + "' is used both as numeric and as categorical");
        }
    }
    return s;
}

TermBinding bind_term(const TermSpec& ts, const Schema& schema,
                      const std::vector<CategoricalColumn>& dictionaries) {
    auto cat = [&](const std::string& name) {
        const std::size_t k = index_of(schema.categorical, name);
        if (k >= schema.categorical.size() || k >= dictionaries.size()) {
            throw ConfigError("term '" + ts.name + "': unknown categorical feature '" + name + "'");
        }
        return k;
    };
    auto num = [&](const std::string& name) {
        const std::size_t k = index_of(schema.numeric, name);
        if (k >= schema.numeric.size()) {
            throw ConfigError("term '" + ts.name + "': unknown numeric feature '" + name + "'");
        }
        return k;
    };
    TermBinding b;
    if (!ts.cat_a.empty()) {
        b.cat_a = cat(ts.cat_a);
        b.levels_a = dictionaries[b.cat_a].level_count();
    }
    if (!ts.cat_b.empty()) {
        b.cat_b = cat(ts.cat_b);
        b.levels_b = dictionaries[b.cat_b].level_count();
    }
    if (!ts.num_a.empty()) b.num_a = num(ts.num_a);
    if (!ts.num_b.empty()) b.num_b = num(ts.num_b);
    return b;
}

Model Model::build(const ModelSpec& spec_in, const Dataset& train, std::uint64_t seed,
                   const std::string& outcome) {
    validate_model_spec(spec_in);
    if (train.rows() == 0) throw DataError("training data has no rows");
    ModelSpec spec = spec_in;
    for (auto& t : spec.terms)
        if (t.name.empty()) t.name = default_term_name(t);
    Schema schema = required_schema(spec, outcome);

    std::vector<CategoricalColumn> dictionaries;
    for (const auto& name : schema.categorical) {
        const auto& col = train.categorical(name);
        dictionaries.push_back({name, {}, col.levels});
    }

    std::vector<Term> terms;
    std::vector<double> params;
    const Family probe(spec.family);
    const bool aux = probe.has_auxiliary();
    if (aux) {
        double init = 0.0;
        if (spec.family == FamilyKind::gaussian && train.has_outcome() && train.rows() > 1) {
            auto y = train.outcome();
            const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
            double ss = 0.0;
            for (double v : y) ss += (v - mean) * (v - mean);
            const double sd = std::sqrt(ss / static_cast<double>(y.size() - 1));
            if (sd > 0.0 && std::isfinite(sd)) init = std::log(sd);
        }
        params.push_back(init);
    }

    for (std::size_t t = 0; t < spec.terms.size(); ++t) {
        const TermSpec& ts = spec.terms[t];
        const TermBinding b = bind_term(ts, schema, dictionaries);
        std::map<std::string, std::size_t> levels;
        if (!ts.cat_a.empty()) levels[ts.cat_a] = b.levels_a;
        if (!ts.cat_b.empty()) levels[ts.cat_b] = b.levels_b;

        std::optional<SplineBasis> basis_a;
        std::optional<SplineBasis> basis_b;
        if (has_smoothing(ts.kind)) {
            basis_a = build_basis(train.numeric(ts.num_a).values, ts.num_basis, ts.degree);
            if (uses_basis_b(ts.kind)) {
                basis_b = build_basis(train.numeric(ts.num_b).values, ts.num_basis_b, ts.degree);
            }
        } else if (ts.kind == TermKind::linear) {
            train.numeric(ts.num_a);
        }

        Term term(ts, b, basis_a, basis_b);
        if (ts.kind == TermKind::smooth) {
            term.set_basis_means(column_means(basis_a->evaluate(train.numeric(ts.num_a).values)));
        } else if (ts.kind == TermKind::tensor_smooth) {
            DenseMatrix ba = basis_a->evaluate(train.numeric(ts.num_a).values);
            DenseMatrix bb = basis_b->evaluate(train.numeric(ts.num_b).values);
            term.set_basis_means(column_means(rwtp(ba, bb)));
        }
        for (const auto& block : init_params(ts, levels, term_seed(seed, t))) {
            params.insert(params.end(), block.values.begin(), block.values.end());
        }
        terms.push_back(std::move(term));
    }

    Model m(std::move(spec), std::move(schema), std::move(dictionaries), std::move(terms), std::move(params));
    m.metadata_.seed = seed;
    m.metadata_.training_rows = train.rows();
    return m;
}

Model::Model(ModelSpec spec, Schema schema, std::vector<CategoricalColumn> dictionaries,
             std::vector<Term> terms, std::vector<double> params)
    : spec_(std::move(spec)),
      schema_(std::move(schema)),
      dictionaries_(std::move(dictionaries)),
      terms_(std::move(terms)),
      params_(std::move(params)) {
    aux_slot_ = Family(spec_.family).has_auxiliary();
    if (terms_.size() != spec_.terms.size()) throw ConfigError("model: term list does not match spec");
    compute_offsets();
}

void Model::compute_offsets() {
    offsets_.clear();
    std::size_t off = aux_slot_ ? 1 : 0;
    for (const auto& t : terms_) {
        offsets_.push_back(off);
        off += t.param_count();
    }
    if (off != params_.size()) {
        throw DimensionError("model: parameter vector has " + std::to_string(params_.size()) +
                             " entries, terms need " + std::to_string(off));
    }
}

std::size_t Model::term_index(const std::string& name) const {
    for (std::size_t t = 0; t < terms_.size(); ++t)
        if (terms_[t].spec().name == name) return t;
    throw ConfigError("model has no term named '" + name + "'");
}

std::span<const double> Model::term_params(std::size_t t, std::span<const double> params) const {
    return params.subspan(offsets_.at(t), terms_[t].param_count());
}

std::span<double> Model::term_params(std::size_t t) {
    return std::span<double>(params_).subspan(offsets_.at(t), terms_[t].param_count());
}

Family Model::family(std::span<const double> params) const {
    return Family(spec_.family, aux_slot_ ? params[0] : 0.0);
}

Dataset Model::align(const Dataset& data) const {
    std::vector<NumericColumn> num;
    for (const auto& name : schema_.numeric) {
        if (!data.numeric_index(name)) throw DataError("missing numeric feature column '" + name + "'");
        num.push_back(data.numeric(name));
    }
    std::vector<CategoricalColumn> cat;
    for (const auto& name : schema_.categorical) {
        if (!data.categorical_index(name)) {
            throw DataError("missing categorical feature column '" + name + "'");
        }
        cat.push_back(data.categorical(name));
    }
    std::string outcome_name;
    std::vector<double> y;
    if (data.has_outcome()) {
        outcome_name = data.outcome_name();
        y.assign(data.outcome().begin(), data.outcome().end());
    }
    return Dataset(outcome_name, std::move(y), std::move(num), std::move(cat)).recoded(dictionaries_);
}

void Model::eta(const EncodedBatch& batch, std::span<const double> params, std::span<double> out,
                std::pmr::memory_resource* mr) const {
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t t = 0; t < terms_.size(); ++t) {
        TermCache cache = terms_[t].prepare(batch, mr);
        terms_[t].forward(batch, cache, term_params(t, params), out);
    }
}

std::size_t count_unseen_rows(const Dataset& aligned) {
    std::size_t n = 0;
    for (std::size_t r = 0; r < aligned.rows(); ++r) {
        for (const auto& c : aligned.categorical_columns()) {
            if (c.codes[r] == unseen_level) {
                ++n;
                break;
            }
        }
    }
    return n;
}

Prediction Model::predict(const Dataset& data) const {
    const Dataset aligned = align(data);
    const std::size_t n = data.rows();
    Prediction p;
    p.eta.resize(n);
    p.unseen_rows = count_unseen_rows(aligned);
    std::vector<std::size_t> rows;
    for (std::size_t start = 0; start < n; start += predict_chunk) {
        const std::size_t end = std::min(n, start + predict_chunk);
        rows.resize(end - start);
        std::iota(rows.begin(), rows.end(), start);
        EncodedBatch batch = encode_batch(aligned, rows);
        eta(batch, params_, std::span<double>(p.eta).subspan(start, end - start),
            std::pmr::get_default_resource());
    }
    auto mean = family().mean(p.eta);
    p.mean = std::move(mean.values);
    p.clipped = mean.clipped;
    return p;
}

} // namespace fastr
