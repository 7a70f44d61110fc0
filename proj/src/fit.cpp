#include "fastr/fit.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "fastr/errors.hpp"
#include "fastr/memory.hpp"

namespace fastr {

namespace {

struct Adam {
    static constexpr double beta1 = 0.9;
    static constexpr double beta2 = 0.999;
    static constexpr double eps = 1e-8;

    explicit Adam(std::size_t n) : m(n, 0.0), v(n, 0.0) {}

    void step(std::span<double> params, std::span<const double> grad, double lr) {
        ++t;
        const double c1 = 1.0 - std::pow(beta1, static_cast<double>(t));
        const double c2 = 1.0 - std::pow(beta2, static_cast<double>(t));
        for (std::size_t k = 0; k < params.size(); ++k) {
            m[k] = beta1 * m[k] + (1.0 - beta1) * grad[k];
            v[k] = beta2 * v[k] + (1.0 - beta2) * grad[k] * grad[k];
            params[k] -= lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + eps);
        }
    }

    std::vector<double> m;
    std::vector<double> v;
    std::size_t t = 0;
};

std::vector<std::size_t> level_rows(std::span<const std::int32_t> codes, std::span<const std::size_t> rows,
                                    std::int32_t level) {
    std::vector<std::size_t> out;
    for (auto r : rows)
        if (codes[r] == level) out.push_back(r);
    return out;
}

std::vector<double> gather(std::span<const double> values, std::span<const std::size_t> rows) {
    std::vector<double> out;
    out.reserve(rows.size());
    for (auto r : rows) out.push_back(values[r]);
    return out;
}

std::vector<double> grid(double lo, double hi, std::size_t n) {
    std::vector<double> g(n);
    for (std::size_t k = 0; k < n; ++k) {
        g[k] = k + 1 == n ? hi : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(n - 1);
    }
    return g;
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
    return s;
}

} // namespace

OptimizerKind parse_optimizer(std::string_view name) {
    if (name == "adam") return OptimizerKind::adam;
    if (name == "sgd") return OptimizerKind::sgd;
    throw ConfigError("unknown optimizer '" + std::string(name) + "' (expected adam or sgd)");
}

std::string_view optimizer_name(OptimizerKind kind) {
    return kind == OptimizerKind::adam ? "adam" : "sgd";
}

void validate_fit_config(const FitConfig& cfg) {
    if (cfg.batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (cfg.max_epochs < 1) throw ConfigError("max_epochs must be >= 1");
    if (!(cfg.learning_rate > 0.0) || !std::isfinite(cfg.learning_rate)) {
        throw ConfigError("learning_rate must be a positive number");
    }
    if (!(cfg.validation_fraction >= 0.0 && cfg.validation_fraction < 1.0)) {
        throw ConfigError("validation_fraction must lie in [0, 1)");
    }
    if (cfg.validation_fraction > 0.0 && cfg.patience < 1) {
        throw ConfigError("patience must be >= 1 when a validation split is used");
    }
    if (!(cfg.df > 0.0)) throw ConfigError("df must be > 0");
}

// ---------------------------------------------------------------------------

Objective::Objective(const Model& model, std::size_t train_rows)
    : model_(&model), base_scale_(1.0 / (2.0 * static_cast<double>(std::max<std::size_t>(train_rows, 1)))) {}

double Objective::penalty_scale(std::span<const double> params) const {
    if (model_->spec().family == FamilyKind::gaussian) return base_scale_ * std::exp(-2.0 * params[0]);
    return base_scale_;
}

double Objective::evaluate(const EncodedBatch& batch, std::span<const double> params, std::span<double> grad,
                           std::pmr::memory_resource* mr) const {
    const Model& model = *model_;
    const std::size_t m_rows = batch.size();
    if (m_rows == 0) return 0.0;
    const Family fam = model.family(params);
    const auto& terms = model.terms();

    std::vector<TermCache> caches;
    caches.reserve(terms.size());
    Vector eta(m_rows, 0.0, mr);
    for (std::size_t t = 0; t < terms.size(); ++t) {
        caches.push_back(terms[t].prepare(batch, mr));
        terms[t].forward(batch, caches.back(), model.term_params(t, params), eta);
    }

    const double inv_m = 1.0 / static_cast<double>(m_rows);
    const bool want_grad = !grad.empty();
    Vector d_eta(want_grad ? m_rows : 0, 0.0, mr);
    double nll = 0.0;
    double aux_grad = 0.0;
    for (std::size_t m = 0; m < m_rows; ++m) {
        nll += fam.nll_point(batch.outcome[m], eta[m]);
        if (want_grad) {
            const auto pg = fam.nll_grad_point(batch.outcome[m], eta[m]);
            d_eta[m] = pg.eta * inv_m;
            aux_grad += pg.aux * inv_m;
        }
    }

    const double scale = penalty_scale(params);
    double pen = 0.0;
    for (std::size_t t = 0; t < terms.size(); ++t) {
        const auto parts = terms[t].penalty(model.term_params(t, params), &batch, mr);
        pen += parts.global + parts.batch_sum * inv_m;
    }
    const double loss = nll * inv_m + scale * pen;

    if (want_grad) {
        for (std::size_t t = 0; t < terms.size(); ++t) {
            const std::size_t off = model.term_offset(t);
            auto tp = model.term_params(t, params);
            auto tg = grad.subspan(off, terms[t].param_count());
            terms[t].backward(batch, caches[t], tp, d_eta, tg);
            terms[t].penalty_gradient(tp, &batch, scale, scale * inv_m, tg);
        }
        if (model.has_auxiliary()) {
            grad[0] += aux_grad;
            if (model.spec().family == FamilyKind::gaussian) grad[0] += -2.0 * scale * pen;
        }
    }
    return loss;
}

double Objective::dataset_loss(const Dataset& aligned, std::span<const std::size_t> rows,
                               std::span<const double> params, std::size_t chunk,
                               std::pmr::memory_resource* mr) const {
    const Model& model = *model_;
    if (rows.empty()) return 0.0;
    const Family fam = model.family(params);
    const auto& terms = model.terms();
    chunk = std::max<std::size_t>(chunk, 1);
    double nll = 0.0;
    double global = 0.0;
    double batch_sum = 0.0;
    for (std::size_t t = 0; t < terms.size(); ++t) global += terms[t].penalty(model.term_params(t, params)).global;
    for (std::size_t start = 0; start < rows.size(); start += chunk) {
        const auto part = rows.subspan(start, std::min(chunk, rows.size() - start));
        EncodedBatch batch = encode_batch(aligned, part, mr);
        Vector eta(part.size(), 0.0, mr);
        model.eta(batch, params, eta, mr);
        for (std::size_t m = 0; m < part.size(); ++m) nll += fam.nll_point(batch.outcome[m], eta[m]);
        for (std::size_t t = 0; t < terms.size(); ++t) {
            if (terms[t].spec().kind == TermKind::factorized_vc) {
                batch_sum += terms[t].penalty(model.term_params(t, params), &batch, mr).batch_sum;
            }
        }
    }
    const double n = static_cast<double>(rows.size());
    return nll / n + penalty_scale(params) * (global + batch_sum / n);
}

// ---------------------------------------------------------------------------

std::map<std::string, LambdaChoice> resolve_lambdas(const Model& model, const Dataset& aligned,
                                                    std::span<const std::size_t> rows, double df) {
    std::map<std::string, LambdaChoice> out;
    for (const auto& term : model.terms()) {
        const TermSpec& s = term.spec();
        if (!has_smoothing(s.kind)) continue;
        if (s.lambda) {
            out[s.name] = {*s.lambda, false};
            continue;
        }
        const double target = s.df.value_or(df);
        const auto& pen = *term.penalty_matrix();
        const auto& b = term.binding();
        const std::vector<double> t_a = gather(aligned.numeric_columns()[b.num_a].values, rows);
        try {
            LambdaSolution sol;
            if (s.kind == TermKind::varying_coefficient) {
                const auto& codes = aligned.categorical_columns()[b.cat_a].codes;
                std::vector<DemmlerReinsch> curves;
                for (std::size_t level = 0; level < b.levels_a; ++level) {
                    const auto lr = level_rows(codes, rows, static_cast<std::int32_t>(level));
                    const DenseMatrix design =
                        term.basis_a()->evaluate(gather(aligned.numeric_columns()[b.num_a].values, lr));
                    curves.emplace_back(gram(design), pen.matrix);
                }
                sol = solve_mean_df(curves, target, pen.nullspace_dim);
            } else if (s.kind == TermKind::tensor_smooth) {
                const std::vector<double> t_b = gather(aligned.numeric_columns()[b.num_b].values, rows);
                const DenseMatrix design = rwtp(term.basis_a()->evaluate(t_a), term.basis_b()->evaluate(t_b));
                sol = df_to_lambda(design, pen, target);
            } else {
                sol = df_to_lambda(term.basis_a()->evaluate(t_a), pen, target);
            }
            out[s.name] = {sol.lambda, sol.at_upper_bound};
        } catch (const InfeasibleDfError& e) {
            throw InfeasibleDfError("term '" + s.name + "': " + e.what());
        }
    }
    return out;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_rows(std::size_t n, double fraction,
                                                                        std::uint64_t seed) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::size_t n_val = 0;
    if (fraction > 0.0) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 0x5b117u};
        std::mt19937_64 rng(seq);
        std::shuffle(order.begin(), order.end(), rng);
        n_val = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n))));
        if (n_val >= n) throw ConfigError("validation split leaves no training rows");
    }
    std::vector<std::size_t> val(order.end() - static_cast<std::ptrdiff_t>(n_val), order.end());
    order.resize(n - n_val);
    return {std::move(order), std::move(val)};
}

TrainReport train_model(Model& model, const Dataset& data, const FitConfig& cfg) {
    validate_fit_config(cfg);
    if (!data.has_outcome()) throw DataError("training data has no outcome column");
    model.family().validate(data.outcome());
    const auto start_time = std::chrono::steady_clock::now();

    const Dataset aligned = model.align(data);
    auto [train_rows, val_rows] = split_rows(aligned.rows(), cfg.validation_fraction, cfg.seed);

    TrainReport report;
    report.train_rows = train_rows.size();
    report.validation_rows = val_rows.size();
    report.has_validation = !val_rows.empty();

    for (const auto& [name, choice] : resolve_lambdas(model, aligned, train_rows, cfg.df)) {
        model.terms()[model.term_index(name)].set_smoothing(choice.lambda);
        report.lambdas[name] = choice.lambda;
        report.lambda_at_bound[name] = choice.at_upper_bound;
    }

    const Objective objective(model, train_rows.size());
    BatchPlan plan(train_rows, cfg.batch_size, cfg.seed);
    const std::size_t n_params = model.param_count();
    std::vector<double> grad(n_params, 0.0);
    Adam adam(cfg.optimizer == OptimizerKind::adam ? n_params : 0);
    std::vector<double> best(model.params().begin(), model.params().end());
    report.param_state_bytes = sizeof(double) * (n_params * 3 + adam.m.size() + adam.v.size());

    MemoryTracker tracker;
    double best_loss = std::numeric_limits<double>::infinity();
    std::size_t wait = 0;
    report.stop_reason = "max_epochs";

    for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        tracker.reset_peak();
        plan.shuffle(epoch);
        double train_sum = 0.0;
        for (std::size_t b = 0; b < plan.batches_per_epoch(); ++b) {
            const auto rows = plan.batch(b);
            double loss = 0.0;
            {
                EncodedBatch batch = encode_batch(aligned, rows, &tracker);
                std::fill(grad.begin(), grad.end(), 0.0);
                loss = objective.evaluate(batch, model.params(), grad, &tracker);
            }
            if (!std::isfinite(loss)) {
                throw DivergenceError("training diverged: non-finite loss at epoch " + std::to_string(epoch + 1) +
                                          ", step " + std::to_string(b + 1),
                                      epoch + 1, b + 1);
            }
            train_sum += loss * static_cast<double>(rows.size());
            if (cfg.optimizer == OptimizerKind::adam) {
                adam.step(model.params(), grad, cfg.learning_rate);
            } else {
                auto p = model.params();
                for (std::size_t k = 0; k < n_params; ++k) p[k] -= cfg.learning_rate * grad[k];
            }
            ++report.steps;
        }

        EpochRecord rec;
        rec.epoch = epoch + 1;
        rec.train_loss = train_sum / static_cast<double>(train_rows.size());
        if (report.has_validation) {
            rec.validation_loss = objective.dataset_loss(aligned, val_rows, model.params(), cfg.batch_size, &tracker);
            if (!std::isfinite(rec.validation_loss)) {
                throw DivergenceError("training diverged: non-finite validation loss at epoch " +
                                          std::to_string(epoch + 1),
                                      epoch + 1, plan.batches_per_epoch());
            }
        } else {
            rec.validation_loss = rec.train_loss;
        }
        rec.peak_bytes = tracker.peak_bytes();
        report.peak_batch_bytes = std::max(report.peak_batch_bytes, rec.peak_bytes);
        report.epochs.push_back(rec);

        if (!report.has_validation) {
            best_loss = rec.validation_loss;
            report.best_epoch = rec.epoch;
            continue;
        }
        if (rec.validation_loss < best_loss) {
            best_loss = rec.validation_loss;
            report.best_epoch = rec.epoch;
            std::copy(model.params().begin(), model.params().end(), best.begin());
            wait = 0;
        } else if (++wait >= cfg.patience) {
            report.stop_reason = "early_stopping";
            break;
        }
    }
    if (report.has_validation) std::copy(best.begin(), best.end(), model.params().begin());
    report.best_validation_loss = best_loss;
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_time).count();

    auto& meta = model.metadata();
    meta.epochs_run = report.epochs.size();
    meta.best_epoch = report.best_epoch;
    meta.best_validation_loss = best_loss;
    meta.stop_reason = report.stop_reason;
    meta.training_rows = train_rows.size();
    meta.seed = cfg.seed;
    return report;
}

FitResult train(const ModelSpec& spec, const Dataset& data, const FitConfig& cfg) {
    validate_fit_config(cfg);
    if (!data.has_outcome()) throw DataError("training data has no outcome column");
    Model model = Model::build(spec, data, cfg.seed, data.outcome_name());
    TrainReport report = train_model(model, data, cfg);
    return {std::move(model), std::move(report)};
}

// ---------------------------------------------------------------------------

std::vector<EffectTable> export_effects(const Model& model, std::size_t grid_size) {
    if (grid_size < 2) throw ConfigError("effect grid needs at least 2 points");
    std::vector<EffectTable> out;
    double absorbed = 0.0;
    std::string intercept_name = "intercept";
    double intercept = 0.0;
    const auto& dicts = model.dictionaries();

    for (std::size_t t = 0; t < model.terms().size(); ++t) {
        const Term& term = model.terms()[t];
        const TermSpec& s = term.spec();
        const auto& b = term.binding();
        const auto p = model.term_params(t);
        switch (s.kind) {
        case TermKind::global_bias:
            intercept_name = s.name;
            intercept += p[0];
            break;
        case TermKind::smooth: {
            const auto c = center_smooth(p, term.basis_means());
            absorbed += c.absorbed;
            EffectTable tab{s.name, "effect", {}, {s.num_a, "effect"}, {}, {}};
            std::vector<double> row(s.num_basis);
            for (double x : grid(term.basis_a()->t_min(), term.basis_a()->t_max(), grid_size)) {
                term.basis_a()->evaluate_row(x, row);
                tab.keys.emplace_back();
                tab.values.push_back({x, dot(row, c.weights)});
            }
            out.push_back(std::move(tab));
            break;
        }
        case TermKind::tensor_smooth: {
            const auto c = center_smooth(p, term.basis_means());
            absorbed += c.absorbed;
            EffectTable tab{s.name, "effect", {}, {s.num_a, s.num_b, "effect"}, {}, {}};
            const auto ga = grid(term.basis_a()->t_min(), term.basis_a()->t_max(), grid_size);
            const auto gb = grid(term.basis_b()->t_min(), term.basis_b()->t_max(), grid_size);
            for (double xa : ga) {
                for (double xb : gb) {
                    tab.keys.emplace_back();
                    tab.values.push_back({xa, xb, dot(term.design_row(xa, xb), c.weights)});
                }
            }
            out.push_back(std::move(tab));
            break;
        }
        case TermKind::varying_coefficient: {
            EffectTable tab{s.name, "effect", {s.cat_a}, {s.num_a, "effect"}, {}, {}};
            const auto g = grid(term.basis_a()->t_min(), term.basis_a()->t_max(), grid_size);
            std::vector<double> row(s.num_basis);
            for (std::size_t i = 0; i < b.levels_a; ++i) {
                const auto w = p.subspan(i * s.num_basis, s.num_basis);
                for (double x : g) {
                    term.basis_a()->evaluate_row(x, row);
                    tab.keys.push_back({dicts[b.cat_a].levels[i]});
                    tab.values.push_back({x, dot(row, w)});
                }
            }
            out.push_back(std::move(tab));
            break;
        }
        case TermKind::factorized_vc: {
            const std::size_t l_cols = s.num_basis;
            const std::size_t d = s.latent_dim;
            const std::size_t ld = l_cols * d;
            const auto v1 = p.first(b.levels_a * ld);
            const auto v2 = p.subspan(b.levels_a * ld, b.levels_b * ld);
            const auto g = grid(term.basis_a()->t_min(), term.basis_a()->t_max(), grid_size);
            std::vector<std::vector<double>> rows(g.size(), std::vector<double>(l_cols));
            for (std::size_t k = 0; k < g.size(); ++k) term.basis_a()->evaluate_row(g[k], rows[k]);

            EffectTable eff{s.name, "effect", {s.cat_a, s.cat_b}, {s.num_a, "effect"}, {}, {}};
            for (std::size_t i = 0; i < b.levels_a; ++i) {
                for (std::size_t u = 0; u < b.levels_b; ++u) {
                    for (std::size_t k = 0; k < g.size(); ++k) {
                        double f = 0.0;
                        for (std::size_t l = 0; l < l_cols; ++l) {
                            double vl = 0.0;
                            for (std::size_t q = 0; q < d; ++q) vl += v1[i * ld + l * d + q] * v2[u * ld + l * d + q];
                            f += rows[k][l] * vl;
                        }
                        eff.keys.push_back({dicts[b.cat_a].levels[i], dicts[b.cat_b].levels[u]});
                        eff.values.push_back({g[k], f});
                    }
                }
            }
            out.push_back(std::move(eff));

            EffectTable lat{s.name, "latent", {"factor", "level", "dim"}, {s.num_a, "value"}, {}, {}};
            auto add_factor = [&](const char* factor, std::span<const double> v, std::size_t levels,
                                  const CategoricalColumn& dict) {
                for (std::size_t i = 0; i < levels; ++i) {
                    for (std::size_t q = 0; q < d; ++q) {
                        for (std::size_t k = 0; k < g.size(); ++k) {
                            double f = 0.0;
                            for (std::size_t l = 0; l < l_cols; ++l) f += rows[k][l] * v[i * ld + l * d + q];
                            lat.keys.push_back({factor, dict.levels[i], std::to_string(q + 1)});
                            lat.values.push_back({g[k], f});
                        }
                    }
                }
            };
            add_factor("V1", v1, b.levels_a, dicts[b.cat_a]);
            add_factor("V2", v2, b.levels_b, dicts[b.cat_b]);
            out.push_back(std::move(lat));
            break;
        }
        default: break;
        }
    }
    EffectTable mu{intercept_name, "intercept", {}, {"value"}, {{}}, {{intercept + absorbed}}};
    out.insert(out.begin(), std::move(mu));
    return out;
}

std::string format_effect_csv(const EffectTable& table) {
    std::ostringstream os;
    bool first = true;
    for (const auto& c : table.key_columns) {
        os << (first ? "" : ",") << c;
        first = false;
    }
    for (const auto& c : table.value_columns) {
        os << (first ? "" : ",") << c;
        first = false;
    }
    os << '\n';
    for (std::size_t r = 0; r < table.values.size(); ++r) {
        first = true;
        for (const auto& k : table.keys[r]) {
            os << (first ? "" : ",") << k;
            first = false;
        }
        for (double v : table.values[r]) {
            os << (first ? "" : ",") << format_double(v);
            first = false;
        }
        os << '\n';
    }
    return os.str();
}

} // namespace fastr
