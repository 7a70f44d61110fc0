#include "fastr/terms.hpp"

#include <cmath>
#include <numeric>
#include <random>

#include "fastr/errors.hpp"

namespace fastr {

namespace {

struct KindName {
    TermKind kind;
    std::string_view name;
};

constexpr KindName kind_names[] = {
    {TermKind::global_bias, "global_bias"},
    {TermKind::linear, "linear"},
    {TermKind::categorical_bias, "categorical_bias"},
    {TermKind::factorized_bias, "factorized_bias"},
    {TermKind::smooth, "smooth"},
    {TermKind::tensor_smooth, "tensor_smooth"},
    {TermKind::varying_coefficient, "varying_coefficient"},
    {TermKind::factorized_vc, "factorized_vc"},
    {TermKind::array_interaction, "array_interaction"},
};

bool uses_cat_a(TermKind k) {
    return k == TermKind::categorical_bias || k == TermKind::factorized_bias ||
           k == TermKind::varying_coefficient || k == TermKind::factorized_vc ||
           k == TermKind::array_interaction;
}

bool uses_cat_b(TermKind k) {
    return k == TermKind::factorized_bias || k == TermKind::factorized_vc ||
           k == TermKind::array_interaction;
}

bool uses_num_a(TermKind k) {
    return k == TermKind::linear || k == TermKind::smooth || k == TermKind::tensor_smooth ||
           k == TermKind::varying_coefficient || k == TermKind::factorized_vc;
}

bool has_latent(TermKind k) { return k == TermKind::factorized_bias || k == TermKind::factorized_vc; }

bool valid(std::int32_t code) { return code != unseen_level; }

double sum_squares(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return s;
}

// x^T P x and (optionally) P x into out
double quad_form(ConstMatrixView p, std::span<const double> x, std::span<double> px = {}) {
    double s = 0.0;
    for (std::size_t i = 0; i < p.rows; ++i) {
        auto row = p.row(i);
        double v = 0.0;
        for (std::size_t j = 0; j < p.cols; ++j) v += row[j] * x[j];
        if (!px.empty()) px[i] = v;
        s += x[i] * v;
    }
    return s;
}

} // namespace

std::string_view kind_name(TermKind kind) {
    for (const auto& k : kind_names)
        if (k.kind == kind) return k.name;
    return "unknown";
}

TermKind parse_kind(std::string_view name) {
    for (const auto& k : kind_names)
        if (k.name == name) return k.kind;
    throw ConfigError("unknown term kind '" + std::string(name) + "'");
}

std::string default_term_name(const TermSpec& s) {
    switch (s.kind) {
    case TermKind::global_bias: return "mu";
    case TermKind::linear: return "lin:" + s.num_a;
    case TermKind::categorical_bias: return "b:" + s.cat_a;
    case TermKind::factorized_bias: return "fb:" + s.cat_a + ":" + s.cat_b;
    case TermKind::smooth: return "s:" + s.num_a;
    case TermKind::tensor_smooth: return "te:" + s.num_a + ":" + s.num_b;
    case TermKind::varying_coefficient: return "vc:" + s.cat_a + ":" + s.num_a;
    case TermKind::factorized_vc: return "fvc:" + s.cat_a + ":" + s.cat_b + ":" + s.num_a;
    case TermKind::array_interaction: return "ia:" + s.cat_a + ":" + s.cat_b;
    }
    return "term";
}

bool has_smoothing(TermKind kind) {
    return kind == TermKind::smooth || kind == TermKind::tensor_smooth ||
           kind == TermKind::varying_coefficient || kind == TermKind::factorized_vc;
}

bool uses_basis_b(TermKind kind) { return kind == TermKind::tensor_smooth; }

void validate_term_spec(const TermSpec& s) {
    const std::string where = "term '" + (s.name.empty() ? default_term_name(s) : s.name) + "': ";
    if (uses_cat_a(s.kind) && s.cat_a.empty()) throw ConfigError(where + "missing categorical feature 'i'");
    if (uses_cat_b(s.kind) && s.cat_b.empty()) throw ConfigError(where + "missing categorical feature 'u'");
    if (uses_num_a(s.kind) && s.num_a.empty()) throw ConfigError(where + "missing numeric feature");
    if (uses_basis_b(s.kind) && s.num_b.empty()) throw ConfigError(where + "missing second numeric feature");
    if (uses_cat_b(s.kind) && s.cat_a == s.cat_b) {
        throw ConfigError(where + "interaction needs two distinct categorical features");
    }
    if (has_latent(s.kind) && s.latent_dim < 1) throw ConfigError(where + "latent dimension D must be >= 1");
    if (has_smoothing(s.kind)) {
        if (s.order < 1) throw ConfigError(where + "difference order must be >= 1");
        if (s.degree < 0) throw ConfigError(where + "spline degree must be >= 0");
        auto check_l = [&](std::size_t l) {
            if (l <= static_cast<std::size_t>(s.order) || l <= static_cast<std::size_t>(s.degree)) {
                throw ConfigError(where + "number of basis functions L=" + std::to_string(l) +
                                  " must exceed the penalty order and the degree");
            }
        };
        check_l(s.num_basis);
        if (uses_basis_b(s.kind)) check_l(s.num_basis_b);
    }
    if (s.lambda && !(*s.lambda >= 0.0)) throw ConfigError(where + "lambda must be >= 0");
    if (s.df && !(*s.df > 0.0)) throw ConfigError(where + "df must be > 0");
    if (!(s.l2 >= 0.0)) throw ConfigError(where + "l2 must be >= 0");
}

std::size_t ParamBlock::size() const {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::vector<ParamBlock> param_layout(const TermSpec& s,
                                     const std::map<std::string, std::size_t>& level_counts) {
    auto levels = [&](const std::string& f) {
        auto it = level_counts.find(f);
        if (it == level_counts.end()) throw ConfigError("unknown categorical feature '" + f + "'");
        return it->second;
    };
    const std::size_t l = s.num_basis;
    const std::size_t d = s.latent_dim;
    std::vector<ParamBlock> out;
    switch (s.kind) {
    case TermKind::global_bias: out.push_back({"mu", {1}, {}}); break;
    case TermKind::linear: out.push_back({"beta", {1}, {}}); break;
    case TermKind::categorical_bias: out.push_back({"b", {levels(s.cat_a)}, {}}); break;
    case TermKind::factorized_bias:
        out.push_back({"V1", {levels(s.cat_a), d}, {}});
        out.push_back({"V2", {levels(s.cat_b), d}, {}});
        break;
    case TermKind::smooth: out.push_back({"w", {l}, {}}); break;
    case TermKind::tensor_smooth: out.push_back({"w", {l, s.num_basis_b}, {}}); break;
    case TermKind::varying_coefficient: out.push_back({"W", {levels(s.cat_a), l}, {}}); break;
    case TermKind::factorized_vc:
        out.push_back({"V1", {levels(s.cat_a), l, d}, {}});
        out.push_back({"V2", {levels(s.cat_b), l, d}, {}});
        break;
    case TermKind::array_interaction:
        out.push_back({"W", {levels(s.cat_a), levels(s.cat_b)}, {}});
        break;
    }
    for (auto& b : out) b.values.assign(b.size(), 0.0);
    return out;
}

std::size_t param_count(const TermSpec& spec, const std::map<std::string, std::size_t>& level_counts) {
    std::size_t n = 0;
    for (const auto& b : param_layout(spec, level_counts)) n += b.size();
    return n;
}

std::vector<ParamBlock> init_params(const TermSpec& spec,
                                    const std::map<std::string, std::size_t>& level_counts,
                                    std::uint64_t seed) {
    auto blocks = param_layout(spec, level_counts);
    if (has_latent(spec.kind)) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          0x1a7e47u};
        std::mt19937_64 rng(seq);
        std::normal_distribution<double> normal(0.0, latent_init_sd);
        for (auto& b : blocks)
            for (auto& v : b.values) v = normal(rng);
    }
    return blocks;
}

Vector forward_factorized_bias(std::span<const std::int32_t> codes_i,
                               std::span<const std::int32_t> codes_u, ConstMatrixView v1,
                               ConstMatrixView v2, std::pmr::memory_resource* mr) {
    if (codes_i.size() != codes_u.size()) throw DimensionError("factorized bias: code vectors differ in length");
    if (v1.cols != v2.cols) throw DimensionError("factorized bias: latent dimensions differ");
    Vector out(codes_i.size(), 0.0, mr);
    for (std::size_t m = 0; m < codes_i.size(); ++m) {
        if (!valid(codes_i[m]) || !valid(codes_u[m])) continue;
        auto a = v1.row(codes_i[m]);
        auto b = v2.row(codes_u[m]);
        double s = 0.0;
        for (std::size_t d = 0; d < v1.cols; ++d) s += a[d] * b[d];
        out[m] = s;
    }
    return out;
}

Vector forward_factorized_vc(std::span<const std::int32_t> codes_i,
                             std::span<const std::int32_t> codes_u, ConstMatrixView basis_eval,
                             ConstMatrixView v1, ConstMatrixView v2, std::size_t latent_dim,
                             std::pmr::memory_resource* mr) {
    const std::size_t m_rows = basis_eval.rows;
    const std::size_t l_cols = basis_eval.cols;
    if (codes_i.size() != m_rows || codes_u.size() != m_rows) {
        throw DimensionError("factorized vc: basis rows do not align with batch rows");
    }
    if (v1.cols != l_cols * latent_dim || v2.cols != l_cols * latent_dim) {
        throw DimensionError("factorized vc: latent tensors must have L*D columns");
    }
    // V_iu[m, l] = sum_d V1[i_m, l, d] V2[u_m, l, d]
    DenseMatrix v_iu(m_rows, l_cols, mr);
    for (std::size_t m = 0; m < m_rows; ++m) {
        if (!valid(codes_i[m]) || !valid(codes_u[m])) continue;
        auto a = v1.row(codes_i[m]);
        auto b = v2.row(codes_u[m]);
        auto out = v_iu.row(m);
        for (std::size_t l = 0; l < l_cols; ++l) {
            double s = 0.0;
            for (std::size_t d = 0; d < latent_dim; ++d) s += a[l * latent_dim + d] * b[l * latent_dim + d];
            out[l] = s;
        }
    }
    return row_dot(basis_eval, v_iu, mr);
}

Vector forward_array_interaction(std::span<const std::int32_t> codes_i,
                                 std::span<const std::int32_t> codes_u, ConstMatrixView w,
                                 std::pmr::memory_resource* mr) {
    if (codes_i.size() != codes_u.size()) throw DimensionError("array interaction: code vectors differ in length");
    Vector out(codes_i.size(), 0.0, mr);
    for (std::size_t m = 0; m < codes_i.size(); ++m) {
        if (!valid(codes_i[m]) || !valid(codes_u[m])) continue;
        out[m] = w(codes_i[m], codes_u[m]);
    }
    return out;
}

Vector forward_smooth(ConstMatrixView basis_eval, std::span<const double> w,
                      std::pmr::memory_resource* mr) {
    if (basis_eval.cols != w.size()) throw DimensionError("smooth: weight length does not match basis");
    Vector out(basis_eval.rows, 0.0, mr);
    for (std::size_t m = 0; m < basis_eval.rows; ++m) {
        auto r = basis_eval.row(m);
        double s = 0.0;
        for (std::size_t l = 0; l < w.size(); ++l) s += r[l] * w[l];
        out[m] = s;
    }
    return out;
}

Vector forward_vc(std::span<const std::int32_t> codes, ConstMatrixView basis_eval, ConstMatrixView w,
                  std::pmr::memory_resource* mr) {
    if (codes.size() != basis_eval.rows) throw DimensionError("vc: basis rows do not align with batch rows");
    if (w.cols != basis_eval.cols) throw DimensionError("vc: weight columns do not match basis");
    Vector out(codes.size(), 0.0, mr);
    for (std::size_t m = 0; m < codes.size(); ++m) {
        if (!valid(codes[m])) continue;
        auto r = basis_eval.row(m);
        auto wr = w.row(codes[m]);
        double s = 0.0;
        for (std::size_t l = 0; l < w.cols; ++l) s += r[l] * wr[l];
        out[m] = s;
    }
    return out;
}

Vector forward_tensor_smooth(ConstMatrixView basis_a, ConstMatrixView basis_b, ConstMatrixView w,
                             std::pmr::memory_resource* mr) {
    if (w.rows != basis_a.cols || w.cols != basis_b.cols) {
        throw DimensionError("tensor smooth: weight shape does not match the bases");
    }
    const DenseMatrix aw = matmul(basis_a, w, mr);
    return row_dot(aw, basis_b, mr);
}

Vector forward_categorical_bias(std::span<const std::int32_t> codes, std::span<const double> b,
                                std::pmr::memory_resource* mr) {
    Vector out(codes.size(), 0.0, mr);
    for (std::size_t m = 0; m < codes.size(); ++m)
        if (valid(codes[m])) out[m] = b[codes[m]];
    return out;
}

// ---------------------------------------------------------------------------

Term::Term(TermSpec spec, TermBinding binding, std::optional<SplineBasis> basis_a,
           std::optional<SplineBasis> basis_b)
    : spec_(std::move(spec)), binding_(binding), basis_a_(std::move(basis_a)), basis_b_(std::move(basis_b)) {
    validate_term_spec(spec_);
    if (spec_.name.empty()) spec_.name = default_term_name(spec_);
    if (has_smoothing(spec_.kind)) {
        if (!basis_a_) throw ConfigError("term '" + spec_.name + "' needs a spline basis");
        if (basis_a_->num_basis() != spec_.num_basis) {
            throw ConfigError("term '" + spec_.name + "': basis size does not match spec");
        }
        PenaltyMatrix pa = difference_penalty(spec_.num_basis, spec_.order);
        if (uses_basis_b(spec_.kind)) {
            if (!basis_b_ || basis_b_->num_basis() != spec_.num_basis_b) {
                throw ConfigError("term '" + spec_.name + "' needs a second spline basis");
            }
            penalty_ = kronecker_sum_penalty(pa, difference_penalty(spec_.num_basis_b, spec_.order));
        } else {
            penalty_ = std::move(pa);
        }
    }
    if (spec_.lambda) lambda_ = *spec_.lambda;
    count_ = 0;
    for (const auto& b : layout()) count_ += b.size();
}

std::vector<ParamBlock> Term::layout() const {
    std::map<std::string, std::size_t> levels;
    if (!spec_.cat_a.empty()) levels[spec_.cat_a] = binding_.levels_a;
    if (!spec_.cat_b.empty()) levels[spec_.cat_b] = binding_.levels_b;
    return param_layout(spec_, levels);
}

void Term::set_smoothing(double lambda) {
    if (!(lambda >= 0.0)) throw ConfigError("term '" + spec_.name + "': smoothing parameter must be >= 0");
    lambda_ = lambda;
}

TermCache Term::prepare(const EncodedBatch& batch, std::pmr::memory_resource* mr) const {
    TermCache cache(mr);
    if (basis_a_) cache.basis_a = basis_a_->evaluate(batch.numeric[binding_.num_a], mr);
    if (basis_b_) cache.basis_b = basis_b_->evaluate(batch.numeric[binding_.num_b], mr);
    return cache;
}

void Term::forward(const EncodedBatch& batch, const TermCache& cache, std::span<const double> p,
                   std::span<double> eta) const {
    const std::size_t m_rows = batch.size();
    auto add = [&](const Vector& v) {
        for (std::size_t m = 0; m < m_rows; ++m) eta[m] += v[m];
    };
    std::pmr::memory_resource* mr = batch.outcome.get_allocator().resource();
    switch (spec_.kind) {
    case TermKind::global_bias:
        for (std::size_t m = 0; m < m_rows; ++m) eta[m] += p[0];
        break;
    case TermKind::linear: {
        const auto& x = batch.numeric[binding_.num_a];
        for (std::size_t m = 0; m < m_rows; ++m) eta[m] += p[0] * x[m];
        break;
    }
    case TermKind::categorical_bias:
        add(forward_categorical_bias(batch.codes[binding_.cat_a], p.first(binding_.levels_a), mr));
        break;
    case TermKind::factorized_bias: {
        const std::size_t d = spec_.latent_dim;
        const std::size_t n1 = binding_.levels_a * d;
        ConstMatrixView v1{p.first(n1), binding_.levels_a, d};
        ConstMatrixView v2{p.subspan(n1, binding_.levels_b * d), binding_.levels_b, d};
        add(forward_factorized_bias(batch.codes[binding_.cat_a], batch.codes[binding_.cat_b], v1, v2, mr));
        break;
    }
    case TermKind::smooth: add(forward_smooth(cache.basis_a, p, mr)); break;
    case TermKind::tensor_smooth: {
        ConstMatrixView w{p, spec_.num_basis, spec_.num_basis_b};
        add(forward_tensor_smooth(cache.basis_a, cache.basis_b, w, mr));
        break;
    }
    case TermKind::varying_coefficient: {
        ConstMatrixView w{p, binding_.levels_a, spec_.num_basis};
        add(forward_vc(batch.codes[binding_.cat_a], cache.basis_a, w, mr));
        break;
    }
    case TermKind::factorized_vc: {
        const std::size_t ld = spec_.num_basis * spec_.latent_dim;
        const std::size_t n1 = binding_.levels_a * ld;
        ConstMatrixView v1{p.first(n1), binding_.levels_a, ld};
        ConstMatrixView v2{p.subspan(n1, binding_.levels_b * ld), binding_.levels_b, ld};
        add(forward_factorized_vc(batch.codes[binding_.cat_a], batch.codes[binding_.cat_b],
                                  cache.basis_a, v1, v2, spec_.latent_dim, mr));
        break;
    }
    case TermKind::array_interaction: {
        ConstMatrixView w{p, binding_.levels_a, binding_.levels_b};
        add(forward_array_interaction(batch.codes[binding_.cat_a], batch.codes[binding_.cat_b], w, mr));
        break;
    }
    }
}

void Term::backward(const EncodedBatch& batch, const TermCache& cache, std::span<const double> p,
                    std::span<const double> g, std::span<double> grad) const {
    const std::size_t m_rows = batch.size();
    switch (spec_.kind) {
    case TermKind::global_bias:
        for (std::size_t m = 0; m < m_rows; ++m) grad[0] += g[m];
        break;
    case TermKind::linear: {
        const auto& x = batch.numeric[binding_.num_a];
        for (std::size_t m = 0; m < m_rows; ++m) grad[0] += g[m] * x[m];
        break;
    }
    case TermKind::categorical_bias: {
        const auto& ci = batch.codes[binding_.cat_a];
        for (std::size_t m = 0; m < m_rows; ++m)
            if (valid(ci[m])) grad[ci[m]] += g[m];
        break;
    }
    case TermKind::factorized_bias: {
        const std::size_t d = spec_.latent_dim;
        const std::size_t off2 = binding_.levels_a * d;
        const auto& ci = batch.codes[binding_.cat_a];
        const auto& cu = batch.codes[binding_.cat_b];
        for (std::size_t m = 0; m < m_rows; ++m) {
            if (!valid(ci[m]) || !valid(cu[m])) continue;
            const std::size_t a = ci[m] * d;
            const std::size_t b = off2 + cu[m] * d;
            for (std::size_t k = 0; k < d; ++k) {
                grad[a + k] += g[m] * p[b + k];
                grad[b + k] += g[m] * p[a + k];
            }
        }
        break;
    }
    case TermKind::smooth: {
        for (std::size_t m = 0; m < m_rows; ++m) {
            auto r = cache.basis_a.row(m);
            for (std::size_t l = 0; l < r.size(); ++l) grad[l] += g[m] * r[l];
        }
        break;
    }
    case TermKind::tensor_smooth: {
        const std::size_t lb = spec_.num_basis_b;
        for (std::size_t m = 0; m < m_rows; ++m) {
            auto ra = cache.basis_a.row(m);
            auto rb = cache.basis_b.row(m);
            for (std::size_t j = 0; j < ra.size(); ++j) {
                const double gj = g[m] * ra[j];
                if (gj == 0.0) continue;
                for (std::size_t k = 0; k < lb; ++k) grad[j * lb + k] += gj * rb[k];
            }
        }
        break;
    }
    case TermKind::varying_coefficient: {
        const std::size_t l_cols = spec_.num_basis;
        const auto& ci = batch.codes[binding_.cat_a];
        for (std::size_t m = 0; m < m_rows; ++m) {
            if (!valid(ci[m])) continue;
            auto r = cache.basis_a.row(m);
            double* w = grad.data() + ci[m] * l_cols;
            for (std::size_t l = 0; l < l_cols; ++l) w[l] += g[m] * r[l];
        }
        break;
    }
    case TermKind::factorized_vc: {
        const std::size_t d = spec_.latent_dim;
        const std::size_t l_cols = spec_.num_basis;
        const std::size_t ld = l_cols * d;
        const std::size_t off2 = binding_.levels_a * ld;
        const auto& ci = batch.codes[binding_.cat_a];
        const auto& cu = batch.codes[binding_.cat_b];
        for (std::size_t m = 0; m < m_rows; ++m) {
            if (!valid(ci[m]) || !valid(cu[m])) continue;
            auto r = cache.basis_a.row(m);
            const std::size_t a = ci[m] * ld;
            const std::size_t b = off2 + cu[m] * ld;
            for (std::size_t l = 0; l < l_cols; ++l) {
                const double gl = g[m] * r[l];
                if (gl == 0.0) continue;
                for (std::size_t k = 0; k < d; ++k) {
                    grad[a + l * d + k] += gl * p[b + l * d + k];
                    grad[b + l * d + k] += gl * p[a + l * d + k];
                }
            }
        }
        break;
    }
    case TermKind::array_interaction: {
        const auto& ci = batch.codes[binding_.cat_a];
        const auto& cu = batch.codes[binding_.cat_b];
        for (std::size_t m = 0; m < m_rows; ++m)
            if (valid(ci[m]) && valid(cu[m])) grad[ci[m] * binding_.levels_b + cu[m]] += g[m];
        break;
    }
    }
}

PenaltyParts Term::penalty(std::span<const double> p, const EncodedBatch* batch,
                           std::pmr::memory_resource* mr) const {
    PenaltyParts out;
    switch (spec_.kind) {
    case TermKind::global_bias:
    case TermKind::linear: break;
    case TermKind::categorical_bias:
    case TermKind::factorized_bias:
    case TermKind::array_interaction: out.global = spec_.l2 * sum_squares(p); break;
    case TermKind::smooth:
    case TermKind::tensor_smooth: out.global = lambda_ * quad_form(penalty_->matrix, p); break;
    case TermKind::varying_coefficient: {
        const std::size_t l = spec_.num_basis;
        double s = 0.0;
        for (std::size_t i = 0; i < binding_.levels_a; ++i) s += quad_form(penalty_->matrix, p.subspan(i * l, l));
        out.global = lambda_ * s;
        break;
    }
    case TermKind::factorized_vc: {
        out.global = spec_.l2 * sum_squares(p);
        if (batch && lambda_ > 0.0) {
            const std::size_t d = spec_.latent_dim;
            const std::size_t l_cols = spec_.num_basis;
            const std::size_t ld = l_cols * d;
            const std::size_t off2 = binding_.levels_a * ld;
            const auto& ci = batch->codes[binding_.cat_a];
            const auto& cu = batch->codes[binding_.cat_b];
            Vector v_iu(l_cols, 0.0, mr);
            double s = 0.0;
            for (std::size_t m = 0; m < batch->size(); ++m) {
                if (!valid(ci[m]) || !valid(cu[m])) continue;
                const std::size_t a = ci[m] * ld;
                const std::size_t b = off2 + cu[m] * ld;
                for (std::size_t l = 0; l < l_cols; ++l) {
                    double v = 0.0;
                    for (std::size_t k = 0; k < d; ++k) v += p[a + l * d + k] * p[b + l * d + k];
                    v_iu[l] = v;
                }
                s += quad_form(penalty_->matrix, v_iu);
            }
            out.batch_sum = lambda_ * s;
        }
        break;
    }
    }
    return out;
}

void Term::penalty_gradient(std::span<const double> p, const EncodedBatch* batch, double global_scale,
                            double batch_scale, std::span<double> grad) const {
    switch (spec_.kind) {
    case TermKind::global_bias:
    case TermKind::linear: break;
    case TermKind::categorical_bias:
    case TermKind::factorized_bias:
    case TermKind::array_interaction: {
        const double c = 2.0 * global_scale * spec_.l2;
        if (c != 0.0)
            for (std::size_t k = 0; k < p.size(); ++k) grad[k] += c * p[k];
        break;
    }
    case TermKind::smooth:
    case TermKind::tensor_smooth:
    case TermKind::varying_coefficient: {
        const double c = 2.0 * global_scale * lambda_;
        if (c == 0.0) break;
        const auto& pm = penalty_->matrix;
        const std::size_t l = pm.rows();
        for (std::size_t start = 0; start < p.size(); start += l) {
            for (std::size_t i = 0; i < l; ++i) {
                auto row = pm.row(i);
                double v = 0.0;
                for (std::size_t j = 0; j < l; ++j) v += row[j] * p[start + j];
                grad[start + i] += c * v;
            }
        }
        break;
    }
    case TermKind::factorized_vc: {
        const double c = 2.0 * global_scale * spec_.l2;
        if (c != 0.0)
            for (std::size_t k = 0; k < p.size(); ++k) grad[k] += c * p[k];
        if (!batch || lambda_ == 0.0 || batch_scale == 0.0) break;
        const std::size_t d = spec_.latent_dim;
        const std::size_t l_cols = spec_.num_basis;
        const std::size_t ld = l_cols * d;
        const std::size_t off2 = binding_.levels_a * ld;
        const auto& ci = batch->codes[binding_.cat_a];
        const auto& cu = batch->codes[binding_.cat_b];
        std::pmr::memory_resource* mr = batch->outcome.get_allocator().resource();
        Vector v_iu(l_cols, 0.0, mr);
        Vector pv(l_cols, 0.0, mr);
        const double cb = 2.0 * batch_scale * lambda_;
        for (std::size_t m = 0; m < batch->size(); ++m) {
            if (!valid(ci[m]) || !valid(cu[m])) continue;
            const std::size_t a = ci[m] * ld;
            const std::size_t b = off2 + cu[m] * ld;
            for (std::size_t l = 0; l < l_cols; ++l) {
                double v = 0.0;
                for (std::size_t k = 0; k < d; ++k) v += p[a + l * d + k] * p[b + l * d + k];
                v_iu[l] = v;
            }
            quad_form(penalty_->matrix, v_iu, pv);
            for (std::size_t l = 0; l < l_cols; ++l) {
                const double q = cb * pv[l];
                for (std::size_t k = 0; k < d; ++k) {
                    grad[a + l * d + k] += q * p[b + l * d + k];
                    grad[b + l * d + k] += q * p[a + l * d + k];
                }
            }
        }
        break;
    }
    }
}

std::vector<double> Term::design_row(double a, double b) const {
    if (!basis_a_) throw ConfigError("term '" + spec_.name + "' has no spline basis");
    std::vector<double> ra(basis_a_->num_basis());
    basis_a_->evaluate_row(a, ra);
    if (!basis_b_) return ra;
    std::vector<double> rb(basis_b_->num_basis());
    basis_b_->evaluate_row(b, rb);
    std::vector<double> out(ra.size() * rb.size());
    for (std::size_t j = 0; j < ra.size(); ++j)
        for (std::size_t k = 0; k < rb.size(); ++k) out[j * rb.size() + k] = ra[j] * rb[k];
    return out;
}

double penalty(const Term& term, std::span<const double> params, double lambda_t, double lambda_iu,
               const EncodedBatch* batch) {
    if (!(lambda_t >= 0.0) || !(lambda_iu >= 0.0)) {
        throw ConfigError("penalty: smoothing and l2 parameters must be >= 0");
    }
    TermSpec spec = term.spec();
    spec.lambda = lambda_t;
    spec.l2 = lambda_iu;
    Term copy(spec, term.binding(), term.basis_a(), term.basis_b());
    return copy.penalty(params, batch).total();
}

CenteredSmooth center_smooth(std::span<const double> weights, std::span<const double> basis_means) {
    if (weights.size() != basis_means.size()) throw DimensionError("center_smooth: size mismatch");
    CenteredSmooth out;
    for (std::size_t l = 0; l < weights.size(); ++l) out.absorbed += basis_means[l] * weights[l];
    out.weights.assign(weights.begin(), weights.end());
    for (auto& w : out.weights) w -= out.absorbed;
    return out;
}

} // namespace fastr
