#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "fastr/data.hpp"
#include "fastr/family.hpp"
#include "fastr/model.hpp"
#include "fastr/terms.hpp"

namespace fixture {

inline fastr::CategoricalColumn categorical(const std::string& name, std::vector<std::int32_t> codes,
                                            std::size_t levels) {
    fastr::CategoricalColumn c{name, std::move(codes), {}};
    for (std::size_t k = 0; k < levels; ++k) c.levels.push_back(name + std::to_string(k));
    return c;
}

/// Random data with numeric x, z, t in [0, 1], categorical i (I levels) and
/// u (U levels), and an outcome drawn inside the family's support.
inline fastr::Dataset mixed_dataset(std::size_t n, std::size_t levels_i, std::size_t levels_u,
                                    fastr::FamilyKind family, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<double> x(n), z(n), t(n), y(n);
    std::vector<std::int32_t> ci(n), cu(n);
    for (std::size_t r = 0; r < n; ++r) {
        x[r] = unif(rng);
        z[r] = unif(rng);
        t[r] = unif(rng);
        ci[r] = static_cast<std::int32_t>(r % levels_i);
        cu[r] = static_cast<std::int32_t>((r / levels_i + r) % levels_u);
        const double eta = std::sin(3.0 * x[r]) + 0.5 * z[r] - 0.3 * ci[r] + 0.2 * cu[r] * t[r];
        switch (family) {
        case fastr::FamilyKind::gaussian: y[r] = eta + std::normal_distribution<double>(0.0, 0.3)(rng); break;
        case fastr::FamilyKind::bernoulli: y[r] = unif(rng) < fastr::logistic(eta) ? 1.0 : 0.0; break;
        case fastr::FamilyKind::poisson:
            y[r] = static_cast<double>(std::poisson_distribution<int>(std::exp(0.5 * eta))(rng));
            break;
        case fastr::FamilyKind::beta: {
            const double mu = fastr::logistic(eta);
            const double a = std::gamma_distribution<double>(mu * 10.0, 1.0)(rng);
            const double b = std::gamma_distribution<double>((1.0 - mu) * 10.0, 1.0)(rng);
            y[r] = std::clamp(a / (a + b), 1e-6, 1.0 - 1e-6);
            break;
        }
        }
    }
    std::vector<fastr::NumericColumn> num{{"x", x}, {"z", z}, {"t", t}};
    std::vector<fastr::CategoricalColumn> cat{categorical("i", ci, levels_i), categorical("u", cu, levels_u)};
    return fastr::Dataset("y", std::move(y), std::move(num), std::move(cat));
}

inline fastr::TermSpec term(fastr::TermKind kind, std::string ca = "", std::string cb = "", std::string na = "",
                            std::string nb = "") {
    fastr::TermSpec s;
    s.kind = kind;
    s.cat_a = std::move(ca);
    s.cat_b = std::move(cb);
    s.num_a = std::move(na);
    s.num_b = std::move(nb);
    return s;
}

/// One term of every kind over the features of mixed_dataset.
inline fastr::ModelSpec all_kinds(fastr::FamilyKind family) {
    using fastr::TermKind;
    fastr::ModelSpec spec;
    spec.family = family;
    spec.terms.push_back(term(TermKind::global_bias));
    spec.terms.push_back(term(TermKind::linear, "", "", "z"));
    auto b = term(TermKind::categorical_bias, "i");
    b.l2 = 0.3;
    spec.terms.push_back(b);
    auto fb = term(TermKind::factorized_bias, "i", "u");
    fb.latent_dim = 2;
    fb.l2 = 0.2;
    spec.terms.push_back(fb);
    auto s = term(TermKind::smooth, "", "", "x");
    s.num_basis = 6;
    s.lambda = 0.7;
    spec.terms.push_back(s);
    auto te = term(TermKind::tensor_smooth, "", "", "x", "z");
    te.num_basis = 4;
    te.num_basis_b = 5;
    te.lambda = 0.4;
    spec.terms.push_back(te);
    auto vc = term(TermKind::varying_coefficient, "u", "", "t");
    vc.num_basis = 5;
    vc.lambda = 0.9;
    spec.terms.push_back(vc);
    auto fvc = term(TermKind::factorized_vc, "i", "u", "t");
    fvc.num_basis = 5;
    fvc.latent_dim = 2;
    fvc.lambda = 1.3;
    fvc.l2 = 0.1;
    spec.terms.push_back(fvc);
    auto ia = term(TermKind::array_interaction, "i", "u");
    ia.l2 = 0.25;
    spec.terms.push_back(ia);
    return spec;
}

inline void randomize(std::span<double> params, std::uint64_t seed, double sd = 0.3) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, sd);
    for (auto& v : params) v = nd(rng);
}

} // namespace fixture
