#include "fastr/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <numeric>
#include <random>

#include "fastr/basis.hpp"
#include "fastr/errors.hpp"

namespace fastr {

namespace {

double uni4(double x) { return x < 0.0 ? std::sin(3.0 * x) * 0.1 + 1.0 : (-2.0 * x + 1.0) / 4.0; }

double bivariate(double x, double y) {
    const double a = std::exp(-(x - 0.2) * (x - 0.2) / 0.09 - (y - 0.3) * (y - 0.3) / 0.16);
    const double b = std::exp(-(x - 0.7) * (x - 0.7) / 0.09 - (y - 0.8) * (y - 0.8) / 0.16);
    return std::pow(std::numbers::pi, 0.3) * 0.4 * (1.2 * a + 0.8 * b);
}

using Fn = double (*)(double);

const std::map<std::string, Fn, std::less<>>& catalog() {
    static const std::map<std::string, Fn, std::less<>> fns = {
        {"uni1", [](double x) { return -std::pow(x / 4.0, 5); }},
        {"uni2", [](double x) { return std::log(x * x) / 10.0; }},
        {"uni3", [](double x) { return std::sin(3.0 * x); }},
        {"uni4", uni4},
        {"uni5", [](double x) { return -x * std::tanh(3.0 * x) * std::sin(4.0 * x) / 4.0; }},
        {"vc1", [](double x) { return std::cos(3.0 * x); }},
        {"vc2", [](double x) { return std::tanh(3.0 * x); }},
        {"vc3", [](double x) { return -std::pow(x / 4.0, 3); }},
        {"vc4", [](double x) { return std::cos(3.0 * x - 2.0) * (-x / 3.0); }},
        {"vc5", [](double x) { return std::exp(x / 2.0) - 1.0; }},
        {"vc6", [](double x) { return (x / 2.0) * (x / 2.0); }},
        {"vc7", [](double x) { return std::sin(x) * std::cos(x); }},
        {"vc8", [](double x) { return std::sqrt(std::abs(x)); }},
        {"vc9", [](double x) { return -std::pow(x / 4.0, 5); }},
        {"vc10", [](double x) { return std::log(x * x) / 100.0; }},
    };
    return fns;
}

std::string vc_name(std::size_t k) { return "vc" + std::to_string(k % 10 + 1); }

class Sampler {
public:
    explicit Sampler(std::uint64_t seed) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32), 0xd6bu};
        rng_.seed(seq);
    }

    std::mt19937_64& rng() { return rng_; }

    std::vector<double> feature(std::size_t n, bool wide) {
        std::uniform_real_distribution<double> unif(wide ? -2.0 : 0.0, wide ? 2.0 : 1.0);
        std::vector<double> v(n);
        for (auto& x : v) {
            do x = unif(rng_);
            while (x == 0.0);
        }
        return v;
    }

    CategoricalColumn balanced(const std::string& name, std::size_t n, std::size_t levels) {
        CategoricalColumn c{name, std::vector<std::int32_t>(n), {}};
        for (std::size_t l = 0; l < levels; ++l) c.levels.push_back(name + std::to_string(l + 1));
        for (std::size_t r = 0; r < n; ++r) c.codes[r] = static_cast<std::int32_t>(r % levels);
        std::shuffle(c.codes.begin(), c.codes.end(), rng_);
        return c;
    }

    double normal() { return normal_(rng_); }

private:
    std::mt19937_64 rng_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

double draw_outcome(FamilyKind family, double eta, const DGPSpec& s, std::mt19937_64& rng) {
    switch (family) {
    case FamilyKind::gaussian: return eta + s.sigma * std::normal_distribution<double>(0.0, 1.0)(rng);
    case FamilyKind::bernoulli: return std::bernoulli_distribution(logistic(eta))(rng) ? 1.0 : 0.0;
    case FamilyKind::poisson:
        return static_cast<double>(std::poisson_distribution<long long>(std::exp(std::min(eta, 30.0)))(rng));
    case FamilyKind::beta: {
        const double mu = logistic(eta);
        const double a = std::gamma_distribution<double>(mu * s.phi, 1.0)(rng);
        const double b = std::gamma_distribution<double>((1.0 - mu) * s.phi, 1.0)(rng);
        double y = a / (a + b);
        if (!(y > 0.0)) y = 1e-12;
        if (!(y < 1.0)) y = 1.0 - 1e-12;
        return y;
    }
    }
    return eta;
}

} // namespace

double dgp_function(std::string_view name, double x, double y) {
    if (name == "bi") return bivariate(x, y);
    const auto& fns = catalog();
    auto it = fns.find(name);
    if (it == fns.end()) throw ConfigError("unknown test function '" + std::string(name) + "'");
    return it->second(x);
}

bool is_dgp_function(std::string_view name) { return name == "bi" || catalog().contains(name); }

std::vector<std::string> dgp_function_names() {
    std::vector<std::string> names;
    for (int k = 1; k <= 5; ++k) names.push_back("uni" + std::to_string(k));
    names.push_back("bi");
    for (int k = 1; k <= 10; ++k) names.push_back("vc" + std::to_string(k));
    return names;
}

void validate_dgp_spec(const DGPSpec& s) {
    if (s.n < 1) throw ConfigError("simulate: n must be >= 1");
    for (const auto& u : s.univariate) {
        if (u.size() != 4 || u.rfind("uni", 0) != 0 || u[3] < '1' || u[3] > '5') {
            throw ConfigError("simulate: unknown univariate function '" + u + "' (expected uni1..uni5)");
        }
    }
    if (s.vc_levels == 1) throw ConfigError("simulate: vc_levels must be 0 or >= 2");
    if (s.interaction_levels == 1) throw ConfigError("simulate: interaction_levels must be 0 or >= 2");
    if (s.factorized || s.pair_vc) {
        if (s.levels_i < 2 || s.levels_u < 2) {
            throw ConfigError("simulate: factorized terms need levels_i and levels_u >= 2");
        }
        if (s.latent_dim < 1) throw ConfigError("simulate: latent_dim must be >= 1");
        if (s.true_basis < 4) throw ConfigError("simulate: true_basis must be >= 4");
    }
    if (!(s.sigma > 0.0)) throw ConfigError("simulate: sigma must be > 0");
    if (!(s.phi > 0.0)) throw ConfigError("simulate: phi must be > 0");
}

Simulation generate(const DGPSpec& s) {
    validate_dgp_spec(s);
    Sampler sampler(s.seed);
    const std::size_t n = s.n;
    std::vector<NumericColumn> num;
    std::vector<CategoricalColumn> cat;
    TruthTable truth;
    truth.eta.assign(n, s.intercept);
    auto add_truth = [&](std::string name, TermKind kind, std::vector<double> values) {
        for (std::size_t r = 0; r < n; ++r) truth.eta[r] += values[r];
        truth.terms.push_back({std::move(name), kind, std::move(values)});
    };
    const double lo = s.wide_domain ? -2.0 : 0.0;
    const double hi = s.wide_domain ? 2.0 : 1.0;

    for (const auto& fn : s.univariate) {
        const std::string feature = "x" + fn.substr(3);
        auto x = sampler.feature(n, s.wide_domain);
        std::vector<double> f(n);
        for (std::size_t r = 0; r < n; ++r) f[r] = dgp_function(fn, x[r]);
        TruthTable::Grid g{"s:" + feature, {}, {}};
        for (std::size_t k = 0; k < 201; ++k) {
            const double t = lo + (hi - lo) * static_cast<double>(k) / 200.0;
            if (t == 0.0) continue;
            g.points.push_back(t);
            g.values.push_back(dgp_function(fn, t));
        }
        truth.grids.push_back(std::move(g));
        add_truth("s:" + feature, TermKind::smooth, std::move(f));
        num.push_back({feature, std::move(x)});
    }
    if (s.bivariate) {
        auto z1 = sampler.feature(n, s.wide_domain);
        auto z2 = sampler.feature(n, s.wide_domain);
        std::vector<double> f(n);
        for (std::size_t r = 0; r < n; ++r) f[r] = dgp_function("bi", z1[r], z2[r]);
        add_truth("te:z1:z2", TermKind::tensor_smooth, std::move(f));
        num.push_back({"z1", std::move(z1)});
        num.push_back({"z2", std::move(z2)});
    }
    if (s.vc_levels > 0) {
        auto g = sampler.balanced("g", n, s.vc_levels);
        auto tv = sampler.feature(n, s.wide_domain);
        std::vector<double> f(n);
        for (std::size_t r = 0; r < n; ++r) f[r] = dgp_function(vc_name(g.codes[r]), tv[r]);
        add_truth("vc:g:tv", TermKind::varying_coefficient, std::move(f));
        num.push_back({"tv", std::move(tv)});
        cat.push_back(std::move(g));
    }
    if (s.interaction_levels > 0) {
        const std::size_t k = s.interaction_levels;
        auto a = sampler.balanced("a", n, k);
        auto b = sampler.balanced("b", n, k);
        std::vector<double> w(k * k);
        for (auto& v : w) v = sampler.normal();
        std::vector<double> f(n);
        for (std::size_t r = 0; r < n; ++r) f[r] = w[a.codes[r] * k + b.codes[r]];
        add_truth("ia:a:b", TermKind::array_interaction, std::move(f));
        cat.push_back(std::move(a));
        cat.push_back(std::move(b));
    }
    if (s.factorized || s.pair_vc) {
        auto ci = sampler.balanced("i", n, s.levels_i);
        auto cu = sampler.balanced("u", n, s.levels_u);
        if (s.factorized) {
            auto t = sampler.feature(n, s.wide_domain);
            const std::size_t l_true = s.true_basis;
            const std::size_t d = s.latent_dim;
            std::vector<double> v1(s.levels_i * l_true * d);
            std::vector<double> v2(s.levels_u * l_true * d);
            for (auto& v : v1) v = sampler.normal();
            for (auto& v : v2) v = sampler.normal();
            const std::vector<double> ends{lo, hi};
            const SplineBasis basis = build_basis(ends, l_true, 3);
            std::vector<double> row(l_true);
            std::vector<double> f(n);
            for (std::size_t r = 0; r < n; ++r) {
                basis.evaluate_row(t[r], row);
                const std::size_t i = ci.codes[r];
                const std::size_t u = cu.codes[r];
                double sum = 0.0;
                for (std::size_t l = 0; l < l_true; ++l) {
                    double vl = 0.0;
                    for (std::size_t q = 0; q < d; ++q) vl += v1[(i * l_true + l) * d + q] * v2[(u * l_true + l) * d + q];
                    sum += row[l] * vl;
                }
                f[r] = sum;
            }
            if (n > 1) {
                const double mean = std::accumulate(f.begin(), f.end(), 0.0) / static_cast<double>(n);
                double ss = 0.0;
                for (double v : f) ss += (v - mean) * (v - mean);
                const double sd = std::sqrt(ss / static_cast<double>(n - 1));
                if (sd > 0.0)
                    for (auto& v : f) v /= sd;
            }
            add_truth("fvc:i:u:t", TermKind::factorized_vc, std::move(f));
            num.push_back({"t", std::move(t)});
        }
        if (s.pair_vc) {
            auto sv = sampler.feature(n, s.wide_domain);
            std::vector<double> f(n);
            for (std::size_t r = 0; r < n; ++r) {
                f[r] = dgp_function(vc_name(ci.codes[r] * s.levels_u + cu.codes[r]), sv[r]);
            }
            add_truth("fvc:i:u:s", TermKind::factorized_vc, std::move(f));
            num.push_back({"s", std::move(sv)});
        }
        cat.push_back(std::move(ci));
        cat.push_back(std::move(cu));
    }

    std::vector<double> y(n);
    for (std::size_t r = 0; r < n; ++r) y[r] = draw_outcome(s.family, truth.eta[r], s, sampler.rng());
    return {Dataset("y", std::move(y), std::move(num), std::move(cat)), std::move(truth)};
}

Dataset truth_dataset(const Simulation& sim) {
    std::vector<NumericColumn> num = sim.data.numeric_columns();
    for (const auto& t : sim.truth.terms) num.push_back({std::string(truth_prefix) + t.name, t.values});
    num.push_back({"eta", sim.truth.eta});
    return Dataset("", {}, std::move(num), sim.data.categorical_columns());
}

std::vector<double> trapezoid_weights(std::span<const double> t) {
    const std::size_t n = t.size();
    if (n == 0) return {};
    if (n == 1 || t.back() == t.front()) return std::vector<double>(n, 1.0);
    std::vector<double> w(n, 0.0);
    for (std::size_t k = 0; k + 1 < n; ++k) {
        const double h = t[k + 1] - t[k];
        if (h < 0.0) throw ContractError("trapezoid_weights: points must be sorted");
        w[k] += h / 2.0;
        w[k + 1] += h / 2.0;
    }
    const double total = t.back() - t.front();
    for (auto& v : w) v *= static_cast<double>(n) / total;
    return w;
}

double mise(std::span<const double> f_hat, std::span<const double> f_true, std::span<const double> delta) {
    if (f_hat.size() != f_true.size() || f_hat.size() != delta.size()) {
        throw DimensionError("mise: estimate, truth and weights must have equal length");
    }
    const std::size_t n = f_hat.size();
    if (n == 0) throw DimensionError("mise: no evaluation points");
    double wsum = 0.0;
    double dbar = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        wsum += delta[k];
        dbar += delta[k] * (f_hat[k] - f_true[k]);
    }
    dbar = wsum > 0.0 ? dbar / wsum : 0.0;
    double s = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double e = f_hat[k] - f_true[k] - dbar;
        s += delta[k] * e * e;
    }
    return s / static_cast<double>(n);
}

double mise_on_points(std::span<const double> t, std::span<const double> f_hat, std::span<const double> f_true) {
    if (t.size() != f_hat.size() || t.size() != f_true.size()) {
        throw DimensionError("mise: points, estimate and truth must have equal length");
    }
    std::vector<std::size_t> order(t.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return t[a] < t[b]; });
    std::vector<double> pts;
    std::vector<double> fh;
    std::vector<double> ft;
    std::vector<double> counts;
    for (auto k : order) {
        if (!pts.empty() && pts.back() == t[k]) {
            fh.back() += f_hat[k];
            ft.back() += f_true[k];
            counts.back() += 1.0;
            continue;
        }
        pts.push_back(t[k]);
        fh.push_back(f_hat[k]);
        ft.push_back(f_true[k]);
        counts.push_back(1.0);
    }
    for (std::size_t k = 0; k < pts.size(); ++k) {
        fh[k] /= counts[k];
        ft[k] /= counts[k];
    }
    return mise(fh, ft, trapezoid_weights(pts));
}

} // namespace fastr
