#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fastr/data.hpp"
#include "fastr/family.hpp"
#include "fastr/terms.hpp"

namespace fastr {

/// Catalog of test functions: "uni1".."uni5", "bi" (two arguments), "vc1".."vc10".
double dgp_function(std::string_view name, double x, double y = 0.0);
bool is_dgp_function(std::string_view name);
std::vector<std::string> dgp_function_names();

/// Simulation design. Feature and term names are fixed by the generator:
///   uni<k>        numeric x<k>, term s:x<k>
///   bivariate     numeric z1, z2, term te:z1:z2
///   vc_levels     categorical g, numeric tv, term vc:g:tv (level k uses vc<(k mod 10)+1>)
///   interaction   categorical a, b, term ia:a:b with Normal(0,1) cell effects
///   factorized    categorical i, u, numeric t, term fvc:i:u:t drawn from a
///                 rank latent_dim factorization over a true_basis-function spline
///   pair_vc       numeric s, term fvc:i:u:s where pair (i,u) uses vc<((i*U+u) mod 10)+1>
struct DGPSpec {
    std::size_t n = 1000;
    FamilyKind family = FamilyKind::gaussian;
    std::uint64_t seed = 1;
    std::vector<std::string> univariate;
    bool bivariate = false;
    std::size_t vc_levels = 0;
    std::size_t interaction_levels = 0;
    std::size_t levels_i = 0;
    std::size_t levels_u = 0;
    bool factorized = false;
    bool pair_vc = false;
    std::size_t latent_dim = 3;
    std::size_t true_basis = 6;
    double intercept = 0.0;
    double sigma = 0.3;
    double phi = 10.0;
    /// Numeric features from U(-2, 2) instead of U(0, 1).
    bool wide_domain = false;
};

void validate_dgp_spec(const DGPSpec& spec);

struct TruthTerm {
    std::string name;
    TermKind kind = TermKind::smooth;
    std::vector<double> values;  // true contribution on each simulated row
};

struct TruthTable {
    std::vector<TruthTerm> terms;
    std::vector<double> eta;
    /// Dense grids for univariate terms: (term, grid points, values).
    struct Grid {
        std::string term;
        std::vector<double> points;
        std::vector<double> values;
    };
    std::vector<Grid> grids;
};

struct Simulation {
    Dataset data;
    TruthTable truth;
};

Simulation generate(const DGPSpec& spec);

/// Prefix of truth columns in the companion CSV.
inline constexpr std::string_view truth_prefix = "f:";

/// Features plus one "f:<term>" column per true term and the true predictor "eta".
Dataset truth_dataset(const Simulation& sim);

/// Integration weights for sorted points: trapezoid rule rescaled to sum to n.
std::vector<double> trapezoid_weights(std::span<const double> sorted_points);

/// n^-1 sum_i delta_i (d_i - dbar)^2 with d = f_hat - f_true and dbar the
/// delta-weighted mean, i.e. both functions are centered before comparison.
double mise(std::span<const double> f_hat, std::span<const double> f_true, std::span<const double> delta);

/// MISE on unsorted evaluation points: sorts, merges duplicate points and
/// applies trapezoid weights.
double mise_on_points(std::span<const double> t, std::span<const double> f_hat,
                      std::span<const double> f_true);

} // namespace fastr
