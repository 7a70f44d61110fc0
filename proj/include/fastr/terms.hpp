#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory_resource>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fastr/basis.hpp"
#include "fastr/data.hpp"
#include "fastr/tensorops.hpp"

namespace fastr {

enum class TermKind {
    global_bias,
    linear,
    categorical_bias,
    factorized_bias,
    smooth,
    tensor_smooth,
    varying_coefficient,
    factorized_vc,
    array_interaction,
};

std::string_view kind_name(TermKind kind);
TermKind parse_kind(std::string_view name);

/// Declarative description of one additive term of the predictor.
///
/// Feature roles by kind:
///   linear               num_a
///   categorical_bias     cat_a
///   factorized_bias      cat_a, cat_b, latent_dim
///   smooth               num_a, num_basis, order
///   tensor_smooth        num_a, num_b, num_basis, num_basis_b, order
///   varying_coefficient  cat_a, num_a, num_basis, order
///   factorized_vc        cat_a, cat_b, num_a, num_basis, latent_dim, order
///   array_interaction    cat_a, cat_b
struct TermSpec {
    TermKind kind = TermKind::global_bias;
    std::string name;
    std::string cat_a;
    std::string cat_b;
    std::string num_a;
    std::string num_b;
    std::size_t num_basis = 10;
    std::size_t num_basis_b = 10;
    int degree = 3;
    int order = 2;
    std::size_t latent_dim = 1;
    std::optional<double> lambda;  // explicit smoothing parameter
    std::optional<double> df;      // degrees-of-freedom target
    double l2 = 0.0;               // ridge on bias blocks / latent factors
};

std::string default_term_name(const TermSpec& spec);
/// Kinds that carry a spline basis and a smoothing parameter.
bool has_smoothing(TermKind kind);
bool uses_basis_b(TermKind kind);
/// Checks structural constraints (feature roles present, L > order, D >= 1, ...).
void validate_term_spec(const TermSpec& spec);

struct ParamBlock {
    std::string name;
    std::vector<std::size_t> shape;
    std::vector<double> values;

    std::size_t size() const;
};

/// Shapes of every parameter block of a term; level counts by feature name.
std::vector<ParamBlock> param_layout(const TermSpec& spec,
                                     const std::map<std::string, std::size_t>& level_counts);
std::size_t param_count(const TermSpec& spec, const std::map<std::string, std::size_t>& level_counts);

/// Biases and spline weights start at zero, latent factors at Normal(0, 0.1^2).
std::vector<ParamBlock> init_params(const TermSpec& spec,
                                    const std::map<std::string, std::size_t>& level_counts,
                                    std::uint64_t seed);

inline constexpr double latent_init_sd = 0.1;

// Batch forward passes. Codes equal to `unseen_level` contribute zero.

/// result[m] = sum_d V1[i_m, d] * V2[u_m, d]
Vector forward_factorized_bias(std::span<const std::int32_t> codes_i,
                               std::span<const std::int32_t> codes_u, ConstMatrixView v1,
                               ConstMatrixView v2,
                               std::pmr::memory_resource* mr = std::pmr::get_default_resource());

/// result[m] = sum_l B(m,l) sum_d V1[i_m,l,d] V2[u_m,l,d], evaluated as
/// row_dot(B, V_iu). Latent tensors are stored as I x (L*D) matrices with
/// column index l*D + d.
Vector forward_factorized_vc(std::span<const std::int32_t> codes_i,
                             std::span<const std::int32_t> codes_u, ConstMatrixView basis_eval,
                             ConstMatrixView v1, ConstMatrixView v2, std::size_t latent_dim,
                             std::pmr::memory_resource* mr = std::pmr::get_default_resource());

/// result[m] = W[i_m, u_m]; a gather, never the one-hot tensor product.
Vector forward_array_interaction(std::span<const std::int32_t> codes_i,
                                 std::span<const std::int32_t> codes_u, ConstMatrixView w,
                                 std::pmr::memory_resource* mr = std::pmr::get_default_resource());

/// B w
Vector forward_smooth(ConstMatrixView basis_eval, std::span<const double> w,
                      std::pmr::memory_resource* mr = std::pmr::get_default_resource());

/// result[m] = sum_l B(m,l) W[i_m, l]
Vector forward_vc(std::span<const std::int32_t> codes, ConstMatrixView basis_eval, ConstMatrixView w,
                  std::pmr::memory_resource* mr = std::pmr::get_default_resource());

/// (Ba (.) Bb) vec(W), evaluated as row_dot(Ba W, Bb) with W of shape La x Lb.
Vector forward_tensor_smooth(ConstMatrixView basis_a, ConstMatrixView basis_b, ConstMatrixView w,
                             std::pmr::memory_resource* mr = std::pmr::get_default_resource());

/// result[m] = b[i_m]
Vector forward_categorical_bias(std::span<const std::int32_t> codes, std::span<const double> b,
                                std::pmr::memory_resource* mr = std::pmr::get_default_resource());

/// Column indices of a term's features in the model's aligned column order
/// plus level counts of its categorical features.
struct TermBinding {
    std::size_t cat_a = 0;
    std::size_t cat_b = 0;
    std::size_t num_a = 0;
    std::size_t num_b = 0;
    std::size_t levels_a = 0;
    std::size_t levels_b = 0;
};

/// Per-batch cached basis evaluations for one term.
struct TermCache {
    explicit TermCache(std::pmr::memory_resource* mr) : basis_a(mr), basis_b(mr) {}
    DenseMatrix basis_a;
    DenseMatrix basis_b;
};

/// Penalty split into the part computed from whole parameter blocks and the
/// part summed over batch rows (factorized varying coefficients only).
struct PenaltyParts {
    double global = 0.0;
    double batch_sum = 0.0;
    double total() const { return global + batch_sum; }
};

/// A term bound to a model: knows its basis, penalty, smoothing parameters
/// and where its features live in an EncodedBatch.
class Term {
public:
    Term(TermSpec spec, TermBinding binding, std::optional<SplineBasis> basis_a,
         std::optional<SplineBasis> basis_b);

    const TermSpec& spec() const noexcept { return spec_; }
    const TermBinding& binding() const noexcept { return binding_; }
    const std::optional<SplineBasis>& basis_a() const noexcept { return basis_a_; }
    const std::optional<SplineBasis>& basis_b() const noexcept { return basis_b_; }
    const std::optional<PenaltyMatrix>& penalty_matrix() const noexcept { return penalty_; }

    std::size_t param_count() const noexcept { return count_; }
    std::vector<ParamBlock> layout() const;

    double smoothing() const noexcept { return lambda_; }
    void set_smoothing(double lambda);
    double l2() const noexcept { return spec_.l2; }

    /// Mean of each design column over the training rows (smooth/tensor only).
    const std::vector<double>& basis_means() const noexcept { return basis_means_; }
    void set_basis_means(std::vector<double> means) { basis_means_ = std::move(means); }

    TermCache prepare(const EncodedBatch& batch, std::pmr::memory_resource* mr) const;

    /// eta += this term's contribution.
    void forward(const EncodedBatch& batch, const TermCache& cache, std::span<const double> params,
                 std::span<double> eta) const;
    /// grad += d(sum_m d_eta[m] * term_m) / d params
    void backward(const EncodedBatch& batch, const TermCache& cache, std::span<const double> params,
                  std::span<const double> d_eta, std::span<double> grad) const;

    /// Penalty value. The batch part is only evaluated when a batch is given.
    PenaltyParts penalty(std::span<const double> params, const EncodedBatch* batch = nullptr,
                         std::pmr::memory_resource* mr = std::pmr::get_default_resource()) const;
    /// grad += global_scale * d global/d params + batch_scale * d batch_sum/d params
    void penalty_gradient(std::span<const double> params, const EncodedBatch* batch,
                          double global_scale, double batch_scale, std::span<double> grad) const;

    /// Design row of this term's smooth part at the given feature values (for export/centering).
    std::vector<double> design_row(double a, double b = 0.0) const;

private:
    TermSpec spec_;
    TermBinding binding_;
    std::optional<SplineBasis> basis_a_;
    std::optional<SplineBasis> basis_b_;
    std::optional<PenaltyMatrix> penalty_;
    std::size_t count_ = 0;
    double lambda_ = 0.0;
    std::vector<double> basis_means_;
};

/// Penalty of a term for explicit smoothing parameters; negative values are rejected.
double penalty(const Term& term, std::span<const double> params, double lambda_t, double lambda_iu,
               const EncodedBatch* batch = nullptr);

struct CenteredSmooth {
    std::vector<double> weights;
    double absorbed = 0.0;  // constant to add to the global bias
};

/// Shift spline weights so the fitted function has zero mean over the
/// training rows. Relies on the basis forming a partition of unity.
CenteredSmooth center_smooth(std::span<const double> weights, std::span<const double> basis_means);

} // namespace fastr
