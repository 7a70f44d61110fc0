#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fastr {

enum class FamilyKind { gaussian, bernoulli, poisson, beta };

FamilyKind parse_family(std::string_view name);
std::string_view family_name(FamilyKind kind);

/// Outcome distribution with its response function h and negative
/// log-likelihood. Gaussian carries a scale sigma and Beta a precision phi,
/// both stored on the log scale so they can be trained unconstrained.
class Family {
public:
    /// Linear predictor above which exp() is linearised for Poisson.
    static constexpr double exp_clip = 30.0;

    explicit Family(FamilyKind kind, double log_auxiliary = 0.0)
        : kind_(kind), log_aux_(log_auxiliary) {}

    FamilyKind kind() const noexcept { return kind_; }
    bool has_auxiliary() const noexcept {
        return kind_ == FamilyKind::gaussian || kind_ == FamilyKind::beta;
    }
    double log_auxiliary() const noexcept { return log_aux_; }
    void set_log_auxiliary(double v) noexcept { log_aux_ = v; }
    /// sigma (Gaussian) or phi (Beta); 1 for the others.
    double auxiliary() const;

    double mean(double eta) const;

    struct MeanResult {
        std::vector<double> values;
        std::size_t clipped = 0;
    };
    MeanResult mean(std::span<const double> eta) const;

    /// Throws DataError naming the first row outside the family's support.
    void validate(std::span<const double> y) const;
    bool in_support(double y) const;

    /// Per-observation negative log density.
    double nll_point(double y, double eta) const;
    /// Mean negative log-likelihood over observations (validates support).
    double nll(std::span<const double> y, std::span<const double> eta) const;

    struct PointGradient {
        double eta = 0.0;  // d nll_point / d eta
        double aux = 0.0;  // d nll_point / d log_auxiliary
    };
    PointGradient nll_grad_point(double y, double eta) const;

    struct Gradient {
        std::vector<double> eta;  // per observation, d nll_point / d eta
        double aux = 0.0;         // d mean-nll / d log_auxiliary
    };
    Gradient nll_grad(std::span<const double> y, std::span<const double> eta) const;

private:
    FamilyKind kind_;
    double log_aux_;
};

double logistic(double x);

} // namespace fastr
