#include "fastr/family.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/special_functions/digamma.hpp>

#include "fastr/errors.hpp"

namespace fastr {

namespace {

constexpr double mean_upper = 1.0 - 0x1p-53;
constexpr double mean_lower = 1e-300;
constexpr double beta_clamp = 1e-12;

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double digamma(double x) { return boost::math::digamma(x); }

} // namespace

double logistic(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

FamilyKind parse_family(std::string_view name) {
    if (name == "gaussian") return FamilyKind::gaussian;
    if (name == "bernoulli") return FamilyKind::bernoulli;
    if (name == "poisson") return FamilyKind::poisson;
    if (name == "beta") return FamilyKind::beta;
    throw ConfigError("unknown family '" + std::string(name) +
                      "' (expected gaussian, bernoulli, poisson or beta)");
}

std::string_view family_name(FamilyKind kind) {
    switch (kind) {
    case FamilyKind::gaussian: return "gaussian";
    case FamilyKind::bernoulli: return "bernoulli";
    case FamilyKind::poisson: return "poisson";
    case FamilyKind::beta: return "beta";
    }
    return "unknown";
}

double Family::auxiliary() const { return has_auxiliary() ? std::exp(log_aux_) : 1.0; }

double Family::mean(double eta) const {
    switch (kind_) {
    case FamilyKind::gaussian: return eta;
    case FamilyKind::bernoulli:
    case FamilyKind::beta: return std::clamp(logistic(eta), mean_lower, mean_upper);
    case FamilyKind::poisson: return std::exp(std::min(eta, exp_clip));
    }
    return eta;
}

Family::MeanResult Family::mean(std::span<const double> eta) const {
    MeanResult out;
    out.values.resize(eta.size());
    for (std::size_t i = 0; i < eta.size(); ++i) {
        out.values[i] = mean(eta[i]);
        if (kind_ == FamilyKind::poisson && eta[i] > exp_clip) ++out.clipped;
    }
    return out;
}

bool Family::in_support(double y) const {
    if (!std::isfinite(y)) return false;
    switch (kind_) {
    case FamilyKind::gaussian: return true;
    case FamilyKind::bernoulli: return y == 0.0 || y == 1.0;
    case FamilyKind::poisson: return y >= 0.0 && std::floor(y) == y;
    case FamilyKind::beta: return y > 0.0 && y < 1.0;
    }
    return false;
}

void Family::validate(std::span<const double> y) const {
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (!in_support(y[i])) {
            throw DataError("outcome value " + std::to_string(y[i]) + " at row " +
                            std::to_string(i) + " is outside the support of the " +
                            std::string(family_name(kind_)) + " family");
        }
    }
}

double Family::nll_point(double y, double eta) const {
    switch (kind_) {
    case FamilyKind::gaussian: {
        const double sigma = std::exp(log_aux_);
        const double z = (y - eta) / sigma;
        return 0.5 * std::log(2.0 * std::numbers::pi) + log_aux_ + 0.5 * z * z;
    }
    case FamilyKind::bernoulli: return softplus(eta) - y * eta;
    case FamilyKind::poisson: {
        // exp linearised beyond the clip point keeps the loss C1 and finite
        const double rate = eta > exp_clip ? std::exp(exp_clip) * (1.0 + eta - exp_clip)
                                           : std::exp(eta);
        return rate - y * eta + std::lgamma(y + 1.0);
    }
    case FamilyKind::beta: {
        const double phi = std::exp(log_aux_);
        const double mu = std::clamp(logistic(eta), beta_clamp, 1.0 - beta_clamp);
        const double a = mu * phi;
        const double b = (1.0 - mu) * phi;
        return std::lgamma(a) + std::lgamma(b) - std::lgamma(phi) - (a - 1.0) * std::log(y) -
               (b - 1.0) * std::log1p(-y);
    }
    }
    return 0.0;
}

double Family::nll(std::span<const double> y, std::span<const double> eta) const {
    if (y.size() != eta.size()) throw DimensionError("nll: outcome and predictor lengths differ");
    validate(y);
    if (y.empty()) return 0.0;
    double total = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) total += nll_point(y[i], eta[i]);
    return total / static_cast<double>(y.size());
}

Family::PointGradient Family::nll_grad_point(double y, double eta) const {
    switch (kind_) {
    case FamilyKind::gaussian: {
        const double inv_var = std::exp(-2.0 * log_aux_);
        const double r = eta - y;
        return {r * inv_var, 1.0 - r * r * inv_var};
    }
    case FamilyKind::bernoulli: return {logistic(eta) - y, 0.0};
    case FamilyKind::poisson: {
        const double rate = std::exp(std::min(eta, exp_clip));
        return {rate - y, 0.0};
    }
    case FamilyKind::beta: {
        const double phi = std::exp(log_aux_);
        const double raw = logistic(eta);
        const double mu = std::clamp(raw, beta_clamp, 1.0 - beta_clamp);
        const double a = mu * phi;
        const double b = (1.0 - mu) * phi;
        const double ly = std::log(y);
        const double l1y = std::log1p(-y);
        const double psi_a = digamma(a);
        const double psi_b = digamma(b);
        const double d_mu = phi * (psi_a - psi_b - ly + l1y);
        const double d_eta = (raw == mu) ? d_mu * mu * (1.0 - mu) : 0.0;
        const double d_log_phi =
            phi * (mu * psi_a + (1.0 - mu) * psi_b - digamma(phi) - mu * ly - (1.0 - mu) * l1y);
        return {d_eta, d_log_phi};
    }
    }
    return {};
}

Family::Gradient Family::nll_grad(std::span<const double> y, std::span<const double> eta) const {
    if (y.size() != eta.size()) throw DimensionError("nll_grad: outcome and predictor lengths differ");
    validate(y);
    Gradient g;
    g.eta.resize(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        const auto p = nll_grad_point(y[i], eta[i]);
        g.eta[i] = p.eta;
        g.aux += p.aux;
    }
    if (!y.empty()) g.aux /= static_cast<double>(y.size());
    return g;
}

} // namespace fastr
