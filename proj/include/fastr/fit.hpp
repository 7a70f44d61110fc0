#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory_resource>
#include <span>
#include <string>
#include <vector>

#include "fastr/data.hpp"
#include "fastr/model.hpp"

namespace fastr {

enum class OptimizerKind { adam, sgd };

OptimizerKind parse_optimizer(std::string_view name);
std::string_view optimizer_name(OptimizerKind kind);

struct FitConfig {
    std::size_t batch_size = 250;
    std::size_t max_epochs = 100;
    double learning_rate = 1e-3;
    OptimizerKind optimizer = OptimizerKind::adam;
    double validation_fraction = 0.1;
    std::size_t patience = 50;
    std::uint64_t seed = 1;
    /// Degrees of freedom for smoothing terms without an explicit lambda or df.
    double df = 5.0;
};

void validate_fit_config(const FitConfig& cfg);

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double validation_loss = 0.0;
    std::size_t peak_bytes = 0;  // tracked batch-phase allocation high-water mark
};

struct TrainReport {
    std::vector<EpochRecord> epochs;
    std::size_t best_epoch = 0;
    double best_validation_loss = 0.0;
    bool has_validation = false;
    std::string stop_reason;
    std::size_t steps = 0;
    double wall_seconds = 0.0;
    std::size_t peak_batch_bytes = 0;
    std::size_t param_state_bytes = 0;  // parameters, gradient and optimizer moments
    std::size_t train_rows = 0;
    std::size_t validation_rows = 0;
    std::map<std::string, double> lambdas;
    std::map<std::string, bool> lambda_at_bound;
};

/// Penalized negative log-likelihood of a minibatch:
///   mean_m nll_m + c * sum_terms global + c * mean_m batch_penalty_m
/// with c = 1 / (2 N_train), divided by sigma^2 for the Gaussian family so
/// that smoothing parameters keep their penalized least-squares meaning.
class Objective {
public:
    Objective(const Model& model, std::size_t train_rows);

    double penalty_scale(std::span<const double> params) const;

    /// Loss on one batch; when grad is non-empty the gradient is added to it.
    double evaluate(const EncodedBatch& batch, std::span<const double> params, std::span<double> grad,
                    std::pmr::memory_resource* mr) const;

    /// Same loss over a row set, evaluated in chunks so memory stays O(chunk).
    double dataset_loss(const Dataset& aligned, std::span<const std::size_t> rows,
                        std::span<const double> params, std::size_t chunk,
                        std::pmr::memory_resource* mr) const;

private:
    const Model* model_;
    double base_scale_;
};

struct LambdaChoice {
    double lambda = 0.0;
    bool at_upper_bound = false;
};

/// Smoothing parameter per smoothing term: an explicit lambda is kept,
/// otherwise the term's df (or the default) is converted on the aligned
/// training rows. Varying-coefficient terms share one lambda chosen so the
/// mean per-level df hits the target.
std::map<std::string, LambdaChoice> resolve_lambdas(const Model& model, const Dataset& aligned,
                                                    std::span<const std::size_t> rows, double df);

/// Deterministic split: seeded shuffle, the last fraction is validation.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_rows(std::size_t n, double fraction,
                                                                        std::uint64_t seed);

struct FitResult {
    Model model;
    TrainReport report;
};

FitResult train(const ModelSpec& spec, const Dataset& data, const FitConfig& cfg);

/// Train an already built model in place (parameters as initialized).
TrainReport train_model(Model& model, const Dataset& data, const FitConfig& cfg);

/// Plot-ready effect table.
struct EffectTable {
    std::string term;
    std::string kind;  // "effect", "latent" or "intercept"
    std::vector<std::string> key_columns;
    std::vector<std::string> value_columns;
    std::vector<std::vector<std::string>> keys;
    std::vector<std::vector<double>> values;
};

/// Effect curves on an equidistant grid over each basis domain. Smooth and
/// tensor effects are centered over the training rows with the removed
/// constant added to the intercept table.
std::vector<EffectTable> export_effects(const Model& model, std::size_t grid_size);

std::string format_effect_csv(const EffectTable& table);

} // namespace fastr
