#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "fastr/data.hpp"
#include "fastr/model.hpp"

namespace fastr {

struct TermEvaluation {
    std::string term;
    std::string kind;
    double mise = 0.0;
    /// Number of curves averaged (levels, level pairs, or 1).
    std::size_t groups = 0;
};

/// Reads a truth CSV: the model's features plus every "f:<term>" column.
Dataset read_truth_csv(const Model& model, const std::string& path);

/// Per-term M(I)SE of the fitted contributions against the truth columns,
/// evaluated on the truth rows. Smooth curves use trapezoid weights over the
/// sorted feature values; varying and factorized terms average the per-level
/// (or per-pair) values; tensor and categorical terms use the centered MSE.
std::vector<TermEvaluation> evaluate_terms(const Model& model, const Dataset& truth);

/// Fitted contribution of one term on every row of (unaligned) data.
std::vector<double> term_contribution(const Model& model, std::size_t term, const Dataset& data);

std::string format_evaluation_csv(const std::vector<TermEvaluation>& rows);

/// Writes one CSV per effect table into dir; returns the paths written.
std::vector<std::string> write_effect_tables(const Model& model, std::size_t grid_size, const std::string& dir);

} // namespace fastr
