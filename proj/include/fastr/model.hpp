#pragma once

#include <cstddef>
#include <cstdint>
#include <memory_resource>
#include <span>
#include <string>
#include <vector>

#include "fastr/data.hpp"
#include "fastr/family.hpp"
#include "fastr/terms.hpp"

namespace fastr {

/// Outcome family plus the ordered list of additive terms.
struct ModelSpec {
    FamilyKind family = FamilyKind::gaussian;
    std::vector<TermSpec> terms;
};

/// Term names must be unique and every spec valid.
void validate_model_spec(const ModelSpec& spec);

/// Features a spec needs, in order of first use.
Schema required_schema(const ModelSpec& spec, const std::string& outcome);

/// Column positions and level counts of a term's features within a schema.
TermBinding bind_term(const TermSpec& spec, const Schema& schema,
                      const std::vector<CategoricalColumn>& dictionaries);

/// Bookkeeping recorded by training and carried along with the parameters.
struct TrainingMetadata {
    std::size_t epochs_run = 0;
    std::size_t best_epoch = 0;
    double best_validation_loss = 0.0;
    std::string stop_reason;
    std::size_t training_rows = 0;
    std::uint64_t seed = 0;
};

struct Prediction {
    std::vector<double> eta;
    std::vector<double> mean;
    /// Rows with at least one categorical level absent from the training dictionaries.
    std::size_t unseen_rows = 0;
    /// Poisson rows whose predictor exceeded the exp clip.
    std::size_t clipped = 0;
};

/// A model bound to data: frozen dictionaries, spline bases, term objects and
/// the flat parameter vector. The first slot holds the family's log auxiliary
/// parameter when the family has one, followed by each term's blocks.
class Model {
public:
    Model() = default;

    /// Builds dictionaries and bases from the training data and initializes
    /// parameters deterministically from the seed.
    static Model build(const ModelSpec& spec, const Dataset& train, std::uint64_t seed,
                       const std::string& outcome = "y");

    /// Assembles a model from stored parts (used by deserialization).
    Model(ModelSpec spec, Schema schema, std::vector<CategoricalColumn> dictionaries,
          std::vector<Term> terms, std::vector<double> params);

    const ModelSpec& spec() const noexcept { return spec_; }
    const Schema& schema() const noexcept { return schema_; }
    const std::vector<CategoricalColumn>& dictionaries() const noexcept { return dictionaries_; }
    const std::vector<Term>& terms() const noexcept { return terms_; }
    std::vector<Term>& terms() noexcept { return terms_; }
    std::size_t term_index(const std::string& name) const;

    std::span<double> params() noexcept { return params_; }
    std::span<const double> params() const noexcept { return params_; }
    std::size_t param_count() const noexcept { return params_.size(); }
    std::size_t term_offset(std::size_t t) const { return offsets_.at(t); }
    std::span<const double> term_params(std::size_t t, std::span<const double> params) const;
    std::span<const double> term_params(std::size_t t) const { return term_params(t, params_); }
    std::span<double> term_params(std::size_t t);

    bool has_auxiliary() const noexcept { return aux_slot_; }
    /// Family evaluated at the auxiliary value stored in params.
    Family family(std::span<const double> params) const;
    Family family() const { return family(params_); }

    /// Copy of data restricted to the model's features in model order, with
    /// categorical codes mapped through the frozen dictionaries.
    Dataset align(const Dataset& data) const;

    /// Linear predictor on an encoded batch of aligned data.
    void eta(const EncodedBatch& batch, std::span<const double> params, std::span<double> out,
             std::pmr::memory_resource* mr) const;

    Prediction predict(const Dataset& data) const;

    TrainingMetadata& metadata() noexcept { return metadata_; }
    const TrainingMetadata& metadata() const noexcept { return metadata_; }

private:
    void compute_offsets();

    ModelSpec spec_;
    Schema schema_;
    std::vector<CategoricalColumn> dictionaries_;
    std::vector<Term> terms_;
    std::vector<double> params_;
    std::vector<std::size_t> offsets_;
    bool aux_slot_ = false;
    TrainingMetadata metadata_;
};

/// Number of aligned-data rows with an unseen level in any categorical column.
std::size_t count_unseen_rows(const Dataset& aligned);

} // namespace fastr
