#pragma once

#include <cstddef>
#include <cstdint>
#include <memory_resource>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fastr/tensorops.hpp"

namespace fastr {

/// Code used for a categorical level that is absent from a frozen dictionary.
inline constexpr std::int32_t unseen_level = -1;

/// Which columns of a CSV file are used and how they are typed.
struct Schema {
    std::string outcome;
    std::vector<std::string> numeric;
    std::vector<std::string> categorical;
};

struct NumericColumn {
    std::string name;
    std::vector<double> values;
};

/// Integer-encoded categorical column. Levels are coded by order of first
/// appearance; codes index into `levels`.
struct CategoricalColumn {
    std::string name;
    std::vector<std::int32_t> codes;
    std::vector<std::string> levels;

    std::size_t level_count() const noexcept { return levels.size(); }
    std::int32_t code_of(const std::string& level) const;
};

/// In-memory column store with an optional outcome.
class Dataset {
public:
    Dataset() = default;
    Dataset(std::string outcome_name, std::vector<double> outcome,
            std::vector<NumericColumn> numeric, std::vector<CategoricalColumn> categorical);

    std::size_t rows() const noexcept { return rows_; }
    bool has_outcome() const noexcept { return !outcome_name_.empty(); }
    const std::string& outcome_name() const noexcept { return outcome_name_; }
    std::span<const double> outcome() const noexcept { return outcome_; }

    const std::vector<NumericColumn>& numeric_columns() const noexcept { return numeric_; }
    const std::vector<CategoricalColumn>& categorical_columns() const noexcept { return categorical_; }

    std::optional<std::size_t> numeric_index(const std::string& name) const;
    std::optional<std::size_t> categorical_index(const std::string& name) const;
    const NumericColumn& numeric(const std::string& name) const;
    const CategoricalColumn& categorical(const std::string& name) const;

    /// Copy with categorical codes translated into the given frozen
    /// dictionaries (one per categorical column, matched by name). Levels
    /// missing from a dictionary become `unseen_level`.
    Dataset recoded(const std::vector<CategoricalColumn>& dictionaries) const;

    /// Subset of rows, in the given order.
    Dataset subset(std::span<const std::size_t> rows) const;

private:
    std::size_t rows_ = 0;
    std::string outcome_name_;
    std::vector<double> outcome_;
    std::vector<NumericColumn> numeric_;
    std::vector<CategoricalColumn> categorical_;
};

/// Reads a comma-separated file with a header row. Columns not in the
/// schema are ignored. When require_outcome is false a missing outcome
/// column yields a dataset without outcome.
Dataset read_csv(const std::string& path, const Schema& schema, bool require_outcome = true);
Dataset parse_csv(const std::string& text, const Schema& schema, bool require_outcome = true,
                  const std::string& source = "<memory>");

/// Writes outcome, numeric then categorical columns; doubles round-trip exactly.
void write_csv(const Dataset& data, const std::string& path);
std::string format_csv(const Dataset& data);

/// Shortest representation of a double that parses back to the same value.
std::string format_double(double v);

/// Rows of one minibatch with their categorical codes, numeric values and
/// outcome gathered into batch-local storage. Categorical features are held
/// as integer codes only; no one-hot matrix is built.
struct EncodedBatch {
    explicit EncodedBatch(std::pmr::memory_resource* mr = std::pmr::get_default_resource())
        : rows(mr), codes(mr), numeric(mr), outcome(mr) {}

    std::pmr::vector<std::size_t> rows;
    std::pmr::vector<std::pmr::vector<std::int32_t>> codes;  // per categorical column
    std::pmr::vector<Vector> numeric;                         // per numeric column
    Vector outcome;

    std::size_t size() const noexcept { return rows.size(); }
};

EncodedBatch encode_batch(const Dataset& data, std::span<const std::size_t> rows,
                          std::pmr::memory_resource* mr = std::pmr::get_default_resource());

/// Seeded shuffling of a fixed row set into minibatches. Every row appears
/// exactly once per epoch; the last batch may be short.
class BatchPlan {
public:
    BatchPlan(std::vector<std::size_t> rows, std::size_t batch_size, std::uint64_t seed);

    std::size_t batch_size() const noexcept { return batch_size_; }
    std::size_t row_count() const noexcept { return order_.size(); }
    std::size_t batches_per_epoch() const noexcept;

    /// Reshuffle for the given epoch. Deterministic in (seed, epoch, call order).
    void shuffle(std::size_t epoch);
    /// Row indices of batch b of the current order.
    std::span<const std::size_t> batch(std::size_t b) const;
    std::span<const std::size_t> order() const noexcept { return order_; }

private:
    std::vector<std::size_t> order_;
    std::size_t batch_size_;
    std::uint64_t seed_;
};

/// Convenience: all batches of one epoch of a plan, after shuffling.
std::vector<std::vector<std::size_t>> epoch_batches(BatchPlan& plan, std::size_t epoch);

} // namespace fastr
