#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace fastr {

/// Memory benchmark grid. Kinds: "single" (intercept + categorical bias) and
/// "varying" (intercept + varying coefficient).
struct BenchConfig {
    std::vector<std::size_t> levels{20, 40, 60, 80};
    std::vector<std::size_t> n{1000, 2000, 4000};
    std::vector<std::string> kinds{"single", "varying"};
    std::size_t epochs = 10;
    std::size_t batch_size = 250;
    double validation_fraction = 0.1;
    std::size_t num_basis = 10;
    std::uint64_t seed = 1;
};

void validate_bench_config(const BenchConfig& cfg);

struct BenchRow {
    std::string kind;
    std::size_t levels = 0;
    std::size_t n = 0;
    std::size_t peak_batch_bytes = 0;   // tracked allocations inside the training loop
    std::size_t param_state_bytes = 0;  // parameters, gradient and optimizer state
    double wall_seconds = 0.0;
};

std::vector<BenchRow> bench_memory(const BenchConfig& cfg);

/// Largest peak ratio between the biggest and smallest level count (at fixed
/// kind and N), and between the biggest and smallest N (at fixed kind and levels).
struct BenchSummary {
    double level_ratio = 0.0;
    double n_ratio = 0.0;
};
BenchSummary summarize(const std::vector<BenchRow>& rows);

std::string format_bench_csv(const std::vector<BenchRow>& rows);

} // namespace fastr
