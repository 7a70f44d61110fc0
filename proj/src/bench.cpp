#include "fastr/bench.hpp"

#include <algorithm>
#include <map>

#include "fastr/data.hpp"
#include "fastr/errors.hpp"
#include "fastr/fit.hpp"
#include "fastr/simulate.hpp"

namespace fastr {

void validate_bench_config(const BenchConfig& cfg) {
    if (cfg.levels.empty() || cfg.n.empty() || cfg.kinds.empty()) {
        throw ConfigError("bench: levels, n and kinds must be non-empty");
    }
    for (auto l : cfg.levels)
        if (l < 2) throw ConfigError("bench: level counts must be >= 2");
    for (auto n : cfg.n)
        if (n < 2) throw ConfigError("bench: n must be >= 2");
    for (const auto& k : cfg.kinds) {
        if (k != "single" && k != "varying") {
            throw ConfigError("bench: unknown kind '" + k + "' (expected single or varying)");
        }
    }
    if (cfg.epochs < 1) throw ConfigError("bench: epochs must be >= 1");
    if (cfg.batch_size < 1) throw ConfigError("bench: batch_size must be >= 1");
}

std::vector<BenchRow> bench_memory(const BenchConfig& cfg) {
    validate_bench_config(cfg);
    std::vector<BenchRow> rows;
    for (const auto& kind : cfg.kinds) {
        for (auto levels : cfg.levels) {
            for (auto n : cfg.n) {
                DGPSpec dgp;
                dgp.n = n;
                dgp.vc_levels = levels;
                dgp.seed = cfg.seed;
                const Simulation sim = generate(dgp);

                ModelSpec spec;
                spec.terms.push_back({.kind = TermKind::global_bias});
                if (kind == "single") {
                    spec.terms.push_back({.kind = TermKind::categorical_bias, .cat_a = "g"});
                } else {
                    spec.terms.push_back({.kind = TermKind::varying_coefficient,
                                          .cat_a = "g",
                                          .num_a = "tv",
                                          .num_basis = cfg.num_basis});
                }
                FitConfig fit;
                fit.batch_size = cfg.batch_size;
                fit.max_epochs = cfg.epochs;
                fit.validation_fraction = cfg.validation_fraction;
                fit.patience = cfg.epochs;
                fit.seed = cfg.seed;
                const FitResult res = train(spec, sim.data, fit);
                rows.push_back({kind, levels, n, res.report.peak_batch_bytes, res.report.param_state_bytes,
                                res.report.wall_seconds});
            }
        }
    }
    return rows;
}

BenchSummary summarize(const std::vector<BenchRow>& rows) {
    BenchSummary s;
    if (rows.empty()) return s;
    std::size_t lo_l = rows.front().levels, hi_l = lo_l, lo_n = rows.front().n, hi_n = lo_n;
    for (const auto& r : rows) {
        lo_l = std::min(lo_l, r.levels);
        hi_l = std::max(hi_l, r.levels);
        lo_n = std::min(lo_n, r.n);
        hi_n = std::max(hi_n, r.n);
    }
    auto peak = [&](const std::string& kind, std::size_t levels, std::size_t n) -> double {
        for (const auto& r : rows)
            if (r.kind == kind && r.levels == levels && r.n == n) return static_cast<double>(r.peak_batch_bytes);
        return 0.0;
    };
    for (const auto& r : rows) {
        if (r.levels == lo_l) {
            const double a = peak(r.kind, lo_l, r.n);
            const double b = peak(r.kind, hi_l, r.n);
            if (a > 0.0) s.level_ratio = std::max(s.level_ratio, b / a);
        }
        if (r.n == lo_n) {
            const double a = peak(r.kind, r.levels, lo_n);
            const double b = peak(r.kind, r.levels, hi_n);
            if (a > 0.0) s.n_ratio = std::max(s.n_ratio, b / a);
        }
    }
    return s;
}

std::string format_bench_csv(const std::vector<BenchRow>& rows) {
    std::string s = "kind,levels,n,peak_batch_bytes,param_state_bytes,wall_seconds\n";
    for (const auto& r : rows) {
        s += r.kind + "," + std::to_string(r.levels) + "," + std::to_string(r.n) + "," +
             std::to_string(r.peak_batch_bytes) + "," + std::to_string(r.param_state_bytes) + "," +
             format_double(r.wall_seconds) + "\n";
    }
    return s;
}

} // namespace fastr
