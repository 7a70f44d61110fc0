#include "fastr/fastr.h"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <new>
#include <string>

#include "json.hpp"

#include "fastr/bench.hpp"
#include "fastr/config.hpp"
#include "fastr/errors.hpp"
#include "fastr/evaluate.hpp"
#include "fastr/fit.hpp"
#include "fastr/io.hpp"
#include "fastr/model_io.hpp"
#include "fastr/simulate.hpp"

struct fastr_config {
    fastr::RunConfig cfg;
};

struct fastr_dataset {
    fastr::Dataset data;
};

struct fastr_model {
    fastr::Model model;
};

namespace {

using json = nlohmann::json;

thread_local std::string last_error;

fastr_status fail(fastr_status status, const std::string& message) {
    last_error = message;
    return status;
}

template <class F>
fastr_status guarded(F&& body) {
    try {
        body();
        return FASTR_OK;
    } catch (const fastr::Error& e) {
        switch (e.kind()) {
        case fastr::ErrorKind::validation: return fail(FASTR_ERROR_VALIDATION, e.what());
        case fastr::ErrorKind::numeric: return fail(FASTR_ERROR_NUMERIC, e.what());
        default: return fail(FASTR_ERROR, e.what());
        }
    } catch (const std::bad_alloc&) {
        return fail(FASTR_ERROR, "out of memory");
    } catch (const std::exception& e) {
        return fail(FASTR_ERROR, e.what());
    } catch (...) {
        return fail(FASTR_ERROR, "unknown error");
    }
}

char* dup_string(const std::string& s) {
    char* out = new char[s.size() + 1];
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

void set_json(char** out, const json& j) {
    if (out) *out = dup_string(j.dump(2));
}

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json report_json(const fastr::TrainReport& r) {
    json epochs = json::array();
    for (const auto& e : r.epochs) {
        epochs.push_back({{"epoch", e.epoch},
                          {"train_loss", finite_or_null(e.train_loss)},
                          {"validation_loss", finite_or_null(e.validation_loss)},
                          {"peak_bytes", e.peak_bytes}});
    }
    json lambdas = json::object();
    for (const auto& [name, value] : r.lambdas) {
        lambdas[name] = {{"lambda", value}, {"at_upper_bound", r.lambda_at_bound.at(name)}};
    }
    return {{"epochs", epochs},
            {"best_epoch", r.best_epoch},
            {"best_validation_loss", finite_or_null(r.best_validation_loss)},
            {"has_validation", r.has_validation},
            {"stop_reason", r.stop_reason},
            {"steps", r.steps},
            {"wall_seconds", r.wall_seconds},
            {"peak_batch_bytes", r.peak_batch_bytes},
            {"param_state_bytes", r.param_state_bytes},
            {"train_rows", r.train_rows},
            {"validation_rows", r.validation_rows},
            {"final_train_loss", r.epochs.empty() ? json(nullptr) : finite_or_null(r.epochs.back().train_loss)},
            {"lambdas", lambdas}};
}

#define FASTR_REQUIRE(cond, what) \
    if (!(cond)) return fail(FASTR_ERROR_INVALID_ARGUMENT, what)

} // namespace

extern "C" {

const char* fastr_version(void) { return "0.1.0"; }

const char* fastr_last_error(void) { return last_error.c_str(); }

void fastr_string_free(char* s) { delete[] s; }

fastr_status fastr_config_parse(const char* text, fastr_config** out) {
    FASTR_REQUIRE(text && out, "fastr_config_parse: NULL argument");
    *out = nullptr;
    return guarded([&] { *out = new fastr_config{fastr::parse_config(text)}; });
}

fastr_status fastr_config_load(const char* path, fastr_config** out) {
    FASTR_REQUIRE(path && out, "fastr_config_load: NULL argument");
    *out = nullptr;
    return guarded([&] { *out = new fastr_config{fastr::load_config(path)}; });
}

fastr_status fastr_config_set_seed(fastr_config* cfg, uint64_t seed) {
    FASTR_REQUIRE(cfg, "fastr_config_set_seed: NULL config");
    fastr::override_seed(cfg->cfg, seed);
    return FASTR_OK;
}

fastr_status fastr_config_grid_size(const fastr_config* cfg, size_t* grid_size) {
    FASTR_REQUIRE(cfg && grid_size, "fastr_config_grid_size: NULL argument");
    *grid_size = cfg->cfg.grid_size;
    return FASTR_OK;
}

void fastr_config_free(fastr_config* cfg) { delete cfg; }

fastr_status fastr_simulate(const fastr_config* cfg, const char* data_path, const char* truth_path,
                            char** summary_json) {
    FASTR_REQUIRE(cfg && data_path, "fastr_simulate: NULL argument");
    return guarded([&] {
        if (!cfg->cfg.simulate) throw fastr::ConfigError("config has no 'simulate' section");
        const fastr::Simulation sim = fastr::generate(*cfg->cfg.simulate);
        const std::string data_csv = fastr::format_csv(sim.data);
        const std::string truth_csv = fastr::format_csv(fastr::truth_dataset(sim));
        fastr::write_file_atomic(data_path, data_csv);
        if (truth_path) fastr::write_file_atomic(truth_path, truth_csv);
        json levels = json::object();
        for (const auto& c : sim.data.categorical_columns()) levels[c.name] = c.level_count();
        json terms = json::array();
        for (const auto& t : sim.truth.terms) terms.push_back(t.name);
        set_json(summary_json, {{"rows", sim.data.rows()},
                                {"data", data_path},
                                {"truth", truth_path ? json(truth_path) : json(nullptr)},
                                {"family", std::string(fastr::family_name(cfg->cfg.simulate->family))},
                                {"levels", levels},
                                {"terms", terms}});
    });
}

fastr_status fastr_dataset_read_csv(const fastr_config* cfg, const char* path, fastr_dataset** out) {
    FASTR_REQUIRE(cfg && path && out, "fastr_dataset_read_csv: NULL argument");
    *out = nullptr;
    return guarded([&] { *out = new fastr_dataset{fastr::read_csv(path, cfg->cfg.schema, true)}; });
}

fastr_status fastr_model_read_csv(const fastr_model* model, const char* path, fastr_dataset** out) {
    FASTR_REQUIRE(model && path && out, "fastr_model_read_csv: NULL argument");
    *out = nullptr;
    return guarded([&] { *out = new fastr_dataset{fastr::read_csv(path, model->model.schema(), false)}; });
}

fastr_status fastr_dataset_rows(const fastr_dataset* data, size_t* rows) {
    FASTR_REQUIRE(data && rows, "fastr_dataset_rows: NULL argument");
    *rows = data->data.rows();
    return FASTR_OK;
}

void fastr_dataset_free(fastr_dataset* data) { delete data; }

fastr_status fastr_fit(const fastr_config* cfg, const fastr_dataset* data, fastr_model** out, char** report) {
    FASTR_REQUIRE(cfg && data && out, "fastr_fit: NULL argument");
    *out = nullptr;
    return guarded([&] {
        if (!cfg->cfg.has_model) throw fastr::ConfigError("config has no 'model' section");
        fastr::FitResult res = fastr::train(cfg->cfg.model, data->data, cfg->cfg.fit);
        json r = report_json(res.report);
        *out = new fastr_model{std::move(res.model)};
        set_json(report, r);
    });
}

fastr_status fastr_model_save(const fastr_model* model, const char* path) {
    FASTR_REQUIRE(model && path, "fastr_model_save: NULL argument");
    return guarded([&] { fastr::save_model(model->model, path); });
}

fastr_status fastr_model_load(const char* path, fastr_model** out) {
    FASTR_REQUIRE(path && out, "fastr_model_load: NULL argument");
    *out = nullptr;
    return guarded([&] { *out = new fastr_model{fastr::load_model(path)}; });
}

void fastr_model_free(fastr_model* model) { delete model; }

fastr_status fastr_predict(const fastr_model* model, const fastr_dataset* data, double* out, size_t capacity,
                           size_t* unseen_rows) {
    FASTR_REQUIRE(model && data && out, "fastr_predict: NULL argument");
    FASTR_REQUIRE(capacity >= data->data.rows(), "fastr_predict: output buffer smaller than the row count");
    return guarded([&] {
        const fastr::Prediction p = model->model.predict(data->data);
        std::copy(p.mean.begin(), p.mean.end(), out);
        if (unseen_rows) *unseen_rows = p.unseen_rows;
    });
}

fastr_status fastr_predict_to_csv(const fastr_model* model, const fastr_dataset* data, const char* path,
                                  size_t* unseen_rows) {
    FASTR_REQUIRE(model && data && path, "fastr_predict_to_csv: NULL argument");
    return guarded([&] {
        const fastr::Prediction p = model->model.predict(data->data);
        std::string csv = "row,yhat\n";
        for (std::size_t r = 0; r < p.mean.size(); ++r) {
            csv += std::to_string(r) + "," + fastr::format_double(p.mean[r]) + "\n";
        }
        fastr::write_file_atomic(path, csv);
        if (unseen_rows) *unseen_rows = p.unseen_rows;
    });
}

fastr_status fastr_export_effects(const fastr_model* model, size_t grid_size, const char* out_dir,
                                  char** paths_json) {
    FASTR_REQUIRE(model && out_dir, "fastr_export_effects: NULL argument");
    return guarded([&] {
        const auto paths = fastr::write_effect_tables(model->model, grid_size ? grid_size : 100, out_dir);
        set_json(paths_json, paths);
    });
}

fastr_status fastr_evaluate(const fastr_model* model, const char* truth_path, const char* out_dir,
                            size_t grid_size, char** table_json) {
    FASTR_REQUIRE(model && truth_path, "fastr_evaluate: NULL argument");
    return guarded([&] {
        const fastr::Dataset truth = fastr::read_truth_csv(model->model, truth_path);
        const auto rows = fastr::evaluate_terms(model->model, truth);
        if (out_dir) {
            fastr::write_effect_tables(model->model, grid_size ? grid_size : 100, out_dir);
            fastr::write_file_atomic((std::filesystem::path(out_dir) / "mise.csv").string(),
                                     fastr::format_evaluation_csv(rows));
        }
        json table = json::array();
        for (const auto& r : rows) {
            table.push_back({{"term", r.term}, {"kind", r.kind}, {"mise", r.mise}, {"groups", r.groups}});
        }
        set_json(table_json, table);
    });
}

fastr_status fastr_bench_memory(const fastr_config* cfg, const char* out_path, char** table_json) {
    FASTR_REQUIRE(cfg, "fastr_bench_memory: NULL config");
    return guarded([&] {
        const auto rows = fastr::bench_memory(cfg->cfg.bench);
        if (out_path) fastr::write_file_atomic(out_path, fastr::format_bench_csv(rows));
        const auto summary = fastr::summarize(rows);
        json table = json::array();
        for (const auto& r : rows) {
            table.push_back({{"kind", r.kind},
                             {"levels", r.levels},
                             {"n", r.n},
                             {"peak_batch_bytes", r.peak_batch_bytes},
                             {"param_state_bytes", r.param_state_bytes},
                             {"wall_seconds", r.wall_seconds}});
        }
        set_json(table_json, {{"rows", table}, {"level_ratio", summary.level_ratio}, {"n_ratio", summary.n_ratio}});
    });
}

} // extern "C"
