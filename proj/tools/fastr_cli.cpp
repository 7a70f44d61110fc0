#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "fastr/fastr.h"

namespace {

using json = nlohmann::json;

struct Options {
    std::string config;
    std::string data;
    std::string model;
    std::string out;
    std::optional<std::uint64_t> seed;
};

int exit_code(fastr_status s) { return s == FASTR_ERROR_INVALID_ARGUMENT ? 2 : static_cast<int>(s); }

int report_failure(fastr_status s) {
    std::cerr << "error: " << fastr_last_error() << "\n";
    return exit_code(s);
}

struct Deleter {
    void operator()(fastr_config* p) const { fastr_config_free(p); }
    void operator()(fastr_dataset* p) const { fastr_dataset_free(p); }
    void operator()(fastr_model* p) const { fastr_model_free(p); }
};
template <class T>
using Handle = std::unique_ptr<T, Deleter>;

/// Takes ownership of a library-allocated string.
std::string take(char* s) {
    std::string out = s ? s : "";
    fastr_string_free(s);
    return out;
}

bool write_text(const std::string& path, const std::string& text) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    std::error_code ec;
    if (target.has_parent_path()) fs::create_directories(target.parent_path(), ec);
    fs::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out << text;
        if (!out) {
            std::cerr << "error: cannot write '" << path << "'\n";
            return false;
        }
    }
    fs::rename(tmp, target, ec);
    if (ec) {
        std::cerr << "error: cannot write '" << path << "': " << ec.message() << "\n";
        return false;
    }
    return true;
}

fastr_status load_config(const Options& o, Handle<fastr_config>& cfg) {
    fastr_config* raw = nullptr;
    const fastr_status s = fastr_config_load(o.config.c_str(), &raw);
    cfg.reset(raw);
    if (s == FASTR_OK && o.seed) fastr_config_set_seed(cfg.get(), *o.seed);
    return s;
}

std::string truth_path_for(const std::string& data_path) {
    std::filesystem::path p(data_path);
    return (p.parent_path() / (p.stem().string() + ".truth.csv")).string();
}

int cmd_simulate(const Options& o) {
    Handle<fastr_config> cfg;
    if (auto s = load_config(o, cfg); s != FASTR_OK) return report_failure(s);
    const std::string truth = truth_path_for(o.out);
    char* summary = nullptr;
    if (auto s = fastr_simulate(cfg.get(), o.out.c_str(), truth.c_str(), &summary); s != FASTR_OK) {
        return report_failure(s);
    }
    const json j = json::parse(take(summary));
    std::cout << "rows: " << j["rows"] << "\n";
    for (const auto& [name, count] : j["levels"].items()) std::cout << "levels " << name << ": " << count << "\n";
    std::cout << "data: " << o.out << "\ntruth: " << truth << "\n";
    return 0;
}

int cmd_fit(const Options& o) {
    Handle<fastr_config> cfg;
    if (auto s = load_config(o, cfg); s != FASTR_OK) return report_failure(s);
    fastr_dataset* raw_data = nullptr;
    const fastr_status ds = fastr_dataset_read_csv(cfg.get(), o.data.c_str(), &raw_data);
    Handle<fastr_dataset> data(raw_data);
    if (ds != FASTR_OK) return report_failure(ds);

    fastr_model* raw_model = nullptr;
    char* report = nullptr;
    const fastr_status fs = fastr_fit(cfg.get(), data.get(), &raw_model, &report);
    Handle<fastr_model> model(raw_model);
    if (fs != FASTR_OK) return report_failure(fs);
    const std::string report_text = take(report);

    if (auto s = fastr_model_save(model.get(), o.model.c_str()); s != FASTR_OK) return report_failure(s);
    const std::string report_path = o.out.empty() ? o.model + ".report.json" : o.out;
    if (!write_text(report_path, report_text + "\n")) return 1;

    const json r = json::parse(report_text);
    const auto& last = r["epochs"].back();
    std::cout << "epochs: " << r["epochs"].size() << " (best " << r["best_epoch"] << ")\n";
    std::cout << "train loss: " << last["train_loss"] << "\n";
    std::cout << "validation loss: " << r["best_validation_loss"] << "\n";
    std::cout << "stop reason: " << r["stop_reason"].get<std::string>() << "\n";
    std::cout << "model: " << o.model << "\nreport: " << report_path << "\n";
    return 0;
}

fastr_status load_model(const Options& o, Handle<fastr_model>& model) {
    fastr_model* raw = nullptr;
    const fastr_status s = fastr_model_load(o.model.c_str(), &raw);
    model.reset(raw);
    return s;
}

int cmd_predict(const Options& o) {
    Handle<fastr_model> model;
    if (auto s = load_model(o, model); s != FASTR_OK) return report_failure(s);
    fastr_dataset* raw = nullptr;
    const fastr_status ds = fastr_model_read_csv(model.get(), o.data.c_str(), &raw);
    Handle<fastr_dataset> data(raw);
    if (ds != FASTR_OK) return report_failure(ds);
    std::size_t unseen = 0;
    if (auto s = fastr_predict_to_csv(model.get(), data.get(), o.out.c_str(), &unseen); s != FASTR_OK) {
        return report_failure(s);
    }
    std::size_t rows = 0;
    fastr_dataset_rows(data.get(), &rows);
    std::cout << "rows: " << rows << "\n";
    std::cout << "unseen-level rows: " << unseen << "\n";
    if (unseen > 0) std::cerr << "warning: " << unseen << " rows contain category levels not seen in training\n";
    return 0;
}

int cmd_evaluate(const Options& o) {
    std::size_t grid = 0;
    if (!o.config.empty()) {
        Handle<fastr_config> cfg;
        if (auto s = load_config(o, cfg); s != FASTR_OK) return report_failure(s);
        fastr_config_grid_size(cfg.get(), &grid);
    }
    Handle<fastr_model> model;
    if (auto s = load_model(o, model); s != FASTR_OK) return report_failure(s);
    char* table = nullptr;
    const char* dir = o.out.empty() ? nullptr : o.out.c_str();
    if (auto s = fastr_evaluate(model.get(), o.data.c_str(), dir, grid, &table); s != FASTR_OK) {
        return report_failure(s);
    }
    const json t = json::parse(take(table));
    std::printf("%-24s %-20s %14s %7s\n", "term", "kind", "mise", "groups");
    for (const auto& r : t) {
        std::printf("%-24s %-20s %14.6g %7zu\n", r["term"].get<std::string>().c_str(),
                    r["kind"].get<std::string>().c_str(), r["mise"].get<double>(), r["groups"].get<std::size_t>());
    }
    if (dir) std::cout << "effect tables: " << o.out << "\n";
    return 0;
}

int cmd_bench(const Options& o) {
    Handle<fastr_config> cfg;
    if (auto s = load_config(o, cfg); s != FASTR_OK) return report_failure(s);
    char* table = nullptr;
    const char* out = o.out.empty() ? nullptr : o.out.c_str();
    if (auto s = fastr_bench_memory(cfg.get(), out, &table); s != FASTR_OK) return report_failure(s);
    const json t = json::parse(take(table));
    std::printf("%-8s %6s %6s %16s %16s %10s\n", "kind", "levels", "n", "peak_batch_B", "param_state_B", "seconds");
    for (const auto& r : t["rows"]) {
        std::printf("%-8s %6zu %6zu %16zu %16zu %10.3f\n", r["kind"].get<std::string>().c_str(),
                    r["levels"].get<std::size_t>(), r["n"].get<std::size_t>(),
                    r["peak_batch_bytes"].get<std::size_t>(), r["param_state_bytes"].get<std::size_t>(),
                    r["wall_seconds"].get<double>());
    }
    std::printf("peak ratio across levels: %.4f\npeak ratio across n: %.4f\n", t["level_ratio"].get<double>(),
                t["n_ratio"].get<double>());
    if (out) std::cout << "table: " << o.out << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Factorized structured regression"};
    app.require_subcommand(1);
    Options o;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--seed", o.seed, "Override the seed of the config");
    };

    auto* sim = app.add_subcommand("simulate", "Simulate data and truth tables");
    sim->add_option("--config", o.config, "Config file")->required();
    sim->add_option("--out", o.out, "Data CSV to write; truth goes to <stem>.truth.csv")->required();
    add_common(sim);

    auto* fit = app.add_subcommand("fit", "Fit a model");
    fit->add_option("--config", o.config, "Config file")->required();
    fit->add_option("--data", o.data, "Training CSV")->required();
    fit->add_option("--model", o.model, "Model JSON to write")->required();
    fit->add_option("--out", o.out, "Training report JSON (default <model>.report.json)");
    add_common(fit);

    auto* pred = app.add_subcommand("predict", "Predict with a fitted model");
    pred->add_option("--config", o.config, "Config file (unused)");
    pred->add_option("--model", o.model, "Model JSON")->required();
    pred->add_option("--data", o.data, "CSV with the model's features")->required();
    pred->add_option("--out", o.out, "Prediction CSV to write")->required();
    add_common(pred);

    auto* eval = app.add_subcommand("evaluate", "Compare fitted effects with a truth table");
    eval->add_option("--config", o.config, "Config file (evaluate.grid_size)");
    eval->add_option("--model", o.model, "Model JSON")->required();
    eval->add_option("--data", o.data, "Truth CSV written by simulate")->required();
    eval->add_option("--out", o.out, "Directory for effect tables and mise.csv");
    add_common(eval);

    auto* bench = app.add_subcommand("bench-mem", "Memory scaling benchmark");
    bench->add_option("--config", o.config, "Config file (bench section)")->required();
    bench->add_option("--out", o.out, "CSV table to write");
    add_common(bench);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    if (sim->parsed()) return cmd_simulate(o);
    if (fit->parsed()) return cmd_fit(o);
    if (pred->parsed()) return cmd_predict(o);
    if (eval->parsed()) return cmd_evaluate(o);
    if (bench->parsed()) return cmd_bench(o);
    return 2;
}
