#include "doctest.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include "fastr/data.hpp"
#include "fastr/errors.hpp"
#include "fastr/memory.hpp"
#include "fixtures.hpp"

using namespace fastr;

namespace {

Schema schema_xyg() { return {"y", {"x"}, {"g"}}; }

bool same(const Dataset& a, const Dataset& b) {
    if (a.rows() != b.rows() || a.outcome_name() != b.outcome_name()) return false;
    if (!std::equal(a.outcome().begin(), a.outcome().end(), b.outcome().begin(), b.outcome().end())) return false;
    if (a.numeric_columns().size() != b.numeric_columns().size()) return false;
    for (std::size_t k = 0; k < a.numeric_columns().size(); ++k) {
        if (a.numeric_columns()[k].name != b.numeric_columns()[k].name) return false;
        if (a.numeric_columns()[k].values != b.numeric_columns()[k].values) return false;
    }
    if (a.categorical_columns().size() != b.categorical_columns().size()) return false;
    for (std::size_t k = 0; k < a.categorical_columns().size(); ++k) {
        const auto& ca = a.categorical_columns()[k];
        const auto& cb = b.categorical_columns()[k];
        if (ca.name != cb.name || ca.codes != cb.codes || ca.levels != cb.levels) return false;
    }
    return true;
}

} // namespace

TEST_CASE("categorical codes follow first appearance") {
    auto d = parse_csv("y,x,g\n1,0.5,a\n2,0.25,b\n3,1e-3,a\n", schema_xyg());
    CHECK(d.rows() == 3);
    const auto& g = d.categorical("g");
    CHECK(g.codes == std::vector<std::int32_t>{0, 1, 0});
    CHECK(g.levels == std::vector<std::string>{"a", "b"});
    CHECK(d.numeric("x").values[2] == 1e-3);
    for (const auto& level : g.levels) CHECK(g.levels[static_cast<std::size_t>(g.code_of(level))] == level);
}

TEST_CASE("ingestion errors name the column and row") {
    auto message = [](const std::string& text) {
        try {
            parse_csv(text, schema_xyg());
        } catch (const DataError& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    CHECK(message("x,g\n0.5,a\n").find("'y'") != std::string::npos);
    CHECK(message("y,x,g\n1,abc,a\n").find("'x'") != std::string::npos);
    const auto missing = message("y,x,g\n1,0.5,a\n2,,b\n");
    CHECK(missing.find("'x'") != std::string::npos);
    CHECK(missing.find("row 1") != std::string::npos);
    CHECK(message("y,x,g\n1,0.5\n").size() > 0);
    CHECK(message("").find("header") != std::string::npos);
}

TEST_CASE("unused columns are ignored and the outcome may be optional") {
    auto d = parse_csv("extra,y,x,g\nzz,1,0.5,a\n", schema_xyg());
    CHECK(d.numeric_columns().size() == 1);
    auto no_y = parse_csv("x,g\n0.5,a\n", schema_xyg(), false);
    CHECK_FALSE(no_y.has_outcome());
    CHECK(no_y.rows() == 1);
}

TEST_CASE("csv round trip preserves the dataset exactly") {
    std::mt19937_64 rng(3);
    Dataset d = fixture::mixed_dataset(200, 5, 7, FamilyKind::gaussian, 11);
    Schema s{"y", {"x", "z", "t"}, {"i", "u"}};
    auto text = format_csv(d);
    auto back = parse_csv(text, s);
    CHECK(same(back, parse_csv(format_csv(back), s)));
    for (std::size_t k = 0; k < 3; ++k) CHECK(back.numeric_columns()[k].values == d.numeric_columns()[k].values);
    CHECK(std::equal(back.outcome().begin(), back.outcome().end(), d.outcome().begin()));

    auto path = (std::filesystem::temp_directory_path() / "fastr_roundtrip.csv").string();
    write_csv(back, path);
    CHECK(same(read_csv(path, s), back));
    std::filesystem::remove(path);

    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 1e300, 123456789.123456789}) {
        CHECK(std::stod(format_double(v)) == v);
    }
}

TEST_CASE("recoding through frozen dictionaries") {
    auto train = parse_csv("y,x,g\n1,0.5,a\n2,0.25,b\n", schema_xyg());
    auto test = parse_csv("y,x,g\n1,0.5,b\n2,0.25,c\n3,0.1,a\n", schema_xyg());
    auto r = test.recoded({train.categorical("g")});
    CHECK(r.categorical("g").codes == std::vector<std::int32_t>{1, unseen_level, 0});
    CHECK(r.categorical("g").levels == std::vector<std::string>{"a", "b"});
}

TEST_CASE("batch plan") {
    std::vector<std::size_t> rows(10);
    std::iota(rows.begin(), rows.end(), 0);
    BatchPlan plan(rows, 4, 9);
    auto batches = epoch_batches(plan, 0);
    REQUIRE(batches.size() == 3);
    CHECK(batches[0].size() == 4);
    CHECK(batches[1].size() == 4);
    CHECK(batches[2].size() == 2);

    BatchPlan again(rows, 4, 9);
    CHECK(epoch_batches(again, 0) == batches);
    CHECK(epoch_batches(again, 1) != batches);
    CHECK_THROWS_AS(BatchPlan(rows, 0, 1), ConfigError);
}

TEST_CASE("batches cover every row once and invert to the outcome") {
    Dataset d = fixture::mixed_dataset(103, 3, 4, FamilyKind::gaussian, 5);
    std::vector<std::size_t> rows(d.rows());
    std::iota(rows.begin(), rows.end(), 0);
    BatchPlan plan(rows, 16, 77);
    for (std::size_t epoch = 0; epoch < 3; ++epoch) {
        std::vector<double> concatenated;
        std::vector<std::size_t> order;
        for (const auto& b : epoch_batches(plan, epoch)) {
            EncodedBatch eb = encode_batch(d, b);
            concatenated.insert(concatenated.end(), eb.outcome.begin(), eb.outcome.end());
            order.insert(order.end(), eb.rows.begin(), eb.rows.end());
        }
        auto sorted = order;
        std::sort(sorted.begin(), sorted.end());
        CHECK(sorted == rows);
        std::vector<double> restored(d.rows());
        for (std::size_t k = 0; k < order.size(); ++k) restored[order[k]] = concatenated[k];
        CHECK(std::equal(restored.begin(), restored.end(), d.outcome().begin()));
    }
}

TEST_CASE("encoded batch holds code vectors only") {
    auto bytes_for = [](std::size_t levels, std::size_t n) {
        Dataset d = fixture::mixed_dataset(n, levels, levels, FamilyKind::gaussian, 1);
        std::vector<std::size_t> rows(50);
        std::iota(rows.begin(), rows.end(), 0);
        MemoryTracker tracker;
        {
            EncodedBatch b = encode_batch(d, rows, &tracker);
            CHECK(b.codes.size() == 2);
            CHECK(b.codes[0].size() == 50);
        }
        return tracker.peak_bytes();
    };
    const auto base = bytes_for(5, 500);
    CHECK(bytes_for(80, 500) == base);
    CHECK(bytes_for(5, 5000) == base);
}
