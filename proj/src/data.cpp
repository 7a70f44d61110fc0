#include "fastr/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_map>

#include "fastr/errors.hpp"
#include "fastr/io.hpp"

namespace fastr {

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

} // namespace

std::int32_t CategoricalColumn::code_of(const std::string& level) const {
    for (std::size_t i = 0; i < levels.size(); ++i)
        if (levels[i] == level) return static_cast<std::int32_t>(i);
    return unseen_level;
}

Dataset::Dataset(std::string outcome_name, std::vector<double> outcome,
                 std::vector<NumericColumn> numeric, std::vector<CategoricalColumn> categorical)
    : outcome_name_(std::move(outcome_name)),
      outcome_(std::move(outcome)),
      numeric_(std::move(numeric)),
      categorical_(std::move(categorical)) {
    std::optional<std::size_t> n;
    auto check = [&](std::size_t len, const std::string& name) {
        if (!n) n = len;
        if (*n != len) {
            throw DataError("column '" + name + "' has " + std::to_string(len) +
                            " rows, expected " + std::to_string(*n));
        }
    };
    if (!outcome_name_.empty()) check(outcome_.size(), outcome_name_);
    for (const auto& c : numeric_) check(c.values.size(), c.name);
    for (const auto& c : categorical_) {
        check(c.codes.size(), c.name);
        for (std::size_t r = 0; r < c.codes.size(); ++r) {
            const auto code = c.codes[r];
            if (code != unseen_level && (code < 0 || static_cast<std::size_t>(code) >= c.levels.size())) {
                throw DataError("column '" + c.name + "' row " + std::to_string(r) +
                                ": code out of range");
            }
        }
    }
    rows_ = n.value_or(0);
}

std::optional<std::size_t> Dataset::numeric_index(const std::string& name) const {
    for (std::size_t i = 0; i < numeric_.size(); ++i)
        if (numeric_[i].name == name) return i;
    return std::nullopt;
}

std::optional<std::size_t> Dataset::categorical_index(const std::string& name) const {
    for (std::size_t i = 0; i < categorical_.size(); ++i)
        if (categorical_[i].name == name) return i;
    return std::nullopt;
}

const NumericColumn& Dataset::numeric(const std::string& name) const {
    const auto i = numeric_index(name);
    if (!i) throw DataError("numeric column '" + name + "' is missing");
    return numeric_[*i];
}

const CategoricalColumn& Dataset::categorical(const std::string& name) const {
    const auto i = categorical_index(name);
    if (!i) throw DataError("categorical column '" + name + "' is missing");
    return categorical_[*i];
}

Dataset Dataset::recoded(const std::vector<CategoricalColumn>& dictionaries) const {
    std::vector<CategoricalColumn> cats;
    cats.reserve(categorical_.size());
    for (const auto& col : categorical_) {
        auto dict = std::find_if(dictionaries.begin(), dictionaries.end(),
                                 [&](const CategoricalColumn& d) { return d.name == col.name; });
        if (dict == dictionaries.end()) {
            cats.push_back(col);
            continue;
        }
        std::vector<std::int32_t> translate(col.levels.size());
        for (std::size_t l = 0; l < col.levels.size(); ++l) translate[l] = dict->code_of(col.levels[l]);
        CategoricalColumn out{col.name, {}, dict->levels};
        out.codes.resize(col.codes.size());
        for (std::size_t r = 0; r < col.codes.size(); ++r) {
            out.codes[r] = col.codes[r] == unseen_level ? unseen_level : translate[col.codes[r]];
        }
        cats.push_back(std::move(out));
    }
    return Dataset(outcome_name_, outcome_, numeric_, std::move(cats));
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
    std::vector<double> y;
    if (has_outcome()) {
        y.reserve(rows.size());
        for (auto r : rows) y.push_back(outcome_[r]);
    }
    std::vector<NumericColumn> num;
    for (const auto& c : numeric_) {
        NumericColumn out{c.name, {}};
        out.values.reserve(rows.size());
        for (auto r : rows) out.values.push_back(c.values[r]);
        num.push_back(std::move(out));
    }
    std::vector<CategoricalColumn> cat;
    for (const auto& c : categorical_) {
        CategoricalColumn out{c.name, {}, c.levels};
        out.codes.reserve(rows.size());
        for (auto r : rows) out.codes.push_back(c.codes[r]);
        cat.push_back(std::move(out));
    }
    return Dataset(outcome_name_, std::move(y), std::move(num), std::move(cat));
}

Dataset parse_csv(const std::string& text, const Schema& schema, bool require_outcome,
                  const std::string& source) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw DataError(source + ": missing header row");
    const auto header = split_fields(line);
    std::unordered_map<std::string, std::size_t> position;
    for (std::size_t i = 0; i < header.size(); ++i) position.emplace(std::string(trim(header[i])), i);

    auto locate = [&](const std::string& name) -> std::size_t {
        auto it = position.find(name);
        if (it == position.end()) throw DataError(source + ": column '" + name + "' not found in header");
        return it->second;
    };

    std::optional<std::size_t> outcome_pos;
    if (!schema.outcome.empty()) {
        if (position.count(schema.outcome)) {
            outcome_pos = position.at(schema.outcome);
        } else if (require_outcome) {
            throw DataError(source + ": outcome column '" + schema.outcome + "' not found in header");
        }
    } else if (require_outcome) {
        throw DataError(source + ": schema does not name an outcome column");
    }
    std::vector<std::size_t> num_pos;
    for (const auto& n : schema.numeric) num_pos.push_back(locate(n));
    std::vector<std::size_t> cat_pos;
    for (const auto& c : schema.categorical) cat_pos.push_back(locate(c));

    std::vector<double> y;
    std::vector<NumericColumn> num;
    for (const auto& n : schema.numeric) num.push_back({n, {}});
    std::vector<CategoricalColumn> cat;
    for (const auto& c : schema.categorical) cat.push_back({c, {}, {}});
    std::vector<std::unordered_map<std::string, std::int32_t>> dicts(cat.size());

    std::size_t line_no = 1;
    std::size_t row = 0;
    auto parse_number = [&](std::string_view field, const std::string& col) {
        field = trim(field);
        if (field.empty() || field == "NA" || field == "NaN" || field == "nan") {
            throw DataError(source + ": missing value in column '" + col + "' at row " +
                            std::to_string(row) + " (line " + std::to_string(line_no) + ")");
        }
        double v = 0.0;
        const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
        if (res.ec != std::errc() || res.ptr != field.data() + field.size() || !std::isfinite(v)) {
            throw DataError(source + ": unparseable numeric value '" + std::string(field) +
                            "' in column '" + col + "' at row " + std::to_string(row) + " (line " +
                            std::to_string(line_no) + ")");
        }
        return v;
    };

    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_fields(line);
        if (fields.size() != header.size()) {
            throw DataError(source + ": row " + std::to_string(row) + " (line " +
                            std::to_string(line_no) + ") has " + std::to_string(fields.size()) +
                            " fields, header has " + std::to_string(header.size()));
        }
        if (outcome_pos) y.push_back(parse_number(fields[*outcome_pos], schema.outcome));
        for (std::size_t k = 0; k < num_pos.size(); ++k)
            num[k].values.push_back(parse_number(fields[num_pos[k]], num[k].name));
        for (std::size_t k = 0; k < cat_pos.size(); ++k) {
            const auto field = trim(fields[cat_pos[k]]);
            if (field.empty()) {
                throw DataError(source + ": missing value in column '" + cat[k].name + "' at row " +
                                std::to_string(row) + " (line " + std::to_string(line_no) + ")");
            }
            std::string level(field);
            auto [it, inserted] =
                dicts[k].emplace(level, static_cast<std::int32_t>(cat[k].levels.size()));
            if (inserted) cat[k].levels.push_back(level);
            cat[k].codes.push_back(it->second);
        }
        ++row;
    }
    return Dataset(outcome_pos ? schema.outcome : std::string(), std::move(y), std::move(num),
                   std::move(cat));
}

Dataset read_csv(const std::string& path, const Schema& schema, bool require_outcome) {
    return parse_csv(read_file(path), schema, require_outcome, path);
}

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string format_csv(const Dataset& data) {
    std::string out;
    std::vector<std::string> names;
    if (data.has_outcome()) names.push_back(data.outcome_name());
    for (const auto& c : data.numeric_columns()) names.push_back(c.name);
    for (const auto& c : data.categorical_columns()) names.push_back(c.name);
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (i) out += ',';
        out += names[i];
    }
    out += '\n';
    for (std::size_t r = 0; r < data.rows(); ++r) {
        bool first = true;
        auto sep = [&] {
            if (!first) out += ',';
            first = false;
        };
        if (data.has_outcome()) {
            sep();
            out += format_double(data.outcome()[r]);
        }
        for (const auto& c : data.numeric_columns()) {
            sep();
            out += format_double(c.values[r]);
        }
        for (const auto& c : data.categorical_columns()) {
            sep();
            const auto code = c.codes[r];
            out += code == unseen_level ? std::string("?") : c.levels[code];
        }
        out += '\n';
    }
    return out;
}

void write_csv(const Dataset& data, const std::string& path) {
    write_file_atomic(path, format_csv(data));
}

EncodedBatch encode_batch(const Dataset& data, std::span<const std::size_t> rows,
                          std::pmr::memory_resource* mr) {
    EncodedBatch b(mr);
    b.rows.assign(rows.begin(), rows.end());
    b.codes.resize(data.categorical_columns().size());
    for (std::size_t k = 0; k < b.codes.size(); ++k) {
        const auto& src = data.categorical_columns()[k].codes;
        auto& dst = b.codes[k];
        dst.resize(rows.size());
        for (std::size_t m = 0; m < rows.size(); ++m) dst[m] = src[rows[m]];
    }
    b.numeric.resize(data.numeric_columns().size());
    for (std::size_t k = 0; k < b.numeric.size(); ++k) {
        const auto& src = data.numeric_columns()[k].values;
        auto& dst = b.numeric[k];
        dst.resize(rows.size());
        for (std::size_t m = 0; m < rows.size(); ++m) dst[m] = src[rows[m]];
    }
    if (data.has_outcome()) {
        b.outcome.resize(rows.size());
        for (std::size_t m = 0; m < rows.size(); ++m) b.outcome[m] = data.outcome()[rows[m]];
    }
    return b;
}

BatchPlan::BatchPlan(std::vector<std::size_t> rows, std::size_t batch_size, std::uint64_t seed)
    : order_(std::move(rows)), batch_size_(batch_size), seed_(seed) {
    if (batch_size_ == 0) throw ConfigError("batch size must be >= 1");
}

std::size_t BatchPlan::batches_per_epoch() const noexcept {
    return (order_.size() + batch_size_ - 1) / batch_size_;
}

void BatchPlan::shuffle(std::size_t epoch) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32),
                      static_cast<std::uint32_t>(epoch), 0x5eedu};
    std::mt19937_64 rng(seq);
    std::shuffle(order_.begin(), order_.end(), rng);
}

std::span<const std::size_t> BatchPlan::batch(std::size_t b) const {
    const std::size_t start = b * batch_size_;
    const std::size_t end = std::min(order_.size(), start + batch_size_);
    return std::span<const std::size_t>(order_).subspan(start, end - start);
}

std::vector<std::vector<std::size_t>> epoch_batches(BatchPlan& plan, std::size_t epoch) {
    plan.shuffle(epoch);
    std::vector<std::vector<std::size_t>> out;
    for (std::size_t b = 0; b < plan.batches_per_epoch(); ++b) {
        auto s = plan.batch(b);
        out.emplace_back(s.begin(), s.end());
    }
    return out;
}

} // namespace fastr
