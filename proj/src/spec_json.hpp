#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"

#include "fastr/errors.hpp"
#include "fastr/terms.hpp"

namespace fastr::detail {

using json = nlohmann::json;

/// Typed access to a JSON object that remembers which keys were read, so
/// leftover keys can be reported as unknown.
class ObjectReader {
public:
    ObjectReader(const json& j, std::string path);

    bool has(const std::string& key) const { return j_.contains(key); }
    const json& raw(const std::string& key);

    std::optional<std::string> string(const std::string& key);
    std::optional<double> number(const std::string& key);
    std::optional<std::uint64_t> count(const std::string& key);
    std::optional<bool> boolean(const std::string& key);
    std::optional<std::vector<std::string>> strings(const std::string& key);
    std::optional<std::vector<std::size_t>> counts(const std::string& key);

    std::string path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
    /// Throws for any key that was not read.
    void finish() const;

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

json term_to_json(const TermSpec& spec);
TermSpec term_from_json(const json& j, const std::string& path, double default_l2 = 0.0);

} // namespace fastr::detail
