#pragma once

#include <string>
#include <string_view>

#include "fastr/model.hpp"

namespace fastr {

inline constexpr std::string_view model_format_id = "fastr-model/1";

/// Self-describing JSON: spec, schema, dictionaries, knots, smoothing
/// parameters, centering means, every parameter block with its shape, and
/// training metadata. Doubles round-trip exactly.
std::string model_to_json(const Model& model);
Model model_from_json(const std::string& text, const std::string& source = "<memory>");

void save_model(const Model& model, const std::string& path);
Model load_model(const std::string& path);

} // namespace fastr
