#pragma once

#include <string>

namespace fastr {

/// Whole file as a string; IoError when it cannot be read.
std::string read_file(const std::string& path);

/// Writes to a sibling temporary file and renames it into place, so readers
/// never observe a partially written file.
void write_file_atomic(const std::string& path, const std::string& content);

} // namespace fastr
