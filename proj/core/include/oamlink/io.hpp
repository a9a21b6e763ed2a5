#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace oamlink {

/// Writes bytes verbatim (binary mode). Throws ErrorKind::Io naming the path.
void write_text_file(const std::filesystem::path& path, std::string_view contents);
std::string read_text_file(const std::filesystem::path& path);

/// Creates the directory tree if needed; ErrorKind::Io on failure.
void ensure_directory(const std::filesystem::path& dir);

}  // namespace oamlink
