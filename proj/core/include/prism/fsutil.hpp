#pragma once

#include <filesystem>
#include <string>
#include <string_view>

namespace prism {

// Writes to `<path>.tmp` then renames over `path`.
void atomic_write_file(const std::filesystem::path& path, std::string_view bytes);
std::string read_file(const std::filesystem::path& path);

}  // namespace prism
