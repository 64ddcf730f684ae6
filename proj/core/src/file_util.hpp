#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace asrfeat::detail {

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);

// Throws IoFailure if the file cannot be created or fully written.
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_file_text(const std::filesystem::path& path, const std::string& text);

}  // namespace asrfeat::detail
