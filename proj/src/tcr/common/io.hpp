#pragma once

#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace tcr {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

// Compact JSON where every floating-point number is printed with a fixed
// number of decimals; integers, strings, bools and null are unchanged.
std::string dump_fixed(const ojson& j, int decimals = 6);
std::string dump_fixed(const json& j, int decimals = 6);
std::string format_fixed(double x, int decimals);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);
std::vector<std::string> read_lines(const std::string& path);

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::string& path);

}  // namespace tcr
