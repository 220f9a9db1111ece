#pragma once

#include <nlohmann/json.hpp>

#include <string>

namespace rvw {

using Json = nlohmann::json;

// Deterministic JSON text: object keys sorted, floating-point numbers printed
// with exactly six decimals (negative zero normalized), integers verbatim.
// indent < 0 gives compact output.
std::string canonical_dump(const Json& value, int indent = -1);

// Parses JSON text, rethrowing parser failures as rvw::ParseError.
Json parse_json(const std::string& text);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& contents);

}  // namespace rvw
