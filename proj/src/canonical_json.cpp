#include "rvw/canonical_json.hpp"

#include "rvw/error.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace rvw {
namespace {

void append_number(std::string& out, double value)
{
    if (!std::isfinite(value)) {
        throw ValidationError("cannot serialize non-finite number");
    }
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.6f", value);
    std::string text(buffer);
    if (text == "-0.000000") {
        text = "0.000000";
    }
    out += text;
}

void dump(std::string& out, const Json& value, int indent, int depth)
{
    const auto newline = [&](int level) {
        if (indent >= 0) {
            out += '\n';
            out.append(static_cast<std::size_t>(indent * level), ' ');
        }
    };

    switch (value.type()) {
    case Json::value_t::object: {
        if (value.empty()) {
            out += "{}";
            return;
        }
        out += '{';
        bool first = true;
        // nlohmann::json objects are backed by std::map, so iteration is sorted.
        for (auto it = value.begin(); it != value.end(); ++it) {
            if (!first) {
                out += ',';
            }
            first = false;
            newline(depth + 1);
            out += Json(it.key()).dump();
            out += indent >= 0 ? ": " : ":";
            dump(out, it.value(), indent, depth + 1);
        }
        newline(depth);
        out += '}';
        return;
    }
    case Json::value_t::array: {
        if (value.empty()) {
            out += "[]";
            return;
        }
        // Numeric arrays stay on one line; they are long (runs, arclen tables).
        bool scalar = true;
        for (const auto& item : value) {
            scalar = scalar && item.is_primitive();
        }
        out += '[';
        bool first = true;
        for (const auto& item : value) {
            if (!first) {
                out += ',';
            }
            first = false;
            if (!scalar) {
                newline(depth + 1);
            }
            dump(out, item, indent, depth + 1);
        }
        if (!scalar) {
            newline(depth);
        }
        out += ']';
        return;
    }
    case Json::value_t::number_float:
        append_number(out, value.get<double>());
        return;
    default:
        out += value.dump();
        return;
    }
}

}  // namespace

std::string canonical_dump(const Json& value, int indent)
{
    std::string out;
    dump(out, value, indent, 0);
    return out;
}

Json parse_json(const std::string& text)
{
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw ParseError(std::string("invalid JSON: ") + e.what());
    }
}

std::string read_file(const std::string& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw NotFoundError("cannot open " + path);
    }
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void write_file(const std::string& path, const std::string& contents)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("cannot write " + path);
    }
    out << contents;
    if (!out) {
        throw Error("write failed for " + path);
    }
}

}  // namespace rvw
