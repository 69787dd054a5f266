#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rectflow/errors.hpp"

namespace rectflow::toml {

// Minimal TOML reader covering what experiment configs use: table headers,
// key = value with strings, integers, floats, booleans, and (nested) arrays,
// plus # comments. No dotted keys, inline tables, dates, or multiline
// strings.
struct Value {
    enum class Kind { string, integer, floating, boolean, array };
    Kind kind = Kind::string;
    std::string str;
    std::int64_t integer = 0;
    double floating = 0.0;
    bool boolean = false;
    std::vector<Value> array;

    double as_number() const;  // integer or floating
};

struct Table {
    std::map<std::string, Value> values;
    std::map<std::string, Table> tables;

    bool has(const std::string& key) const { return values.count(key) > 0; }
    bool has_table(const std::string& key) const { return tables.count(key) > 0; }
    const Value& at(const std::string& key) const;
    const Table& table_at(const std::string& key) const;
};

// Throws InputError with a line number on malformed input.
Table parse(const std::string& text);

std::string escape_string(const std::string& s);

}  // namespace rectflow::toml
