#include "rectflow/toml.hpp"

#include <cctype>
#include <charconv>
#include <cstdlib>

namespace rectflow::toml {

double Value::as_number() const {
    if (kind == Kind::integer) return static_cast<double>(integer);
    if (kind == Kind::floating) return floating;
    throw InputError("toml: value is not a number");
}

const Value& Table::at(const std::string& key) const {
    auto it = values.find(key);
    if (it == values.end()) throw InputError("toml: missing key '" + key + "'");
    return it->second;
}

const Table& Table::table_at(const std::string& key) const {
    auto it = tables.find(key);
    if (it == tables.end()) throw InputError("toml: missing table '" + key + "'");
    return it->second;
}

namespace {

struct Cursor {
    const std::string& text;
    std::size_t pos = 0;
    int line = 1;

    bool eof() const { return pos >= text.size(); }
    char peek() const { return text[pos]; }
    char take() {
        const char c = text[pos++];
        if (c == '\n') ++line;
        return c;
    }

    [[noreturn]] void fail(const std::string& msg) const {
        throw InputError("toml: line " + std::to_string(line) + ": " + msg);
    }

    void skip_space() {
        while (!eof() && (peek() == ' ' || peek() == '\t')) take();
    }

    void skip_space_and_comments() {
        while (!eof()) {
            const char c = peek();
            if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
                take();
            } else if (c == '#') {
                while (!eof() && peek() != '\n') take();
            } else {
                break;
            }
        }
    }

    void expect_line_end() {
        skip_space();
        if (!eof() && peek() == '#') {
            while (!eof() && peek() != '\n') take();
        }
        if (!eof()) {
            if (peek() == '\r') take();
            if (!eof()) {
                if (peek() != '\n') fail("unexpected trailing characters");
                take();
            }
        }
    }
};

bool is_key_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-';
}

std::string parse_key(Cursor& cur) {
    std::string key;
    while (!cur.eof() && is_key_char(cur.peek())) key.push_back(cur.take());
    if (key.empty()) cur.fail("expected a key");
    return key;
}

std::string parse_basic_string(Cursor& cur) {
    cur.take();  // opening quote
    std::string out;
    while (true) {
        if (cur.eof()) cur.fail("unterminated string");
        const char c = cur.take();
        if (c == '"') break;
        if (c == '\n') cur.fail("newline in string");
        if (c == '\\') {
            if (cur.eof()) cur.fail("unterminated escape");
            const char e = cur.take();
            switch (e) {
                case 'n': out.push_back('\n'); break;
                case 't': out.push_back('\t'); break;
                case 'r': out.push_back('\r'); break;
                case '"': out.push_back('"'); break;
                case '\\': out.push_back('\\'); break;
                default: cur.fail(std::string("unsupported escape \\") + e);
            }
        } else {
            out.push_back(c);
        }
    }
    return out;
}

Value parse_value(Cursor& cur);

Value parse_array(Cursor& cur) {
    cur.take();  // '['
    Value v;
    v.kind = Value::Kind::array;
    while (true) {
        cur.skip_space_and_comments();
        if (cur.eof()) cur.fail("unterminated array");
        if (cur.peek() == ']') {
            cur.take();
            break;
        }
        v.array.push_back(parse_value(cur));
        cur.skip_space_and_comments();
        if (cur.eof()) cur.fail("unterminated array");
        if (cur.peek() == ',') {
            cur.take();
        } else if (cur.peek() != ']') {
            cur.fail("expected ',' or ']' in array");
        }
    }
    return v;
}

Value parse_scalar(Cursor& cur) {
    std::string tok;
    while (!cur.eof()) {
        const char c = cur.peek();
        if (c == ',' || c == ']' || c == '#' || c == '\n' || c == '\r' || c == ' ' ||
            c == '\t') {
            break;
        }
        tok.push_back(cur.take());
    }
    if (tok.empty()) cur.fail("expected a value");

    Value v;
    if (tok == "true" || tok == "false") {
        v.kind = Value::Kind::boolean;
        v.boolean = tok == "true";
        return v;
    }
    const bool looks_float = tok.find_first_of(".eE") != std::string::npos ||
                             tok == "inf" || tok == "-inf" || tok == "nan";
    if (!looks_float) {
        std::int64_t iv = 0;
        const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), iv);
        if (ec == std::errc() && ptr == tok.data() + tok.size()) {
            v.kind = Value::Kind::integer;
            v.integer = iv;
            return v;
        }
    }
    char* end = nullptr;
    const double fv = std::strtod(tok.c_str(), &end);
    if (end != tok.c_str() + tok.size()) cur.fail("cannot parse value '" + tok + "'");
    v.kind = Value::Kind::floating;
    v.floating = fv;
    return v;
}

Value parse_value(Cursor& cur) {
    cur.skip_space();
    if (cur.eof()) cur.fail("expected a value");
    const char c = cur.peek();
    if (c == '"') {
        Value v;
        v.kind = Value::Kind::string;
        v.str = parse_basic_string(cur);
        return v;
    }
    if (c == '[') return parse_array(cur);
    return parse_scalar(cur);
}

}  // namespace

Table parse(const std::string& text) {
    Table root;
    Table* current = &root;
    Cursor cur{text};
    while (true) {
        cur.skip_space_and_comments();
        if (cur.eof()) break;
        if (cur.peek() == '[') {
            cur.take();
            Table* t = &root;
            while (true) {
                const std::string part = parse_key(cur);
                t = &t->tables[part];
                if (cur.eof()) cur.fail("unterminated table header");
                if (cur.peek() == '.') {
                    cur.take();
                    continue;
                }
                break;
            }
            if (cur.eof() || cur.peek() != ']') cur.fail("expected ']' in table header");
            cur.take();
            cur.expect_line_end();
            current = t;
            continue;
        }
        const std::string key = parse_key(cur);
        cur.skip_space();
        if (cur.eof() || cur.peek() != '=') cur.fail("expected '=' after key '" + key + "'");
        cur.take();
        if (current->values.count(key)) cur.fail("duplicate key '" + key + "'");
        current->values[key] = parse_value(cur);
        cur.expect_line_end();
    }
    return root;
}

std::string escape_string(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            case '\r': out += "\\r"; break;
            default: out.push_back(c);
        }
    }
    out.push_back('"');
    return out;
}

}  // namespace rectflow::toml
