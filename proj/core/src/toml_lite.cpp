#include "joulebench/toml_lite.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>

namespace joulebench::toml_lite {

namespace {

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  Document run() {
    Document doc;
    Table* current = &doc.root;
    while (true) {
      skip_blank_and_comments();
      if (eof()) break;
      if (peek() == '[') {
        const int header_line = line_;
        const bool is_array = peek(1) == '[';
        pos_ += is_array ? 2 : 1;
        skip_inline_ws();
        const std::string name = parse_key();
        skip_inline_ws();
        expect(']');
        if (is_array) expect(']');
        end_of_line();
        line_ = header_line;  // errors below belong to the header
        if (is_array) {
          if (doc.tables.count(name)) fail("'" + name + "' already defined as a table");
          auto& arr = doc.table_arrays[name];
          arr.emplace_back();
          arr.back().line = header_line;
          current = &arr.back();
        } else {
          if (doc.tables.count(name) || doc.table_arrays.count(name)) {
            fail("duplicate table [" + name + "]");
          }
          current = &doc.tables[name];
          current->line = header_line;
        }
        line_ = header_line + 1;
        continue;
      }
      const int key_line = line_;
      const std::string key = parse_key();
      skip_inline_ws();
      expect('=');
      skip_inline_ws();
      Value v = parse_value();
      v.line = key_line;
      if (current->contains(key)) {
        line_ = key_line;
        fail("duplicate key '" + key + "'");
      }
      current->set(key, std::move(v));
      end_of_line();
    }
    return doc;
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;

  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(line_, msg); }

  bool eof() const { return pos_ >= text_.size(); }
  char peek(std::size_t ahead = 0) const {
    return pos_ + ahead < text_.size() ? text_[pos_ + ahead] : '\0';
  }
  char get() {
    const char c = text_[pos_++];
    if (c == '\n') ++line_;
    return c;
  }
  bool starts_with(std::string_view s) const { return text_.substr(pos_).starts_with(s); }

  void expect(char c) {
    if (eof() || peek() != c) fail(std::string("expected '") + c + "'");
    get();
  }

  void skip_inline_ws() {
    while (!eof() && (peek() == ' ' || peek() == '\t')) get();
  }

  void skip_blank_and_comments() {
    while (!eof()) {
      const char c = peek();
      if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
        get();
      } else if (c == '#') {
        while (!eof() && peek() != '\n') get();
      } else {
        break;
      }
    }
  }

  void end_of_line() {
    skip_inline_ws();
    if (!eof() && peek() == '#') {
      while (!eof() && peek() != '\n') get();
    }
    if (!eof() && peek() == '\r') get();
    if (!eof() && peek() != '\n') fail("unexpected trailing characters");
    if (!eof()) get();
  }

  std::string parse_key() {
    if (peek() == '"') return parse_basic_string();
    if (peek() == '\'') return parse_literal_string();
    std::string key;
    while (!eof()) {
      const char c = peek();
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-') {
        key += get();
      } else {
        break;
      }
    }
    if (key.empty()) fail("expected a key");
    if (peek() == '.') fail("dotted keys are not supported");
    return key;
  }

  Value parse_value() {
    if (eof()) fail("expected a value");
    if (starts_with("\"\"\"")) return Value{parse_multiline_basic()};
    if (starts_with("'''")) return Value{parse_multiline_literal()};
    if (peek() == '"') return Value{parse_basic_string()};
    if (peek() == '\'') return Value{parse_literal_string()};
    if (peek() == '[') return Value{parse_array()};
    if (peek() == '{') fail("inline tables are not supported");
    if (starts_with("true")) {
      pos_ += 4;
      return Value{true};
    }
    if (starts_with("false")) {
      pos_ += 5;
      return Value{false};
    }
    return parse_number();
  }

  Array parse_array() {
    expect('[');
    Array out;
    while (true) {
      skip_blank_and_comments();
      if (eof()) fail("unterminated array");
      if (peek() == ']') {
        get();
        return out;
      }
      const int l = line_;
      Value v = parse_value();
      v.line = l;
      if (v.is_array()) fail("nested arrays are not supported");
      out.push_back(std::move(v));
      skip_blank_and_comments();
      if (peek() == ',') {
        get();
      } else if (peek() != ']') {
        fail("expected ',' or ']' in array");
      }
    }
  }

  Value parse_number() {
    const std::size_t start = pos_;
    while (!eof()) {
      const char c = peek();
      if (std::isalnum(static_cast<unsigned char>(c)) || c == '+' || c == '-' || c == '.' ||
          c == '_') {
        get();
      } else {
        break;
      }
    }
    std::string tok;
    for (char c : text_.substr(start, pos_ - start)) {
      if (c != '_') tok += c;
    }
    if (tok.empty()) fail("expected a value");
    const bool floating = tok.find_first_of(".eE") != std::string::npos &&
                          tok.rfind("0x", 0) != 0 && tok.rfind("0X", 0) != 0;
    if (tok == "inf" || tok == "+inf") return Value{HUGE_VAL};
    if (tok == "-inf") return Value{-HUGE_VAL};
    const char* first = tok.data();
    const char* last = tok.data() + tok.size();
    if (*first == '+') ++first;
    if (floating) {
      double d = 0;
      auto [p, ec] = std::from_chars(first, last, d);
      if (ec != std::errc{} || p != last) fail("invalid float '" + tok + "'");
      return Value{d};
    }
    std::int64_t i = 0;
    auto [p, ec] = std::from_chars(first, last, i);
    if (ec != std::errc{} || p != last) fail("invalid value '" + tok + "'");
    return Value{i};
  }

  void append_escape(std::string& out) {
    if (eof()) fail("unterminated escape");
    const char e = get();
    switch (e) {
      case 'n': out += '\n'; break;
      case 't': out += '\t'; break;
      case 'r': out += '\r'; break;
      case '"': out += '"'; break;
      case '\\': out += '\\'; break;
      case 'b': out += '\b'; break;
      case 'f': out += '\f'; break;
      case 'u': {
        if (pos_ + 4 > text_.size()) fail("short \\u escape");
        unsigned cp = 0;
        auto [p, ec] = std::from_chars(text_.data() + pos_, text_.data() + pos_ + 4, cp, 16);
        if (ec != std::errc{} || p != text_.data() + pos_ + 4) fail("bad \\u escape");
        pos_ += 4;
        if (cp < 0x80) {
          out += static_cast<char>(cp);
        } else if (cp < 0x800) {
          out += static_cast<char>(0xC0 | (cp >> 6));
          out += static_cast<char>(0x80 | (cp & 0x3F));
        } else {
          out += static_cast<char>(0xE0 | (cp >> 12));
          out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
          out += static_cast<char>(0x80 | (cp & 0x3F));
        }
        break;
      }
      default: fail(std::string("unknown escape '\\") + e + "'");
    }
  }

  std::string parse_basic_string() {
    expect('"');
    std::string out;
    while (true) {
      if (eof() || peek() == '\n') fail("unterminated string");
      const char c = get();
      if (c == '"') return out;
      if (c == '\\') {
        append_escape(out);
      } else {
        out += c;
      }
    }
  }

  std::string parse_literal_string() {
    expect('\'');
    std::string out;
    while (true) {
      if (eof() || peek() == '\n') fail("unterminated string");
      const char c = get();
      if (c == '\'') return out;
      out += c;
    }
  }

  void skip_leading_newline() {
    if (starts_with("\r\n")) {
      pos_ += 1;
      get();
    } else if (peek() == '\n') {
      get();
    }
  }

  std::string parse_multiline_basic() {
    const int open_line = line_;
    pos_ += 3;
    skip_leading_newline();
    std::string out;
    while (true) {
      if (eof()) {
        line_ = open_line;
        fail("unterminated multi-line string");
      }
      if (starts_with("\"\"\"")) {
        std::size_t run = 0;
        while (peek(run) == '"') ++run;
        if (run > 5) fail("too many quotes before closing delimiter");
        out.append(run - 3, '"');
        pos_ += run;
        return out;
      }
      const char c = get();
      if (c == '\\') {
        if (peek() == '\n' || starts_with("\r\n") || peek() == ' ' || peek() == '\t') {
          // Line-ending backslash: trim whitespace up to the next content.
          std::size_t save = pos_;
          int save_line = line_;
          while (!eof() && (peek() == ' ' || peek() == '\t')) get();
          if (!eof() && (peek() == '\n' || peek() == '\r')) {
            while (!eof() && std::isspace(static_cast<unsigned char>(peek()))) get();
            continue;
          }
          pos_ = save;
          line_ = save_line;
        }
        append_escape(out);
      } else {
        out += c;
      }
    }
  }

  std::string parse_multiline_literal() {
    const int open_line = line_;
    pos_ += 3;
    skip_leading_newline();
    std::string out;
    while (true) {
      if (eof()) {
        line_ = open_line;
        fail("unterminated multi-line string");
      }
      if (starts_with("'''")) {
        pos_ += 3;
        return out;
      }
      out += get();
    }
  }
};

std::string quote_basic(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default: out += c;
    }
  }
  return out + "\"";
}

std::string quote_multiline(const std::string& s) {
  std::string out = "\"\"\"\n";
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\r': out += "\\r"; break;
      default: out += c;
    }
  }
  return out + "\"\"\"";
}

bool bare_key(const std::string& k) {
  if (k.empty()) return false;
  for (char c : k) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) return false;
  }
  return true;
}

std::string format_key(const std::string& k) { return bare_key(k) ? k : quote_basic(k); }

void write_value(std::ostream& os, const Value& v) {
  if (v.is_string()) {
    const auto& s = v.as_string();
    os << (s.find('\n') != std::string::npos ? quote_multiline(s) : quote_basic(s));
  } else if (v.is_int()) {
    os << v.as_int();
  } else if (v.is_bool()) {
    os << (v.as_bool() ? "true" : "false");
  } else if (v.is_array()) {
    os << '[';
    bool first = true;
    for (const auto& e : v.as_array()) {
      if (!first) os << ", ";
      first = false;
      write_value(os, e);
    }
    os << ']';
  } else {
    const double d = v.as_double();
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, d);
    std::string s(buf, p);
    if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
    os << s;
  }
}

void write_table(std::ostream& os, const Table& t) {
  for (const auto& key : t.order) {
    os << format_key(key) << " = ";
    write_value(os, t.values.at(key));
    os << '\n';
  }
}

}  // namespace

const std::string& Value::as_string() const {
  if (!is_string()) throw ParseError(line, "expected a string");
  return std::get<std::string>(data);
}

std::int64_t Value::as_int() const {
  if (!is_int()) throw ParseError(line, "expected an integer");
  return std::get<std::int64_t>(data);
}

double Value::as_double() const {
  if (is_int()) return static_cast<double>(std::get<std::int64_t>(data));
  if (!std::holds_alternative<double>(data)) throw ParseError(line, "expected a number");
  return std::get<double>(data);
}

bool Value::as_bool() const {
  if (!is_bool()) throw ParseError(line, "expected a boolean");
  return std::get<bool>(data);
}

const Array& Value::as_array() const {
  if (!is_array()) throw ParseError(line, "expected an array");
  return std::get<Array>(data);
}

std::vector<std::string> Value::as_string_list() const {
  std::vector<std::string> out;
  for (const auto& v : as_array()) out.push_back(v.as_string());
  return out;
}

std::vector<std::int64_t> Value::as_int_list() const {
  std::vector<std::int64_t> out;
  for (const auto& v : as_array()) out.push_back(v.as_int());
  return out;
}

const Value* Table::find(const std::string& key) const {
  auto it = values.find(key);
  return it == values.end() ? nullptr : &it->second;
}

void Table::set(const std::string& key, Value v) {
  if (!contains(key)) order.push_back(key);
  values[key] = std::move(v);
}

const Table* Document::table(const std::string& name) const {
  auto it = tables.find(name);
  return it == tables.end() ? nullptr : &it->second;
}

Document parse(std::string_view text) { return Parser(text).run(); }

std::string serialize(const Document& doc) {
  std::ostringstream os;
  write_table(os, doc.root);
  for (const auto& [name, t] : doc.tables) {
    os << "\n[" << format_key(name) << "]\n";
    write_table(os, t);
  }
  for (const auto& [name, arr] : doc.table_arrays) {
    for (const auto& t : arr) {
      os << "\n[[" << format_key(name) << "]]\n";
      write_table(os, t);
    }
  }
  return os.str();
}

}  // namespace joulebench::toml_lite
