#pragma once

// Reader/writer for the TOML subset used by prompt catalogs and run configs:
// [table] and [[array-of-tables]] headers, bare or quoted keys, basic/literal
// strings (single- and triple-quoted), integers, floats, booleans and flat
// arrays. Dotted keys and inline tables are rejected.

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace joulebench::toml_lite {

class ParseError : public std::runtime_error {
 public:
  ParseError(int line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const noexcept { return line_; }

 private:
  int line_;
};

struct Value;
using Array = std::vector<Value>;

struct Value {
  std::variant<std::string, std::int64_t, double, bool, Array> data;
  int line = 0;

  bool is_string() const { return std::holds_alternative<std::string>(data); }
  bool is_int() const { return std::holds_alternative<std::int64_t>(data); }
  bool is_number() const { return is_int() || std::holds_alternative<double>(data); }
  bool is_bool() const { return std::holds_alternative<bool>(data); }
  bool is_array() const { return std::holds_alternative<Array>(data); }

  const std::string& as_string() const;
  std::int64_t as_int() const;
  double as_double() const;
  bool as_bool() const;
  const Array& as_array() const;
  std::vector<std::string> as_string_list() const;
  std::vector<std::int64_t> as_int_list() const;
};

struct Table {
  std::map<std::string, Value> values;
  int line = 0;
  /// Keys in insertion order, so writers can reproduce the source layout.
  std::vector<std::string> order;

  const Value* find(const std::string& key) const;
  bool contains(const std::string& key) const { return values.count(key) != 0; }
  void set(const std::string& key, Value v);
};

struct Document {
  Table root;
  std::map<std::string, Table> tables;
  std::map<std::string, std::vector<Table>> table_arrays;

  const Table* table(const std::string& name) const;
};

Document parse(std::string_view text);

/// Emits a document the parser reads back to an equivalent Document.
/// Strings containing newlines are written as triple-quoted basic strings.
std::string serialize(const Document& doc);

}  // namespace joulebench::toml_lite
