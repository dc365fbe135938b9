#include <gtest/gtest.h>

#include "joulebench/toml_lite.hpp"

using namespace joulebench::toml_lite;

TEST(TomlLite, ScalarsTablesAndArrays) {
  const auto doc = parse(R"(
top = 1
[run]
name = "x # not a comment"   # comment
lit = 'C:\path'
n = -42
f = 2.5e-1
ok = true
list = [1, 2, 3]
names = ["a", "b"]

[[item]]
k = 1
[[item]]
k = 2
)");
  EXPECT_EQ(doc.root.find("top")->as_int(), 1);
  const auto* run = doc.table("run");
  ASSERT_NE(run, nullptr);
  EXPECT_EQ(run->find("name")->as_string(), "x # not a comment");
  EXPECT_EQ(run->find("lit")->as_string(), "C:\\path");
  EXPECT_EQ(run->find("n")->as_int(), -42);
  EXPECT_DOUBLE_EQ(run->find("f")->as_double(), 0.25);
  EXPECT_TRUE(run->find("ok")->as_bool());
  EXPECT_EQ(run->find("list")->as_int_list(), (std::vector<std::int64_t>{1, 2, 3}));
  EXPECT_EQ(run->find("names")->as_string_list(), (std::vector<std::string>{"a", "b"}));
  EXPECT_EQ(run->order.front(), "name");
  ASSERT_EQ(doc.table_arrays.at("item").size(), 2u);
  EXPECT_EQ(doc.table_arrays.at("item")[1].find("k")->as_int(), 2);
}

TEST(TomlLite, MultilineStrings) {
  const auto doc = parse("a = \"\"\"\nline1\n  \"quoted\"\nend\"\"\"\nb = '''\nraw \\n'''\nc = \"\"\"x\"\"\"\"\"\n");
  EXPECT_EQ(doc.root.find("a")->as_string(), "line1\n  \"quoted\"\nend");
  EXPECT_EQ(doc.root.find("b")->as_string(), "raw \\n");
  EXPECT_EQ(doc.root.find("c")->as_string(), "x\"\"");
}

TEST(TomlLite, EscapesInBasicStrings) {
  const auto doc = parse(R"(s = "tab\tnl\nq\"bs\\u\u00e9")");
  EXPECT_EQ(doc.root.find("s")->as_string(), "tab\tnl\nq\"bs\\u\xc3\xa9");
}

TEST(TomlLite, ErrorsCarryLineNumbers) {
  auto line_of = [](const std::string& text) {
    try {
      parse(text);
    } catch (const ParseError& e) {
      return e.line();
    }
    return -1;
  };
  EXPECT_EQ(line_of("a = 1\nb = \n"), 2);
  EXPECT_EQ(line_of("a = 1\na = 2\n"), 2);
  EXPECT_EQ(line_of("[t]\n[t]\n"), 2);
  EXPECT_EQ(line_of("a.b = 1\n"), 1);
  EXPECT_EQ(line_of("x = \"\"\"\nnever closed\n"), 1);
  EXPECT_EQ(line_of("x = {a = 1}\n"), 1);
}

TEST(TomlLite, TypeMismatchThrows) {
  const auto doc = parse("a = 1\n");
  EXPECT_THROW(doc.root.find("a")->as_string(), std::exception);
  EXPECT_DOUBLE_EQ(doc.root.find("a")->as_double(), 1.0);
}

TEST(TomlLite, SerializeRoundTrip) {
  const std::string text =
      "x = 3\n[t]\ns = \"a\\\"b\"\nm = \"\"\"\nmulti\nline \"q\" \"\"\"\nl = [1, 2]\n"
      "[[arr]]\nv = 1.5\n[[arr]]\nv = false\n";
  const auto doc = parse(text);
  const auto again = parse(serialize(doc));
  EXPECT_EQ(serialize(again), serialize(doc));
  EXPECT_EQ(again.table("t")->find("m")->as_string(), "multi\nline \"q\" ");
}
