// Copyright 2026 The symloss Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "symloss/config.hpp"

#include <gtest/gtest.h>

#include <string>

namespace symloss {
namespace {

std::size_t failing_line(const std::string& text) {
  try {
    Config::parse(text);
  } catch (const ParseError& e) {
    return e.line();
  }
  return 0;
}

TEST(Config, ParsesSectionsKeysAndComments) {
  const Config c = Config::parse(
      "# top comment\n"
      "top = 1\n"
      "[data]\n"
      "  k = 3   # trailing comment\n"
      "; another comment\n"
      "name = a#b\n"
      "spread=0.5\n"
      "\n"
      "[train]\n"
      "losses = MAE, CCE ,MSE\n"
      "flag = yes\n");
  EXPECT_EQ(c.get_int("", "top", 0), 1);
  EXPECT_EQ(c.get_size("data", "k", 0), 3u);
  EXPECT_EQ(c.get_string("data", "name", ""), "a#b");
  EXPECT_EQ(c.get_real("data", "spread", 0.0), 0.5);
  EXPECT_EQ(c.get_list("train", "losses"), (std::vector<std::string>{"MAE", "CCE", "MSE"}));
  EXPECT_TRUE(c.get_bool("train", "flag", false));
  EXPECT_EQ(c.get_real("train", "missing", 2.5), 2.5);
  EXPECT_TRUE(c.has_section("train"));
  EXPECT_FALSE(c.has_section("model"));
  EXPECT_EQ(c.find("data", "k")->line, 4u);
}

TEST(Config, ReportsLineNumbers) {
  EXPECT_EQ(failing_line("[a]\nx = 1\nx = 2\n"), 3u);
  EXPECT_EQ(failing_line("[a]\n[a]\n"), 2u);
  EXPECT_EQ(failing_line("[a]\n\njunk\n"), 3u);
  EXPECT_EQ(failing_line("[a\n"), 1u);
  EXPECT_EQ(failing_line("[]\n"), 1u);
  EXPECT_EQ(failing_line("[a]\n = 3\n"), 2u);
}

TEST(Config, TypedAccessorsReportTheEntryLine) {
  const Config c = Config::parse("[s]\nn = abc\nm = -1\nb = maybe\nl = 1,,2\nr = 1,x\n");
  auto line_of = [](auto&& fn) -> std::size_t {
    try {
      fn();
    } catch (const ParseError& e) {
      return e.line();
    }
    return 0;
  };
  EXPECT_EQ(line_of([&] { c.get_int("s", "n", 0); }), 2u);
  EXPECT_EQ(line_of([&] { c.get_real("s", "n", 0); }), 2u);
  EXPECT_EQ(line_of([&] { c.get_size("s", "m", 0); }), 3u);
  EXPECT_EQ(line_of([&] { c.get_bool("s", "b", false); }), 4u);
  EXPECT_EQ(line_of([&] { c.get_list("s", "l"); }), 5u);
  EXPECT_EQ(line_of([&] { c.get_real_list("s", "r", {}); }), 6u);
  EXPECT_EQ(line_of([&] { c.require("s", "absent"); }), 1u);
}

TEST(Config, RequireListRejectsEmpty) {
  const Config c = Config::parse("[v]\nlosses =\n");
  EXPECT_THROW(c.require_list("v", "losses"), ParseError);
  EXPECT_THROW(c.require_list("v", "other"), ParseError);
  EXPECT_TRUE(c.get_list("v", "losses").empty());
}

TEST(Config, ResolvesRelativePathsAgainstFileDirectory) {
  EXPECT_THROW(Config::load("/nonexistent/dir/cfg.ini"), Error);
  const Config c = Config::parse("");
  EXPECT_EQ(c.resolve("a/b.txt"), std::filesystem::path("a/b.txt"));
  EXPECT_EQ(c.resolve("/abs/b.txt"), std::filesystem::path("/abs/b.txt"));
}

}  // namespace
}  // namespace symloss
