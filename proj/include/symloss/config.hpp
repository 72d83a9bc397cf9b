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

// Flat `key = value` configuration with bracketed section headers.
//
//   # comment            (also ';'; a '#' after whitespace starts an inline comment)
//   [section]
//   key = value
//   list = a, b, c
//
// Keys before the first header belong to the unnamed section "". Duplicate
// keys within a section are rejected. Every lookup failure names the line.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "symloss/error.hpp"
#include "symloss/text.hpp"

namespace symloss {

class Config {
 public:
  struct Entry {
    std::string value;
    std::size_t line = 0;
  };

  static Config parse(const std::string& content) {
    Config cfg;
    std::istringstream in(content);
    std::string raw;
    std::size_t line_no = 0;
    std::string section;
    cfg.sections_[section];
    while (std::getline(in, raw)) {
      ++line_no;
      std::string_view line = text::trim(raw);
      if (line.empty() || line.front() == '#' || line.front() == ';') continue;
      if (line.front() == '[') {
        if (line.back() != ']') throw ParseError(line_no, "unterminated section header");
        section = std::string(text::trim(line.substr(1, line.size() - 2)));
        if (section.empty()) throw ParseError(line_no, "empty section name");
        if (cfg.section_lines_.count(section)) {
          throw ParseError(line_no, "duplicate section [" + section + "]");
        }
        cfg.sections_[section];
        cfg.section_lines_[section] = line_no;
        continue;
      }
      const std::size_t eq = line.find('=');
      if (eq == std::string_view::npos) throw ParseError(line_no, "expected 'key = value'");
      const std::string key(text::trim(line.substr(0, eq)));
      std::string_view value = line.substr(eq + 1);
      for (std::size_t i = 1; i < value.size(); ++i) {
        if (value[i] == '#' && (value[i - 1] == ' ' || value[i - 1] == '\t')) {
          value = value.substr(0, i);
          break;
        }
      }
      if (key.empty()) throw ParseError(line_no, "empty key");
      auto& entries = cfg.sections_[section];
      if (entries.count(key)) {
        throw ParseError(line_no, "duplicate key '" + key + "' in [" + section + "]");
      }
      entries[key] = Entry{std::string(text::trim(value)), line_no};
    }
    return cfg;
  }

  static Config load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::kIo, "cannot open config " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    Config cfg = parse(buf.str());
    cfg.base_dir_ = path.parent_path();
    return cfg;
  }

  /// Directory relative paths in the config resolve against.
  const std::filesystem::path& base_dir() const noexcept { return base_dir_; }

  std::filesystem::path resolve(const std::string& p) const {
    const std::filesystem::path path(p);
    return path.is_absolute() || base_dir_.empty() ? path : base_dir_ / path;
  }

  bool has_section(const std::string& section) const { return sections_.count(section) > 0; }

  bool has(const std::string& section, const std::string& key) const {
    return find(section, key) != nullptr;
  }

  const Entry* find(const std::string& section, const std::string& key) const {
    const auto s = sections_.find(section);
    if (s == sections_.end()) return nullptr;
    const auto e = s->second.find(key);
    return e == s->second.end() ? nullptr : &e->second;
  }

  const Entry& require(const std::string& section, const std::string& key) const {
    const Entry* e = find(section, key);
    if (e == nullptr) {
      const auto s = section_lines_.find(section);
      throw ParseError(s == section_lines_.end() ? 0 : s->second,
                       "missing required key '" + key + "' in [" + section + "]");
    }
    return *e;
  }

  std::string get_string(const std::string& section, const std::string& key,
                         const std::string& fallback) const {
    const Entry* e = find(section, key);
    return e ? e->value : fallback;
  }

  double get_real(const std::string& section, const std::string& key, double fallback) const {
    const Entry* e = find(section, key);
    return e ? real_of(*e, key) : fallback;
  }

  double require_real(const std::string& section, const std::string& key) const {
    return real_of(require(section, key), key);
  }

  long long get_int(const std::string& section, const std::string& key, long long fallback) const {
    const Entry* e = find(section, key);
    return e ? int_of(*e, key) : fallback;
  }

  std::size_t get_size(const std::string& section, const std::string& key,
                       std::size_t fallback) const {
    const Entry* e = find(section, key);
    if (!e) return fallback;
    const long long v = int_of(*e, key);
    if (v < 0) throw ParseError(e->line, "'" + key + "' must be non-negative");
    return static_cast<std::size_t>(v);
  }

  bool get_bool(const std::string& section, const std::string& key, bool fallback) const {
    const Entry* e = find(section, key);
    if (!e) return fallback;
    const std::string v = text::to_lower(e->value);
    if (v == "true" || v == "yes" || v == "1") return true;
    if (v == "false" || v == "no" || v == "0") return false;
    throw ParseError(e->line, "'" + key + "' must be true or false");
  }

  /// Comma-separated items, trimmed; empty items are rejected.
  std::vector<std::string> get_list(const std::string& section, const std::string& key) const {
    const Entry* e = find(section, key);
    if (!e) return {};
    return list_of(*e, key);
  }

  std::vector<std::string> require_list(const std::string& section, const std::string& key) const {
    const Entry& e = require(section, key);
    auto items = list_of(e, key);
    if (items.empty()) throw ParseError(e.line, "'" + key + "' must list at least one item");
    return items;
  }

  std::vector<double> get_real_list(const std::string& section, const std::string& key,
                                    std::vector<double> fallback) const {
    const Entry* e = find(section, key);
    if (!e) return fallback;
    std::vector<double> out;
    for (const auto& item : list_of(*e, key)) {
      const auto v = text::parse_real(item);
      if (!v) throw ParseError(e->line, "bad number '" + item + "' in '" + key + "'");
      out.push_back(*v);
    }
    return out;
  }

  std::vector<long long> get_int_list(const std::string& section, const std::string& key,
                                      std::vector<long long> fallback) const {
    const Entry* e = find(section, key);
    if (!e) return fallback;
    std::vector<long long> out;
    for (const auto& item : list_of(*e, key)) {
      const auto v = text::parse_int(item);
      if (!v) throw ParseError(e->line, "bad integer '" + item + "' in '" + key + "'");
      out.push_back(*v);
    }
    return out;
  }

 private:
  static double real_of(const Entry& e, const std::string& key) {
    const auto v = text::parse_real(e.value);
    if (!v) throw ParseError(e.line, "'" + key + "' expects a number, got '" + e.value + "'");
    return *v;
  }

  static long long int_of(const Entry& e, const std::string& key) {
    const auto v = text::parse_int(e.value);
    if (!v) throw ParseError(e.line, "'" + key + "' expects an integer, got '" + e.value + "'");
    return *v;
  }

  static std::vector<std::string> list_of(const Entry& e, const std::string& key) {
    std::vector<std::string> out;
    if (text::trim(e.value).empty()) return out;
    for (const auto& item : text::split(e.value, ',')) {
      const auto t = text::trim(item);
      if (t.empty()) throw ParseError(e.line, "empty item in '" + key + "'");
      out.emplace_back(t);
    }
    return out;
  }

  std::map<std::string, std::map<std::string, Entry>> sections_;
  std::map<std::string, std::size_t> section_lines_;
  std::filesystem::path base_dir_;
};

}  // namespace symloss
