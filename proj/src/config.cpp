/* Copyright 2026 The AdaHead Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "adahead/config.hpp"

#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "adahead/errors.hpp"

namespace adahead {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

double to_double(const std::string& key, const std::string& text) {
  double v = 0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) throw ConfigError("key '" + key + "': not a number: '" + text + "'");
  return v;
}

long to_long(const std::string& key, const std::string& text) {
  long v = 0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) throw ConfigError("key '" + key + "': not an integer: '" + text + "'");
  return v;
}

}  // namespace

KeyValues KeyValues::parse(std::istream& is) {
  KeyValues kv;
  std::string line;
  int n = 0;
  while (std::getline(is, line)) {
    ++n;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ParseError("expected key=value", n);
    const std::string key = trim(t.substr(0, eq));
    if (key.empty()) throw ParseError("empty key", n);
    if (kv.values_.count(key)) throw ParseError("duplicate key '" + key + "'", n);
    kv.values_[key] = trim(t.substr(eq + 1));
    kv.lines_[key] = n;
  }
  return kv;
}

KeyValues KeyValues::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config: " + path);
  return parse(in);
}

const std::string& KeyValues::raw(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("missing key '" + key + "'");
  used_[key] = true;
  return it->second;
}

std::string KeyValues::get_string(const std::string& key, const std::string& fallback) const {
  return has(key) ? raw(key) : fallback;
}

long KeyValues::get_int(const std::string& key, long fallback) const {
  return has(key) ? to_long(key, raw(key)) : fallback;
}

double KeyValues::get_double(const std::string& key, double fallback) const {
  return has(key) ? to_double(key, raw(key)) : fallback;
}

bool KeyValues::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string& v = raw(key);
  if (v == "1" || v == "true") return true;
  if (v == "0" || v == "false") return false;
  throw ConfigError("key '" + key + "': expected true/false, got '" + v + "'");
}

std::vector<double> KeyValues::get_doubles(const std::string& key, const std::vector<double>& fallback) const {
  if (!has(key)) return fallback;
  std::vector<double> out;
  for (const std::string& s : split_list(raw(key))) out.push_back(to_double(key, s));
  return out;
}

std::vector<int> KeyValues::get_ints(const std::string& key, const std::vector<int>& fallback) const {
  if (!has(key)) return fallback;
  std::vector<int> out;
  for (const std::string& s : split_list(raw(key))) out.push_back(static_cast<int>(to_long(key, s)));
  return out;
}

void KeyValues::reject_unknown(const std::string& context) const {
  for (const auto& [key, value] : values_) {
    if (!used_.count(key)) {
      throw ConfigError(context + ": unknown key '" + key + "' (line " + std::to_string(lines_.at(key)) + ")");
    }
  }
}

void KeyValues::set(const std::string& key, const std::string& value) {
  values_[key] = value;
  used_[key] = true;
}

void KeyValues::write(std::ostream& os) const {
  for (const auto& [key, value] : values_) os << key << '=' << value << '\n';
}

std::string join_doubles(const std::vector<double>& v) {
  std::string out;
  char buf[64];
  for (std::size_t i = 0; i < v.size(); ++i) {
    // Shortest representation that reads back to the same double.
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v[i]);
    (void)ec;
    out += (i ? "," : "") + std::string(buf, ptr);
  }
  return out;
}

std::string join_ints(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

}  // namespace adahead
