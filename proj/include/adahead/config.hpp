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

#ifndef ADAHEAD_CONFIG_HPP_
#define ADAHEAD_CONFIG_HPP_

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace adahead {

// Ordered key=value document. Blank lines and lines starting with '#' are
// skipped; whitespace around keys and values is trimmed.
class KeyValues {
 public:
  static KeyValues parse(std::istream& is);
  static KeyValues load(const std::string& path);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::string& raw(const std::string& key) const;

  // Each getter marks the key as consumed.
  std::string get_string(const std::string& key, const std::string& fallback) const;
  long get_int(const std::string& key, long fallback) const;
  double get_double(const std::string& key, double fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<double> get_doubles(const std::string& key, const std::vector<double>& fallback) const;
  std::vector<int> get_ints(const std::string& key, const std::vector<int>& fallback) const;

  // Throws ConfigError naming the first key no getter asked for.
  void reject_unknown(const std::string& context) const;

  void set(const std::string& key, const std::string& value);
  void write(std::ostream& os) const;

 private:
  std::map<std::string, std::string> values_;
  std::map<std::string, int> lines_;
  mutable std::map<std::string, bool> used_;
};

std::string join_doubles(const std::vector<double>& v);
std::string join_ints(const std::vector<int>& v);

}  // namespace adahead

#endif  // ADAHEAD_CONFIG_HPP_
