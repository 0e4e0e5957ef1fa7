/*
 * Copyright 2026 The reactpref Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <filesystem>
#include <initializer_list>
#include <string>
#include <string_view>

#include "json.hpp"
#include "reactpref/core/error.hpp"

namespace reactpref {

using Json = nlohmann::json;

Json parse_json(std::string_view text, ErrorKind kind, std::string_view what);

/// Throws Error(Config) naming the first key of `obj` not in `allowed`.
void reject_unknown_keys(const Json& obj, std::initializer_list<std::string_view> allowed,
                         std::string_view path);

void expect_object(const Json& value, std::string_view path);

/// Reads `key` from `obj` if present, converting with a Config error on type
/// mismatch; otherwise returns `fallback`.
template <class T>
T value_or(const Json& obj, const char* key, T fallback, std::string_view path) {
  const auto it = obj.find(key);
  if (it == obj.end()) return fallback;
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    fail(ErrorKind::Config,
         std::string(path) + "." + key + ": unexpected value " + it->dump());
  }
}

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view content);

}  // namespace reactpref
