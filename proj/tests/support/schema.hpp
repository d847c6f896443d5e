#pragma once

// Structural skeleton of a JSON document: values replaced by their type name,
// arrays reduced to the skeleton of their first element.

#include <filesystem>
#include <fstream>

#include <json.hpp>

namespace pprgo::testing {

inline nlohmann::json schema_of(const nlohmann::json& j) {
  using nlohmann::json;
  switch (j.type()) {
    case json::value_t::object: {
      json out = json::object();
      for (const auto& item : j.items()) out[item.key()] = schema_of(item.value());
      return out;
    }
    case json::value_t::array: {
      json out = json::array();
      if (!j.empty()) out.push_back(schema_of(j.front()));
      return out;
    }
    case json::value_t::string: return "string";
    case json::value_t::boolean: return "boolean";
    case json::value_t::null: return "null";
    default: return "number";
  }
}

inline nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  return nlohmann::json::parse(in);
}

}  // namespace pprgo::testing
