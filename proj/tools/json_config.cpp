#include "json_config.hpp"

#include <json.hpp>

namespace alle::cli {

namespace {

using nlohmann::json;

std::string scalar_text(const json& value) {
  if (value.is_string()) return value.get<std::string>();
  if (value.is_boolean()) return value.get<bool>() ? "true" : "false";
  if (value.is_null()) return "";
  return value.dump();
}

void flatten(const json& object, std::vector<std::string>& parents, std::vector<CLI::ConfigItem>& out) {
  for (const auto& [key, value] : object.items()) {
    if (value.is_object()) {
      // {"fit": {...}} inside a fit run addresses the same section.
      const bool same_section = !parents.empty() && parents.back() == key;
      if (same_section) {
        flatten(value, parents, out);
        continue;
      }
      parents.push_back(key);
      flatten(value, parents, out);
      parents.pop_back();
      continue;
    }
    CLI::ConfigItem item;
    item.parents = parents;
    item.name = key;
    if (value.is_array()) {
      for (const auto& element : value) {
        if (element.is_structured()) {
          throw CLI::ConversionError("config key '" + key + "' holds a nested array or object");
        }
        item.inputs.push_back(scalar_text(element));
      }
    } else {
      item.inputs.push_back(scalar_text(value));
    }
    out.push_back(std::move(item));
  }
}

}  // namespace

std::vector<CLI::ConfigItem> JsonConfig::from_config(std::istream& input) const {
  json root;
  try {
    root = json::parse(input);
  } catch (const json::parse_error& e) {
    throw CLI::ConversionError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) throw CLI::ConversionError("config must be a JSON object");
  std::vector<CLI::ConfigItem> items;
  std::vector<std::string> parents;
  if (!section_.empty()) parents.push_back(section_);
  flatten(root, parents, items);
  return items;
}

std::string JsonConfig::to_config(const CLI::App* app, bool default_also, bool, std::string) const {
  json out = json::object();
  for (const CLI::Option* opt : app->get_options()) {
    if (opt->get_lnames().empty() || !opt->get_configurable()) continue;
    const std::string& name = opt->get_lnames().front();
    if (opt->count() > 0) {
      const auto& results = opt->results();
      if (opt->get_type_size() == 0) {
        out[name] = true;
      } else if (results.size() == 1) {
        out[name] = results.front();
      } else {
        out[name] = results;
      }
    } else if (default_also && !opt->get_default_str().empty()) {
      out[name] = opt->get_default_str();
    }
  }
  return out.dump(2);
}

}  // namespace alle::cli
