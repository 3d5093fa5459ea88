#include "core/config.hpp"

#include <algorithm>
#include <cctype>

namespace relrefine {

ordered_json pipeline_config::to_json() const {
  ordered_json obj = ordered_json::object();
  obj["grid_step"] = grid_step;
  obj["icl_pos"] = icl_pos;
  obj["icl_neg"] = icl_neg;
  obj["jobs"] = jobs;
  obj["max_prompt_chars"] = max_prompt_chars;
  return obj;
}

namespace {

void apply_key(pipeline_config& config, const std::string& key, const ordered_json& value) {
  if (key == "grid_step") {
    if (!value.is_number()) fail(errc::config, "key grid_step: expected number");
    config.grid_step = value.get<double>();
    if (!(config.grid_step > 0.0 && config.grid_step <= 1.0)) {
      fail(errc::config, "key grid_step: must lie in (0,1]");
    }
  } else if (key == "icl_pos" || key == "icl_neg") {
    if (!value.is_number_integer()) fail(errc::config, "key " + key + ": expected integer");
    int v = value.get<int>();
    if (v < 0) fail(errc::config, "key " + key + ": must be >= 0");
    (key == "icl_pos" ? config.icl_pos : config.icl_neg) = v;
  } else if (key == "jobs") {
    if (!value.is_number_integer()) fail(errc::config, "key jobs: expected integer");
    config.jobs = value.get<int>();
    if (config.jobs < 1) fail(errc::config, "key jobs: must be >= 1");
  } else if (key == "max_prompt_chars") {
    if (!value.is_number_integer() || value.get<int64_t>() < 0) {
      fail(errc::config, "key max_prompt_chars: expected non-negative integer");
    }
    config.max_prompt_chars = value.get<size_t>();
  } else {
    fail(errc::config, "unknown key " + key);
  }
}

// Flat key = value lines; strings, integers, floats and booleans only.
ordered_json parse_mini_toml(const std::string& content) {
  ordered_json obj = ordered_json::object();
  size_t line_no = 0;
  for (const std::string& raw_line : split(content, '\n')) {
    ++line_no;
    std::string line = trim(raw_line);
    if (line.empty() || line[0] == '#') continue;
    if (line[0] == '[') {
      fail(errc::config,
           "line " + std::to_string(line_no) + ": sections are not supported in config files");
    }
    size_t eq = line.find('=');
    if (eq == std::string::npos) {
      fail(errc::config, "line " + std::to_string(line_no) + ": expected key = value");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    size_t hash = value.find(" #");
    if (hash != std::string::npos && value.front() != '"') value = trim(value.substr(0, hash));
    if (key.empty() || value.empty()) {
      fail(errc::config, "line " + std::to_string(line_no) + ": expected key = value");
    }
    if (value.front() == '"') {
      if (value.size() < 2 || value.back() != '"') {
        fail(errc::config, "line " + std::to_string(line_no) + ": unterminated string");
      }
      obj[key] = value.substr(1, value.size() - 2);
    } else if (value == "true" || value == "false") {
      obj[key] = value == "true";
    } else if (value.find('.') != std::string::npos || value.find('e') != std::string::npos) {
      try {
        size_t consumed = 0;
        double parsed = std::stod(value, &consumed);
        if (consumed != value.size()) throw std::invalid_argument(value);
        obj[key] = parsed;
      } catch (const std::exception&) {
        fail(errc::config, "line " + std::to_string(line_no) + ": invalid number '" + value + "'");
      }
    } else {
      try {
        size_t consumed = 0;
        long long parsed = std::stoll(value, &consumed);
        if (consumed != value.size()) throw std::invalid_argument(value);
        obj[key] = parsed;
      } catch (const std::exception&) {
        fail(errc::config, "line " + std::to_string(line_no) + ": invalid value '" + value + "'");
      }
    }
  }
  return obj;
}

bool has_extension(const std::string& path, const char* extension) {
  size_t dot = path.rfind('.');
  if (dot == std::string::npos) return false;
  std::string ext = path.substr(dot);
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == extension;
}

}  // namespace

pipeline_config config_from_json(const ordered_json& obj) {
  if (!obj.is_object()) fail(errc::config, "config must be an object");
  pipeline_config config;
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    apply_key(config, it.key(), it.value());
  }
  return config;
}

pipeline_config load_config(const std::string& path) {
  std::string content = read_file(path);
  bool json = has_extension(path, ".json");
  bool toml = has_extension(path, ".toml");
  if (!json && !toml) {
    size_t first = content.find_first_not_of(" \t\r\n");
    json = first != std::string::npos && content[first] == '{';
  }
  ordered_json obj;
  if (json) {
    obj = ordered_json::parse(content, nullptr, false);
    if (obj.is_discarded()) fail(errc::config, "malformed JSON in config file: " + path);
  } else {
    obj = parse_mini_toml(content);
  }
  return config_from_json(obj);
}

}  // namespace relrefine
