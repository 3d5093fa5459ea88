#pragma once

#include <string>

#include "core/corpus.hpp"

namespace relrefine {

struct pipeline_config {
  double grid_step = 0.05;
  int icl_pos = 1;
  int icl_neg = 1;
  int jobs = 1;
  size_t max_prompt_chars = 0;

  // Canonical form: fixed key order, used for the run-manifest config hash.
  ordered_json to_json() const;
};

// JSON or TOML decided by extension (.json/.toml), falling back to content
// sniffing. Unknown keys are errors.
pipeline_config load_config(const std::string& path);

pipeline_config config_from_json(const ordered_json& obj);

}  // namespace relrefine
