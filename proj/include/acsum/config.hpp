#pragma once

#include <map>
#include <string>
#include <string_view>

#include "acsum/model.hpp"
#include "acsum/training.hpp"

namespace acsum {

struct RunConfig {
  ModelConfig model;
  TrainConfig train;
  std::size_t vocab_max_size = 50000;
  std::size_t min_count = 1;

  /// Applies one `key=value` setting; unknown keys are a usage error.
  void set(std::string_view key, std::string_view value);
  /// Flat key=value lines; '#' starts a comment.
  void merge_text(std::string_view text);
  void merge_file(const std::string& path);

  std::map<std::string, std::string> to_map() const;
  static RunConfig from_map(const std::map<std::string, std::string>& entries);
  std::string to_text() const;
};

}  // namespace acsum
