#pragma once

// FUNSD form annotations: {"form": [{"id", "label", "box", "words": [{"box", "text"}], "linking": [[a, b]]}]}

#include <string>
#include <vector>

#include <json.hpp>

#include "geometry.hpp"
#include "page_io.hpp"

namespace p2g {

inline const std::vector<std::string> kFunsdCategories{"header", "question", "answer", "other"};

struct FunsdOptions {
  FunsdLevel level = FunsdLevel::Word;
  std::string page_id = "funsd";
  int width = 0;   // 0: smallest page containing every box
  int height = 0;
};

struct FunsdResult {
  Page page;
  std::vector<std::string> warnings;
};

/// Word level: one node per word, groups = entities. Entity level: one node per
/// entity (box = bounding rect of its words), directed links carried over.
FunsdResult funsd_adapter(const nlohmann::json& doc, const FunsdOptions& opts = {});

}  // namespace p2g
