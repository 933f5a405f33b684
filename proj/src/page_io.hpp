#pragma once

// On-disk page documents (schema version 1):
//
//   {
//     "schema_version": 1,
//     "page_id": "doc-17",
//     "width": 1000, "height": 1300,            // pixels
//     "image": "doc-17.pgm",                    // optional, relative to the file
//     "categories": ["title", "text", ...],      // optional class names
//     "boxes": [{"id": 0, "bbox": [x0, y0, x1, y1], "text": "..."}],
//     "labels": {                               // optional
//       "node_category": [0, 1, ...],
//       "groups": [[0, 1], [2]],
//       "links": [[0, 1]]                        // optional, directed group pairs
//     }
//   }

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "geometry.hpp"

namespace p2g {

inline constexpr int kPageSchemaVersion = 1;

/// Validates and ingests a page document. Relative image paths resolve
/// against `base_dir`.
Page parse_page(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
nlohmann::json page_to_json(const Page& page);

Page load_page_file(const std::filesystem::path& path);
void save_page_file(const Page& page, const std::filesystem::path& path);

/// Throws SchemaError unless labels fit a page of `n` boxes.
void validate_labels(const GoldLabels& labels, std::size_t n, std::size_t n_categories);

enum class DataFormat { Page, Funsd };
enum class FunsdLevel { Word, Entity };

/// All *.json files of a directory in filename order.
std::vector<Page> load_dataset(const std::filesystem::path& dir, DataFormat format, FunsdLevel level);

nlohmann::json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

/// Number of node categories a dataset uses: its name list if present, else max label + 1.
int dataset_category_count(const std::vector<Page>& pages);

}  // namespace p2g
