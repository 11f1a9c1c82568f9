#pragma once

#include <memory>
#include <string>

#include <json.hpp>

#include "bilin/bilinear.hpp"
#include "bilin/hypothesis.hpp"

namespace bilin {

inline constexpr const char* kClassSchema = "bilin.class/1";

// Class document: schema tag, environment descriptor, feature dimensions and every member's
// kind, value tables and payload arrays.
nlohmann::json class_to_json(const HypothesisClass& cls, const std::string& descriptor,
                             const BilinearSpec* spec = nullptr);

struct LoadedClass {
  HypothesisClass cls;
  std::string descriptor;
};

// Throws SchemaMismatch on malformed documents. Vector-state classes need the planner's indexer.
LoadedClass class_from_json(const nlohmann::json& doc, std::shared_ptr<const StateIndexer> indexer = nullptr);

void save_class(const std::string& path, const HypothesisClass& cls, const std::string& descriptor,
                const BilinearSpec* spec = nullptr);
LoadedClass load_class(const std::string& path, std::shared_ptr<const StateIndexer> indexer = nullptr);

nlohmann::json read_json_file(const std::string& path);
void write_json_file(const std::string& path, const nlohmann::json& doc);

}  // namespace bilin
