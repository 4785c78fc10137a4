#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace nsctl {

struct SchemaIssue {
  std::string path;  // JSON pointer into the instance
  std::string message;
};

// Validator for the JSON Schema keywords the run-config schema uses: type,
// enum, properties, required, additionalProperties, items, minItems,
// maxItems, uniqueItems, minimum, maximum, exclusiveMinimum, minLength,
// pattern, oneOf and local "#/$defs/..." references. Unknown keywords are
// rejected at construction so the schema cannot silently grow past it.
class SchemaValidator {
 public:
  explicit SchemaValidator(nlohmann::json schema);

  std::vector<SchemaIssue> validate(const nlohmann::json& instance) const;

 private:
  void check(const nlohmann::json& schema, const nlohmann::json& value, const std::string& path,
             std::vector<SchemaIssue>& out) const;
  const nlohmann::json& resolve(const std::string& ref) const;

  nlohmann::json root_;
};

// The run-config schema compiled into the library.
const std::string& run_config_schema_text();
const SchemaValidator& run_config_validator();

}  // namespace nsctl
