#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hedgefair/core.hpp"

namespace hedgefair {

/// Header of the hiring dataset CSV.
inline constexpr const char* kDatasetHeader =
    "id,gender,school,city,zip,truth,loss_reject,loss_accept";

/// Schema facts that are not recoverable from the CSV alone.
struct SchemaSidecar {
  std::vector<std::string> cities;
  std::map<std::string, std::string> zip_to_group;
};

/// Parses the dataset CSV. Without a sidecar, cities are the four defaults
/// plus any others seen, and zips are grouped by leading digit.
Dataset read_dataset_csv(const std::filesystem::path& path,
                         const std::optional<SchemaSidecar>& sidecar = std::nullopt);
Dataset parse_dataset_csv(const std::string& text,
                          const std::optional<SchemaSidecar>& sidecar = std::nullopt);

std::string format_dataset_csv(const Dataset& data);
void write_dataset_csv(const Dataset& data, const std::filesystem::path& path);

SchemaSidecar sidecar_from_schema(const AttributeSchema& schema);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double x);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace hedgefair
