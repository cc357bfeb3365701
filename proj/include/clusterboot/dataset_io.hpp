#pragma once

// CSV form of a ClusterDataset:
//
//   population_id,value
//   north,1.5
//   north,2.25
//   south,0.75
//
// One row per observation, rows of a population contiguous, values written
// in the shortest form that reads back exactly (at most 17 significant digits).

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>

#include "clusterboot/model.hpp"

namespace cboot {

/// Shortest round-trip form; parse_double(format_double(x)) == x.
std::string format_double(double x);

std::optional<double> parse_double(std::string_view text);

ClusterDataset read_csv(std::istream& in);
ClusterDataset read_csv_file(const std::filesystem::path& path);

void write_csv(std::ostream& out, const ClusterDataset& data);
void write_csv_file(const std::filesystem::path& path, const ClusterDataset& data);

} // namespace cboot
