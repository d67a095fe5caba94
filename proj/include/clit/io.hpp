#pragma once

// Dataset directories: x.csv and z.csv (n x q, header row = grid times),
// events.csv (subject, event_index, censored) and meta.json (the generating
// configuration).

#include "clit/core.hpp"
#include "clit/sim.hpp"

#include <filesystem>
#include <optional>
#include <string>

namespace clit {

std::string dgp_to_json(const DgpConfig& cfg, bool pretty = true);
DgpConfig dgp_from_json(const std::string& text);  // throws InputError

void write_dataset(const std::filesystem::path& dir, const SimulatedDataset& sim);
void write_dataset(const std::filesystem::path& dir, const Dataset& data, const std::optional<DgpConfig>& meta);

struct LoadedDataset {
  Dataset data;
  std::optional<DgpConfig> meta;  // present when meta.json exists
};

// Throws ParseError (with a line number) on malformed CSV and InputError on
// missing files or inconsistent shapes.
LoadedDataset read_dataset(const std::filesystem::path& dir);

}  // namespace clit
