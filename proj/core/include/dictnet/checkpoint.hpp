#pragma once

#include <string>

#include "dictnet/layer.hpp"
#include "dictnet/rica.hpp"

namespace dictnet {

/// Cell-level provenance stored with every checkpoint so a run is
/// reproducible from config + seeds.
struct CheckpointMeta {
  std::string experiment_id;
  std::string strategy;
  double fraction = 1.0;
  std::uint64_t seed = 0;
};

/// Binary checkpoint of a whole network (dictionaries included) or a RICA
/// model. Little-endian; intended for same-architecture round trips.
void save_network_checkpoint(const std::string& path, const Network& net,
                             const CheckpointMeta& meta);
void save_rica_checkpoint(const std::string& path, const RicaModel& model,
                          const CheckpointMeta& meta);

struct LoadedCheckpoint {
  CheckpointMeta meta;
  bool is_network = false;
  Network network;
  RicaModel rica;
};

/// Throws FormatError (with byte offset) on anything malformed.
LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace dictnet
