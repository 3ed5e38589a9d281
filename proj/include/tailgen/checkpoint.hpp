#pragma once

#include <string>

#include "tailgen/flow.hpp"
#include "tailgen/tail.hpp"

namespace tailgen {

/// Checkpoints are versioned, self-describing text: a `tailgen-checkpoint v1`
/// banner, named header fields, per-layer mask + parameter blocks (coupling
/// stacks) or a single parameter block (plain nets). Floats carry 17
/// significant digits, so save/load round-trips bit-exactly. Loaders reject
/// unknown versions and unknown type tags.
void save_flow_checkpoint(const std::string& path, const FlowModel& model);
FlowModel load_flow_checkpoint(const std::string& path);

void save_tail_checkpoint(const std::string& path, const TailNet& tail);
TailNet load_tail_checkpoint(const std::string& path);

}  // namespace tailgen
