#pragma once

#include <filesystem>
#include <vector>

#include "covdiff/channels.hpp"
#include "covdiff/lindblad.hpp"
#include "covdiff/states.hpp"

namespace covdiff::io {

// Plain-text formats, one per object kind, all beginning with a
// "<kind>-format 1" line followed by the lattice fields.  Floats are
// written with 17 significant digits, so save followed by load reproduces
// every value bitwise.  Zero entries are omitted.
//
//   channel-format 1          density-format 1       generator-format 1
//   dim 1                     (lattice fields)       (lattice fields)
//   n_max 8                   matrix 17              terms 33
//   box_length 6.28...        <re im re im ...>      term <label> <q...> <count>
//   hbar 1                    ... one line per row   <n...> <re> <im>
//   blocks 33
//   block <kraus> <q...> <count>
//   <n...> <re> <im>

void save_channel(const CovariantChannel& channel, const std::filesystem::path& path);
// Validates completeness through the CovariantChannel constructor.
CovariantChannel load_channel(const std::filesystem::path& path);

struct RawChannelData {
  BoxLattice lattice;
  std::vector<TransferBlock> blocks;
};

// Parses without the completeness check, for inspecting files that do not
// describe a trace-preserving map (partial tables, corrupted input).
RawChannelData load_channel_raw(const std::filesystem::path& path);

void save_density(const DensityMatrix& rho, const std::filesystem::path& path);
// Looser limits let states that were themselves produced with relaxed
// validation (ensemble averages, integrator output) round-trip.
DensityMatrix load_density(const std::filesystem::path& path, ValidationLimits limits = {});

void save_generator(const LindbladGenerator& gen, const std::filesystem::path& path);
LindbladGenerator load_generator(const std::filesystem::path& path);

}  // namespace covdiff::io
