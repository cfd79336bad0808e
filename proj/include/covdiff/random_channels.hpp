#pragma once

#include "covdiff/channels.hpp"
#include "covdiff/lindblad.hpp"
#include "covdiff/rng.hpp"

namespace covdiff {

// Random dephasing channel: num_kraus momentum-diagonal operators with
// weights normalized per source and independent random phases.
CovariantChannel random_momentum_diagonal_channel(const BoxLattice& lattice, int num_kraus,
                                                  RandomStream& rng);

struct DiffusiveChannelOptions {
  int max_transfer = 1;            // per-axis bound on sampled transfers
  double min_off_fraction = 0.2;   // nonzero-transfer mass floor per source
  bool momentum_conserving = true; // mirror q and -q magnitudes per source
};

// Random channel that genuinely moves momentum: every source with room for
// a nonzero transfer carries at least min_off_fraction of its mass off
// center.  In conserving mode only transfer pairs whose mirror also fits
// the window are used and both members get the same magnitude, so the mean
// momentum is exactly preserved for every input state.
CovariantChannel random_diffusive_channel(const BoxLattice& lattice,
                                          const DiffusiveChannelOptions& options,
                                          RandomStream& rng);

// Random pure-dephasing generator: num_ops zero-transfer jump operators
// with complex Gaussian values of scale sqrt(rate_scale).
LindbladGenerator random_momentum_diagonal_generator(const BoxLattice& lattice, int num_ops,
                                                     double rate_scale, RandomStream& rng);

}  // namespace covdiff
