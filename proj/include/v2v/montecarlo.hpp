#pragma once

// Monte Carlo channel simulators used as oracles for the analytic bounds and
// as delay sources for the platoon simulator.

#include <cstdint>

#include "v2v/cellular.hpp"
#include "v2v/empirical.hpp"
#include "v2v/mmwave.hpp"

namespace v2v::sim {

struct CellularMcStats {
  double slots = 0.0;  // simulated time
  long attempts = 0;
  long collided = 0;  // attempts that overlapped another transmission
  long dropped = 0;   // arrivals rejected by a full queue
  long completed = 0;

  double collision_fraction() const { return attempts ? double(collided) / attempts : 0.0; }
};

struct CellularMcResult {
  EmpiricalCcdf delays;  // slots, arrival to end of the transmission
  CellularMcStats stats;
};

// Slot-level simulation of n stations with Poisson arrivals, FIFO queues of
// length L and the exponential backoff of the analytic model. A collided
// broadcast is not retransmitted; the collision only advances the sender's
// backoff stage. Records `packets` delays after discarding a warm-up of
// packets / 10 completions.
CellularMcResult simulate_cellular_mc(const cellular::BackoffParams& p, long packets,
                                      std::uint64_t seed);

// Fluid discrete-time tandem of n - 1 hops fed by Poisson(lambda_agg)
// packets per tick. Hop h serves capacity_scale * log2(1 + X) per tick with X
// drawn from the kernel variable of the link into node h + 2. Buffers are
// unbounded. By default a hop may forward traffic that arrived in the same
// tick (cut-through); with `pipeline` each hop only serves what it held at
// the start of the tick. Delays are in ticks.
EmpiricalCcdf simulate_mmwave_mc(const mmwave::MmWaveParams& p, double lambda_agg, long packets,
                                 std::uint64_t seed, bool pipeline = false);

}  // namespace v2v::sim
