#include <cmath>
#include <deque>
#include <random>
#include <vector>

#include "v2v/montecarlo.hpp"

namespace v2v::sim {

EmpiricalCcdf simulate_mmwave_mc(const mmwave::MmWaveParams& p, double lambda_agg, long packets,
                                 std::uint64_t seed, bool pipeline) {
  p.validate();
  std::vector<double> delays;
  if (!(lambda_agg > 0.0) || packets <= 0) return EmpiricalCcdf{};
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> shadow(0.0, 1.0);
  std::poisson_distribution<long> arrivals(lambda_agg);

  const int hops = p.n_vehicles - 1;
  std::vector<double> backlog(hops, 0.0), served(hops, 0.0);
  std::deque<long> arrival_tick;  // one entry per packet not yet delivered
  double delivered = 0.0;         // cumulative fluid out of the last hop
  long popped = 0;
  const long warmup = packets / 10;
  delays.reserve(packets);

  for (long t = 0; long(delays.size()) < packets; ++t) {
    for (int h = 0; h < hops; ++h) {
      const double xi = p.v * shadow(rng);
      const auto link = mmwave::link_sinr(p, h + 2, xi);
      const double x = p.kernel == mmwave::KernelVariable::sinr ? link.sinr : link.gain;
      served[h] = p.capacity_scale * std::log2(1.0 + x);
    }
    const long k = arrivals(rng);
    for (long j = 0; j < k; ++j) arrival_tick.push_back(t);

    if (pipeline) {
      std::vector<double> out(hops);
      for (int h = 0; h < hops; ++h) {
        out[h] = std::min(backlog[h], served[h]);
        backlog[h] -= out[h];
      }
      for (int h = 0; h + 1 < hops; ++h) backlog[h + 1] += out[h];
      delivered += out[hops - 1];
      backlog[0] += double(k);
    } else {
      backlog[0] += double(k);
      for (int h = 0; h < hops; ++h) {
        const double out = std::min(backlog[h], served[h]);
        backlog[h] -= out;
        if (h + 1 < hops) {
          backlog[h + 1] += out;
        } else {
          delivered += out;
        }
      }
    }

    // Packet number popped + 1 has left once the cumulative output covers it.
    while (!arrival_tick.empty() && delivered >= double(popped + 1) - 1e-9) {
      if (popped >= warmup && long(delays.size()) < packets) {
        delays.push_back(double(t - arrival_tick.front()));
      }
      arrival_tick.pop_front();
      ++popped;
    }
  }
  return EmpiricalCcdf(std::move(delays));
}

}  // namespace v2v::sim
