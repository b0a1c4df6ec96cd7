#include <algorithm>
#include <deque>
#include <random>
#include <vector>

#include "v2v/montecarlo.hpp"

namespace v2v::sim {

CellularMcResult simulate_cellular_mc(const cellular::BackoffParams& p, long packets,
                                      std::uint64_t seed) {
  const cellular::Windows w = cellular::contention_windows(p);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  struct Station {
    std::deque<double> queue;  // arrival times
    int stage = 0;
    long counter = 0;
  };
  std::vector<Station> st(p.n);
  auto draw = [&](Station& s) {
    s.counter = std::uniform_int_distribution<long>(0, long(w.cw[s.stage]))(rng);
  };

  CellularMcResult out;
  auto& stats = out.stats;
  std::vector<double> delays;
  if (p.lambda <= 0.0 || packets <= 0) return out;
  const long warmup = packets / 10;
  delays.reserve(packets);

  double t = 0.0;
  std::vector<int> tx;
  auto complete = [&](Station& s, double end) {
    const double d = end - s.queue.front();
    s.queue.pop_front();
    if (stats.completed++ >= warmup && long(delays.size()) < packets) delays.push_back(d);
    if (!s.queue.empty()) draw(s);
  };

  while (long(delays.size()) < packets) {
    tx.clear();
    for (int i = 0; i < p.n; ++i) {
      if (!st[i].queue.empty() && st[i].counter == 0) tx.push_back(i);
    }
    double duration = 1.0;
    if (tx.empty()) {
      for (auto& s : st) {
        if (!s.queue.empty()) --s.counter;
      }
    } else if (tx.size() == 1) {
      duration = p.t_s;
      ++stats.attempts;
      Station& s = st[tx.front()];
      s.stage = 0;
      complete(s, t + duration);
    } else {
      duration = p.t_C;
      for (int i : tx) {
        ++stats.attempts;
        ++stats.collided;
        Station& s = st[i];
        s.stage = s.stage < p.M ? s.stage + 1 : 0;
        complete(s, t + duration);
      }
    }

    // Arrivals during [t, t + duration).
    std::poisson_distribution<long> arrivals(p.lambda * duration);
    for (auto& s : st) {
      const long k = arrivals(rng);
      if (k == 0) continue;
      std::vector<double> at(k);
      for (auto& a : at) a = t + duration * unit(rng);
      std::sort(at.begin(), at.end());
      const bool was_empty = s.queue.empty();
      for (double a : at) {
        if (long(s.queue.size()) >= p.L) {
          ++stats.dropped;
        } else {
          s.queue.push_back(a);
        }
      }
      if (was_empty && !s.queue.empty()) draw(s);
    }
    t += duration;
  }
  stats.slots = t;
  out.delays = EmpiricalCcdf(std::move(delays));
  return out;
}

}  // namespace v2v::sim
