#include "v2v/predictor.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "v2v/error.hpp"

namespace v2v::predictor {
namespace {

constexpr const char* kSchema = "v2v.predictor/1";

std::vector<double> one_hot(const Context& c, int levels) {
  std::vector<double> x(c.size() * std::size_t(levels), 0.0);
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c[i] < 0 || c[i] >= levels) throw DomainError("context level out of range");
    x[i * levels + c[i]] = 1.0;
  }
  return x;
}

Distribution softmax(const std::vector<double>& z) {
  const double m = *std::max_element(z.begin(), z.end());
  Distribution p(z.size());
  double s = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) s += p[i] = std::exp(z[i] - m);
  for (auto& v : p) v /= s;
  return p;
}

}  // namespace

void MarkovConfig::validate() const {
  if (order < 1) throw DomainError("Markov order must be >= 1");
  if (levels() < 2) throw DomainError("need at least 3 bin edges (2 levels)");
  for (std::size_t i = 1; i < bin_edges.size(); ++i) {
    if (!(bin_edges[i] > bin_edges[i - 1])) throw DomainError("bin edges must be strictly increasing");
  }
  if (!(zeta < 0.0)) throw DomainError("zeta must be negative");
  if (horizon < 1) throw DomainError("horizon must be >= 1");
  if (!(threshold >= 0.0 && threshold < 1.0)) throw DomainError("threshold must lie in [0, 1)");
  if (!(epsilon > 0.0)) throw DomainError("epsilon must be positive");
}

int discretize(double value, const std::vector<double>& bin_edges) {
  if (bin_edges.size() < 2) throw DomainError("need at least two bin edges");
  if (!std::isfinite(value)) throw DomainError("cannot discretize a non-finite value");
  const int bins = int(bin_edges.size()) - 1;
  const auto it = std::upper_bound(bin_edges.begin(), bin_edges.end(), value);
  const int idx = int(it - bin_edges.begin()) - 1;
  return std::clamp(idx, 0, bins - 1);
}

long TransitionTable::context_count(const Context& c) const {
  const auto it = counts.find(c);
  if (it == counts.end()) return 0;
  return std::accumulate(it->second.begin(), it->second.end(), 0L);
}

Distribution TransitionTable::row(const Context& c) const {
  const auto it = freq.find(c);
  if (it == freq.end()) return Distribution(levels, 1.0 / levels);
  return it->second;
}

TransitionTable estimate_frequencies(const std::vector<std::vector<int>>& sequences,
                                     const MarkovConfig& cfg) {
  cfg.validate();
  TransitionTable t;
  t.order = cfg.order;
  t.levels = cfg.levels();
  for (const auto& s : sequences) {
    if (int(s.size()) < cfg.order + 1) throw DomainError("sequence shorter than order + 1");
    for (int v : s) {
      if (v < 0 || v >= t.levels) throw DomainError("sequence level out of range");
    }
    for (std::size_t i = cfg.order; i < s.size(); ++i) {
      Context c(s.begin() + long(i) - cfg.order, s.begin() + long(i));
      auto& row = t.counts[c];
      if (row.empty()) row.assign(t.levels, 0);
      ++row[s[i]];
    }
  }
  for (const auto& [c, row] : t.counts) {
    const double total = double(std::accumulate(row.begin(), row.end(), 0L));
    Distribution p(t.levels);
    for (int k = 0; k < t.levels; ++k) p[k] = double(row[k]) / total;
    t.freq[c] = std::move(p);
  }
  return t;
}

double confidence_factor(double count, double zeta) {
  if (!(count >= 0.0)) throw DomainError("count must be >= 0");
  if (!(zeta < 0.0)) throw DomainError("zeta must be negative");
  return -std::expm1(zeta * count);
}

TransitionTable smooth_frequencies(const TransitionTable& table, const MarkovConfig& cfg) {
  cfg.validate();
  TransitionTable out = table;
  for (auto& [c, p] : out.freq) {
    const int zeros = int(std::count(p.begin(), p.end(), 0.0));
    if (zeros == 0) continue;
    const double share = confidence_factor(double(table.context_count(c)), cfg.zeta) / zeros;
    if (share == 0.0) continue;
    for (auto& v : p) {
      if (v == 0.0) {
        v = share;
      } else {
        v -= share;
        if (cfg.smoothing == Smoothing::renormalized) v = std::max(v, cfg.epsilon);
      }
    }
    if (cfg.smoothing == Smoothing::renormalized) {
      const double s = std::accumulate(p.begin(), p.end(), 0.0);
      for (auto& v : p) v /= s;
    }
  }
  return out;
}

PredictorModel::PredictorModel(int order, int levels, nn::Mlp net)
    : order_(order), levels_(levels), net_(std::move(net)) {
  if (net_.inputs() != order_ * levels_ || net_.outputs() != levels_) {
    throw DomainError("network shape does not match order and levels");
  }
}

Distribution PredictorModel::predict(const Context& c) const {
  if (int(c.size()) != order_) throw DomainError("context length must equal the Markov order");
  return softmax(net_.forward(one_hot(c, levels_)));
}

nlohmann::json PredictorModel::to_json() const {
  return {{"schema", kSchema}, {"order", order_}, {"levels", levels_}, {"network", net_.to_json()}};
}

PredictorModel PredictorModel::from_json(const nlohmann::json& j) {
  try {
    if (j.at("schema").get<std::string>() != kSchema) {
      throw ConfigError("unsupported predictor schema " + j.at("schema").dump());
    }
    return PredictorModel(j.at("order").get<int>(), j.at("levels").get<int>(),
                          nn::Mlp::from_json(j.at("network")));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed predictor model: ") + e.what());
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  }
}

double total_variation(const Distribution& a, const Distribution& b) {
  if (a.size() != b.size()) throw DomainError("distributions differ in length");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
  return 0.5 * s;
}

TrainedPredictor train_predictor(const TransitionTable& table, const MarkovConfig& cfg,
                                 const PredictorOptions& opts) {
  cfg.validate();
  if (table.freq.empty()) throw DomainError("transition table is empty");
  if (table.order != cfg.order || table.levels != cfg.levels()) {
    throw DomainError("table shape does not match the config");
  }
  std::vector<std::vector<double>> x;
  std::vector<Distribution> y;
  for (const auto& [c, p] : table.freq) {
    x.push_back(one_hot(c, table.levels));
    y.push_back(p);
  }
  std::vector<int> dims{table.order * table.levels};
  dims.insert(dims.end(), opts.hidden.begin(), opts.hidden.end());
  dims.push_back(table.levels);
  nn::Mlp net(dims, opts.train.seed);

  // Cross-entropy against the soft labels; gradient wrt logits is p - y.
  const nn::LossFn ce = [&y](std::size_t r, std::span<const double> z, std::span<double> dz) {
    const Distribution p = softmax(std::vector<double>(z.begin(), z.end()));
    double l = 0.0;
    for (std::size_t k = 0; k < p.size(); ++k) {
      dz[k] = p[k] - y[r][k];
      if (y[r][k] > 0.0) l -= y[r][k] * std::log(std::max(p[k], 1e-300) / y[r][k]);
    }
    return l;
  };
  TrainedPredictor out;
  out.report = nn::train(net, x, ce, opts.train);
  out.model = PredictorModel(table.order, table.levels, std::move(net));
  for (const auto& [c, p] : table.freq) {
    out.max_tv = std::max(out.max_tv, total_variation(out.model.predict(c), p));
  }
  return out;
}

int worst_case_horizon(const TransitionFn& next, const Context& current, int horizon,
                       double threshold) {
  if (horizon < 1) throw DomainError("horizon must be >= 1");
  if (current.empty()) throw DomainError("context is empty");
  // Breadth-first over distinct contexts; the tree of admissible paths only
  // matters through the contexts it visits.
  std::set<Context> frontier{current};
  int worst = -1;
  for (int step = 0; step < horizon && !frontier.empty(); ++step) {
    std::set<Context> reached;
    for (const auto& c : frontier) {
      const Distribution p = next(c);
      for (int k = 0; k < int(p.size()); ++k) {
        if (!(p[k] > threshold)) continue;
        worst = std::max(worst, k);
        Context n(c.begin() + 1, c.end());
        n.push_back(k);
        reached.insert(std::move(n));
      }
    }
    frontier = std::move(reached);
  }
  if (worst < 0) {
    // Nothing clears the threshold: fall back to the most likely successor.
    const Distribution p = next(current);
    worst = int(std::max_element(p.begin(), p.end()) - p.begin());
  }
  return worst;
}

ParameterSamples read_samples(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw IoError("sample file is empty");
  if (line != "t,noise_level,n,lambda") throw ConfigError("unexpected sample header: " + line);
  ParameterSamples s;
  long lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> v;
    try {
      while (std::getline(ss, cell, ',')) v.push_back(std::stod(cell));
    } catch (const std::exception&) {
      throw ConfigError("non-numeric value on sample line " + std::to_string(lineno));
    }
    if (v.size() != 4) throw ConfigError("sample line " + std::to_string(lineno) + " needs 4 columns");
    if (!s.t.empty() && !(v[0] > s.t.back())) {
      throw ConfigError("sample timestamps must increase (line " + std::to_string(lineno) + ")");
    }
    s.t.push_back(v[0]);
    s.noise_level.push_back(v[1]);
    s.n.push_back(v[2]);
    s.lambda.push_back(v[3]);
  }
  return s;
}

void write_samples(const ParameterSamples& s, std::ostream& out) {
  out << "t,noise_level,n,lambda\n";
  char buf[128];
  for (std::size_t i = 0; i < s.t.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g\n", s.t[i], s.noise_level[i], s.n[i],
                  s.lambda[i]);
    out << buf;
  }
  if (!out) throw IoError("failed to write samples");
}

}  // namespace v2v::predictor
