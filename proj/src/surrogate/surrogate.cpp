#include "v2v/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <memory>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "v2v/error.hpp"

namespace v2v::surrogate {
namespace {

constexpr const char* kSchema = "v2v.surrogate/1";

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

bool t_invalid(const Hyperparams& hp) {
  return hp.train.epochs < 1 || hp.train.batch < 1 || hp.train.patience < 1 || hp.hidden.empty();
}

std::vector<double> standardized(const Features& f, const MlpModel& m) {
  std::vector<double> x(kFeatures);
  for (int i = 0; i < kFeatures; ++i) x[i] = (f[i] - m.in_mean[i]) / m.in_scale[i];
  return x;
}

}  // namespace

void DelayQuery::validate() const {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("timeout probability must lie in (0, 1)");
  if (!(lambda >= 0.0)) throw DomainError("lambda must be >= 0");
  if (!(n >= 2.0) || n != std::round(n)) throw DomainError("vehicle count must be an integer >= 2");
  if (!std::isfinite(noise_level)) throw DomainError("noise level must be finite");
  if (!(split >= 0.0 && split <= 1.0)) throw DomainError("split must lie in [0, 1]");
}

hybrid::HybridConfig config_for(const hybrid::HybridConfig& base, const DelayQuery& q,
                                const NoiseMapping& noise) {
  q.validate();
  hybrid::HybridConfig c = base;
  c.lambda_total = q.lambda;
  c.split = q.split;
  c.cellular.n = int(q.n);
  c.cellular.lambda = q.lambda;
  c.mmwave.n_vehicles = int(q.n);
  c.mmwave.snr = base.mmwave.snr * std::pow(10.0, -noise.snr_db_per_level * q.noise_level / 10.0);
  c.mmwave.v = std::max(0.0, base.mmwave.v + noise.shadow_db_per_level * q.noise_level);
  return c;
}

double invert_ccdf(const std::function<double(double)>& ccdf, double p,
                   const std::vector<double>& grid) {
  if (!(p > 0.0 && p < 1.0)) throw DomainError("timeout probability must lie in (0, 1)");
  if (grid.empty()) throw DomainError("inversion grid is empty");
  if (ccdf(0.0) <= p) return 0.0;
  double lo = 0.0;
  for (double x : grid) {
    if (ccdf(x) <= p) {
      double hi = x;
      for (int i = 0; i < 200 && hi - lo > 1e-12 * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (ccdf(mid) <= p) {
          hi = mid;
        } else {
          lo = mid;
        }
      }
      return hi;
    }
    lo = x;
  }
  throw RegimeError("NotReached", "CCDF is still above " + fmt(p) + " at x = " + fmt(grid.back()));
}

nlohmann::json GridSpec::to_json() const {
  return {
      {"p", p},
      {"lambda", lambda},
      {"n", n},
      {"noise_level", noise_level},
      {"split", split},
      {"noise_mapping",
       {{"snr_db_per_level", noise.snr_db_per_level}, {"shadow_db_per_level", noise.shadow_db_per_level}}},
      {"cellular", cellular::to_json(base.cellular)},
      {"mmwave", mmwave::to_json(base.mmwave)},
      {"x_grid", {{"lo", x_grid.front()}, {"hi", x_grid.back()}, {"points", x_grid.size()}}},
  };
}

GridSpec default_grid(double slot_duration) {
  GridSpec g;
  g.p = {0.005, 0.01, 0.02, 0.03, 0.05, 0.07, 0.1};
  g.lambda.clear();
  for (int k = 2; k <= 10; ++k) g.lambda.push_back(cellular::per_slot_rate(0.05 * k, slot_duration));
  g.n = {4, 6, 8};
  g.noise_level = {0, 3, 6};
  g.split = {0.5};
  g.base.cellular.slot_duration = slot_duration;
  return g;
}

GridSpec grid_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("grid must be a JSON object");
  GridSpec g;
  try {
    if (j.contains("cellular")) cellular::update_from_json(g.base.cellular, j.at("cellular"));
    g = [&] {
      auto d = default_grid(g.base.cellular.slot_duration);
      d.base.cellular = g.base.cellular;
      return d;
    }();
    if (j.contains("mmwave")) mmwave::update_from_json(g.base.mmwave, j.at("mmwave"));
    const auto list = [&](const char* key, std::vector<double>& v) {
      if (j.contains(key)) v = j.at(key).get<std::vector<double>>();
    };
    list("p", g.p);
    list("lambda", g.lambda);
    if (j.contains("lambda_per_ms")) {
      g.lambda.clear();
      for (double l : j.at("lambda_per_ms").get<std::vector<double>>()) {
        g.lambda.push_back(cellular::per_slot_rate(l, g.base.cellular.slot_duration));
      }
    }
    list("n", g.n);
    list("noise_level", g.noise_level);
    list("split", g.split);
    if (j.contains("noise_mapping")) {
      const auto& m = j.at("noise_mapping");
      g.noise.snr_db_per_level = m.value("snr_db_per_level", g.noise.snr_db_per_level);
      g.noise.shadow_db_per_level = m.value("shadow_db_per_level", g.noise.shadow_db_per_level);
    }
    if (j.contains("x_grid")) {
      const auto& x = j.at("x_grid");
      g.x_grid = hybrid::log_grid(x.value("lo", 1.0), x.value("hi", 1e6), x.value("points", 200));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("grid: ") + e.what());
  } catch (const DomainError& e) {
    throw ConfigError(std::string("grid: ") + e.what());
  }
  for (const auto* v : {&g.p, &g.lambda, &g.n, &g.noise_level, &g.split}) {
    if (v->empty()) throw ConfigError("grid: every axis needs at least one value");
  }
  return g;
}

nlohmann::json to_json(const Hyperparams& hp) {
  const auto& t = hp.train;
  return {{"hidden", hp.hidden},
          {"holdout", hp.holdout},
          {"split_seed", hp.split_seed},
          {"epochs", t.epochs},
          {"batch", t.batch},
          {"learning_rate", t.learning_rate},
          {"min_learning_rate", t.min_learning_rate},
          {"patience", t.patience},
          {"seed", t.seed}};
}

Hyperparams hyperparams_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("training parameters must be a JSON object");
  Hyperparams hp;
  try {
    hp.hidden = j.value("hidden", hp.hidden);
    hp.holdout = j.value("holdout", hp.holdout);
    hp.split_seed = j.value("split_seed", hp.split_seed);
    auto& t = hp.train;
    t.epochs = j.value("epochs", t.epochs);
    t.batch = j.value("batch", t.batch);
    t.learning_rate = j.value("learning_rate", t.learning_rate);
    t.min_learning_rate = j.value("min_learning_rate", t.min_learning_rate);
    t.patience = j.value("patience", t.patience);
    t.seed = j.value("seed", t.seed);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("training parameters: ") + e.what());
  }
  if (!(hp.holdout > 0.0 && hp.holdout < 1.0)) throw ConfigError("holdout must be in (0, 1)");
  if (t_invalid(hp)) throw ConfigError("epochs, batch and patience must be positive");
  return hp;
}

Dataset generate_dataset(const GridSpec& spec) {
  Dataset d;
  for (double lam : spec.lambda) {
    for (double n : spec.n) {
      for (double xi : spec.noise_level) {
        for (double s : spec.split) {
          DelayQuery q{spec.p.empty() ? 0.5 : spec.p.front(), lam, n, xi, s};
          try {
            const hybrid::HybridModel model(config_for(spec.base, q, spec.noise));
            const auto ccdf = [&](double x) { return model.delay_ccdf(x); };
            for (double p : spec.p) {
              q.p = p;
              try {
                d.rows.push_back({q, invert_ccdf(ccdf, p, spec.x_grid)});
              } catch (const Error& e) {
                d.skipped.push_back({q, e.what()});
              }
            }
          } catch (const Error& e) {
            for (double p : spec.p) {
              q.p = p;
              d.skipped.push_back({q, e.what()});
            }
          }
        }
      }
    }
  }
  return d;
}

void write_csv(const Dataset& d, std::ostream& out) {
  out << "p,lambda,n,noise_level,split,delay_slots\n";
  for (const auto& r : d.rows) {
    const auto& q = r.query;
    out << fmt(q.p) << ',' << fmt(q.lambda) << ',' << fmt(q.n) << ',' << fmt(q.noise_level) << ','
        << fmt(q.split) << ',' << fmt(r.delay_slots) << '\n';
  }
  if (!out) throw IoError("failed to write dataset");
}

Dataset read_csv(std::istream& in) {
  Dataset d;
  std::string line;
  if (!std::getline(in, line)) throw IoError("dataset is empty");
  if (line != "p,lambda,n,noise_level,split,delay_slots") {
    throw ConfigError("unexpected dataset header: " + line);
  }
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
      throw ConfigError("non-numeric value on dataset line " + std::to_string(lineno));
    }
    if (v.size() != 6) throw ConfigError("dataset line " + std::to_string(lineno) + " needs 6 columns");
    d.rows.push_back({{v[0], v[1], v[2], v[3], v[4]}, v[5]});
  }
  return d;
}

nlohmann::json MlpModel::to_json() const {
  return {
      {"schema", kSchema},
      {"features", {"p", "lambda", "n", "noise_level", "split"}},
      {"input_mean", in_mean},
      {"input_scale", in_scale},
      {"box_lo", box_lo},
      {"box_hi", box_hi},
      {"output_mean", out_mean},
      {"output_scale", out_scale},
      {"output_transform", "log1p"},
      {"network", net.to_json()},
  };
}

MlpModel MlpModel::from_json(const nlohmann::json& j) {
  MlpModel m;
  try {
    if (j.at("schema").get<std::string>() != kSchema) {
      throw ConfigError("unsupported model schema " + j.at("schema").dump());
    }
    m.in_mean = j.at("input_mean").get<Features>();
    m.in_scale = j.at("input_scale").get<Features>();
    m.box_lo = j.at("box_lo").get<Features>();
    m.box_hi = j.at("box_hi").get<Features>();
    m.out_mean = j.at("output_mean").get<double>();
    m.out_scale = j.at("output_scale").get<double>();
    m.net = nn::Mlp::from_json(j.at("network"));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed surrogate model: ") + e.what());
  }
  if (m.net.inputs() != kFeatures || m.net.outputs() != 1) {
    throw ConfigError("surrogate network must map 5 inputs to 1 output");
  }
  for (int i = 0; i < kFeatures; ++i) {
    if (!std::isfinite(m.in_mean[i]) || !(m.in_scale[i] > 0.0)) {
      throw ConfigError("surrogate normalization constants must be finite");
    }
  }
  if (!std::isfinite(m.out_mean) || !(m.out_scale > 0.0)) {
    throw ConfigError("surrogate output normalization must be finite");
  }
  return m;
}

TrainResult train_mlp(const Dataset& d, const Hyperparams& hp) {
  if (d.rows.size() < 50) throw DomainError("training needs at least 50 rows");
  if (!(hp.holdout >= 0.0 && hp.holdout < 1.0)) throw DomainError("holdout fraction must lie in [0, 1)");

  std::vector<std::size_t> idx(d.rows.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::mt19937_64 rng(hp.split_seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  const std::size_t n_hold = std::size_t(std::floor(hp.holdout * double(idx.size())));
  const std::vector<std::size_t> hold(idx.end() - long(n_hold), idx.end());
  const std::vector<std::size_t> fit(idx.begin(), idx.end() - long(n_hold));

  MlpModel m;
  // Normalization from the training rows only.
  for (int i = 0; i < kFeatures; ++i) {
    double sum = 0.0, sq = 0.0;
    m.box_lo[i] = m.box_hi[i] = d.rows[fit.front()].query.features()[i];
    for (std::size_t r : fit) {
      const double v = d.rows[r].query.features()[i];
      sum += v;
      sq += v * v;
      m.box_lo[i] = std::min(m.box_lo[i], v);
      m.box_hi[i] = std::max(m.box_hi[i], v);
    }
    const double mean = sum / double(fit.size());
    const double var = std::max(0.0, sq / double(fit.size()) - mean * mean);
    m.in_mean[i] = mean;
    m.in_scale[i] = var > 1e-30 * (1.0 + mean * mean) ? std::sqrt(var) : 1.0;
  }
  {
    double sum = 0.0, sq = 0.0;
    for (std::size_t r : fit) {
      if (!(d.rows[r].delay_slots >= 0.0)) throw DomainError("delay labels must be >= 0");
      const double y = std::log1p(d.rows[r].delay_slots);
      sum += y;
      sq += y * y;
    }
    m.out_mean = sum / double(fit.size());
    const double var = std::max(0.0, sq / double(fit.size()) - m.out_mean * m.out_mean);
    m.out_scale = var > 1e-24 ? std::sqrt(var) : 1.0;
  }

  std::vector<std::vector<double>> x;
  std::vector<double> y;
  for (std::size_t r : fit) {
    x.push_back(standardized(d.rows[r].query.features(), m));
    y.push_back((std::log1p(d.rows[r].delay_slots) - m.out_mean) / m.out_scale);
  }

  std::vector<int> dims{kFeatures};
  dims.insert(dims.end(), hp.hidden.begin(), hp.hidden.end());
  dims.push_back(1);
  m.net = nn::Mlp(dims, hp.train.seed);

  const nn::LossFn mse = [&y](std::size_t r, std::span<const double> out, std::span<double> dy) {
    const double e = out[0] - y[r];
    dy[0] = 2.0 * e;
    return e * e;
  };
  TrainResult res;
  res.report = nn::train(m.net, x, mse, hp.train);

  auto rel = [&](std::size_t r) {
    const double truth = d.rows[r].delay_slots;
    const double pred = predict_delay(m, d.rows[r].query).delay_slots;
    return std::abs(pred - truth) / std::max(truth, 1e-12);
  };
  for (std::size_t r : fit) res.train_rel_error += rel(r);
  res.train_rel_error /= double(fit.size());
  for (std::size_t r : hold) {
    const double e = rel(r);
    res.holdout_rel_error += e;
    res.holdout_max_rel_error = std::max(res.holdout_max_rel_error, e);
  }
  if (!hold.empty()) res.holdout_rel_error /= double(hold.size());
  res.holdout_rows = hold.size();
  res.model = std::move(m);
  return res;
}

Prediction predict_delay(const MlpModel& m, const DelayQuery& q) {
  Prediction out;
  const Features f = q.features();
  for (int i = 0; i < kFeatures; ++i) {
    if (f[i] < m.box_lo[i] || f[i] > m.box_hi[i]) out.extrapolated = true;
  }
  const double z = m.net.forward(standardized(f, m))[0];
  out.delay_slots = std::max(0.0, std::expm1(z * m.out_scale + m.out_mean));
  return out;
}

std::function<Prediction(const DelayQuery&)> bound_oracle(const GridSpec& spec) {
  auto memo = std::make_shared<std::map<Features, double>>();
  return [spec, memo](const DelayQuery& q) {
    q.validate();
    const auto f = q.features();
    auto it = memo->find(f);
    if (it == memo->end()) {
      const hybrid::HybridModel model(config_for(spec.base, q, spec.noise));
      const double d =
          invert_ccdf([&](double x) { return model.delay_ccdf(x); }, q.p, spec.x_grid);
      it = memo->emplace(f, d).first;
    }
    return Prediction{it->second, false};
  };
}

double monotonicity_defect_rate(const MlpModel& m, int pairs, std::uint64_t seed) {
  if (pairs < 1) throw DomainError("need at least one pair");
  std::mt19937_64 rng(seed);
  int defects = 0;
  for (int k = 0; k < pairs; ++k) {
    DelayQuery q;
    Features f;
    for (int i = 0; i < kFeatures; ++i) {
      f[i] = std::uniform_real_distribution<double>(m.box_lo[i], m.box_hi[i])(rng);
    }
    q = {0.01, f[1], std::round(f[2]), f[3], f[4]};
    const double strict = predict_delay(m, q).delay_slots;
    q.p = 0.1;
    const double loose = predict_delay(m, q).delay_slots;
    if (strict < loose) ++defects;
  }
  return double(defects) / pairs;
}

}  // namespace v2v::surrogate
