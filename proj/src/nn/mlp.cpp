#include "v2v/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "v2v/error.hpp"

namespace v2v::nn {
namespace {

struct Adam {
  std::vector<std::vector<double>> mw, vw, mb, vb;
  long t = 0;

  explicit Adam(const Mlp& net) {
    for (const auto& l : net.layers()) {
      mw.emplace_back(l.w.size(), 0.0);
      vw.emplace_back(l.w.size(), 0.0);
      mb.emplace_back(l.b.size(), 0.0);
      vb.emplace_back(l.b.size(), 0.0);
    }
  }

  void step(Mlp& net, const std::vector<Layer>& grad, double lr) {
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    ++t;
    const double c1 = 1.0 - std::pow(b1, double(t));
    const double c2 = 1.0 - std::pow(b2, double(t));
    auto update = [&](std::vector<double>& p, const std::vector<double>& g, std::vector<double>& m,
                      std::vector<double>& v) {
      for (std::size_t i = 0; i < p.size(); ++i) {
        m[i] = b1 * m[i] + (1.0 - b1) * g[i];
        v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
        p[i] -= lr * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
      }
    };
    auto& layers = net.layers();
    for (std::size_t k = 0; k < layers.size(); ++k) {
      update(layers[k].w, grad[k].w, mw[k], vw[k]);
      update(layers[k].b, grad[k].b, mb[k], vb[k]);
    }
  }
};

// Forward pass keeping every layer's activations; acts[0] is the input.
void forward_all(const Mlp& net, std::span<const double> x, std::vector<std::vector<double>>& acts) {
  const auto& layers = net.layers();
  acts.resize(layers.size() + 1);
  acts[0].assign(x.begin(), x.end());
  for (std::size_t k = 0; k < layers.size(); ++k) {
    const auto& l = layers[k];
    auto& out = acts[k + 1];
    out.assign(l.out, 0.0);
    const auto& in = acts[k];
    for (int o = 0; o < l.out; ++o) {
      double s = l.b[o];
      const double* row = &l.w[std::size_t(o) * l.in];
      for (int i = 0; i < l.in; ++i) s += row[i] * in[i];
      out[o] = (k + 1 < layers.size()) ? std::max(0.0, s) : s;
    }
  }
}

}  // namespace

Mlp::Mlp(std::vector<int> dims, std::uint64_t seed) : dims_(std::move(dims)) {
  if (dims_.size() < 2) throw DomainError("network needs at least input and output widths");
  for (int d : dims_) {
    if (d < 1) throw DomainError("layer widths must be positive");
  }
  std::mt19937_64 rng(seed);
  for (std::size_t k = 0; k + 1 < dims_.size(); ++k) {
    Layer l;
    l.in = dims_[k];
    l.out = dims_[k + 1];
    const double limit = std::sqrt(6.0 / l.in);
    std::uniform_real_distribution<double> u(-limit, limit);
    l.w.resize(std::size_t(l.in) * l.out);
    for (auto& w : l.w) w = u(rng);
    // A zero output layer starts the network at the constant bias.
    if (k + 2 == dims_.size()) std::fill(l.w.begin(), l.w.end(), 0.0);
    l.b.assign(l.out, 0.0);
    layers_.push_back(std::move(l));
  }
}

std::vector<double> Mlp::forward(std::span<const double> x) const {
  if (int(x.size()) != inputs()) throw DomainError("input width does not match the network");
  std::vector<std::vector<double>> acts;
  forward_all(*this, x, acts);
  return acts.back();
}

nlohmann::json Mlp::to_json() const {
  nlohmann::json j;
  j["dims"] = dims_;
  j["layers"] = nlohmann::json::array();
  for (const auto& l : layers_) j["layers"].push_back({{"weights", l.w}, {"bias", l.b}});
  return j;
}

Mlp Mlp::from_json(const nlohmann::json& j) {
  Mlp net;
  try {
    net.dims_ = j.at("dims").get<std::vector<int>>();
    const auto& layers = j.at("layers");
    if (net.dims_.size() < 2 || layers.size() != net.dims_.size() - 1) {
      throw ConfigError("layer count does not match dims");
    }
    for (std::size_t k = 0; k < layers.size(); ++k) {
      Layer l;
      l.in = net.dims_[k];
      l.out = net.dims_[k + 1];
      l.w = layers[k].at("weights").get<std::vector<double>>();
      l.b = layers[k].at("bias").get<std::vector<double>>();
      if (l.w.size() != std::size_t(l.in) * l.out || l.b.size() != std::size_t(l.out)) {
        throw ConfigError("layer " + std::to_string(k) + " has the wrong shape");
      }
      net.layers_.push_back(std::move(l));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("malformed network document: ") + e.what());
  }
  return net;
}

double mean_loss(const Mlp& net, std::span<const std::vector<double>> inputs, const LossFn& loss) {
  if (inputs.empty()) return 0.0;
  std::vector<double> dy(net.outputs());
  double total = 0.0;
  for (std::size_t r = 0; r < inputs.size(); ++r) total += loss(r, net.forward(inputs[r]), dy);
  return total / double(inputs.size());
}

TrainReport train(Mlp& net, std::span<const std::vector<double>> inputs, const LossFn& loss,
                  const TrainOptions& opts) {
  if (inputs.empty()) throw DomainError("training set is empty");
  if (opts.batch < 1 || opts.epochs < 0) throw DomainError("batch and epochs must be positive");

  std::mt19937_64 rng(opts.seed);
  Adam adam(net);
  std::vector<Layer> grad = net.layers();
  std::vector<std::vector<double>> acts;
  std::vector<double> dy(net.outputs());
  std::vector<double> delta, prev;
  std::vector<std::size_t> order(inputs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainReport report;
  double lr = opts.learning_rate;
  int misses = 0;
  double best = mean_loss(net, inputs, loss);
  if (!std::isfinite(best)) throw ConvergenceError("Diverged", "initial loss is not finite");

  for (int epoch = 0; epoch < opts.epochs && lr >= opts.min_learning_rate; ++epoch) {
    const Mlp saved_net = net;
    std::shuffle(order.begin(), order.end(), rng);

    for (std::size_t start = 0; start < order.size(); start += opts.batch) {
      const std::size_t end = std::min(order.size(), start + std::size_t(opts.batch));
      for (auto& g : grad) {
        std::fill(g.w.begin(), g.w.end(), 0.0);
        std::fill(g.b.begin(), g.b.end(), 0.0);
      }
      for (std::size_t s = start; s < end; ++s) {
        const std::size_t r = order[s];
        forward_all(net, inputs[r], acts);
        const double l = loss(r, acts.back(), dy);
        if (!std::isfinite(l)) throw ConvergenceError("Diverged", "loss became non-finite");
        delta = dy;
        for (std::size_t k = net.layers().size(); k-- > 0;) {
          const auto& layer = net.layers()[k];
          const auto& in = acts[k];
          auto& g = grad[k];
          for (int o = 0; o < layer.out; ++o) {
            g.b[o] += delta[o];
            double* row = &g.w[std::size_t(o) * layer.in];
            for (int i = 0; i < layer.in; ++i) row[i] += delta[o] * in[i];
          }
          if (k == 0) break;
          prev.assign(layer.in, 0.0);
          for (int o = 0; o < layer.out; ++o) {
            const double* row = &layer.w[std::size_t(o) * layer.in];
            for (int i = 0; i < layer.in; ++i) prev[i] += row[i] * delta[o];
          }
          for (int i = 0; i < layer.in; ++i) {
            if (in[i] <= 0.0) prev[i] = 0.0;  // ramp derivative
          }
          delta.swap(prev);
        }
      }
      const double scale = 1.0 / double(end - start);
      for (auto& g : grad) {
        for (auto& v : g.w) v *= scale;
        for (auto& v : g.b) v *= scale;
      }
      adam.step(net, grad, lr);
    }

    const double l = mean_loss(net, inputs, loss);
    if (!std::isfinite(l)) throw ConvergenceError("Diverged", "loss became non-finite");
    if (l < best) {
      best = l;
      misses = 0;
    } else {
      // Stale moments would repeat the rejected step; restart them.
      net = saved_net;
      adam = Adam(net);
      if (++misses >= opts.patience) {
        lr *= 0.5;
        misses = 0;
      }
    }
    report.loss.push_back(best);
    report.epochs = epoch + 1;
  }
  report.final_learning_rate = lr;
  return report;
}

}  // namespace v2v::nn
