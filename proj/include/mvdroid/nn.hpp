#pragma once

#include <cmath>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "mvdroid/tensor.hpp"

namespace mvd::ad {

template <typename S>
struct Parameter {
  std::string name;
  Tensor<S> tensor;
};

/// Owns every trainable tensor of a model, keyed by a dotted name. Insertion
/// order is preserved and defines checkpoint order.
template <typename S>
class ParameterStore {
 public:
  Tensor<S> add(const std::string& name, Shape shape) {
    if (index_.count(name)) throw Error(ErrorCode::BadConfig, "duplicate parameter " + name);
    index_[name] = params_.size();
    params_.push_back({name, Tensor<S>::zeros(std::move(shape), true)});
    return params_.back().tensor;
  }

  /// Glorot-uniform init with limit sqrt(6 / (fan_in + fan_out)).
  Tensor<S> add_glorot(const std::string& name, Shape shape, Index fan_in, Index fan_out, std::mt19937_64& rng) {
    Tensor<S> t = add(name, std::move(shape));
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (Index i = 0; i < t.size(); ++i) t.mutable_value()[i] = S(dist(rng));
    return t;
  }

  const std::vector<Parameter<S>>& all() const { return params_; }
  std::vector<Parameter<S>>& all() { return params_; }
  bool contains(const std::string& name) const { return index_.count(name) != 0; }
  Tensor<S> get(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw Error(ErrorCode::BadConfig, "unknown parameter " + name);
    return params_[it->second].tensor;
  }
  Index total_size() const {
    Index n = 0;
    for (const auto& p : params_) n += p.tensor.size();
    return n;
  }
  void zero_grad() {
    for (auto& p : params_) p.tensor.zero_grad();
  }
  /// Stops gradient tracking for every parameter whose name starts with
  /// one of the prefixes.
  void freeze(const std::vector<std::string>& prefixes) {
    for (auto& p : params_)
      for (const auto& pre : prefixes)
        if (p.name.rfind(pre, 0) == 0) p.tensor.set_requires_grad(false);
  }

 private:
  std::vector<Parameter<S>> params_;
  std::map<std::string, std::size_t> index_;
};

/// y = x W + b with W [in, out]; b is optional.
template <typename S>
struct Linear {
  Tensor<S> weight;
  Tensor<S> bias;

  Linear() = default;
  Linear(ParameterStore<S>& store, const std::string& name, Index in, Index out, std::mt19937_64& rng,
         bool with_bias = true) {
    weight = store.add_glorot(name + ".w", {in, out}, in, out, rng);
    if (with_bias) bias = store.add(name + ".b", {out});
  }
  Tensor<S> operator()(const Tensor<S>& x) const {
    Tensor<S> y = matmul(x, weight);
    return bias.defined() ? add_bias(y, bias) : y;
  }
};

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <typename S>
class Adam {
 public:
  explicit Adam(AdamOptions opts = {}) : opts_(opts) {}

  /// One update from the accumulated gradients, each divided by
  /// `grad_divisor` (the batch size). Frozen parameters are skipped.
  void step(ParameterStore<S>& store, double grad_divisor = 1.0) {
    ++t_;
    const double c1 = 1.0 - std::pow(opts_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(opts_.beta2, static_cast<double>(t_));
    for (auto& p : store.all()) {
      if (!p.tensor.requires_grad()) continue;
      auto& [m, v] = state_[p.name];
      const Index n = p.tensor.size();
      if (m.size() != n) {
        m = Vec<double>::Zero(n);
        v = Vec<double>::Zero(n);
      }
      const Vec<S>& g = p.tensor.grad();
      Vec<S>& w = p.tensor.mutable_value();
      for (Index i = 0; i < n; ++i) {
        const double gi = static_cast<double>(g[i]) / grad_divisor;
        m[i] = opts_.beta1 * m[i] + (1.0 - opts_.beta1) * gi;
        v[i] = opts_.beta2 * v[i] + (1.0 - opts_.beta2) * gi * gi;
        const double mhat = m[i] / c1, vhat = v[i] / c2;
        w[i] = S(static_cast<double>(w[i]) - opts_.learning_rate * mhat / (std::sqrt(vhat) + opts_.epsilon));
      }
    }
  }
  long steps() const { return t_; }

 private:
  AdamOptions opts_;
  long t_ = 0;
  std::map<std::string, std::pair<Vec<double>, Vec<double>>> state_;
};

/// Central-difference gradient check of a scalar function of `x`. Returns
/// max_i |a_i - n_i| / max(1e-8, |a_i| + |n_i|). `x` is perturbed in place
/// and restored.
template <typename S, typename F>
double grad_check(F&& f, Tensor<S> x, double eps) {
  const bool was_tracked = x.requires_grad();
  x.set_requires_grad(true);
  x.zero_grad();
  Tensor<S> y = f(x);
  if (!std::isfinite(static_cast<double>(y.item()))) throw Error(ErrorCode::NonFiniteValue, "grad_check: loss is not finite");
  y.backward();
  const Vec<S> analytic = x.grad();
  double worst = 0.0;
  for (Index i = 0; i < x.size(); ++i) {
    const S saved = x.value()[i];
    x.mutable_value()[i] = S(static_cast<double>(saved) + eps);
    const double fp = static_cast<double>(f(x).item());
    x.mutable_value()[i] = S(static_cast<double>(saved) - eps);
    const double fm = static_cast<double>(f(x).item());
    x.mutable_value()[i] = saved;
    if (!std::isfinite(fp) || !std::isfinite(fm)) throw Error(ErrorCode::NonFiniteValue, "grad_check: perturbed loss");
    const double numeric = (fp - fm) / (2.0 * eps);
    const double a = static_cast<double>(analytic[i]);
    worst = std::max(worst, std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric)));
  }
  x.zero_grad();
  x.set_requires_grad(was_tracked);
  return worst;
}

}  // namespace mvd::ad
