#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "mgrestore/environment.hpp"
#include "mgrestore/qnetwork.hpp"
#include "mgrestore/random.hpp"

namespace mgrestore {

class UnderfilledBufferError : public Error {
 public:
  UnderfilledBufferError(std::size_t have, std::size_t want)
      : Error("replay buffer holds " + std::to_string(have) + " experiences, batch needs " +
              std::to_string(want)) {}
};

// Every candidate action is excluded.
class MaskExhaustedError : public Error {
 public:
  using Error::Error;
};

struct EpsilonSchedule {
  double eps_min = 0.01;
  double eps_max = 1.0;
  double lambda = 0.01;  // decay per episode

  bool operator==(const EpsilonSchedule&) const = default;
};

// eps_min + (eps_max - eps_min) * exp(-lambda * episode)
inline double epsilon(const EpsilonSchedule& s, long long episode) {
  return s.eps_min + (s.eps_max - s.eps_min) * std::exp(-s.lambda * static_cast<double>(episode));
}

struct Hyperparameters {
  double gamma = 0.95;  // discount
  double alpha = 0.5;   // blend rate between current prediction and bootstrapped target
  double eta = 1e-3;    // gradient step size
  std::size_t batch_size = 32;
  std::size_t capacity = 10000;
  std::vector<std::size_t> hidden{64, 64};

  bool operator==(const Hyperparameters&) const = default;
};

struct Experience {
  Observation o;
  AgentAction a;
  double r = 0.0;
  Observation o_next;
};

/// Fixed-capacity ring of experiences; the oldest entry is overwritten first.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw DimensionError("replay buffer capacity must be positive");
    items_.reserve(std::min<std::size_t>(capacity, 4096));
  }

  void push(Experience e) {
    if (items_.size() < capacity_) {
      items_.push_back(std::move(e));
    } else {
      items_[next_] = std::move(e);
    }
    next_ = (next_ + 1) % capacity_;
    ++inserted_;
  }

  // Uniform sample without replacement (Floyd's algorithm).
  template <class URBG>
  std::vector<Experience> sample(std::size_t batch_size, URBG& rng) const {
    if (batch_size > items_.size()) throw UnderfilledBufferError(items_.size(), batch_size);
    std::vector<std::size_t> picked;
    picked.reserve(batch_size);
    for (std::size_t j = items_.size() - batch_size; j < items_.size(); ++j) {
      const std::size_t t = uniform_index(rng, j + 1);
      if (std::find(picked.begin(), picked.end(), t) == picked.end()) {
        picked.push_back(t);
      } else {
        picked.push_back(j);
      }
    }
    std::vector<Experience> batch;
    batch.reserve(batch_size);
    for (auto i : picked) batch.push_back(items_[i]);
    return batch;
  }

  std::size_t size() const { return items_.size(); }
  std::size_t capacity() const { return capacity_; }
  std::uint64_t inserted() const { return inserted_; }

  // Entries from oldest to newest.
  std::vector<Experience> contents() const {
    if (items_.size() < capacity_) return items_;
    std::vector<Experience> out(items_.begin() + static_cast<std::ptrdiff_t>(next_), items_.end());
    out.insert(out.end(), items_.begin(), items_.begin() + static_cast<std::ptrdiff_t>(next_));
    return out;
  }

 private:
  std::size_t capacity_;
  std::vector<Experience> items_;
  std::size_t next_ = 0;
  std::uint64_t inserted_ = 0;
};

struct AgentPair {
  QNetwork main;
  QNetwork target;
};

// Main network randomly initialized; target starts as an exact copy.
template <class URBG>
AgentPair make_agent(std::size_t breaker_count, const std::vector<std::size_t>& hidden, URBG& rng) {
  std::vector<std::size_t> widths{breaker_count};
  widths.insert(widths.end(), hidden.begin(), hidden.end());
  widths.push_back(2 * breaker_count);
  AgentPair pair{QNetwork::random(widths, rng), {}};
  pair.target = pair.main;
  return pair;
}

inline void sync_target(AgentPair& pair) { pair.target = pair.main; }

// Highest-valued index not in `forbidden`; lowest index wins ties.
inline std::size_t masked_argmax(std::span<const double> q, const std::vector<std::uint8_t>& forbidden) {
  std::size_t best = q.size();
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (!forbidden.empty() && forbidden[i]) continue;
    if (best == q.size() || q[i] > q[best]) best = i;
  }
  if (best == q.size()) throw MaskExhaustedError("every action is masked");
  return best;
}

/// Epsilon-greedy choice over the actions not flagged in `forbidden`
/// (empty means nothing is forbidden). One uniform draw is consumed per call.
template <class URBG>
AgentAction act(const QNetwork& net, const Observation& o, double eps,
                const std::vector<std::uint8_t>& forbidden, URBG& rng) {
  const auto q = net.forward(o.as_input());
  std::vector<std::size_t> allowed;
  for (std::size_t i = 0; i < q.size(); ++i)
    if (forbidden.empty() || !forbidden[i]) allowed.push_back(i);
  if (allowed.empty()) throw MaskExhaustedError("every action is masked");
  if (uniform_unit(rng) < eps) return {allowed[uniform_index(rng, allowed.size())]};
  return {masked_argmax(q, forbidden)};
}

struct TrainingLabel {
  double y = 0.0;          // r + gamma * max_a' Q_target(o', a')
  double predicted = 0.0;  // Q_main(o, a)
  double blended = 0.0;    // (1 - alpha) * predicted + alpha * y
};

inline TrainingLabel training_label(const AgentPair& pair, const Experience& e, const Hyperparameters& h) {
  TrainingLabel t;
  double future = 0.0;
  if (h.gamma != 0.0) {
    const auto next = pair.target.forward(e.o_next.as_input());
    future = *std::max_element(next.begin(), next.end());
  }
  t.y = e.r + h.gamma * future;
  t.predicted = pair.main.forward(e.o.as_input())[e.a.index];
  t.blended = (1.0 - h.alpha) * t.predicted + h.alpha * t.y;
  return t;
}

/// Mean squared error between blended labels and main-network predictions
/// at the taken actions, and its gradient with respect to the main network
/// (labels held fixed). Gradient is written into `grad`.
inline double loss_and_gradient(const AgentPair& pair, std::span<const Experience> batch,
                                const Hyperparameters& h, std::vector<DenseLayer>& grad) {
  grad = pair.main.zero_gradient();
  if (batch.empty()) return 0.0;
  const double scale = 1.0 / static_cast<double>(batch.size());
  QNetwork::Activations act;
  std::vector<double> out_grad(pair.main.output_size(), 0.0);
  double loss = 0.0;
  for (const auto& e : batch) {
    double future = 0.0;
    if (h.gamma != 0.0) {
      const auto next = pair.target.forward(e.o_next.as_input());
      future = *std::max_element(next.begin(), next.end());
    }
    const double y = e.r + h.gamma * future;
    pair.main.forward(e.o.as_input(), act);
    const double predicted = act.back()[e.a.index];
    const double label = (1.0 - h.alpha) * predicted + h.alpha * y;
    const double diff = label - predicted;
    loss += diff * diff * scale;
    std::fill(out_grad.begin(), out_grad.end(), 0.0);
    out_grad[e.a.index] = -2.0 * diff * scale;
    pair.main.backward(act, out_grad, grad);
  }
  return loss;
}

/// One gradient-descent step of size eta on the main network. Returns the
/// batch loss before the update.
inline double train_step(AgentPair& pair, std::span<const Experience> batch, const Hyperparameters& h) {
  if (batch.empty()) throw DimensionError("training batch is empty");
  std::vector<DenseLayer> grad;
  const double loss = loss_and_gradient(pair, batch, h, grad);
  pair.main.apply_gradient(grad, h.eta);
  return loss;
}

}  // namespace mgrestore
