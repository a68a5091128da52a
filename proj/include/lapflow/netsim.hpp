// Copyright 2026 The lapflow Authors
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "lapflow/errors.hpp"
#include "lapflow/graph.hpp"

namespace lapflow {

/// Sparse row held by one node. Indices are sorted.
struct SparseRow {
  std::vector<int> idx;
  std::vector<double> val;

  int nnz() const { return static_cast<int>(idx.size()); }
  double at(int j) const;
};

/// A node's own row of M: its diagonal entry and off-diagonal weights.
struct LocalRow {
  double diag = 0.0;
  SparseRow off;
};

/// Number of scalars a value occupies on the wire.
inline long long payload_size(double) { return 1; }
inline long long payload_size(const SparseRow& r) { return r.nnz(); }
inline long long payload_size(const LocalRow& r) { return 1 + r.off.nnz(); }
template <class A, class B>
long long payload_size(const std::pair<A, B>& p) {
  return payload_size(p.first) + payload_size(p.second);
}

/// Hop distances between all node pairs, plus cached radius balls.
class Topology {
 public:
  Topology() = default;
  explicit Topology(const WeightedGraph& g);

  int node_count() const { return n_; }
  /// -1 when unreachable.
  int hop(int a, int b) const { return hops_[static_cast<std::size_t>(a) * n_ + b]; }
  const std::vector<int>& neighbors(int k) const { return adj_[k]; }
  int diameter() const { return diameter_; }
  /// Largest finite hop distance from k.
  int eccentricity(int k) const { return ecc_[k]; }
  int max_degree() const;
  /// Nodes v != k with hop(k, v) <= r, sorted by id, paired with their hop.
  const std::vector<std::pair<int, int>>& ball(int k, int r) const;
  /// Sum of hops over ball(k, r).
  long long ball_hop_sum(int k, int r) const;

 private:
  void build_balls(int r) const;

  int n_ = 0;
  int diameter_ = 0;
  std::vector<int> hops_;
  std::vector<int> ecc_;
  std::vector<std::vector<int>> adj_;
  mutable std::vector<std::vector<std::vector<std::pair<int, int>>>> balls_;
  mutable std::vector<std::vector<long long>> hop_sums_;
};

/// Per-round traffic record.
struct Transcript {
  int rounds = 0;
  long long messages_total = 0;
  std::vector<long long> messages_per_round;
  std::vector<int> max_hop_per_round;
  int max_hop_used = 0;
  int radius_limit = 0;
  bool strict = false;

  void append(const Transcript& other);
  void write_csv(std::ostream& out) const;
};

class SyncNetwork;

class FieldBase {
 public:
  virtual ~FieldBase() = default;

 protected:
  friend class SyncNetwork;
  virtual void commit() = 0;
  virtual void discard() = 0;
  bool pending_ = false;
};

/// Double-buffered per-node values. Reads see the last committed round.
template <class T>
class Field : public FieldBase {
 public:
  explicit Field(int n) : committed_(n), staged_(n), valid_(n, 0), dirty_(n, 0) {}

  /// Installs a node's local input as if it had been published earlier.
  void seed(int k, T value) {
    committed_[k] = std::move(value);
    valid_[k] = 1;
  }
  bool valid(int k) const { return valid_[k] != 0; }
  /// Committed value, for assembling results outside the network.
  const T& committed(int k) const { return committed_[k]; }

 private:
  friend class SyncNetwork;
  friend class NodeContext;
  template <class U>
  friend class Gathered;

  void commit() override {
    for (std::size_t k = 0; k < staged_.size(); ++k) {
      if (dirty_[k]) {
        committed_[k] = std::move(staged_[k]);
        valid_[k] = 1;
        dirty_[k] = 0;
      }
    }
    pending_ = false;
  }

  void discard() override {
    std::fill(dirty_.begin(), dirty_.end(), 0);
    pending_ = false;
  }

  std::vector<T> committed_;
  std::vector<T> staged_;
  std::vector<char> valid_;
  std::vector<char> dirty_;
};

/// View over a gathered neighborhood. Indexing a node outside the gathered
/// radius is a locality violation.
template <class T>
class Gathered {
 public:
  Gathered(const Field<T>& f, const Topology& topo, int node, int radius, int round)
      : f_(f), topo_(topo), node_(node), radius_(radius), round_(round) {}

  const T& operator[](int j) const {
    const int h = topo_.hop(node_, j);
    if (h < 0 || h > radius_) {
      throw LocalityViolation(node_, round_,
                              "node " + std::to_string(node_) + " read node " +
                                  std::to_string(j) + " outside its " +
                                  std::to_string(radius_) + "-hop gather in round " +
                                  std::to_string(round_));
    }
    if (!f_.valid_[j]) {
      throw LocalityViolation(node_, round_,
                              "node " + std::to_string(node_) +
                                  " read an unpublished value of node " +
                                  std::to_string(j) + " in round " +
                                  std::to_string(round_));
    }
    return f_.committed_[j];
  }
  /// (node, hop) pairs inside the radius, self excluded.
  const std::vector<std::pair<int, int>>& members() const {
    return topo_.ball(node_, radius_);
  }
  int radius() const { return radius_; }

 private:
  const Field<T>& f_;
  const Topology& topo_;
  int node_;
  int radius_;
  int round_;
};

class NodeContext {
 public:
  int id() const { return node_; }
  int round() const;

  /// Previous-round values of every node within `radius` hops.
  template <class T>
  Gathered<T> gather(const Field<T>& f, int radius);

  /// The node's own previous-round value (free).
  template <class T>
  const T& own(const Field<T>& f) const {
    if (!f.valid_[node_]) {
      throw LocalityViolation(node_, round(), "node " + std::to_string(node_) +
                                                  " read its own unpublished value");
    }
    return f.committed_[node_];
  }

  /// Makes `value` visible to others from the next round on.
  template <class T>
  void publish(Field<T>& f, T value);

 private:
  friend class SyncNetwork;
  NodeContext(SyncNetwork& net, int node) : net_(net), node_(node) {}
  SyncNetwork& net_;
  int node_;
};

/// Deterministic synchronous round loop over a fixed topology.
///
/// Nodes run in id order. With strict enforcement every gather radius must
/// stay within the configured hop limit.
class SyncNetwork {
 public:
  SyncNetwork(Topology topo, int radius_limit, bool strict);

  const Topology& topology() const { return topo_; }
  int node_count() const { return topo_.node_count(); }
  int radius_limit() const { return radius_limit_; }
  bool strict() const { return strict_; }
  int round() const { return transcript_.rounds; }

  template <class F>
  void run_round(F&& step) {
    begin_round();
    try {
      for (int k = 0; k < node_count(); ++k) {
        NodeContext ctx(*this, k);
        step(ctx);
      }
    } catch (...) {
      abort_round();
      throw;
    }
    end_round();
  }

  const Transcript& transcript() const { return transcript_; }
  /// Returns the transcript so far and starts a fresh one.
  Transcript take_transcript();

 private:
  friend class NodeContext;

  void begin_round();
  void end_round();
  void abort_round();
  void check_radius(int node, int radius);
  void charge(long long messages, int max_hop);
  void mark_pending(FieldBase& f);

  Topology topo_;
  int radius_limit_;
  bool strict_;
  bool in_round_ = false;
  Transcript transcript_;
  long long round_messages_ = 0;
  int round_max_hop_ = 0;
  std::vector<FieldBase*> pending_;
};

inline int NodeContext::round() const { return net_.round(); }

template <class T>
Gathered<T> NodeContext::gather(const Field<T>& f, int radius) {
  net_.check_radius(node_, radius);
  const Topology& topo = net_.topo_;
  long long messages = 0;
  int max_hop = 0;
  const auto& members = topo.ball(node_, radius);
  if constexpr (std::is_same_v<T, double>) {
    messages = topo.ball_hop_sum(node_, radius);
  } else {
    for (const auto& [j, h] : members) {
      if (f.valid_[j]) messages += h * payload_size(f.committed_[j]);
    }
  }
  if (!members.empty()) max_hop = std::min(radius, topo.eccentricity(node_));
  net_.charge(messages, max_hop);
  return Gathered<T>(f, topo, node_, radius, net_.round());
}

template <class T>
void NodeContext::publish(Field<T>& f, T value) {
  f.staged_[node_] = std::move(value);
  f.dirty_[node_] = 1;
  net_.mark_pending(f);
}

}  // namespace lapflow
