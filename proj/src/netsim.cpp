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

#include "lapflow/netsim.hpp"

#include <algorithm>
#include <ostream>
#include <queue>

namespace lapflow {

double SparseRow::at(int j) const {
  auto it = std::lower_bound(idx.begin(), idx.end(), j);
  if (it == idx.end() || *it != j) return 0.0;
  return val[it - idx.begin()];
}

Topology::Topology(const WeightedGraph& g) : n_(g.node_count()) {
  adj_.resize(n_);
  for (int k = 0; k < n_; ++k) {
    for (const Neighbor& nb : g.neighbors(k)) adj_[k].push_back(nb.node);
  }
  hops_.assign(static_cast<std::size_t>(n_) * n_, -1);
  ecc_.assign(n_, 0);
  std::vector<int> queue(n_);
  for (int s = 0; s < n_; ++s) {
    int* dist = hops_.data() + static_cast<std::size_t>(s) * n_;
    int head = 0;
    int tail = 0;
    dist[s] = 0;
    queue[tail++] = s;
    while (head < tail) {
      int u = queue[head++];
      for (int v : adj_[u]) {
        if (dist[v] < 0) {
          dist[v] = dist[u] + 1;
          queue[tail++] = v;
        }
      }
    }
    ecc_[s] = dist[queue[tail - 1]];
    diameter_ = std::max(diameter_, ecc_[s]);
  }
}

int Topology::max_degree() const {
  int best = 0;
  for (const auto& a : adj_) best = std::max(best, static_cast<int>(a.size()));
  return best;
}

void Topology::build_balls(int r) const {
  if (static_cast<int>(balls_.size()) <= r) {
    balls_.resize(r + 1);
    hop_sums_.resize(r + 1);
  }
  if (!balls_[r].empty() || n_ == 0) return;
  balls_[r].resize(n_);
  hop_sums_[r].assign(n_, 0);
  for (int k = 0; k < n_; ++k) {
    auto& ball = balls_[r][k];
    for (int j = 0; j < n_; ++j) {
      const int h = hop(k, j);
      if (j != k && h > 0 && h <= r) {
        ball.emplace_back(j, h);
        hop_sums_[r][k] += h;
      }
    }
  }
}

const std::vector<std::pair<int, int>>& Topology::ball(int k, int r) const {
  r = std::min(r, std::max(diameter_, 1));
  build_balls(r);
  return balls_[r][k];
}

long long Topology::ball_hop_sum(int k, int r) const {
  r = std::min(r, std::max(diameter_, 1));
  build_balls(r);
  return hop_sums_[r][k];
}

void Transcript::append(const Transcript& other) {
  rounds += other.rounds;
  messages_total += other.messages_total;
  messages_per_round.insert(messages_per_round.end(),
                            other.messages_per_round.begin(),
                            other.messages_per_round.end());
  max_hop_per_round.insert(max_hop_per_round.end(),
                           other.max_hop_per_round.begin(),
                           other.max_hop_per_round.end());
  max_hop_used = std::max(max_hop_used, other.max_hop_used);
}

void Transcript::write_csv(std::ostream& out) const {
  out << "round,messages,max_hop\n";
  for (std::size_t r = 0; r < messages_per_round.size(); ++r) {
    out << r + 1 << ',' << messages_per_round[r] << ',' << max_hop_per_round[r]
        << '\n';
  }
}

SyncNetwork::SyncNetwork(Topology topo, int radius_limit, bool strict)
    : topo_(std::move(topo)), radius_limit_(radius_limit), strict_(strict) {
  if (radius_limit < 1) throw InvalidArgument("network: hop radius must be >= 1");
  transcript_.radius_limit = radius_limit;
  transcript_.strict = strict;
}

Transcript SyncNetwork::take_transcript() {
  Transcript out = std::move(transcript_);
  transcript_ = Transcript{};
  transcript_.radius_limit = radius_limit_;
  transcript_.strict = strict_;
  return out;
}

void SyncNetwork::begin_round() {
  if (in_round_) throw Error(ErrorKind::kLocality, "network: nested round");
  in_round_ = true;
  round_messages_ = 0;
  round_max_hop_ = 0;
}

void SyncNetwork::end_round() {
  for (FieldBase* f : pending_) f->commit();
  pending_.clear();
  transcript_.rounds += 1;
  transcript_.messages_total += round_messages_;
  transcript_.messages_per_round.push_back(round_messages_);
  transcript_.max_hop_per_round.push_back(round_max_hop_);
  transcript_.max_hop_used = std::max(transcript_.max_hop_used, round_max_hop_);
  in_round_ = false;
}

// A failed round publishes nothing.
void SyncNetwork::abort_round() {
  for (FieldBase* f : pending_) f->discard();
  pending_.clear();
  in_round_ = false;
}

void SyncNetwork::check_radius(int node, int radius) {
  if (!in_round_) {
    throw LocalityViolation(node, round(), "gather outside of a round");
  }
  if (radius < 1) {
    throw InvalidArgument("gather radius must be >= 1");
  }
  if (strict_ && radius > radius_limit_) {
    throw LocalityViolation(node, round(),
                            "node " + std::to_string(node) + " gathered at radius " +
                                std::to_string(radius) + " > R = " +
                                std::to_string(radius_limit_) + " in round " +
                                std::to_string(round()));
  }
}

void SyncNetwork::charge(long long messages, int max_hop) {
  round_messages_ += messages;
  round_max_hop_ = std::max(round_max_hop_, max_hop);
}

void SyncNetwork::mark_pending(FieldBase& f) {
  if (!in_round_) throw LocalityViolation(-1, round(), "publish outside of a round");
  if (!f.pending_) {
    f.pending_ = true;
    pending_.push_back(&f);
  }
}

}  // namespace lapflow
