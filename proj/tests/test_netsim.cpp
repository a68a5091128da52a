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

#include <doctest.h>

#include <sstream>

#include "helpers.hpp"
#include "lapflow/errors.hpp"
#include "lapflow/netsim.hpp"

using namespace lapflow;

namespace {

Transcript gather_once(const WeightedGraph& g, int node, int radius, int limit, bool strict,
                       std::vector<int>* seen = nullptr) {
  SyncNetwork net(Topology(g), limit, strict);
  Field<double> f(g.node_count());
  for (int k = 0; k < g.node_count(); ++k) f.seed(k, 10.0 + k);
  net.run_round([&](NodeContext& ctx) {
    if (ctx.id() != node) return;
    auto view = ctx.gather(f, radius);
    for (const auto& [j, h] : view.members()) {
      CHECK(view[j] == 10.0 + j);
      if (seen != nullptr) seen->push_back(j);
    }
  });
  return net.take_transcript();
}

}  // namespace

TEST_CASE("gather charges hop-weighted messages") {
  std::vector<int> seen;
  Transcript k3 = gather_once(complete_graph(3), 0, 1, 1, true, &seen);
  CHECK(seen == std::vector<int>{1, 2});
  CHECK(k3.messages_total == 2);
  CHECK(k3.max_hop_used == 1);

  seen.clear();
  Transcript p5 = gather_once(path_graph(5), 0, 2, 2, true, &seen);
  CHECK(seen == std::vector<int>{1, 2});
  CHECK(p5.messages_total == 3);
  CHECK(p5.max_hop_used == 2);

  // A radius past the eccentricity only reaches the far end.
  Transcript wide = gather_once(path_graph(3), 0, 5, 5, true);
  CHECK(wide.messages_total == 1 + 2);
  CHECK(wide.max_hop_used == 2);
}

TEST_CASE("strict radius enforcement") {
  try {
    gather_once(path_graph(5), 0, 2, 1, true);
    FAIL("expected a locality violation");
  } catch (const LocalityViolation& e) {
    CHECK(e.node() == 0);
    CHECK(e.round() == 0);
  }
  // Enforcement off: the wider gather is allowed.
  CHECK(gather_once(path_graph(5), 0, 2, 1, false).messages_total == 3);
}

TEST_CASE("reads outside the gathered ball are violations") {
  SyncNetwork net(Topology(path_graph(4)), 3, true);
  Field<double> f(4);
  for (int k = 0; k < 4; ++k) f.seed(k, k);
  CHECK_THROWS_AS(net.run_round([&](NodeContext& ctx) {
                    auto view = ctx.gather(f, 1);
                    (void)view[(ctx.id() + 2) % 4];
                  }),
                  LocalityViolation);
  // The network recovers after an aborted round.
  net.run_round([&](NodeContext& ctx) { ctx.publish(f, 1.0); });
  CHECK(f.committed(3) == 1.0);
}

TEST_CASE("unpublished values cannot be read") {
  SyncNetwork net(Topology(complete_graph(3)), 1, true);
  Field<double> f(3);
  CHECK_THROWS_AS(net.run_round([&](NodeContext& ctx) {
                    auto view = ctx.gather(f, 1);
                    (void)view[(ctx.id() + 1) % 3];
                  }),
                  LocalityViolation);
  CHECK_THROWS_AS(net.run_round([&](NodeContext& ctx) { (void)ctx.own(f); }),
                  LocalityViolation);
  // Values published in a round only show up in the next one.
  Field<double> g(3);
  CHECK_THROWS_AS(net.run_round([&](NodeContext& ctx) {
                    ctx.publish(g, 1.0);
                    if (ctx.id() == 2) (void)ctx.gather(g, 1)[0];
                  }),
                  LocalityViolation);
}

TEST_CASE("constant broadcast") {
  SyncNetwork net(Topology(grid_graph(3, 3)), 1, true);
  Field<double> f(9);
  net.run_round([&](NodeContext& ctx) { ctx.publish(f, 1.0); });
  net.run_round([&](NodeContext& ctx) {
    auto view = ctx.gather(f, 1);
    for (const auto& [j, h] : view.members()) CHECK(view[j] == 1.0);
  });
  CHECK(net.transcript().rounds == 2);
  CHECK(net.transcript().messages_per_round[0] == 0);
  CHECK(net.transcript().messages_per_round[1] == 2 * 12);
}

TEST_CASE("closed-neighbourhood averaging on K3") {
  SyncNetwork net(Topology(complete_graph(3)), 1, true);
  Field<double> f(3);
  for (int k = 0; k < 3; ++k) f.seed(k, k);
  for (int round = 0; round < 2; ++round) {
    net.run_round([&](NodeContext& ctx) {
      auto view = ctx.gather(f, 1);
      double sum = ctx.own(f);
      for (const auto& [j, h] : view.members()) sum += view[j];
      ctx.publish(f, sum / 3.0);
    });
    for (int k = 0; k < 3; ++k) CHECK(f.committed(k) == doctest::Approx(1.0));
  }
}

TEST_CASE("row payloads") {
  SyncNetwork net(Topology(path_graph(3)), 2, true);
  Field<LocalRow> f(3);
  LocalRow wide{2.0, {{0, 2}, {1.0, 1.0}}};
  f.seed(0, LocalRow{1.0, {{1}, {1.0}}});
  f.seed(1, wide);
  f.seed(2, LocalRow{1.0, {{1}, {1.0}}});
  net.run_round([&](NodeContext& ctx) {
    if (ctx.id() == 0) (void)ctx.gather(f, 2);
  });
  // node 1: 1 hop * (1 + 2); node 2: 2 hops * (1 + 1)
  CHECK(net.transcript().messages_total == 3 + 4);
}

TEST_CASE("transcripts are deterministic and consistent") {
  auto run = [] {
    WeightedGraph g = random_graph(15, 30, 8);
    SyncNetwork net(Topology(g), 2, true);
    Field<double> f(15);
    for (int k = 0; k < 15; ++k) f.seed(k, 0.5 * k);
    for (int r = 0; r < 5; ++r) {
      net.run_round([&](NodeContext& ctx) {
        auto view = ctx.gather(f, 1 + (ctx.id() + r) % 2);
        double acc = ctx.own(f);
        for (const auto& [j, h] : view.members()) acc += view[j] / (h + 1.0);
        ctx.publish(f, acc / 4.0);
      });
    }
    std::vector<double> vals;
    for (int k = 0; k < 15; ++k) vals.push_back(f.committed(k));
    return std::make_pair(net.take_transcript(), vals);
  };
  auto [a, va] = run();
  auto [b, vb] = run();
  CHECK(a.messages_per_round == b.messages_per_round);
  CHECK(a.max_hop_per_round == b.max_hop_per_round);
  CHECK(va == vb);
  long long total = 0;
  for (long long m : a.messages_per_round) total += m;
  CHECK(total == a.messages_total);
  CHECK(a.max_hop_used <= 2);

  std::ostringstream csv;
  a.write_csv(csv);
  CHECK(csv.str().rfind("round,messages,max_hop\n1,", 0) == 0);
}

TEST_CASE("topology balls") {
  WeightedGraph g = grid_graph(4, 4);
  Topology topo(g);
  auto fw = lftest::floyd_warshall(g);
  for (int k = 0; k < 16; ++k) {
    for (int r = 1; r <= 6; ++r) {
      long long sum = 0;
      int count = 0;
      for (int j = 0; j < 16; ++j) {
        if (j != k && fw[k][j] <= r) {
          sum += fw[k][j];
          ++count;
        }
      }
      CHECK(static_cast<int>(topo.ball(k, r).size()) == count);
      CHECK(topo.ball_hop_sum(k, r) == sum);
    }
  }
  CHECK(topo.diameter() == 6);
  CHECK_THROWS_AS(SyncNetwork(topo, 0, true), Error);
}
