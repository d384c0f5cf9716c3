// Licensed under the Apache License, Version 2.0 (the "License"); you
// may not use this file except in compliance with the License.  You
// may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or
// implied.  See the License for the specific language governing
// permissions and limitations under the License.

#include <random>
#include <set>

#include "doctest.h"
#include "molmp/error.hpp"
#include "molmp/selectune.hpp"

using namespace molmp;

namespace {

bool has(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

// Planted additive score: each informative feature adds its value, each
// noise feature costs a little.
SubsetEvaluator additive(std::map<std::string, double> value) {
  return [value](const std::vector<std::string>& active) {
    double s = 0.5;
    for (const auto& a : active) s += value.at(a);
    return s;
  };
}

}  // namespace

TEST_CASE("selection removes planted noise and keeps signal") {
  const std::vector<std::string> names{"signal", "noise_a", "noise_b", "noise_c"};
  const auto res = select_features(names, additive({{"signal", 0.3}, {"noise_a", -0.02}, {"noise_b", -0.01},
                                                    {"noise_c", -0.03}}));
  CHECK(res.selected == std::vector<std::string>{"signal"});
  CHECK(res.final_score >= res.initial_score);
  REQUIRE(!res.rounds.empty());
  const auto& first = res.rounds.front();
  CHECK(first.points.at("signal") == 4);
  CHECK(first.points.at("noise_c") == 1);
  CHECK(res.ranking.front() == "signal");
  CHECK(res.ranking_csv().rfind("feature,round_1", 0) == 0);
}

TEST_CASE("independent informative features are all kept") {
  const std::vector<std::string> names{"a", "b", "c", "d", "e"};
  const auto res = select_features(names, additive({{"a", 0.1}, {"b", 0.05}, {"c", 0.02}, {"d", 0.2}, {"e", 0.01}}));
  CHECK(res.selected == names);
  CHECK(res.eliminated.empty());
  CHECK(res.rounds.size() == 1);
}

TEST_CASE("redundant copies: at most one survives") {
  const std::vector<std::string> names{"z", "z_copy", "other"};
  auto eval = [](const std::vector<std::string>& active) {
    const bool z = has(active, "z") || has(active, "z_copy");
    const bool both = has(active, "z") && has(active, "z_copy");
    return 0.5 + (z ? 0.3 : 0.0) - (both ? 0.02 : 0.0) + (has(active, "other") ? 0.05 : 0.0);
  };
  const auto res = select_features(names, eval);
  CHECK(has(res.selected, "other"));
  CHECK(has(res.selected, "z") != has(res.selected, "z_copy"));
}

TEST_CASE("selection never returns an empty mask or ends below its starting score") {
  const std::vector<std::string> names{"p", "q", "r"};
  const auto res = select_features(names, [](const std::vector<std::string>& a) { return 1.0 - 0.1 * a.size(); });
  CHECK(res.selected.size() == 1);
  // q helps only once r is gone.
  auto interacting = [](const std::vector<std::string>& a) {
    double s = 0.5 + (has(a, "p") ? 0.2 : 0.0);
    if (has(a, "r")) s += has(a, "q") ? -0.05 : 0.01;
    if (!has(a, "r") && has(a, "q")) s += 0.04;
    return s;
  };
  const auto res2 = select_features(names, interacting);
  CHECK(has(res2.selected, "p"));
  CHECK(res2.final_score >= res2.initial_score);
  CHECK_THROWS_AS(select_features({"only"}, interacting), InputError);
}

TEST_CASE("pruning rule thresholds") {
  TuneConfig cfg;
  CHECK(should_prune(cfg, Task::Classification, 30, 0.64, 0.0));
  CHECK_FALSE(should_prune(cfg, Task::Classification, 30, 0.65, 0.0));
  CHECK_FALSE(should_prune(cfg, Task::Classification, 29, 0.10, 0.0));
  CHECK(should_prune(cfg, Task::Regression, 20, 0.0, 0.16));
  CHECK_FALSE(should_prune(cfg, Task::Regression, 20, 0.0, 0.15));
  CHECK_FALSE(should_prune(cfg, Task::Regression, 21, 0.0, 0.9));
}

TEST_CASE("sampled trials stay inside the search ranges") {
  TuneConfig cfg;
  cfg.trials = 500;
  cfg.seed = 4;
  const auto trials = sample_trials(cfg);
  for (const auto& t : trials) {
    CHECK(t.hidden >= 50);
    CHECK(t.hidden <= 400);
    CHECK(t.dropout >= 0.05);
    CHECK(t.dropout <= 0.5);
    CHECK(t.batch_size >= 20);
    CHECK(t.batch_size <= 180);
  }
  CHECK(sample_trials(cfg)[7].hidden == trials[7].hidden);
  cfg.trials = 0;
  CHECK_THROWS_AS(sample_trials(cfg), InputError);
}

TEST_CASE("Pareto front matches exhaustive dominance and the knee is on it") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (Task task : {Task::Classification, Task::Regression}) {
    for (int rep = 0; rep < 20; ++rep) {
      std::vector<Trial> trials(30);
      for (int i = 0; i < 30; ++i) {
        trials[i].id = i;
        trials[i].loss_gap = std::round(u(rng) * 10) / 10;
        trials[i].score = std::round(u(rng) * 10) / 10;
        trials[i].pruned = u(rng) < 0.2;
      }
      const auto res = pareto_select(trials, task);
      std::set<int> front(res.pareto.begin(), res.pareto.end());
      for (const auto& a : trials) {
        bool dominated = false;
        for (const auto& b : trials) {
          if (b.pruned || b.id == a.id) continue;
          const bool better_score = task == Task::Classification ? b.score >= a.score : b.score <= a.score;
          const bool strictly = b.loss_gap < a.loss_gap || b.score != a.score;
          if (b.loss_gap <= a.loss_gap && better_score && strictly) dominated = true;
        }
        CHECK(front.count(a.id) == (!a.pruned && !dominated ? 1u : 0u));
        CHECK(res.trials[a.id].pareto == (front.count(a.id) == 1));
      }
      for (int x : res.pareto) {
        for (int y : res.pareto) CHECK_FALSE(dominates(res.trials[x], res.trials[y], task));
      }
      CHECK(front.count(res.chosen) == 1);
    }
  }
  std::vector<Trial> one(1);
  one[0].score = 0.7;
  const auto single = pareto_select(one, Task::Classification);
  CHECK(single.pareto == std::vector<int>{0});
  CHECK(single.chosen == 0);
  one[0].pruned = true;
  CHECK_THROWS_AS(pareto_select(one, Task::Classification), InputError);
}

TEST_CASE("knee point picks the balanced trade-off") {
  std::vector<Trial> t(3);
  t[0] = {0, 100, 0.1, 32, 0.00, 0.60};
  t[1] = {1, 100, 0.1, 32, 0.05, 0.85};
  t[2] = {2, 100, 0.1, 32, 0.40, 0.90};
  const auto res = pareto_select(t, Task::Classification);
  CHECK(res.pareto.size() == 3);
  CHECK(res.chosen == 1);
}

TEST_CASE("tune with a custom runner is deterministic across worker counts") {
  TuneConfig cfg;
  cfg.trials = 12;
  cfg.seed = 9;
  auto runner = [](Trial& t) {
    t.loss_gap = std::abs(t.dropout - 0.25) + t.batch_size / 1000.0;
    t.score = 1.0 - std::abs(t.hidden - 250) / 400.0;
    t.pruned = t.score < 0.7;
  };
  const auto a = tune(cfg, Task::Classification, runner, 1);
  const auto b = tune(cfg, Task::Classification, runner, 4);
  CHECK(a.pareto == b.pareto);
  CHECK(a.chosen == b.chosen);
  CHECK(a.to_json() == b.to_json());
}
