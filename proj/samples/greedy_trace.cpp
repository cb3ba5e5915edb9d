// Greedy template selection over a hand-written score table. Shows each
// step's set and score, and the final choice next to the top-k baseline.

#include <iostream>
#include <map>
#include <set>
#include <span>

#include "webqa/question_gen.hpp"

int main() {
  using namespace webqa;
  // Scores of every set the greedy search can ask about. "t2" overlaps
  // with "t1", so adding it helps less than the weaker but disjoint "t3".
  const std::map<std::set<std::string>, double> table{
      {{"t1"}, 0.50}, {{"t2"}, 0.45}, {{"t3"}, 0.30},
      {{"t1", "t2"}, 0.52}, {{"t1", "t3"}, 0.70}, {{"t1", "t2", "t3"}, 0.68},
  };
  auto score = [&](std::span<const QuestionTemplate> set) {
    std::set<std::string> key;
    for (const auto& t : set) key.insert(t.keyword());
    return table.at(key);
  };

  const auto candidates = make_templates({"t1", "t2", "t3"});
  const auto trace = greedy_select_templates_traced(candidates, score);
  for (const auto& step : trace.steps) {
    std::cout << "step " << step.templates.size() << ":";
    for (const auto& k : step.keywords()) std::cout << ' ' << k;
    std::cout << "  " << step.performance << '\n';
  }
  std::cout << "greedy picks:";
  for (const auto& k : trace.selected.keywords()) std::cout << ' ' << k;
  std::cout << "  " << trace.selected.performance << '\n';

  auto single = [&](const QuestionTemplate& t) { return score(std::span<const QuestionTemplate>(&t, 1)); };
  const auto top2 = baseline_select_topk(candidates, single, 2);
  std::cout << "top-2 baseline:";
  for (const auto& k : top2.keywords()) std::cout << ' ' << k;
  std::cout << "  " << score(top2.templates) << '\n';
}
