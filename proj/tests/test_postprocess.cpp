/* Copyright 2026 The AdaHead Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/


#include <doctest.h>

#include <algorithm>
#include <sstream>

#include "adahead/postprocess.hpp"
#include "adahead/rng.hpp"
#include "oracles.hpp"

using namespace adahead;

namespace {

std::vector<Detection> random_dets(Rng& rng, std::size_t n, int cats) {
  std::vector<Detection> d(n);
  for (Detection& x : d) {
    x.box = {rng.uniform(0.1, 0.9), rng.uniform(0.1, 0.9), rng.uniform(0.05, 0.4), rng.uniform(0.05, 0.4)};
    x.category = static_cast<int>(rng.below(static_cast<std::uint64_t>(cats)));
    // Coarse scores so ties happen often.
    x.score = static_cast<double>(rng.below(20)) / 19.0;
  }
  return d;
}

std::vector<Detection> pick(const std::vector<Detection>& d, const std::vector<std::size_t>& idx) {
  std::vector<Detection> out;
  for (std::size_t i : idx) out.push_back(d[i]);
  return out;
}

}  // namespace

TEST_CASE("confidence filter examples") {
  const std::vector<Detection> d{{{0.5, 0.5, 0.1, 0.1}, 0, 0.2}, {{0.4, 0.5, 0.1, 0.1}, 1, 0.5},
                                 {{0.3, 0.5, 0.1, 0.1}, 2, 0.9}, {{0.2, 0.5, 0.1, 0.1}, 0, 1.0}};
  CHECK(filter_confidence(d, 0).size() == 4);
  const auto top = filter_confidence(d, 1);
  REQUIRE(top.size() == 1);
  CHECK(top[0].score == 1.0);
  const auto mid = filter_confidence({d[0], d[1], d[2]}, 0.4);
  REQUIRE(mid.size() == 2);
  CHECK(mid[0] == d[1]);
  CHECK(mid[1] == d[2]);
  CHECK(filter_confidence({d[1]}, 0.5).size() == 1);  // inclusive
}

TEST_CASE("nms examples") {
  const Detection a{{0.5, 0.5, 0.2, 0.2}, 0, 0.9};
  CHECK(nms({a}, 0.45) == std::vector<std::size_t>{0});
  Detection b = a;
  b.score = 0.8;
  CHECK(nms({b, a}, 0.5) == std::vector<std::size_t>{1});
  Detection c = b;
  c.category = 1;
  CHECK(nms({a, c}, 0.5) == std::vector<std::size_t>{0, 1});  // categories never suppress each other
  CHECK(nms({}, 0.5).empty());
}

TEST_CASE("nms equals the quadratic greedy reference") {
  Rng rng(21);
  for (int trial = 0; trial < 1000; ++trial) {
    const auto d = random_dets(rng, 1 + rng.below(50), 3);
    const double thr = rng.uniform(0.1, 0.9);
    CHECK(nms(d, thr) == oracle::nms(d, thr));
  }
}

TEST_CASE("nms invariants") {
  Rng rng(22);
  for (int trial = 0; trial < 300; ++trial) {
    auto d = random_dets(rng, 1 + rng.below(40), 2);
    const double thr = 0.45;
    const auto kept = pick(d, nms(d, thr));
    for (std::size_t i = 0; i < kept.size(); ++i)
      for (std::size_t j = i + 1; j < kept.size(); ++j)
        if (kept[i].category == kept[j].category) CHECK(iou(kept[i].box, kept[j].box) <= thr);

    CHECK(pick(kept, nms(kept, thr)) == kept);

    rng.shuffle(d);
    CHECK(pick(d, nms(d, thr)) == kept);
  }
}

TEST_CASE("ranking order") {
  const Detection hi{{0.9, 0.9, 0.1, 0.1}, 2, 0.8}, lo{{0.1, 0.1, 0.1, 0.1}, 0, 0.7};
  CHECK(ranks_before(hi, lo));
  CHECK_FALSE(ranks_before(lo, hi));
  Detection tie = lo;
  tie.score = 0.8;
  CHECK(ranks_before(tie, hi));  // equal scores: smaller cy first
  CHECK_FALSE(ranks_before(hi, hi));
}

TEST_CASE("detection text format") {
  const Detection d{{0.5, 0.25, 0.2, 0.125}, 1, 0.87654321};
  CHECK(format_detection(d) == "1 0.876543 0.5 0.25 0.2 0.125");
  std::ostringstream os;
  write_detections(os, {d, {{0.1234567, 0.9, 0.3, 0.3}, 2, 1}});
  CHECK(os.str() == "1 0.876543 0.5 0.25 0.2 0.125\n2 1 0.123457 0.9 0.3 0.3\n");
  std::istringstream is(os.str());
  const auto back = read_detections(is);
  REQUIRE(back.size() == 2);
  CHECK(back[0].category == 1);
  CHECK(back[0].score == 0.876543);
  CHECK(back[1].box.cx == 0.123457);
  std::istringstream bad("1 0.5 0.5\n");
  CHECK_THROWS_AS(read_detections(bad), ParseError);
}
