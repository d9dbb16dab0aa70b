// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <map>

#include "leod/error.hpp"
#include "leod/tracker.hpp"
#include "oracles.hpp"

namespace leod {
namespace {

DetBox b(double x, double y, double w, double h, int t, int cls = 0, double score = 0.9) {
  DetBox d{x, y, w, h, cls, t, score, {0.0, 0.0}};
  d.p_iou[static_cast<std::size_t>(cls)] = score;
  return d;
}

std::vector<std::vector<DetBox>> frames_of(int L) { return std::vector<std::vector<DetBox>>(static_cast<std::size_t>(L)); }

TEST(Predict, LinearMotionKeepsSize) {
  Track t;
  t.last_box = b(0, 0, 10, 10, 0);
  t.vx = 2;
  t.vy = 1;
  t.last_match_t = 0;
  const DetBox p = predict(t, 1);
  EXPECT_EQ(std::tie(p.x, p.y, p.w, p.h), std::make_tuple(2.0, 1.0, 10.0, 10.0));
  EXPECT_EQ(p.t_step, 1);
  t.vy = 0;
  EXPECT_EQ(predict(t, 3).x, 6.0);
  t.vx = 0;
  EXPECT_EQ(predict(t, 5).x, 0.0);
}

TEST(GreedyMatch, PairsNearestBoxes) {
  const std::vector<DetBox> pred{b(0, 0, 10, 10, 1), b(20, 0, 10, 10, 1)};
  const std::vector<int> ids{0, 1};
  const std::vector<DetBox> boxes{b(1, 0, 10, 10, 1), b(21, 0, 10, 10, 1)};
  const auto m = greedy_match(pred, ids, boxes, 0.45);
  ASSERT_EQ(m.size(), 2u);
  std::set<std::pair<std::size_t, std::size_t>> got;
  for (const auto& p : m) got.insert({p.track, p.box});
  EXPECT_EQ(got, (oracle::PairSet{{0, 0}, {1, 1}}));
  EXPECT_EQ(got, oracle::ref_max_weight_matching(pred, boxes, 0.45));
}

TEST(GreedyMatch, RespectsClassAndThreshold) {
  const std::vector<DetBox> pred{b(0, 0, 10, 10, 1, 0)};
  const std::vector<int> ids{0};
  EXPECT_TRUE(greedy_match(pred, ids, std::vector<DetBox>{b(0, 0, 10, 10, 1, 1)}, 0.45).empty());
  // IoU exactly 0.5 is not > 0.5.
  EXPECT_TRUE(greedy_match(pred, ids, std::vector<DetBox>{b(0, 0, 10, 20, 1, 0)}, 0.5).empty());
}

TEST(GreedyMatch, TiesGoToLowerTrackIdThenLowerBoxIndex) {
  const std::vector<DetBox> pred{b(0, 0, 10, 10, 1), b(0, 0, 10, 10, 1)};
  const std::vector<int> ids{7, 3};
  const std::vector<DetBox> boxes{b(0, 0, 10, 10, 1), b(0, 0, 10, 10, 1)};
  const auto m = greedy_match(pred, ids, boxes, 0.45);
  ASSERT_EQ(m.size(), 2u);
  EXPECT_EQ(m[0].track, 1u);  // id 3
  EXPECT_EQ(m[0].box, 0u);
  EXPECT_EQ(m[1].track, 0u);
  EXPECT_EQ(m[1].box, 1u);
}

oracle::PairSet as_set(const std::vector<MatchPair>& m) {
  oracle::PairSet s;
  for (const auto& p : m) s.insert({p.track, p.box});
  return s;
}

TEST(GreedyMatch, AgreesWithArgmaxAndLexmaxOracles) {
  Rng rng(31);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t nt = static_cast<std::size_t>(rng.below(7));
    const std::size_t nb = static_cast<std::size_t>(rng.below(7));
    const auto tracks = oracle::clustered_boxes(rng, nt, 2);
    const auto boxes = oracle::clustered_boxes(rng, nb, 2);
    std::vector<int> ids(nt);
    for (std::size_t i = 0; i < nt; ++i) ids[i] = static_cast<int>(i);
    const auto got = as_set(greedy_match(tracks, ids, boxes, 0.3));
    ASSERT_EQ(got, oracle::ref_greedy_argmax(tracks, ids, boxes, 0.3));
    ASSERT_EQ(got, oracle::ref_lexmax_matching(tracks, boxes, 0.3));
  }
}

TEST(GreedyMatch, InvariantToBoxPermutation) {
  Rng rng(32);
  for (int trial = 0; trial < 200; ++trial) {
    const auto tracks = oracle::clustered_boxes(rng, 12, 2);
    auto boxes = oracle::clustered_boxes(rng, 12, 2);
    std::vector<int> ids(tracks.size());
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = static_cast<int>(i);
    std::map<std::size_t, DetBox> by_track;
    for (const auto& m : greedy_match(tracks, ids, boxes, 0.3)) by_track[m.track] = boxes[m.box];
    std::vector<std::size_t> perm(boxes.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
    rng.shuffle(perm);
    std::vector<DetBox> shuffled;
    for (std::size_t i : perm) shuffled.push_back(boxes[i]);
    std::map<std::size_t, DetBox> by_track2;
    for (const auto& m : greedy_match(tracks, ids, shuffled, 0.3)) by_track2[m.track] = shuffled[m.box];
    ASSERT_EQ(by_track, by_track2);
  }
}

TEST(TrackerDecay, FreshTrackUnmatchedTwiceSurvives) {
  Tracker tr;
  tr.step(std::vector<DetBox>{b(0, 0, 10, 10, 0)}, 0);
  tr.step({}, 1);
  tr.step({}, 2);
  ASSERT_EQ(tr.active().size(), 1u);
  EXPECT_NEAR(tr.active()[0].q, 0.729, 1e-12);
}

TEST(TrackerDecay, MatchedTrackDeletedOnSixthMiss) {
  Tracker tr;
  tr.step(std::vector<DetBox>{b(0, 0, 10, 10, 0)}, 0);
  tr.step(std::vector<DetBox>{b(0, 0, 10, 10, 1)}, 1);
  ASSERT_EQ(tr.active()[0].q, 1.0);
  double q = 1.0;
  for (int miss = 1; miss <= 6; ++miss) {
    tr.step({}, 1 + miss);
    q *= 0.9;
    if (miss < 6) {
      ASSERT_EQ(tr.active().size(), 1u) << "miss " << miss;
      EXPECT_EQ(tr.active()[0].q, q);
    }
  }
  EXPECT_TRUE(tr.active().empty());
  ASSERT_EQ(tr.deleted().size(), 1u);
  EXPECT_NEAR(tr.deleted()[0].q, 0.531441, 1e-12);
  EXPECT_LT(tr.deleted()[0].q, 0.55);
}

TEST(TrackerDecay, FreshTrackDeletedOnFifthMiss) {
  Tracker tr;
  tr.step(std::vector<DetBox>{b(0, 0, 10, 10, 0)}, 0);
  for (int miss = 1; miss <= 5; ++miss) {
    tr.step({}, miss);
    EXPECT_EQ(tr.active().size(), miss < 5 ? 1u : 0u) << "miss " << miss;
  }
  EXPECT_EQ(tr.deleted().size(), 1u);
}

TEST(Tracker, RejectsBadTimesteps) {
  Tracker tr;
  tr.step({}, 3);
  EXPECT_THROW(tr.step({}, 3), Error);
  EXPECT_THROW(tr.step(std::vector<DetBox>{b(0, 0, 1, 1, 9)}, 4), Error);
  EXPECT_THROW(Tracker(TrackerParams{0.45, 1.5, 0.9, 0.9}), Error);
}

TEST(Tracker, VelocityFromCentreDisplacementOverGap) {
  Tracker tr;
  tr.step(std::vector<DetBox>{b(0, 0, 40, 40, 0)}, 0);
  tr.step({}, 1);
  tr.step(std::vector<DetBox>{b(8, 4, 40, 40, 2)}, 2);
  const Track& t = tr.active()[0];
  EXPECT_EQ(t.vx, 4.0);
  EXPECT_EQ(t.vy, 2.0);
  EXPECT_EQ(t.n, 2);
  EXPECT_EQ(t.q, 1.0);
}

TEST(TrackSequence, StaticObjectFormsOneTrack) {
  auto frames = frames_of(10);
  for (int t = 0; t < 10; ++t) frames[static_cast<std::size_t>(t)].push_back(b(5, 5, 10, 10, t));
  const auto r = track_sequence(frames);
  ASSERT_EQ(r.tracks.size(), 1u);
  for (const auto& tb : r.boxes) EXPECT_EQ(tb.track_len, 10);
}

TEST(TrackSequence, GapIsBridged) {
  auto frames = frames_of(13);
  for (int t = 0; t < 13; ++t) {
    if (t == 5 || t == 6) continue;
    frames[static_cast<std::size_t>(t)].push_back(b(t, 0, 20, 20, t));
  }
  const auto r = track_sequence(frames);
  ASSERT_EQ(r.tracks.size(), 1u);
  EXPECT_EQ(r.tracks[0].n, 11);
  for (const auto& tb : r.boxes) EXPECT_EQ(tb.track_len, 11);
}

TEST(TrackSequence, EmptyInput) {
  EXPECT_TRUE(track_sequence(std::vector<std::vector<DetBox>>{}).boxes.empty());
  EXPECT_TRUE(track_sequence(frames_of(4)).boxes.empty());
}

std::vector<std::vector<DetBox>> random_frames(Rng& rng, int L) {
  std::vector<std::vector<DetBox>> frames(static_cast<std::size_t>(L));
  // A few drifting objects plus clutter.
  std::vector<std::array<double, 4>> objs;
  for (int i = 0; i < 4; ++i) objs.push_back({rng.uniform(0, 150), rng.uniform(0, 150), rng.uniform(-3, 3), rng.uniform(-3, 3)});
  for (int t = 0; t < L; ++t) {
    for (std::size_t i = 0; i < objs.size(); ++i) {
      if (rng.bernoulli(0.2)) continue;
      auto d = b(objs[i][0] + objs[i][2] * t, objs[i][1] + objs[i][3] * t, 25, 25, t, static_cast<int>(i % 2),
                 rng.uniform(0.3, 1.0));
      frames[static_cast<std::size_t>(t)].push_back(d);
    }
    const auto clutter = oracle::random_boxes(rng, rng.below(3), 2, t, 150);
    frames[static_cast<std::size_t>(t)].insert(frames[static_cast<std::size_t>(t)].end(), clutter.begin(), clutter.end());
  }
  return frames;
}

TEST(TrackSequence, EveryBoxOnceUntouchedAndLengthsConsistent) {
  Rng rng(41);
  for (int trial = 0; trial < 100; ++trial) {
    const auto frames = random_frames(rng, 20);
    const auto r = track_sequence(frames);
    std::size_t total = 0;
    for (const auto& f : frames) total += f.size();
    ASSERT_EQ(r.boxes.size(), total);
    std::map<int, int> len_of;
    for (const auto& t : r.tracks) {
      const auto matched = std::count_if(t.history.begin(), t.history.end(), [](const auto& h) { return h.matched; });
      ASSERT_EQ(matched, t.n);
      len_of[t.id] = t.n;
      ASSERT_GE(t.q, 0.0);
      ASSERT_LE(t.q, 1.0);
    }
    for (const auto& tb : r.boxes) {
      ASSERT_FALSE(tb.inpainted);
      ASSERT_EQ(tb.box, frames[static_cast<std::size_t>(tb.box.t_step)][static_cast<std::size_t>(tb.source_index)]);
      ASSERT_EQ(tb.track_len, len_of.at(tb.track_id));
    }
    for (std::size_t i = 1; i < r.tracks.size(); ++i) ASSERT_LT(r.tracks[i - 1].id, r.tracks[i].id);
  }
}

TEST(TrackSequence, ReversedFramesCoverSameBoxes) {
  Rng rng(42);
  for (int trial = 0; trial < 50; ++trial) {
    const auto frames = random_frames(rng, 15);
    const int L = static_cast<int>(frames.size());
    std::vector<std::vector<DetBox>> rev(frames.rbegin(), frames.rend());
    for (int t = 0; t < L; ++t) {
      for (auto& d : rev[static_cast<std::size_t>(t)]) d.t_step = t;
    }
    const auto fwd = track_sequence(frames);
    const auto bwd = track_sequence(rev);
    std::multiset<std::tuple<int, double, double, double, double>> a;
    std::multiset<std::tuple<int, double, double, double, double>> c;
    for (const auto& x : fwd.boxes) a.insert({x.box.t_step, x.box.x, x.box.y, x.box.w, x.box.h});
    for (const auto& x : bwd.boxes) c.insert({L - 1 - x.box.t_step, x.box.x, x.box.y, x.box.w, x.box.h});
    ASSERT_EQ(a, c);
  }
}

TEST(Inpaint, LinearInterpolationAcrossGap) {
  auto frames = frames_of(3);
  frames[0].push_back(b(0, 0, 40, 40, 0, 0, 0.6));
  frames[2].push_back(b(10, 0, 40, 40, 2, 0, 0.8));
  const auto r = track_sequence(frames);
  ASSERT_EQ(r.tracks.size(), 1u);
  const auto in = inpainted_boxes(r, 2);
  ASSERT_EQ(in.size(), 1u);
  EXPECT_TRUE(in[0].inpainted);
  EXPECT_EQ(in[0].box.t_step, 1);
  EXPECT_DOUBLE_EQ(in[0].box.x, 5.0);
  EXPECT_EQ(in[0].box.w, 40.0);
  EXPECT_EQ(in[0].box.p_obj, 0.6);  // equidistant: earlier match wins
  EXPECT_EQ(in[0].track_id, r.tracks[0].id);
  EXPECT_EQ(inpaint(r, 2).size(), 3u);
}

TEST(Inpaint, ScoresFromNearestMatch) {
  auto frames = frames_of(4);
  frames[0].push_back(b(0, 0, 40, 40, 0, 0, 0.6));
  frames[3].push_back(b(3, 0, 40, 40, 3, 0, 0.8));
  const auto in = inpainted_boxes(track_sequence(frames), 2);
  ASSERT_EQ(in.size(), 2u);
  EXPECT_EQ(in[0].box.p_obj, 0.6);
  EXPECT_EQ(in[1].box.p_obj, 0.8);
  EXPECT_DOUBLE_EQ(in[1].box.x, 2.0);
}

TEST(Inpaint, ShortTracksAndGaplessTracksUnchanged) {
  auto frames = frames_of(4);
  frames[0].push_back(b(0, 0, 40, 40, 0));
  frames[2].push_back(b(1, 0, 40, 40, 2));
  frames[3].push_back(b(2, 0, 40, 40, 3));
  const auto r = track_sequence(frames);
  EXPECT_EQ(r.tracks[0].n, 3);
  EXPECT_TRUE(inpainted_boxes(r, 6).empty());
  auto full = frames_of(8);
  for (int t = 0; t < 8; ++t) full[static_cast<std::size_t>(t)].push_back(b(0, 0, 40, 40, t));
  const auto rf = track_sequence(full);
  EXPECT_TRUE(inpainted_boxes(rf, 6).empty());
  EXPECT_EQ(inpaint(rf, 6).size(), rf.boxes.size());
}

}  // namespace
}  // namespace leod
