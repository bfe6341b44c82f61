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

#include <cmath>

#include "adahead/attention.hpp"
#include "adahead/rng.hpp"

using namespace adahead;

namespace {

Tensor<double> rand_tensor(const Shape& s, std::uint64_t seed, double lo = -1, double hi = 1) {
  Rng rng(seed);
  Tensor<double> t(s);
  for (Index i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

Tensor<double> forced(Index channels, double a1, double a2, double b1, double b2) {
  Tensor<double> th({channels, 4});
  for (Index c = 0; c < channels; ++c) {
    th[c * 4] = a1;
    th[c * 4 + 1] = a2;
    th[c * 4 + 2] = b1;
    th[c * 4 + 3] = b2;
  }
  return th;
}

// Identity f(.): unit weight, zero bias.
struct Gate {
  Tensor<double> w{Shape{1, 1, 1, 1}, {1.0}};
  Tensor<double> b{Shape{1}, {0.0}};
};

Tensor<double> run_scale(const Tensor<double>& f) {
  Tape<double> t;
  Gate g;
  return t.value(scale_attention(t, t.constant(f), t.constant(g.w), t.constant(g.b)));
}

// Sampling field from explicit arrays.
Tensor<double> run_spatial(const Tensor<double>& f, const Tensor<double>& offsets, const Tensor<double>& masks,
                           const Tensor<double>& weights) {
  Tape<double> t;
  SamplingField field{t.constant(offsets), t.constant(masks), t.constant(weights)};
  return t.value(spatial_attention(t, t.constant(f), field));
}

Tensor<double> run_task(const Tensor<double>& f, const Tensor<double>& theta) {
  Tape<double> t;
  return t.value(task_attention(t, t.constant(f), t.constant(theta)));
}

}  // namespace

TEST_CASE("scale attention gate examples") {
  CHECK(run_scale(Tensor<double>({1, 2, 2, 3}, 1.0)) == Tensor<double>({1, 2, 2, 3}, 1.0));
  const auto zero = run_scale(Tensor<double>({1, 2, 2, 3}, -1.0));
  for (Index i = 0; i < zero.size(); ++i) CHECK(zero[i] == 0.0);

  // Level means 0 and 0.5 give gates 0.5 and 0.75.
  Tensor<double> f({2, 1, 2, 1}, {-1, 1, 0.25, 0.75});
  const auto y = run_scale(f);
  CHECK(y[0] / f[0] == 0.5);
  CHECK(y[1] / f[1] == 0.5);
  CHECK(y[2] / f[2] == 0.75);
  CHECK(y[3] / f[3] == 0.75);
}

TEST_CASE("scale attention ratio is constant per level") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const Tensor<double> f = rand_tensor({3, 4, 5, 6}, seed, -0.5, 1.5);
    const auto y = run_scale(f);
    for (Index l = 0; l < 3; ++l) {
      const Index base = l * 120;
      const double ref = y[base] / f[base];
      for (Index i = 0; i < 120; ++i) {
        if (f[base + i] == 0) continue;
        CHECK(std::abs(y[base + i] / f[base + i] - ref) <= 1e-6 * std::max(1.0, std::abs(ref)));
      }
    }
  }
}

TEST_CASE("spatial attention examples") {
  const Tensor<double> f = rand_tensor({1, 3, 4, 2}, 1);
  const Tensor<double> off({3, 4, 1, 2}, 0.0), ones({3, 4, 1}, 1.0);
  CHECK(run_spatial(f, off, ones, ones) == f);

  // Two levels: every level row holds the mean of the two.
  const Tensor<double> f2 = rand_tensor({2, 3, 4, 2}, 2);
  const auto m = run_spatial(f2, off, ones, ones);
  for (Index i = 0; i < 24; ++i) {
    CHECK(m[i] == doctest::Approx((f2[i] + f2[24 + i]) / 2).epsilon(1e-15));
    CHECK(m[24 + i] == m[i]);
  }

  // Row [1,2,3], samples at offsets 0 and +1 with half weights: center -> 2.5.
  Tensor<double> row({1, 1, 3, 1}, {1, 2, 3});
  Tensor<double> o2({1, 3, 2, 2}, 0.0);
  for (Index p = 0; p < 3; ++p) o2[(p * 2 + 1) * 2 + 1] = 1.0;  // second sample one step right
  const auto r = run_spatial(row, o2, Tensor<double>({1, 3, 2}, 1.0), Tensor<double>({1, 3, 2}, 0.5));
  CHECK(r[1] == 2.5);
  CHECK(r[2] == 0.5 * 3 + 0.5 * 0);  // right neighbor outside reads zero
}

TEST_CASE("spatial attention is linear in the features for a frozen field") {
  const Tensor<double> off = rand_tensor({4, 4, 9, 2}, 3, -1.7, 1.7);
  const Tensor<double> masks = rand_tensor({4, 4, 9}, 4, 0, 1), w = rand_tensor({4, 4, 9}, 5);
  const Tensor<double> x = rand_tensor({3, 4, 4, 2}, 6), y = rand_tensor({3, 4, 4, 2}, 7);
  Tensor<double> mix(x.shape());
  for (Index i = 0; i < x.size(); ++i) mix[i] = 2 * x[i] - 0.5 * y[i];
  const auto a = run_spatial(mix, off, masks, w), bx = run_spatial(x, off, masks, w), by = run_spatial(y, off, masks, w);
  for (Index i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - (2 * bx[i] - 0.5 * by[i])) <= 1e-12);
}

TEST_CASE("sampling points must form an odd square") {
  Tape<double> t;
  Var f = t.constant(Tensor<double>({1, 3, 3, 2}));
  for (int k : {0, -1, 4, 8}) {
    CHECK_THROWS_AS(predict_sampling(t, f, 0, t.constant(Tensor<double>({3, 3, 2, 4 * std::max(k, 1)})),
                                     t.constant(Tensor<double>({4 * std::max(k, 1)})), k),
                    ConfigError);
  }
}

TEST_CASE("task attention with forced parameters") {
  const Tensor<double> f = rand_tensor({2, 3, 3, 4}, 8, -2, 2);
  CHECK(run_task(f, forced(4, 1, 1, 0, 0)) == f);
  const auto a = run_task(f, forced(4, 1, -1, 0, 0));
  for (Index i = 0; i < f.size(); ++i) CHECK(a[i] == std::abs(f[i]));
  const auto r = run_task(f, forced(4, 1, 0, 0, 0));
  for (Index i = 0; i < f.size(); ++i) CHECK(r[i] == std::max(f[i], 0.0));
  CHECK(run_task(Tensor<double>({1, 1, 2, 1}, {-2, 3}), forced(1, 1, 0, 0, 0)) ==
        Tensor<double>({1, 1, 2, 1}, {0, 3}));
}

TEST_CASE("task attention picks one affine branch pointwise") {
  const Tensor<double> f = rand_tensor({2, 2, 3, 5}, 9, -3, 3);
  const Tensor<double> th = rand_tensor({5, 4}, 10);
  const auto y = run_task(f, th);
  for (Index i = 0; i < f.size(); ++i) {
    const Index c = i % 5;
    const double u = f[i] * th[c * 4] + th[c * 4 + 2], v = f[i] * th[c * 4 + 1] + th[c * 4 + 3];
    CHECK(y[i] >= std::min(u, v));
    CHECK((y[i] == u || y[i] == v));
  }
}

TEST_CASE("task_params rows lie in the shifted-sigmoid range") {
  Tape<double> t;
  const Var th = task_params(t, t.constant(rand_tensor({3, 4, 4, 8}, 11)), t.constant(rand_tensor({8, 2}, 12)),
                             t.constant(rand_tensor({2}, 13)), t.constant(rand_tensor({2, 32}, 14)),
                             t.constant(rand_tensor({32}, 15)));
  const auto& v = t.value(th);
  CHECK(v.shape() == Shape{8, 4});
  for (Index i = 0; i < v.size(); ++i) {
    CHECK(v[i] > -1);
    CHECK(v[i] < 1);
  }
}

namespace {

// DVF parameters that make every stage an identity with K = 1.
struct IdentityDvf {
  Index c;
  std::vector<Tensor<double>> tensors() const {
    return {Tensor<double>({1, 1, 1, 1}, {0.0}), Tensor<double>({1}, {1.0}),  // gate hard_sigmoid(1) = 1
            Tensor<double>({3, 3, c, 4}), Tensor<double>({4}, {0, 0, 1, 1}),  // dy dx mask weight
            Tensor<double>({c, 1}), Tensor<double>({1}), Tensor<double>({1, 4 * c}), Tensor<double>({4 * c})};
  }
};

DvfVars bind_dvf(Tape<double>& t, const std::vector<Tensor<double>>& p, int k) {
  DvfVars v;
  v.scale_w = t.constant(p[0]);
  v.scale_b = t.constant(p[1]);
  v.offset_w = t.constant(p[2]);
  v.offset_b = t.constant(p[3]);
  v.theta_w1 = t.constant(p[4]);
  v.theta_b1 = t.constant(p[5]);
  v.theta_w2 = t.constant(p[6]);
  v.theta_b2 = t.constant(p[7]);
  v.sampling_points = k;
  return v;
}

}  // namespace

TEST_CASE("dvf_apply with identity stages returns its input") {
  const Tensor<double> f = rand_tensor({1, 3, 4, 2}, 16);
  Tape<double> t;
  DvfVars v = bind_dvf(t, IdentityDvf{2}.tensors(), 1);
  v.forced_theta = t.constant(forced(2, 1, 1, 0, 0));
  CHECK(t.value(dvf_apply(t, t.constant(f), 0, v)) == f);
}

TEST_CASE("dvf_apply with a closed gate gives max(b1, b2) everywhere") {
  const Tensor<double> f = rand_tensor({2, 3, 3, 2}, 17, -3, -1.5);  // level means below -1
  Tape<double> t;
  std::vector<Tensor<double>> p = IdentityDvf{2}.tensors();
  p[0] = Tensor<double>({1, 1, 1, 1}, {1.0});
  p[1] = Tensor<double>({1}, {0.0});
  DvfVars v = bind_dvf(t, p, 1);
  v.forced_theta = t.constant(forced(2, 0.3, -0.2, 0.1, 0.4));
  const auto y = t.value(dvf_apply(t, t.constant(f), 0, v));
  for (Index i = 0; i < y.size(); ++i) CHECK(y[i] == 0.4);
}

TEST_CASE("dvf_apply equals the manual nesting of its stages bit for bit") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Index c = 4;
    const std::vector<Tensor<double>> p{rand_tensor({1, 1, 1, 1}, seed + 1), rand_tensor({1}, seed + 2),
                                        rand_tensor({3, 3, c, 36}, seed + 3, -0.2, 0.2),
                                        rand_tensor({36}, seed + 4),
                                        rand_tensor({c, 2}, seed + 5), rand_tensor({2}, seed + 6),
                                        rand_tensor({2, 4 * c}, seed + 7), rand_tensor({4 * c}, seed + 8)};
    const Tensor<double> f = rand_tensor({2, 2, 2, c}, seed + 9);
    Tape<double> t1;
    const auto fused = t1.value(dvf_apply(t1, t1.constant(f), 0, bind_dvf(t1, p, 9)));
    Tape<double> t2;
    const DvfVars v = bind_dvf(t2, p, 9);
    Var s = scale_attention(t2, t2.constant(f), v.scale_w, v.scale_b);
    const SamplingField field = predict_sampling(t2, s, 0, v.offset_w, v.offset_b, 9);
    Var sp = spatial_attention(t2, s, field);
    Var th = task_params(t2, sp, v.theta_w1, v.theta_b1, v.theta_w2, v.theta_b2);
    CHECK(t2.value(task_attention(t2, sp, th)) == fused);
  }
}

TEST_CASE("make_pyramid resamples every level to the median resolution") {
  const Tensor<double> a = rand_tensor({8, 8, 3}, 20), b = rand_tensor({4, 4, 3}, 21), c = rand_tensor({2, 2, 3}, 22);
  Tape<double> t;
  const PyramidFeatures p = make_pyramid(t, {t.constant(a), t.constant(b), t.constant(c)});
  CHECK(p.median_level == 1);
  const auto& common = t.value(p.common);
  CHECK(common.shape() == Shape{3, 4, 4, 3});
  const Tensor<double> ra = resize_bilinear(a, 4, 4), rc = resize_bilinear(c, 4, 4);
  for (Index i = 0; i < 48; ++i) {
    CHECK(common[i] == ra[i]);
    CHECK(common[48 + i] == b[i]);
    CHECK(common[96 + i] == rc[i]);
  }
  CHECK(median_level(4) == 1);
  CHECK(median_level(1) == 0);
}

TEST_CASE("multiscale conv examples") {
  const Index c = 3;
  const Tensor<double> x = rand_tensor({1, 4, 4, c}, 23);
  auto run = [&](const Tensor<double>& in, Tensor<double> k1, Tensor<double> k3, Tensor<double> k5, Index ch) {
    Tape<double> t;
    const Tensor<double> zb({ch});
    return t.value(multiscale_conv(t, t.constant(in),
                                   MultiScaleVars{t.constant(k1), t.constant(zb), t.constant(k3), t.constant(zb),
                                                  t.constant(k5), t.constant(zb)}));
  };
  const auto z = run(x, Tensor<double>({1, 1, c, c}), Tensor<double>({3, 3, c, c}), Tensor<double>({5, 5, c, c}), c);
  for (Index i = 0; i < z.size(); ++i) CHECK(z[i] == 0);

  Tensor<double> eye({1, 1, c, c});
  for (Index i = 0; i < c; ++i) eye.at({0, 0, i, i}) = 1;
  CHECK(run(x, eye, Tensor<double>({3, 3, c, c}), Tensor<double>({5, 5, c, c}), c) == x);

  const double v = 0.75;
  const auto n = run(Tensor<double>({1, 4, 4, 1}, v), Tensor<double>({1, 1, 1, 1}), Tensor<double>({3, 3, 1, 1}, 1.0),
                     Tensor<double>({5, 5, 1, 1}), 1);
  CHECK(n[0] == 4 * v);
  CHECK(n[1] == 6 * v);
  CHECK(n[5] == 9 * v);
}

namespace {

JgrVars jgr(Tape<double>& t, const std::vector<Tensor<double>>& p, int b, int n) {
  auto ms = [&](std::size_t o) {
    return MultiScaleVars{t.constant(p[o]),     t.constant(p[o + 1]), t.constant(p[o + 2]),
                          t.constant(p[o + 3]), t.constant(p[o + 4]), t.constant(p[o + 5])};
  };
  JgrVars v;
  v.cls_ms = ms(0);
  v.cls_w = t.constant(p[6]);
  v.cls_b = t.constant(p[7]);
  v.box_ms = ms(8);
  v.box_w = t.constant(p[14]);
  v.box_b = t.constant(p[15]);
  v.anchors_per_cell = b;
  v.num_categories = n;
  return v;
}

std::vector<Tensor<double>> jgr_params(Index c, int b, int n, std::uint64_t seed, bool zero) {
  std::vector<Tensor<double>> p;
  for (Index out : {Index(b * (n + 1)), Index(b * 4)}) {
    for (Index k : {1, 3, 5}) {
      p.push_back(zero ? Tensor<double>({k, k, c, c}) : rand_tensor({k, k, c, c}, seed++, -0.3, 0.3));
      p.push_back(zero ? Tensor<double>({c}) : rand_tensor({c}, seed++, -0.1, 0.1));
    }
    p.push_back(zero ? Tensor<double>({1, 1, c, out}) : rand_tensor({1, 1, c, out}, seed++));
    p.push_back(zero ? Tensor<double>({out}) : rand_tensor({out}, seed++));
  }
  return p;
}

}  // namespace

TEST_CASE("jgr_forward with zero weights scores one quarter everywhere") {
  Tape<double> t;
  const auto out = jgr_forward(t, t.constant(rand_tensor({1, 3, 2, 4}, 30)), jgr(t, jgr_params(4, 2, 3, 0, true), 2, 3));
  CHECK(t.value(out.class_logits).shape() == Shape{12, 3});
  CHECK(t.value(out.objectness).shape() == Shape{12, 1});
  CHECK(t.value(out.box_params).shape() == Shape{12, 4});
  for (double s : out.joint_score.values()) CHECK(s == 0.25);
}

TEST_CASE("joint score values and monotonicity") {
  const double l3 = std::log(3.0);
  CHECK(joint_score(l3, l3) == doctest::Approx(0.5625).epsilon(1e-15));
  CHECK(joint_score(40.0, 40.0) > 1 - 1e-12);
  Rng rng(31);
  for (int i = 0; i < 1000; ++i) {
    const double a = rng.uniform(-6, 6), b = rng.uniform(-6, 6), d = rng.uniform(0, 2);
    const double s = joint_score(a, b);
    CHECK(s >= 0);
    CHECK(s <= 1);
    CHECK(joint_score(a + d, b) >= s);
    CHECK(joint_score(a, b + d) >= s);
  }
}

TEST_CASE("jgr branch order does not change the result") {
  const auto p = jgr_params(5, 3, 3, 40, false);
  const Tensor<double> x = rand_tensor({1, 4, 3, 5}, 41);
  Tape<double> t1, t2;
  const auto a = jgr_forward(t1, t1.constant(x), jgr(t1, p, 3, 3), false);
  const auto b = jgr_forward(t2, t2.constant(x), jgr(t2, p, 3, 3), true);
  CHECK(t1.value(a.class_logits) == t2.value(b.class_logits));
  CHECK(t1.value(a.objectness) == t2.value(b.objectness));
  CHECK(t1.value(a.box_params) == t2.value(b.box_params));
  CHECK(a.joint_score == b.joint_score);
}
