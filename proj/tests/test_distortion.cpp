#include <artheater/distortion/distortion.hpp>

#include <boost/math/distributions/chi_squared.hpp>
#include <doctest.h>

using namespace artheater;
using namespace artheater::distortion;

namespace {

const TreatmentKind kAll[] = {TreatmentKind::Elongation, TreatmentKind::Warp, TreatmentKind::Shift,
                              TreatmentKind::Elevation, TreatmentKind::Enlarge};

DistortionTreatment treatment(TreatmentKind k) {
  DistortionTreatment t;
  t.kind = k;
  return t;
}

double max_deviation(const RoomGeometry& a, const RoomGeometry& b) {
  REQUIRE(a.vertices.size() == b.vertices.size());
  double m = 0.0;
  for (std::size_t i = 0; i < a.vertices.size(); ++i) m = std::max(m, (a.vertices[i] - b.vertices[i]).norm());
  return m;
}

LocomotionTrace random_trace(Rng& rng, int n, double dt) {
  LocomotionTrace tr;
  Vec2 p(uniform(rng, -2, 2), uniform(rng, -2.5, 2.5));
  for (int i = 0; i < n; ++i) {
    tr.samples.push_back({i * dt, p, 0.0});
    p += Vec2(gaussian(rng), gaussian(rng)) * 0.05;
  }
  return tr;
}

// Shoelace area of the image of the floor boundary, densely sampled.
double boundary_area(const RoomModel& room, const DistortionTreatment& t, double extent) {
  const Box2 f = room.floor();
  const Vec2 corners[] = {f.min, {f.max.x(), f.min.y()}, f.max, {f.min.x(), f.max.y()}};
  std::vector<Vec2> ring;
  const int n = 2000;
  for (int e = 0; e < 4; ++e) {
    for (int i = 0; i < n; ++i) {
      const Vec2 q = corners[e] + (corners[(e + 1) % 4] - corners[e]) * (double(i) / n);
      ring.push_back(distort_point(room, t, extent, {q.x(), q.y(), 0.0}).head<2>());
    }
  }
  double a = 0.0;
  for (std::size_t i = 0; i < ring.size(); ++i) {
    const Vec2& p = ring[i];
    const Vec2& q = ring[(i + 1) % ring.size()];
    a += p.x() * q.y() - q.x() * p.y();
  }
  return std::abs(a) / 2;
}

}  // namespace

TEST_CASE("every treatment is the identity at zero progress") {
  const RoomModel room;
  const RoomGeometry base = room_geometry(room);
  for (auto k : kAll) {
    CHECK(max_deviation(treatment_geometry(room, treatment(k), Phase::Apply, 0.0), base) < 1e-9);
    CHECK(max_deviation(treatment_geometry(room, treatment(k), Phase::Return, 1.0), base) < 1e-9);
  }
}

TEST_CASE("return mirrors apply and both are continuous") {
  const RoomModel room;
  Rng rng = make_rng(4);
  for (auto k : kAll) {
    for (int i = 0; i < 20; ++i) {
      const double p = uniform01(rng);
      CHECK(max_deviation(treatment_geometry(room, treatment(k), Phase::Apply, p),
                          treatment_geometry(room, treatment(k), Phase::Return, 1.0 - p)) < 1e-12);
      const double q = std::min(1.0, p + 1e-7);
      CHECK(max_deviation(treatment_geometry(room, treatment(k), Phase::Apply, p),
                          treatment_geometry(room, treatment(k), Phase::Apply, q)) < 1e-5);
    }
  }
}

TEST_CASE("progress outside the unit interval is rejected") {
  const RoomModel room;
  CHECK_THROWS_AS(treatment_geometry(room, treatment(TreatmentKind::Shift), Phase::Apply, -0.01), InvalidProgress);
  CHECK_THROWS_AS(treatment_geometry(room, treatment(TreatmentKind::Shift), Phase::Apply, 1.01), InvalidProgress);
  CHECK_THROWS_AS(treatment_geometry(room, treatment(TreatmentKind::Shift), Phase::Apply, std::nan("")),
                  InvalidProgress);
}

TEST_CASE("enlarge reaches eight times the volume") {
  const RoomModel room;
  const auto t = treatment(TreatmentKind::Enlarge);
  CHECK(volume_ratio(room, t, 1.0) == doctest::Approx(8.0).epsilon(1e-12));
  CHECK(room.reference_volume * volume_ratio(room, t, 1.0) == doctest::Approx(454.56).epsilon(1e-12));
  for (double p : {0.1, 0.35, 0.5, 0.9}) CHECK(volume_ratio(room, t, p) == doctest::Approx(std::pow(1 + p, 3)));
  const Box3 b = treatment_geometry(room, t, Phase::Apply, 1.0).bounds();
  CHECK((b.max - b.min).isApprox(Vec3(9.0, 11.0, 5.0)));
}

TEST_CASE("shift, elongation and elevation wall travel") {
  const RoomModel room;
  const Vec3 wall(2.25, 1.0, 1.0), far(-2.25, 1.0, 1.0);
  CHECK(distort_point(room, treatment(TreatmentKind::Shift), 0.5, wall).x() - wall.x() == doctest::Approx(2.57));
  CHECK(distort_point(room, treatment(TreatmentKind::Shift), 0.5, far).x() - far.x() == doctest::Approx(2.57));
  CHECK(distort_point(room, treatment(TreatmentKind::Elongation), 1.0, wall).x() == doctest::Approx(2.25 + 3.35));
  CHECK(distort_point(room, treatment(TreatmentKind::Elongation), 1.0, far) == far);
  CHECK(distort_point(room, treatment(TreatmentKind::Elevation), 1.0, wall).z() == doctest::Approx(9.07));
}

TEST_CASE("warp bends the extended walls 160 degrees over 19.33 m") {
  const RoomModel room;
  const auto t = treatment(TreatmentKind::Warp);
  // Trace the bent centerline well beyond the physical room.
  const int n = 20000;
  const double half = t.warp_length / 2;
  std::vector<Vec2> line;
  for (int i = 0; i <= n; ++i) {
    const double s = -half + t.warp_length * i / n;
    line.push_back(distort_point(room, t, 1.0, {0.0, s, 0.0}).head<2>());
  }
  double length = 0.0;
  for (int i = 1; i <= n; ++i) length += (line[i] - line[i - 1]).norm();
  CHECK(length == doctest::Approx(19.33).epsilon(1e-6));
  const Vec2 t0 = (line[1] - line[0]).normalized();
  const Vec2 t1 = (line[n] - line[n - 1]).normalized();
  const double bend = rad2deg(std::acos(std::clamp(t0.dot(t1), -1.0, 1.0)));
  CHECK(bend == doctest::Approx(160.0).epsilon(1e-3));
  // The two parallel walls stay a constant distance apart.
  for (double s : {-half, -1.0, 0.0, 3.0, half}) {
    const Vec2 l = distort_point(room, t, 1.0, {-2.25, s, 0.0}).head<2>();
    const Vec2 r = distort_point(room, t, 1.0, {2.25, s, 0.0}).head<2>();
    CHECK((l - r).norm() == doctest::Approx(4.5));
  }
}

TEST_CASE("virtual floor never shrinks below the physical floor") {
  const RoomModel room;
  const double physical = room.width * room.length;
  for (auto k : kAll) {
    for (int i = 0; i <= 20; ++i) {
      const double e = i / 20.0;
      const double area = virtual_floor_area(room, treatment(k), e);
      CHECK(area >= physical * (1 - 1e-9));
      CHECK(area == doctest::Approx(boundary_area(room, treatment(k), e)).epsilon(1e-5));
    }
  }
  CHECK(virtual_floor_area(room, treatment(TreatmentKind::Enlarge), 1.0) == doctest::Approx(4 * physical));
}

TEST_CASE("timeline sampling") {
  const auto tl = TreatmentTimeline::standard();
  CHECK(tl.total() == 60.0);
  auto s = timeline_step(tl, 0.0);
  CHECK(s.phase == Phase::Apply);
  CHECK(s.progress == 0.0);
  s = timeline_step(tl, 5.0);
  CHECK(s.progress == doctest::Approx(0.5));
  CHECK_THROWS_AS(timeline_step(tl, -0.1), OutOfRange);
  CHECK_THROWS_AS(timeline_step(tl, 60.1), OutOfRange);

  // Oracle: extent written out segment by segment.
  const auto oracle = [](double t) {
    const double c = std::fmod(t, 30.0);
    if (t >= 60.0) return 0.0;
    if (c < 10) return c / 10;
    if (c < 15) return 1.0;
    if (c < 25) return 1 - (c - 15) / 10;
    return 0.0;
  };
  for (double t = 0; t <= 60.0; t += 0.25) CHECK(timeline_step(tl, t).extent == doctest::Approx(oracle(t)));

  const RoomModel room;
  for (auto k : kAll) {
    const auto end = timeline_step(tl, 60.0);
    RoomGeometry g = room_geometry(room);
    for (auto& v : g.vertices) v = distort_point(room, treatment(k), end.extent, v);
    CHECK(max_deviation(g, room_geometry(room)) < 1e-9);
  }
}

TEST_CASE("timeline validation") {
  TreatmentTimeline bad{{{Phase::Return, 10}, {Phase::Apply, 10}}};
  CHECK_THROWS_AS(bad.validate(), TreatmentConfigError);
  TreatmentTimeline twice{{{Phase::Apply, 10}, {Phase::Hold, 1}, {Phase::Apply, 10}}};
  CHECK_THROWS_AS(twice.validate(), TreatmentConfigError);
  const auto j = timeline_to_json(TreatmentTimeline::standard());
  CHECK(timeline_to_json(timeline_from_json(j)) == j);
  auto extra = j;
  extra["colour"] = 1;
  CHECK_THROWS_AS(timeline_from_json(extra), TreatmentConfigError);
}

TEST_CASE("particle field speed, population and containment") {
  const RoomModel room;
  const Box3 box = room.box();
  auto f = make_particle_field(box, {}, 1);
  CHECK(f.particles.size() == 44);
  const Vec3 before = f.particles[0].position;
  f.config.redirect_mean = 0;
  f = particle_field_step(std::move(f), box, 1.0);
  CHECK((f.particles[0].position - before).norm() == doctest::Approx(0.01).epsilon(1e-9));

  Box3 doubled = box;
  doubled.max.z() *= 2;
  const auto n0 = static_cast<long>(f.particles.size());
  f = particle_field_step(std::move(f), doubled, 0.1);
  CHECK(std::abs(static_cast<long>(f.particles.size()) - 2 * n0) <= 1);

  f = make_particle_field(box, {}, 7);
  for (int k = 0; k < 100000; ++k) f = particle_field_step(std::move(f), box, 0.1);
  ParticleFieldConfig fast;
  fast.speed = 3.0;
  auto g = make_particle_field(box, fast, 8);
  for (int k = 0; k < 100000; ++k) g = particle_field_step(std::move(g), box, 0.1);
  for (const auto* field : {&f, &g}) {
    for (const auto& p : field->particles) {
      for (int d = 0; d < 3; ++d) {
        CHECK(p.position[d] >= box.min[d] + 0.0192 - 1e-12);
        CHECK(p.position[d] <= box.max[d] - 0.0192 + 1e-12);
      }
      CHECK(p.direction.norm() == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("axis movement and center distance against oracles") {
  const RoomModel room;
  LocomotionTrace still{{{0, {1, 1}, 0}, {10, {1, 1}, 0}}};
  CHECK(axis_movement(still, room, 0, 10) == 0.0);
  LocomotionTrace walk;
  for (int i = 0; i <= 100; ++i) walk.samples.push_back({i * 0.1, {-1 + 0.02 * i, 0}, 0});
  CHECK(axis_movement(walk, room, 0, 10) == doctest::Approx(2.0));
  LocomotionTrace out{{{0, {0, 0}, 0}, {10, {0, 1.5}, 0}}};
  CHECK(center_distance_change(out, room, 0, 10) == doctest::Approx(1.5));
  LocomotionTrace back{{{0, {1, 0}, 0}, {5, {2, 0}, 0}, {10, {1, 0}, 0}}};
  CHECK(center_distance_change(back, room, 0, 10) == doctest::Approx(0.0));
  CHECK_THROWS_AS(axis_movement(walk, room, 5, 5), EmptyWindow);
  CHECK_THROWS_AS(axis_movement(walk, room, 5, 11), EmptyWindow);
  CHECK_THROWS_AS(axis_movement(LocomotionTrace{}, room, 0, 1), EmptyWindow);

  Rng rng = make_rng(12);
  for (int rep = 0; rep < 200; ++rep) {
    const auto tr = random_trace(rng, 200, 0.1);
    const double t0 = uniform(rng, 0, 9), t1 = uniform(rng, 10, 19.9);
    // Oracle: integrate the piecewise-constant velocity over each overlap.
    double integral = 0.0;
    for (std::size_t k = 0; k + 1 < tr.samples.size(); ++k) {
      const auto& a = tr.samples[k];
      const auto& b = tr.samples[k + 1];
      const double overlap = std::min(t1, b.t) - std::max(t0, a.t);
      if (overlap > 0) integral += (b.position.x() - a.position.x()) / (b.t - a.t) * overlap;
    }
    CHECK(axis_movement(tr, room, t0, t1) == doctest::Approx(integral).epsilon(1e-9));

    auto shifted = tr;
    const Vec2 off(uniform(rng, -3, 3), uniform(rng, -3, 3));
    for (auto& s : shifted.samples) s.position += off;
    CHECK(axis_movement(shifted, room, t0, t1) == doctest::Approx(axis_movement(tr, room, t0, t1)));

    const Vec2 a = position_at(tr, t0), b = position_at(tr, t1);
    CHECK(center_distance_change(tr, room, t0, t1) == doctest::Approx(b.norm() - a.norm()));
    CHECK(total_walking_distance(tr) >= (tr.samples.back().position - tr.samples.front().position).norm());
  }
}

TEST_CASE("total walking distance") {
  LocomotionTrace two{{{0, {0, 0}, 0}, {1, {3, 0}, 0}}};
  CHECK(total_walking_distance(two) == 3.0);
  LocomotionTrace loop{{{0, {0, 0}, 0}, {1, {2, 0}, 0}, {2, {2, 2}, 0}, {3, {0, 2}, 0}, {4, {0, 0}, 0}}};
  CHECK(total_walking_distance(loop) == 8.0);
  CHECK_THROWS_AS(total_walking_distance(LocomotionTrace{{{0, {0, 0}, 0}}}), TooFewSamples);
}

TEST_CASE("segment metrics CSV") {
  const RoomModel room;
  LocomotionTrace tr;
  for (int i = 0; i <= 600; ++i) tr.samples.push_back({i * 0.1, {0.01 * i - 3, 0}, 0});
  const auto m = trace_metrics(tr, room, TreatmentTimeline::standard());
  REQUIRE(m.segments.size() == 4);
  CHECK(m.segments[0].axis_displacement == doctest::Approx(1.0));
  CHECK(m.total_walking_distance == doctest::Approx(6.0));
  const auto csv = metrics_csv_header() + metrics_csv_rows("p1", m);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
}

TEST_CASE("density map mass and layout") {
  const RoomModel room;
  const auto windows = density_windows(TreatmentTimeline::standard());
  REQUIRE(windows.size() == 4);
  CHECK(windows[0] == std::pair<double, double>(8.0, 12.0));
  CHECK(windows[3] == std::pair<double, double>(53.0, 57.0));

  LocomotionTrace still;
  for (int i = 0; i <= 600; ++i) still.samples.push_back({i * 0.1, {0.1, 0.1}, 0});
  const std::vector<LocomotionTrace> one{still};
  const auto m = density_map(one, room, windows);
  CHECK(m.cols == 7);
  CHECK(m.rows == 9);
  std::size_t nonzero = 0;
  for (auto c : m.counts) nonzero += c > 0;
  CHECK(nonzero == 1);
  std::uint64_t inside = 0;
  for (const auto& s : still.samples) {
    for (const auto& w : windows) {
      if (s.t >= w.first && s.t <= w.second) {
        ++inside;
        break;
      }
    }
  }
  CHECK(m.total() == inside);
  CHECK(m.at(3, 4) == inside);
  const auto pgm = density_to_pgm(m);
  CHECK(pgm.rfind("P2\n7 9\n", 0) == 0);
  CHECK(density_metadata(m)["total"] == inside);
}

TEST_CASE("uniform positions give a uniform density map") {
  const RoomModel room;
  Rng rng = make_rng(2024);
  LocomotionTrace tr;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    tr.samples.push_back({static_cast<double>(i), {uniform(rng, -2.25, 2.25), uniform(rng, -2.75, 2.75)}, 0});
  }
  const std::vector<LocomotionTrace> v{tr};
  const auto m = density_map(v, room, {{0.0, double(n)}});
  REQUIRE(m.total() == static_cast<std::uint64_t>(n));
  double chi2 = 0.0;
  for (int r = 0; r < m.rows; ++r) {
    for (int c = 0; c < m.cols; ++c) {
      const double w = std::min(0.65, 4.5 - 0.65 * c), h = std::min(0.65, 5.5 - 0.65 * r);
      const double expected = n * w * h / (4.5 * 5.5);
      const double d = m.at(c, r) - expected;
      chi2 += d * d / expected;
    }
  }
  const boost::math::chi_squared dist(m.cols * m.rows - 1);
  CHECK(chi2 < boost::math::quantile(dist, 0.99));
}
