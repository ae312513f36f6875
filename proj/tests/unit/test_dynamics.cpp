#include "fibdim/csv.hpp"
#include "fibdim/error.hpp"
#include "fibdim/orbit.hpp"
#include "fibdim/spectrum.hpp"
#include "fibdim/stats.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>

using namespace fibdim;
using namespace fibdim::testing;

namespace {

OrbitTrace fiber_trace(const EnsembleSpec& spec, int fiber, long first, long last,
                       std::uint64_t stream, long burnin = 1000) {
  const SeededSampler s{99, stream};
  OrbitOptions opt;
  opt.first = first;
  opt.last = last;
  opt.burnin = burnin;
  opt.fiber = fiber;
  return forward_orbit(spec, initial_flag(spec.dim, s), opt, s);
}

ErrorKind error_kind(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::Io;
}

}  // namespace

TEST_CASE("forward orbit of a diagonal atom stays at the eigenflag") {
  const EnsembleSpec spec = benchmark_ensemble("diag2");
  OrbitOptions opt;
  opt.first = 0;
  opt.last = 50;
  opt.burnin = 0;
  opt.fiber = 1;
  const OrbitTrace t = forward_orbit(spec, Flag::standard(2), opt, SeededSampler{1, 0});
  for (long n = 0; n <= 50; ++n) {
    CHECK((t.flag(n).projector(1) - Flag::standard(2).projector(1)).norm() < 1e-15);
    CHECK(t.x(n).theta == doctest::Approx(0.0));
  }
  CHECK(t.log_dets(3)(1) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
}

TEST_CASE("forward orbit of rotations has zero log-determinant increments") {
  const OrbitTrace t = fiber_trace(benchmark_ensemble("rot2"), 1, 0, 200, 3);
  for (long n = 0; n < 200; ++n) CHECK(t.log_dets(n).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("orbit satisfies the composition invariant against raw products") {
  for (const char* name : {"bern2", "diag3eps"}) {
    const EnsembleSpec spec = benchmark_ensemble(name);
    const int d = spec.dim;
    const OrbitTrace t = fiber_trace(spec, 1, -10, 10, 4, 50);
    Matrix product = Matrix::Identity(d, d);
    for (long n = -10; n < 10; ++n) {
      product = t.matrix(n) * product;
      const Matrix start = t.flag(-10).basis();
      for (int i = 1; i < d; ++i) {
        const Matrix img = product * start.leftCols(i);
        const Matrix p = img * (img.transpose() * img).inverse() * img.transpose();
        CHECK((t.flag(n + 1).projector(i) - p).norm() < 1e-8);
      }
    }
  }
}

TEST_CASE("windows sharing times see the same matrices") {
  const EnsembleSpec spec = benchmark_ensemble("diag3eps");
  const OrbitTrace a = fiber_trace(spec, 2, -20, 5, 8);
  const OrbitTrace b = fiber_trace(spec, 1, -5, 30, 8);
  for (long n = -5; n < 5; ++n) CHECK(a.matrix(n) == b.matrix(n));
}

TEST_CASE("spectrum of diag(2,1) is exact") {
  SpectrumOptions opt;
  opt.steps = 100000;
  opt.replicas = 2;
  opt.burnin = 0;
  opt.start = Flag::standard(2);
  const SpectrumEstimate est = lyapunov_spectrum(benchmark_ensemble("diag2"), opt, SeededSampler{1, 0});
  CHECK(std::fabs(est.chi(0) - std::log(2.0)) < 1e-12);
  CHECK(std::fabs(est.chi(1)) < 1e-12);
}

TEST_CASE("spectrum of diag(2,1) from a random start after burn-in") {
  SpectrumOptions opt;
  opt.steps = 10000;
  opt.replicas = 3;
  const SpectrumEstimate est = lyapunov_spectrum(benchmark_ensemble("diag2"), opt, SeededSampler{2, 0});
  CHECK(std::fabs(est.chi(0) - std::log(2.0)) < 1e-12);
  CHECK(std::fabs(est.chi(1)) < 1e-12);
}

TEST_CASE("spectrum of rotations vanishes") {
  SpectrumOptions opt;
  opt.steps = 20000;
  opt.replicas = 4;
  const SpectrumEstimate est = lyapunov_spectrum(benchmark_ensemble("rot2"), opt, SeededSampler{3, 0});
  for (int j = 0; j < 2; ++j) CHECK(std::fabs(est.chi(j)) <= 3.0 * est.stderr(j) + 1e-12);
}

TEST_CASE("spectrum results do not depend on the thread count") {
  SpectrumOptions opt;
  opt.steps = 2000;
  opt.replicas = 5;
  const EnsembleSpec spec = benchmark_ensemble("diag3eps");
  const SpectrumEstimate one = lyapunov_spectrum(spec, opt, SeededSampler{4, 0});
  opt.threads = 4;
  const SpectrumEstimate four = lyapunov_spectrum(spec, opt, SeededSampler{4, 0});
  CHECK(one.per_replica == four.per_replica);
  CHECK(one.chi == four.chi);
}

TEST_CASE("top exponent matches the norm-growth oracle on bern2") {
  const EnsembleSpec spec = benchmark_ensemble("bern2");
  SpectrumOptions opt;
  opt.steps = 125000;
  opt.replicas = 8;
  const SeededSampler base{5, 0};
  const SpectrumEstimate est = lyapunov_spectrum(spec, opt, base);

  // Oracle: (1/N) log ||A(N-1) ... A(0)|| on independent streams, with the
  // product rescaled as it grows.
  std::vector<double> growth;
  for (int r = 0; r < 8; ++r) {
    const SeededSampler s{0xabcdef, static_cast<std::uint64_t>(r)};
    Matrix p = Matrix::Identity(2, 2);
    double log_scale = 0.0;
    for (long n = 0; n < opt.steps; ++n) {
      p = sample(spec, s, static_cast<std::uint64_t>(n)).matrix() * p;
      const double m = p.norm();
      p /= m;
      log_scale += std::log(m);
    }
    growth.push_back(log_scale / static_cast<double>(opt.steps));
  }
  const MeanEstimate oracle = mean_and_stderr(growth);
  const double combined = std::sqrt(oracle.stderr * oracle.stderr + est.stderr(0) * est.stderr(0));
  CHECK(std::fabs(est.chi(0) - oracle.mean) < 3.0 * combined);
  // Determinant identity: the bern2 atoms have unit determinant.
  CHECK(std::fabs(est.chi.sum()) < 3.0 * std::sqrt(est.stderr.squaredNorm()) + 1e-12);
  CHECK(est.ordered());
}

TEST_CASE("stable line of diagonal maps") {
  const OrbitTrace t2 = [] {
    OrbitOptions opt;
    opt.first = 0;
    opt.last = 600;
    opt.burnin = 0;
    opt.fiber = 1;
    return forward_orbit(benchmark_ensemble("diag2"), Flag::standard(2), opt, SeededSampler{1, 0});
  }();
  for (int k : {1, 2, 7}) CHECK(circle_distance(stable_line_at(t2, 0, k).theta, kPi / 2) < 1e-15);
  CHECK(circle_distance(oseledets_stable_line(t2, 0).y.theta, kPi / 2) < 1e-15);

  Matrix m = diag({3.0, 1.0, 1.0 / 3.0});
  OrbitOptions opt;
  opt.first = 0;
  opt.last = 600;
  opt.burnin = 0;
  opt.fiber = 1;
  const OrbitTrace t3 = forward_orbit(deterministic_ensemble(m), Flag::standard(3), opt, SeededSampler{1, 0});
  const StableLine y = oseledets_stable_line(t3, 0);
  const Flag embedded = fiber_embed(t3.partial(0), y.y);
  CHECK(angle_between_lines(embedded.basis().col(0), Vector::Unit(3, 1)) < 1e-12);
}

TEST_CASE("stable line refuses without a gap") {
  const OrbitTrace t = fiber_trace(benchmark_ensemble("rot2"), 1, 0, 600, 2);
  CHECK(error_kind([&] { oseledets_stable_line(t, 0); }) == ErrorKind::GapTooSmall);
}

TEST_CASE("stable line converges at the rate of the gap") {
  const EnsembleSpec spec = benchmark_ensemble("bern2");
  SpectrumOptions sopt;
  sopt.steps = 100000;
  sopt.replicas = 4;
  const SpectrumEstimate est = lyapunov_spectrum(spec, sopt, SeededSampler{6, 0});
  const double gap = est.gap(1);

  const OrbitTrace t = fiber_trace(spec, 1, 0, 3000, 6);
  std::vector<double> ks;
  std::vector<double> mean_log_shift;
  for (int k = 2; k <= 12; ++k) {
    double acc = 0.0;
    int count = 0;
    for (long n = 0; n < 2900; n += 3) {
      const double shift = circle_distance(stable_line_at(t, n, k), stable_line_at(t, n, 2 * k));
      if (shift > 0.0) {
        acc += std::log(shift);
        ++count;
      }
    }
    ks.push_back(k);
    mean_log_shift.push_back(acc / count);
  }
  const LinearFit fit = fit_line(ks, mean_log_shift);
  CHECK(fit.slope == doctest::Approx(-gap).epsilon(0.2));
}

TEST_CASE("angle between x and y decays sublinearly") {
  const EnsembleSpec spec = benchmark_ensemble("bern2");
  SpectrumOptions sopt;
  sopt.steps = 100000;
  sopt.replicas = 4;
  const double gap = lyapunov_spectrum(spec, sopt, SeededSampler{7, 0}).gap(1);
  const OrbitTrace t = fiber_trace(spec, 1, 0, 10000 + 600, 7);
  const AngleDecayReport rep = angle_decay_check(t, 0, 10000, gap);
  CHECK(rep.points == 10001);
  CHECK(rep.sublinear);

  const OrbitTrace diag = [] {
    OrbitOptions opt;
    opt.first = 0;
    opt.last = 700;
    opt.burnin = 0;
    opt.fiber = 1;
    Matrix c(2, 2);
    c << 1, 1, 0, 1;
    return forward_orbit(benchmark_ensemble("diag2"), Flag::from_columns(c), opt, SeededSampler{1, 0});
  }();
  const AngleDecayReport flat = angle_decay_check(diag, 100, 150, std::log(2.0));
  CHECK(std::fabs(flat.slope) < 1e-12);
}

TEST_CASE("stationary interval examples") {
  const Arc a = stationary_interval(FiberCoordinate(0.0), FiberCoordinate(kPi / 2));
  CHECK(a.length() == doctest::Approx(kPi / 2));
  CHECK(circle_distance(a.upper(), FiberCoordinate(kPi / 4)) < 1e-15);
  CHECK(circle_distance(a.lower(), FiberCoordinate(3 * kPi / 4)) < 1e-15);
  CHECK(a.contains(FiberCoordinate(0.0)));
  CHECK(a.contains(FiberCoordinate(kPi / 4)));
  CHECK_FALSE(a.contains(FiberCoordinate(kPi / 2)));
  CHECK_FALSE(a.contains(FiberCoordinate(kPi / 2 + 0.7)));
  CHECK(error_kind([] { stationary_interval(FiberCoordinate(0.3), FiberCoordinate(0.3)); }) ==
        ErrorKind::DegenerateFiberPair);
}

TEST_CASE("stationary interval property over random pairs") {
  std::mt19937_64 gen(40);
  for (int k = 0; k < 10000; ++k) {
    const FiberCoordinate x(uniform(gen, 0.0, kPi));
    const FiberCoordinate y(uniform(gen, 0.0, kPi));
    if (circle_distance(x, y) < 1e-9) continue;
    const Arc a = stationary_interval(x, y);
    CHECK(a.contains(x));
    // y lies outside the closed arc, at distance dist/2 from both endpoints.
    CHECK_FALSE(a.contains(y));
    const double r = 0.5 * circle_distance(x, y);
    CHECK(circle_distance(a.lower(), y) == doctest::Approx(r).epsilon(1e-9));
    CHECK(circle_distance(a.upper(), y) == doctest::Approx(r).epsilon(1e-9));
    CHECK(a.length() == doctest::Approx(kPi - 2 * r).epsilon(1e-12));
  }
}

TEST_CASE("pull-forward under rotations preserves length") {
  const OrbitTrace t = fiber_trace(benchmark_ensemble("rot2"), 1, -40, 0, 9);
  const Arc i = stationary_interval(t.x(-40), FiberCoordinate(t.x(-40).theta + 1.0));
  const Arc j = interval_pullforward(t, i, 40);
  CHECK(j.length() == doctest::Approx(i.length()).epsilon(1e-12));
  CHECK(circle_distance(j.center, t.x(0)) < 1e-10);
}

TEST_CASE("pull-forward of a hyperbolic atom matches the closed form") {
  // diag(2, 1/2) acts by tan t -> tan t / 4. The interval around x = 0 with
  // y = pi/2 is [-pi/4, pi/4], so J_n = [-atan(4^-n), atan(4^-n)].
  OrbitOptions opt;
  opt.first = -300;
  opt.last = 0;
  opt.burnin = 0;
  opt.fiber = 1;
  const OrbitTrace t = forward_orbit(benchmark_ensemble("hyp2"), Flag::standard(2), opt, SeededSampler{1, 0});
  for (long n : {1L, 5L, 20L, 100L, 300L}) {
    const Arc i = stationary_interval(t.x(-n), FiberCoordinate(kPi / 2));
    const Arc j = interval_pullforward(t, i, n);
    const double exact = 2.0 * std::atan(std::pow(4.0, -static_cast<double>(n)));
    CHECK(j.length() == doctest::Approx(exact).epsilon(1e-12));
    CHECK(j.contains(t.x(0)));
  }
}

TEST_CASE("pull-forward handles orientation reversal") {
  Matrix m(2, 2);
  m << 2.0, 0.0, 0.0, -0.5;
  const CircleMap t{Eigen::Matrix2d(m)};
  const Arc a{FiberCoordinate(0.0), -0.3, 0.5};
  const Arc b = push_arc(t, a);
  CHECK(b.lo < 0.0);
  CHECK(b.hi > 0.0);
  CHECK(b.hi == doctest::Approx(std::atan(std::tan(0.3) / 4.0)));
  CHECK(b.lo == doctest::Approx(-std::atan(std::tan(0.5) / 4.0)));
}

TEST_CASE("interval length decays at the gap rate on bern2") {
  const EnsembleSpec spec = benchmark_ensemble("bern2");
  SpectrumOptions sopt;
  sopt.steps = 100000;
  sopt.replicas = 4;
  const double gap = lyapunov_spectrum(spec, sopt, SeededSampler{10, 0}).gap(1);
  const long n_max = 100;
  std::vector<double> ns;
  std::vector<double> mean_log_len(n_max, 0.0);
  const int reps = 100;
  for (int r = 0; r < reps; ++r) {
    const OrbitTrace t = fiber_trace(spec, 1, -n_max, 600, static_cast<std::uint64_t>(100 + r));
    for (long n = 1; n <= n_max; ++n) {
      const Arc i = stationary_interval(t.x(-n), oseledets_stable_line(t, -n).y);
      const Arc j = interval_pullforward(t, i, n);
      CHECK(j.lo < 0.0);
      CHECK(j.hi > 0.0);
      CHECK(circle_distance(j.center, t.x(0)) < 1e-9);
      mean_log_len[n - 1] += std::log(j.length()) / reps;
    }
  }
  for (long n = 1; n <= n_max; ++n) ns.push_back(static_cast<double>(n));
  const LinearFit fit = fit_line(ns, mean_log_len);
  CHECK(fit.slope == doctest::Approx(-gap).epsilon(0.1));
}

TEST_CASE("interval contraction report matches the hand-rolled regression") {
  const EnsembleSpec spec = benchmark_ensemble("bern2");
  const IntervalContractionReport a = interval_contraction(spec, 1, 40, 20, SeededSampler{12, 0}, 1);
  const IntervalContractionReport b = interval_contraction(spec, 1, 40, 20, SeededSampler{12, 0}, 3);
  REQUIRE(a.rows.size() == 40);
  CHECK(a.replicas + a.skipped == 20);
  for (std::size_t k = 0; k < a.rows.size(); ++k) CHECK(a.rows[k].mean_log_length == b.rows[k].mean_log_length);
  // Oracle: recompute replicas 0 and 1 directly at n = 7.
  auto direct = [&](std::uint64_t r) {
    const SeededSampler s = SeededSampler{12, 0}.child(r);
    OrbitOptions o;
    o.first = -40;
    o.last = 512;
    o.fiber = 1;
    const OrbitTrace t = forward_orbit(spec, initial_flag(2, s), o, s);
    const Arc start = stationary_interval(t.x(-7), oseledets_stable_line(t, -7).y);
    return std::log(interval_pullforward(t, start, 7).length());
  };
  const IntervalContractionReport two = interval_contraction(spec, 1, 40, 2, SeededSampler{12, 0}, 1);
  REQUIRE(two.replicas == 2);
  CHECK(two.rows[6].mean_log_length == doctest::Approx(0.5 * (direct(0) + direct(1))).epsilon(1e-14));
  CHECK(a.fit.slope < -1.0);
  CHECK_THROWS_AS(interval_contraction(spec, 2, 40, 5, SeededSampler{1, 0}), Error);
  CHECK_THROWS_AS(interval_contraction(spec, 1, 1, 5, SeededSampler{1, 0}), Error);
}

TEST_CASE("trace csv export") {
  const OrbitTrace t = fiber_trace(benchmark_ensemble("bern2"), 1, 0, 100, 11);
  std::vector<TraceRow> rows;
  for (long n = 0; n <= 10; ++n) {
    TraceRow row;
    row.n = n;
    if (n % 2 == 0) {
      row.y = oseledets_stable_line(t, n).y;
      row.interval = stationary_interval(t.x(n), *row.y);
    }
    rows.push_back(row);
  }
  const auto path = (std::filesystem::temp_directory_path() / "fibdim_trace_test.csv").string();
  write_trace_csv(t, rows, path);
  const CsvTable table = read_csv(path);
  CHECK(table.rows.size() == 11);
  CHECK(table.column("logdet_increment_2") == 2);
  CHECK(table.column("interval_upper") == 6);
  CHECK(table.rows[1][table.column("y")].empty());
  CHECK(std::stod(table.rows[0][table.column("x")]) == t.x(0).theta);
  std::filesystem::remove(path);
}
