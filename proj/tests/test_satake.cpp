#include <cmath>
#include <random>

#include "doctest.h"
#include "k3lab/error.hpp"
#include "k3lab/satake.hpp"

using namespace k3lab;
using namespace k3lab::satake;

namespace {

const Eigen::MatrixXd& q_e8() {
  static const Eigen::MatrixXd q = standard_form(StandardKind::E8Type);
  return q;
}

double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

// Sequence of scrambled frames with the given exponents.
std::vector<IwasawaCoordinates> sequence(const std::vector<std::array<double, 3>>& abc, StandardKind kind,
                                         std::mt19937_64& gen, double n_scale = 0.5) {
  const Eigen::MatrixXd n = random_unipotent(kind, gen, n_scale);
  std::vector<IwasawaCoordinates> out;
  for (const auto& [a, b, c] : abc)
    out.push_back(triangularize({standard_frame(a, b, c, n) * random_rotation(gen), kind}));
  return out;
}

std::vector<std::array<double, 3>> ramp(double da, double db, double dc, int terms = 8) {
  std::vector<std::array<double, 3>> out;
  for (int k = 1; k <= terms; ++k) out.push_back({da * k, db * k, dc * k});
  return out;
}

}  // namespace

TEST_CASE("base frame and unipotent elements preserve the form") {
  const Eigen::MatrixXd l0 = base_frame();
  CHECK(max_abs(l0.transpose() * q_e8() * l0 - 2 * Eigen::Matrix3d::Identity()) == 0.0);
  std::mt19937_64 gen(1);
  for (StandardKind kind : {StandardKind::E8Type, StandardKind::Gamma16Type}) {
    const Eigen::MatrixXd q = standard_form(kind);
    const Eigen::MatrixXd n = random_unipotent(kind, gen, 1.0);
    CHECK(max_abs(n.transpose() * q * n - q) < 1e-10);
    // Upper triangular with unit diagonal in the flag order.
    for (int i = 0; i < kRank; ++i) {
      CHECK(n(i, i) == doctest::Approx(1.0));
      for (int j = 0; j < i; ++j) CHECK(std::abs(n(i, j)) < 1e-14);
    }
  }
}

TEST_CASE("q_orthonormalize") {
  std::mt19937_64 gen(2);
  const Eigen::MatrixXd l0 = base_frame();
  CHECK(max_abs(q_orthonormalize({l0, StandardKind::E8Type}).coords - l0) <= 1e-12);

  Eigen::MatrixXd stretched = l0;
  stretched.col(0) *= 2;  // P^T Q P = diag(8, 2, 2)
  CHECK(max_abs(q_orthonormalize({stretched, StandardKind::E8Type}).coords - l0) < 1e-15);

  std::uniform_real_distribution<double> u(-1, 1);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::Matrix3d mix;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) mix(i, j) = u(gen) + (i == j ? 3 : 0);
    const Eigen::MatrixXd p = standard_frame(u(gen), u(gen), u(gen), random_unipotent(StandardKind::E8Type, gen, 1)) * mix;
    const PeriodFrame n = q_orthonormalize({p, StandardKind::E8Type});
    CHECK(max_abs(n.coords.transpose() * q_e8() * n.coords - 2 * Eigen::Matrix3d::Identity()) < 1e-10);
  }

  Eigen::MatrixXd bad = Eigen::MatrixXd::Zero(kRank, 3);
  bad(3, 0) = bad(4, 1) = bad(5, 2) = 1;  // inside the negative definite block
  try {
    q_orthonormalize({bad, StandardKind::E8Type});
    FAIL("expected an error");
  } catch (const PreconditionError& e) {
    CHECK(std::string(e.what()).find("inertia (0, 3, 0)") != std::string::npos);
  }
}

TEST_CASE("triangularize reads off the diagonal") {
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(kRank, kRank);
  auto x = triangularize({standard_frame(3, 2, 1, id), StandardKind::E8Type});
  CHECK(x.a == doctest::Approx(3));
  CHECK(x.b == doctest::Approx(2));
  CHECK(x.c == doctest::Approx(1));
  CHECK(std::abs(x.frame(19, 0) - std::exp(-1.0)) < 1e-15);
  CHECK(std::abs(x.frame(21, 2) - std::exp(-6.0)) < 1e-15);

  x = triangularize({base_frame(), StandardKind::E8Type});
  CHECK(std::abs(x.a) < 1e-15);
  CHECK(std::abs(x.b) < 1e-15);
  CHECK(std::abs(x.c) < 1e-15);
  CHECK(!x.orientation_flipped);
}

TEST_CASE("triangularize reconstructs random frames") {
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(-2, 4);
  double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const double a = u(gen), b = u(gen), c = u(gen);
    const Eigen::MatrixXd n = random_unipotent(StandardKind::Gamma16Type, gen, 1.0);
    const Eigen::MatrixXd truth = standard_frame(a, b, c, n);
    const Eigen::Matrix3d k = random_rotation(gen);
    const IwasawaCoordinates x = triangularize({truth * k, StandardKind::Gamma16Type});
    CHECK(std::abs(x.a - a) < 1e-9);
    CHECK(std::abs(x.b - b) < 1e-9);
    CHECK(std::abs(x.c - c) < 1e-9);
    CHECK(!x.orientation_flipped);
    CHECK(max_abs(x.frame - truth) < 1e-9 * std::max(1.0, max_abs(truth)));
    CHECK(max_abs(x.gauge - k.transpose()) < 1e-9);
    worst = std::max(worst, x.residual(standard_form(StandardKind::Gamma16Type)) / std::max(1.0, max_abs(truth)));
  }
  CHECK(worst < 1e-10);
}

TEST_CASE("triangularize is gauge invariant and fixes orientation") {
  std::mt19937_64 gen(4);
  const Eigen::MatrixXd p = standard_frame(1.5, 0.5, 2.0, random_unipotent(StandardKind::E8Type, gen, 1.0));
  const IwasawaCoordinates ref = triangularize({p, StandardKind::E8Type});
  for (int trial = 0; trial < 10; ++trial) {
    const IwasawaCoordinates x = triangularize({p * random_rotation(gen), StandardKind::E8Type});
    CHECK(std::abs(x.a - ref.a) < 1e-9);
    CHECK(std::abs(x.b - ref.b) < 1e-9);
    CHECK(std::abs(x.c - ref.c) < 1e-9);
  }
  Eigen::Matrix3d reflect = Eigen::Matrix3d::Identity();
  reflect(1, 1) = -1;
  const IwasawaCoordinates flipped = triangularize({p * reflect, StandardKind::E8Type});
  CHECK(flipped.orientation_flipped);
  CHECK(flipped.gauge.determinant() == doctest::Approx(1.0));
  CHECK(std::abs(flipped.a - ref.a) < 1e-9);

  // a = 40 leaves the bottom block numerically singular.
  const Eigen::MatrixXd far = standard_frame(40, 0, 0, Eigen::MatrixXd::Identity(kRank, kRank));
  CHECK_THROWS_AS(triangularize({far * random_rotation(gen), StandardKind::E8Type}), PreconditionError);
}

TEST_CASE("basis conversion") {
  Eigen::VectorXd w = Eigen::VectorXd::Zero(kRank);
  w(0) = 1;  // w_{e1}
  const Eigen::VectorXd x = basis_convert(w, BasisDirection::WToX);
  CHECK(x(0) == doctest::Approx(std::sqrt(0.5)));
  CHECK(x(21) == doctest::Approx(std::sqrt(0.5)));
  CHECK(x.cwiseAbs().sum() == doctest::Approx(std::sqrt(2.0)));

  // Orthogonal form in the w-basis: +1 on slots 1-3, -1 on slots 20-22.
  Eigen::MatrixXd qw = q_e8();
  qw.block(0, 19, 3, 3).setZero();
  qw.block(19, 0, 3, 3).setZero();
  for (int k = 0; k < 3; ++k) {
    qw(k, k) = 1;
    qw(21 - k, 21 - k) = -1;
  }
  std::mt19937_64 gen(5);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 50; ++trial) {
    Eigen::VectorXd v(kRank);
    for (int k = 0; k < kRank; ++k) v(k) = g(gen);
    const Eigen::VectorXd vw = basis_convert(v, BasisDirection::XToW);
    CHECK(max_abs(basis_convert(vw, BasisDirection::WToX) - v) < 1e-14);
    CHECK(vw.dot(qw * vw) == doctest::Approx(v.dot(q_e8() * v)).epsilon(1e-12));
    CHECK(vw.segment(3, 16) == v.segment(3, 16));
  }
}

TEST_CASE("classify_sequence on the four divergence patterns") {
  std::mt19937_64 gen(6);
  for (StandardKind kind : {StandardKind::E8Type, StandardKind::Gamma16Type}) {
    const std::string tag = kind == StandardKind::Gamma16Type ? "1" : "2";

    auto v = classify_sequence(sequence(ramp(3, 0, 0), kind, gen), {});
    CHECK(v.btype == BoundaryType::TypeA);
    CHECK(v.component == "a");
    REQUIRE(v.payload);
    CHECK(v.payload->rows() == 20);
    CHECK(v.payload->cols() == 2);
    // The limit 2-plane is positive definite in <x1, x22>^perp.
    const Eigen::MatrixXd qa = standard_form(kind).block(1, 1, 20, 20);
    const Eigen::Matrix2d g2 = v.payload->transpose() * qa * *v.payload;
    CHECK(g2.determinant() > 0);
    CHECK(g2(0, 0) > 0);

    v = classify_sequence(sequence(ramp(0, 0, 3), kind, gen), {});
    CHECK(v.btype == BoundaryType::TypeB);
    CHECK(v.component == "b" + tag);
    REQUIRE(v.payload);
    CHECK(v.payload->determinant() == doctest::Approx(1.0));
    CHECK((*v.payload)(0, 0) == doctest::Approx(1.0));  // a = b = 0: scaled diagonal is 1

    v = classify_sequence(sequence(ramp(1.5, 0, 1.5, 16), kind, gen), {});
    CHECK(v.btype == BoundaryType::TypeC);
    CHECK(v.component == "c" + tag);
    REQUIRE(v.payload);
    CHECK(v.payload->rows() == 2);
    CHECK(v.payload->determinant() == doctest::Approx(1.0));

    v = classify_sequence(sequence(ramp(0, 3, 0), kind, gen), {});
    CHECK(v.btype == BoundaryType::TypeD);
    CHECK(v.component == "d");
    CHECK(!v.payload);
  }
}

TEST_CASE("classify_sequence payloads follow the scaling formulas") {
  std::mt19937_64 gen(7);
  const Eigen::MatrixXd n = random_unipotent(StandardKind::Gamma16Type, gen, 0.5);
  std::vector<IwasawaCoordinates> xs;
  for (int k = 1; k <= 8; ++k)
    xs.push_back(triangularize({standard_frame(0.7, 0.4, 3.0 * k, n) * random_rotation(gen), StandardKind::Gamma16Type}));
  const auto v = classify_sequence(xs, {});
  REQUIRE(v.btype == BoundaryType::TypeB);
  const double s = std::exp(24.0 + 2.0 / 3 * 0.4 + 1.0 / 3 * 0.7);
  const Eigen::MatrixXd expect = s * standard_frame(0.7, 0.4, 24.0, n).block(19, 0, 3, 3);
  CHECK(max_abs(*v.payload - expect) < 1e-6 * max_abs(expect));
  CHECK((*v.payload)(0, 0) == doctest::Approx(std::exp(2.0 / 3 * 0.4 + 1.0 / 3 * 0.7)));
}

TEST_CASE("classify_sequence interior, indeterminate and guards") {
  std::mt19937_64 gen(8);
  std::vector<std::array<double, 3>> fixed(6, {1.0, 0.5, 0.2});
  CHECK(classify_sequence(sequence(fixed, StandardKind::E8Type, gen), {}).btype == BoundaryType::Interior);

  std::vector<std::array<double, 3>> wobble;
  for (int k = 0; k < 8; ++k) wobble.push_back({k % 2 ? 5.0 : 0.0, 0.0, 0.0});
  const auto v = classify_sequence(sequence(wobble, StandardKind::E8Type, gen), {});
  CHECK(v.btype == BoundaryType::Indeterminate);
  CHECK(!v.diagnostics.empty());

  // Slow growth that never passes the threshold is not called divergent.
  CHECK(classify_sequence(sequence(ramp(1, 0, 0), StandardKind::E8Type, gen), {}).btype == BoundaryType::Indeterminate);

  CHECK_THROWS_AS(classify_sequence(sequence(ramp(1, 0, 0, 2), StandardKind::E8Type, gen), {}), PreconditionError);
  std::vector<std::array<double, 3>> outside{{0, 0, 0}, {0, 0, 0}, {-6, 0, 0}};
  CHECK_THROWS_AS(classify_sequence(sequence(outside, StandardKind::E8Type, gen), {}), PreconditionError);
}

TEST_CASE("phi_realize") {
  BoundaryVerdict v;
  v.btype = BoundaryType::TypeB;
  v.kind = StandardKind::Gamma16Type;
  v.payload = Eigen::MatrixXd::Identity(3, 3);
  const Realization r = phi_realize(v);
  REQUIRE(r.kind == Realization::Kind::FlatOrbifold);
  REQUIRE(r.orbifold);
  CHECK(r.orbifold->dim == 3);
  // T^3 / {+-1} for the unit cube: farthest point (1/2, 1/2, 1/2).
  CHECK(r.diameter.value == doctest::Approx(std::sqrt(3.0) / 2));
  CHECK(r.unit_scale * r.diameter.value == doctest::Approx(1.0));

  // Distance axioms on the realized orbifold.
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd x(3), y(3), z(3);
    x << u(gen), u(gen), u(gen);
    y << u(gen), u(gen), u(gen);
    z << u(gen), u(gen), u(gen);
    const double dxy = metric::flat_orbifold_distance(*r.orbifold, x, y);
    CHECK(dxy == doctest::Approx(metric::flat_orbifold_distance(*r.orbifold, y, x)));
    CHECK(dxy <= metric::flat_orbifold_distance(*r.orbifold, x, z) + metric::flat_orbifold_distance(*r.orbifold, z, y) + 1e-12);
    CHECK(dxy * r.unit_scale <= 1.0 + 1e-12);
  }

  v.btype = BoundaryType::TypeC;
  v.payload = Eigen::MatrixXd::Identity(2, 2) * 3.0;  // det 9, normalized to 1
  const Realization r2 = phi_realize(v);
  REQUIRE(r2.orbifold);
  CHECK(r2.orbifold->dim == 2);
  CHECK(r2.diameter.value == doctest::Approx(std::sqrt(0.5)));

  v.kind = StandardKind::E8Type;
  CHECK(phi_realize(v).kind == Realization::Kind::Segment);
  v.btype = BoundaryType::TypeD;
  CHECK(phi_realize(v).kind == Realization::Kind::Segment);
  CHECK(phi_realize(v).segment.length == 1.0);
  v.btype = BoundaryType::TypeA;
  CHECK_THROWS_AS(phi_realize(v), PreconditionError);
  const auto w = weierstrass::parse_weierstrass("h8 = t^8 + 1; h12 = t^12 + t");
  CHECK(phi_realize(v, w).kind == Realization::Kind::WeierstrassFamily);
  v.btype = BoundaryType::Interior;
  CHECK_THROWS_AS(phi_realize(v), PreconditionError);
}

TEST_CASE("polarized_filter") {
  std::mt19937_64 gen(10);
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(kRank, kRank);
  std::vector<double> lambda(kRank, 0.0);

  // a -> infinity around lambda = x2 + x21 (the second column of every frame).
  std::vector<PeriodFrame> frames;
  for (int k = 1; k <= 8; ++k) frames.push_back({standard_frame(3.0 * k, 0, 0, id) * random_rotation(gen), StandardKind::E8Type});
  lambda[1] = lambda[20] = 1;
  auto rep = polarized_filter(frames, lambda);
  CHECK(rep.passed);
  CHECK(rep.verdict.btype == BoundaryType::TypeA);
  CHECK(rep.norm == 2);

  // b -> infinity with lambda = sqrt(2d) omega_1 = x3 + x20.
  frames.clear();
  for (int k = 1; k <= 8; ++k) frames.push_back({standard_frame(0, 3.0 * k, 0, id) * random_rotation(gen), StandardKind::Gamma16Type});
  std::fill(lambda.begin(), lambda.end(), 0.0);
  lambda[2] = lambda[19] = 1;
  rep = polarized_filter(frames, lambda);
  CHECK(rep.passed);
  CHECK(rep.verdict.btype == BoundaryType::TypeD);

  // c -> infinity: the plane direction e^c x3 + e^-c x20 is only hit by a
  // non-integral multiple.
  frames.clear();
  for (int k = 1; k <= 8; ++k) frames.push_back({standard_frame(0, 0, 3.0 * k, id), StandardKind::E8Type});
  std::fill(lambda.begin(), lambda.end(), 0.0);
  lambda[2] = std::exp(3.0);
  lambda[19] = std::exp(-3.0);
  CHECK_THROWS_AS(polarized_filter(frames, lambda), PreconditionError);

  // Integral but outside the planes.
  std::fill(lambda.begin(), lambda.end(), 0.0);
  lambda[2] = lambda[19] = 1;
  CHECK_THROWS_AS(polarized_filter(frames, lambda), PreconditionError);
  // Not primitive.
  frames.clear();
  for (int k = 1; k <= 8; ++k) frames.push_back({standard_frame(3.0 * k, 0, 0, id), StandardKind::E8Type});
  std::fill(lambda.begin(), lambda.end(), 0.0);
  lambda[1] = lambda[20] = 2;
  CHECK_THROWS_AS(polarized_filter(frames, lambda), PreconditionError);
}

TEST_CASE("frames from CSV") {
  std::string text = "# frame\n";
  for (int i = 0; i < kRank; ++i) text += std::to_string(i) + ", 0, " + (i == 5 ? "2.5" : "1") + "\n";
  const auto frames = read_frames_csv(text + "\n" + text);
  REQUIRE(frames.size() == 2);
  CHECK(frames[1](5, 2) == 2.5);
  CHECK(frames[0](21, 0) == 21);
  CHECK_THROWS_AS(read_frames_csv("1, 2\n"), ParseError);
  CHECK_THROWS_AS(read_frames_csv("1, 2, x\n"), ParseError);
  CHECK_THROWS_AS(read_frames_csv("1, 2, 3\n"), ParseError);
}
