// Copyright 2026 The vgpc Authors
//
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

#include <cmath>

#include "test_support.hpp"
#include "vgpc/kernel.hpp"

using namespace vgpc;

namespace {

struct MaternCase {
  double x[3];
  double xp[3];
  double theta;
  double tau2;
  double value;
};

// Independent transcription of the Matern-5/2 formula in a scratch script.
const MaternCase kMaternCases[] = {
    {{0.78230024866494574, 0.47675346247706729, 0.11596681181581681}, {0.87012193420878636, 0.59601730472047831, 0.4067097768062149}, 1.1551014223137999, 22.044053093211982, 20.488219780984767},
    {{0.52791968605881157, 0.35186900884472383, 0.49689197567056509}, {0.99152467209119166, 0.36577179707060858, 0.80571891101317772}, 0.97297282860743717, 22.784166240851974, 18.006618311200917},
    {{0.64214473763330704, 0.20377235419207174, 0.88597504200645549}, {0.72837428350145095, 0.95091798247684278, 0.8417208651592345}, 1.484384783500537, 8.540062964036558, 6.4708394240663587},
    {{0.89522131842747588, 0.60388948849481139, 0.65741406675767278}, {0.19315130469943864, 0.80039846683154248, 0.79987151245498711}, 1.7343704273208367, 14.695209591529197, 11.621332105426136},
    {{0.87302336123986368, 0.97411613094289873, 0.74501006320152319}, {0.57984254803475332, 0.67036990570567645, 0.27589766540975502}, 0.40579134458423577, 25.232245096723144, 13.357074336061803},
    {{0.20798159804047922, 0.74608569551181214, 0.78063476824905553}, {0.18911435249589414, 0.18415180982184953, 0.46164661436866783}, 0.70718697347347703, 8.020563415391754, 5.3253203483077964},
    {{0.30652740345896234, 0.42288869403148721, 0.79730260670220732}, {0.92450453372867636, 0.58417369107825812, 0.8156602833502028}, 0.88205465765671465, 1.4113850909665131, 1.0151312817710003},
    {{0.34814102933464408, 0.072750904207995792, 0.30612946958942033}, {0.6139690651274099, 0.70266209465027696, 0.27172259398288867}, 1.1627127544026128, 10.340104175171955, 7.729454881147932},
    {{0.43993992634991275, 0.32756650420053224, 0.90229771397819014}, {0.029089844477128257, 0.47283951828998705, 0.62506002016492479}, 1.0933699262558896, 6.9769080099297316, 5.8057221752984915},
    {{0.88688860310231254, 0.69348508212085369, 0.66749866827412763}, {0.45721834829656616, 0.39454434498824287, 0.52304737115498467}, 0.70046552159841846, 10.29001378077238, 7.603137803844338},
};

KernelConfig config(KernelFamily family, double theta, double tau2, double g = 0.0) {
  KernelConfig c;
  c.family = family;
  c.lengthscale = theta;
  c.scale = tau2;
  c.nugget = g;
  return c;
}

}  // namespace

TEST_CASE("zero distance gives the scale") {
  Vector x(2);
  x << 0.3, 0.7;
  for (auto family : {KernelFamily::SquaredExponential, KernelFamily::Matern52})
    CHECK(kernel_eval(x, x, config(family, 1.0, 25.0)) == doctest::Approx(25.0).epsilon(1e-15));
}

TEST_CASE("squared exponential at unit ratio") {
  Vector x(1), xp(1);
  x << 0.0;
  xp << std::sqrt(0.4);
  CHECK(kernel_eval(x, xp, config(KernelFamily::SquaredExponential, 0.4, 1.0)) ==
        doctest::Approx(std::exp(-1.0)).epsilon(1e-14));
}

TEST_CASE("matern 5/2 matches direct formula") {
  for (const MaternCase& c : kMaternCases) {
    const Vector x = Eigen::Map<const Vector>(c.x, 3);
    const Vector xp = Eigen::Map<const Vector>(c.xp, 3);
    const double v = kernel_eval(x, xp, config(KernelFamily::Matern52, c.theta, c.tau2));
    CHECK(v == doctest::Approx(c.value).epsilon(1e-13));
  }
}

TEST_CASE("nugget only on the same observation") {
  Vector x(2);
  x << 0.1, 0.2;
  const KernelConfig c = config(KernelFamily::Matern52, 0.5, 2.0, 0.3);
  CHECK(kernel_eval(x, x, c, true) == doctest::Approx(2.3));
  CHECK(kernel_eval(x, x, c, false) == doctest::Approx(2.0));
  const Matrix k = cov_matrix(testing::random_inputs(4, 2, 3), c);
  for (int i = 0; i < 4; ++i) CHECK(k(i, i) == doctest::Approx(2.3));
}

TEST_CASE("non-finite input and bad configs throw") {
  Vector x(2), xp(2);
  x << 0.1, std::nan("");
  xp << 0.1, 0.2;
  const KernelConfig c = config(KernelFamily::Matern52, 0.5, 2.0);
  CHECK_THROWS_AS(kernel_eval(x, xp, c), InvalidArgument);
  x(1) = INFINITY;
  CHECK_THROWS_AS(kernel_eval(x, xp, c), InvalidArgument);
  CHECK_THROWS_AS(config(KernelFamily::Matern52, 0.0, 1.0).validate(), InvalidArgument);
  CHECK_THROWS_AS(config(KernelFamily::Matern52, 1.0, -1.0).validate(), InvalidArgument);
  CHECK_THROWS_AS(config(KernelFamily::Matern52, 1.0, 1.0, -1e-3).validate(), InvalidArgument);
  CHECK_THROWS_AS(parse_kernel_family("rbf2"), InvalidArgument);
  CHECK(parse_kernel_family(to_string(KernelFamily::SquaredExponential)) ==
        KernelFamily::SquaredExponential);
}

TEST_CASE("cov_matrix shapes, symmetry and transposition") {
  const Matrix a = testing::random_inputs(5, 3, 1);
  const Matrix b = testing::random_inputs(4, 3, 2);
  const KernelConfig c = config(KernelFamily::Matern52, 0.2, 3.0);
  const Matrix kab = cov_matrix(a, b, c);
  const Matrix kba = cov_matrix(b, a, c);
  CHECK(kab.rows() == 5);
  CHECK(kab.cols() == 4);
  CHECK((kab - kba.transpose()).cwiseAbs().maxCoeff() == 0.0);
  const Matrix kaa = cov_matrix(a, c);
  CHECK((kaa - kaa.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(cov_matrix(a, testing::random_inputs(2, 2, 3), c), InvalidArgument);

  const Matrix one = cov_matrix(a.topRows(1), config(KernelFamily::Matern52, 0.2, 3.0, 0.5));
  CHECK(one.rows() == 1);
  CHECK(one(0, 0) == doctest::Approx(3.5));
}

TEST_CASE("off-diagonal in (0, scale] and increasing in lengthscale") {
  const Matrix a = testing::random_inputs(30, 2, 4);
  for (auto family : {KernelFamily::SquaredExponential, KernelFamily::Matern52}) {
    const Matrix k1 = cov_matrix(a, config(family, 0.05, 4.0));
    const Matrix k2 = cov_matrix(a, config(family, 0.06, 4.0));
    for (int i = 0; i < 30; ++i)
      for (int j = 0; j < 30; ++j) {
        if (i == j) continue;
        CHECK(k1(i, j) > 0.0);
        CHECK(k1(i, j) <= 4.0);
        CHECK(k2(i, j) > k1(i, j));
      }
  }
}

TEST_CASE("small nugget gives a positive definite matrix") {
  const Matrix k = cov_matrix(testing::random_inputs(3, 2, 5),
                              config(KernelFamily::Matern52, 0.1, 1.0, 1e-6));
  Eigen::LLT<Matrix> llt(k);
  CHECK(llt.info() == Eigen::Success);
}

TEST_CASE("dense covariance with jitter factorizes at n = 500") {
  for (auto family : {KernelFamily::SquaredExponential, KernelFamily::Matern52}) {
    const Matrix k = cov_matrix(testing::random_inputs(500, 2, 6), config(family, 0.1, 1.0, 1e-8));
    Eigen::LLT<Matrix> llt(k);
    CHECK(llt.info() == Eigen::Success);
  }
}

TEST_CASE("matrix kernel evaluation agrees with the scalar form") {
  const Matrix x = testing::random_inputs(30, 3, 8);
  Matrix sq(30, 30);
  for (int i = 0; i < 30; ++i)
    for (int j = 0; j < 30; ++j) sq(i, j) = squared_distance(x, i, x, j);
  for (KernelFamily f : {KernelFamily::Matern52, KernelFamily::SquaredExponential}) {
    KernelConfig cfg;
    cfg.family = f;
    cfg.lengthscale = 0.07;
    cfg.scale = 3.0;
    const Matrix k = kernel_from_sqdist(sq, cfg);
    for (int i = 0; i < 30; ++i)
      for (int j = 0; j < 30; ++j)
        CHECK(k(i, j) == doctest::Approx(kernel_from_sqdist(sq(i, j), cfg)).epsilon(1e-13));
  }
}
