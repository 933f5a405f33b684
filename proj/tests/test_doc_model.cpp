#include <doctest.h>

#include <random>

#include "errors.hpp"
#include "geometry.hpp"

using namespace p2g;
using doctest::Approx;

namespace {

void check_box(const NormBox& b, double xmin, double ymin, double xmax, double ymax) {
  CHECK(b.xmin == Approx(xmin).epsilon(1e-15));
  CHECK(b.ymin == Approx(ymin).epsilon(1e-15));
  CHECK(b.xmax == Approx(xmax).epsilon(1e-15));
  CHECK(b.ymax == Approx(ymax).epsilon(1e-15));
}

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error raised");
  return ErrorKind::IoError;
}

}  // namespace

TEST_CASE("normalize_box") {
  check_box(normalize_box(PixelBox{100, 200, 300, 600}, 1000, 1000), 0.1, 0.2, 0.3, 0.6);
  check_box(normalize_box(PixelBox{0, 0, 1000, 1000}, 1000, 1000), 0, 0, 1, 1);
  CHECK(kind_of([] { normalize_box(PixelBox{5, 5, 5, 9}, 1000, 1000); }) == ErrorKind::DegenerateBox);
  CHECK(kind_of([] { normalize_box(PixelBox{5, 5, 8, 9}, 0, 1000); }) == ErrorKind::DegenerateBox);
}

TEST_CASE("normalize_box clamps overflow, rejects boxes that vanish") {
  check_box(normalize_box(PixelBox{-10, 990, 200, 1010}, 1000, 1000), 0.0, 0.99, 0.2, 1.0);
  CHECK(kind_of([] { normalize_box(PixelBox{1000, 5, 1100, 9}, 1000, 1000); }) == ErrorKind::DegenerateBox);
}

TEST_CASE("normalize_box is scale invariant") {
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 1000; ++t) {
    const int w = 100 + static_cast<int>(gen() % 2000), h = 100 + static_cast<int>(gen() % 2000);
    const double x0 = u(gen) * w * 0.5, y0 = u(gen) * h * 0.5;
    const PixelBox b{x0, y0, x0 + 1 + u(gen) * w * 0.4, y0 + 1 + u(gen) * h * 0.4};
    const int s = 1 + static_cast<int>(gen() % 7);
    const NormBox a = normalize_box(b, w, h);
    const NormBox c = normalize_box(PixelBox{b.xmin * s, b.ymin * s, b.xmax * s, b.ymax * s}, w * s, h * s);
    CHECK(std::abs(a.xmin - c.xmin) <= 1e-12 * std::max(1.0, a.xmin));
    CHECK(std::abs(a.ymax - c.ymax) <= 1e-12 * std::max(1.0, a.ymax));
  }
}

TEST_CASE("layout_vector") {
  const NormBox b{0.1, 0.2, 0.3, 0.6};
  const auto eight = layout_vector(b, BoxInfoMode::Eight);
  const std::vector<double> want8{0.1, 0.2, 0.3, 0.6, 0.2, 0.4, 0.2, 0.4};
  REQUIRE(eight.size() == 8);
  for (int i = 0; i < 8; ++i) CHECK(eight[i] == Approx(want8[i]).epsilon(1e-15));
  const auto four = layout_vector(b, BoxInfoMode::Four);
  const std::vector<double> want4{0.1, 0.2, 0.2, 0.4};
  REQUIRE(four.size() == 4);
  for (int i = 0; i < 4; ++i) CHECK(four[i] == Approx(want4[i]).epsilon(1e-15));
  CHECK(layout_vector(NormBox{0, 0, 1, 1}, BoxInfoMode::Eight) == std::vector<double>{0, 0, 1, 1, 0.5, 0.5, 1, 1});
  CHECK(layout_width(BoxInfoMode::Four) == 4);
  CHECK(layout_width(BoxInfoMode::Eight) == 8);
}

TEST_CASE("layout_vector: derived entries follow from the corners") {
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> u(0.0, 0.5);
  for (int t = 0; t < 200; ++t) {
    const double x = u(gen), y = u(gen);
    const auto v = layout_vector(NormBox{x, y, x + 0.01 + u(gen), y + 0.01 + u(gen)}, BoxInfoMode::Eight);
    CHECK(v[4] - (v[0] + v[2]) / 2 == 0.0);
    CHECK(v[5] - (v[1] + v[3]) / 2 == 0.0);
    CHECK(v[6] == v[2] - v[0]);
    CHECK(v[7] == v[3] - v[1]);
  }
}

TEST_CASE("min_bounding_rect") {
  const NormBox a{0.1, 0.1, 0.2, 0.2}, b{0.3, 0.15, 0.5, 0.4}, c{0.05, 0.3, 0.12, 0.9};
  CHECK(min_bounding_rect(a, b) == NormBox{0.1, 0.1, 0.5, 0.4});
  CHECK(min_bounding_rect(std::vector<NormBox>{a}) == a);
  CHECK(min_bounding_rect(a, a) == a);
  CHECK(min_bounding_rect(a, b) == min_bounding_rect(b, a));
  CHECK(min_bounding_rect(min_bounding_rect(a, b), c) == min_bounding_rect(a, min_bounding_rect(b, c)));
  CHECK(min_bounding_rect(std::vector<NormBox>{a, b, c}) == min_bounding_rect(min_bounding_rect(a, b), c));
  CHECK(kind_of([] { min_bounding_rect(std::vector<NormBox>{}); }) == ErrorKind::EmptySet);
}

TEST_CASE("interval_overlap_1d") {
  CHECK(interval_overlap_1d({0, 1}, {0.5, 2}) == 0.5);
  CHECK(interval_overlap_1d({0, 1}, {2, 3}) == 0.0);
  CHECK(interval_overlap_1d({0, 1}, {0, 1}) == 1.0);
  CHECK(interval_overlap_1d({0, 1}, {1, 2}) == 0.0);
}

TEST_CASE("check_norm_box and group_of") {
  CHECK_NOTHROW(check_norm_box({0.1, 0.1, 0.2, 0.2}));
  CHECK(kind_of([] { check_norm_box({0.2, 0.1, 0.2, 0.2}); }) == ErrorKind::DegenerateBox);
  const GoldLabels gold{{0, 0, 1}, {{0, 2}, {1}}, {}};
  CHECK(gold.group_of(3) == std::vector<int>{0, 1, 0});
}

TEST_CASE("error kinds map to categories") {
  CHECK(category_of(ErrorKind::InvalidConfig) == ErrorCategory::Config);
  CHECK(category_of(ErrorKind::ConfigMismatch) == ErrorCategory::Config);
  CHECK(category_of(ErrorKind::SchemaError) == ErrorCategory::Data);
  CHECK(category_of(ErrorKind::NonFiniteValue) == ErrorCategory::Numeric);
  const Error e(ErrorKind::SchemaError, "bad field");
  CHECK(e.detail() == "bad field");
  CHECK(std::string(e.what()).find("SchemaError") != std::string::npos);
  CHECK(kind_name(ErrorKind::DegenerateBox) == "DegenerateBox");
}
