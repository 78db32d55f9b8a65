#include <doctest.h>

#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>

#include "repscope/error.hpp"
#include "repscope/tensor_io.hpp"
#include "temp_dir.hpp"

using namespace repscope;

namespace {

std::vector<std::uint8_t> slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void spit(const std::filesystem::path& p, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::vector<std::uint8_t> header(std::uint8_t dtype, std::vector<std::uint64_t> dims) {
  std::vector<std::uint8_t> b = {'L', 'R', 'E', 'P', 1, dtype, static_cast<std::uint8_t>(dims.size()), 0};
  for (auto d : dims)
    for (int i = 0; i < 8; ++i) b.push_back(static_cast<std::uint8_t>(d >> (8 * i)));
  return b;
}

}  // namespace

TEST_CASE("2x2 f64 identity round-trips through a file") {
  TempDir dir;
  const Tensor t({2, 2}, std::vector<double>{1, 0, 0, 1});
  write_lrep(t, dir / "eye.lrep");
  const auto bytes = slurp(dir / "eye.lrep");
  CHECK(bytes.size() == 8 + 16 + 32);
  CHECK(std::memcmp(bytes.data(), "LREP", 4) == 0);
  CHECK(read_lrep(dir / "eye.lrep") == t);
}

TEST_CASE("a (3,) f32 tensor takes exactly 28 bytes") {
  const Tensor t({3}, std::vector<float>{1.0f, 2.0f, 3.0f});
  const auto bytes = encode_lrep(t);
  REQUIRE(bytes.size() == 28);
  CHECK(bytes[4] == 1);
  CHECK(bytes[5] == 0);
  CHECK(bytes[6] == 1);
  CHECK(bytes[7] == 0);
  CHECK(bytes[8] == 3);
  float second = 0;
  std::memcpy(&second, bytes.data() + 16 + 4, 4);
  CHECK(second == 2.0f);
}

TEST_CASE("non-finite values are rejected when building and when decoding") {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(Tensor({2}, std::vector<double>{1.0, nan}), ValidationError);
  CHECK_THROWS_AS(Tensor({1}, std::vector<float>{std::numeric_limits<float>::infinity()}), ValidationError);

  auto bytes = header(1, {1});
  std::uint8_t raw[8];
  std::memcpy(raw, &nan, 8);
  bytes.insert(bytes.end(), raw, raw + 8);
  CHECK_THROWS_AS(decode_lrep(bytes), FormatError);
}

TEST_CASE("shape invariants") {
  CHECK_THROWS_AS(Tensor({}, std::vector<double>{}), ValidationError);
  CHECK_THROWS_AS(Tensor({2, 0}, std::vector<double>{}), ValidationError);
  CHECK_THROWS_AS(Tensor({2, 3}, std::vector<double>(5)), ValidationError);
}

TEST_CASE("bad magic") {
  auto bytes = header(0, {1});
  bytes[0] = bytes[1] = bytes[2] = bytes[3] = 'X';
  bytes.insert(bytes.end(), 4, 0);
  CHECK_THROWS_WITH_AS(decode_lrep(bytes), doctest::Contains("magic"), FormatError);
}

TEST_CASE("payload shorter than the declared dims is a truncation error") {
  auto bytes = header(0, {2, 3});
  bytes.insert(bytes.end(), 20, 0);
  CHECK_THROWS_WITH_AS(decode_lrep(bytes), doctest::Contains("truncat"), FormatError);

  auto exact = header(0, {2, 3});
  exact.insert(exact.end(), 24, 0);
  CHECK(decode_lrep(exact).size() == 6);

  CHECK_THROWS_AS(decode_lrep(std::vector<std::uint8_t>{'L', 'R', 'E'}), FormatError);
  auto dims_cut = header(0, {2, 3});
  dims_cut.resize(8 + 12);
  CHECK_THROWS_AS(decode_lrep(dims_cut), FormatError);
}

TEST_CASE("header fields are validated") {
  auto bad_version = header(0, {1});
  bad_version[4] = 2;
  bad_version.insert(bad_version.end(), 4, 0);
  CHECK_THROWS_AS(decode_lrep(bad_version), FormatError);

  auto bad_dtype = header(7, {1});
  bad_dtype.insert(bad_dtype.end(), 4, 0);
  CHECK_THROWS_AS(decode_lrep(bad_dtype), FormatError);

  auto zero_ndim = header(0, {});
  CHECK_THROWS_AS(decode_lrep(zero_ndim), FormatError);

  auto trailing = header(0, {1});
  trailing.insert(trailing.end(), 5, 0);
  CHECK_THROWS_AS(decode_lrep(trailing), FormatError);
}

TEST_CASE("missing file is an io error") {
  TempDir dir;
  CHECK_THROWS_AS(read_lrep(dir / "nope.lrep"), IoError);
}

TEST_CASE("matrix conversion keeps row-major order") {
  Matrix m(2, 3);
  m << 1, 2, 3, 4, 5, 6;
  const Tensor t = Tensor::from_matrix(m, DType::f32);
  CHECK(t.at(1) == 2.0);
  CHECK(t.at(3) == 4.0);
  CHECK(t.to_matrix() == m);
  const Tensor cube({2, 2, 1}, std::vector<double>{1, 2, 3, 4});
  const auto mats = cube.to_matrices();
  REQUIRE(mats.size() == 2);
  CHECK(mats[1](1, 0) == 4.0);
}

TEST_CASE("manifest parse, serialize and validate") {
  const std::string text = R"({
    "model_id": "toy", "num_layers": 2, "pooling": "mean", "dtype": "f32",
    "prompt_ids": ["a", "b"],
    "layer_files": {"0": "l0.lrep", "1": "l1.lrep", "2": "l2.lrep"}
  })";
  const RunManifest m = parse_manifest(text);
  CHECK(m.model_id == "toy");
  CHECK(m.layer_count() == 3);
  CHECK(m.layer_files.at(2).front() == "l2.lrep");
  const RunManifest again = parse_manifest(serialize_manifest(m));
  CHECK(again.layer_files == m.layer_files);
  CHECK(again.prompt_ids == m.prompt_ids);

  RunManifest dup = m;
  dup.prompt_ids = {"a", "a"};
  CHECK_THROWS_AS(validate_manifest(dup), FormatError);

  RunManifest short_files = m;
  short_files.layer_files.erase(2);
  CHECK_THROWS_AS(validate_manifest(short_files), FormatError);

  CHECK_THROWS_AS(parse_manifest("{not json"), FormatError);
  CHECK_THROWS_AS(parse_manifest(R"({"model_id": "x"})"), FormatError);
}

TEST_CASE("pooled run with three layers loads three pooled matrices") {
  TempDir dir;
  std::vector<PooledMatrix> layers;
  for (int l = 0; l < 3; ++l) layers.push_back(Matrix::Constant(4, 5, l + 1.0));
  write_pooled_run(dir.path(), "toy", {"p0", "p1", "p2", "p3"}, layers, DType::f64);
  const RunBundle b = load_run(dir.path());
  CHECK(b.layer_count() == 3);
  CHECK_FALSE(b.has_tokens());
  for (std::size_t l = 0; l < 3; ++l) CHECK(b.pooled(l) == layers[l]);
  CHECK_THROWS_AS(b.tokens(0), GranularityError);
  CHECK(load_run(dir / "manifest.json").prompt_count() == 4);
}

TEST_CASE("manifest referencing an absent file names the path") {
  TempDir dir;
  write_pooled_run(dir.path(), "toy", {"p0", "p1"}, {Matrix::Ones(2, 3), Matrix::Ones(2, 3)});
  std::filesystem::remove(dir / "layer_001.lrep");
  CHECK_THROWS_WITH_AS(load_run(dir.path()), doctest::Contains("layer_001.lrep"), IoError);
}

TEST_CASE("pooled row count must match the prompt count") {
  TempDir dir;
  write_pooled_run(dir.path(), "toy", {"p0", "p1"}, {Matrix::Ones(2, 3), Matrix::Ones(2, 3)});
  write_lrep(Tensor::from_matrix(Matrix::Ones(3, 3)), dir / "layer_001.lrep");
  CHECK_THROWS_AS(load_run(dir.path()), FormatError);
}

TEST_CASE("token run mean-pools to the pooled view") {
  TempDir dir;
  std::vector<std::vector<TokenMatrix>> tokens(2);
  for (int l = 0; l < 2; ++l) {
    Matrix a(2, 2), b(3, 2);
    a << 1, 2, 3, 4;
    b << 0, 0, 3, 3, 6, 6 + l;
    tokens[l] = {a, b};
  }
  write_token_run(dir.path(), "toy", {"x", "y"}, tokens, DType::f64);
  const RunBundle bundle = load_run(dir.path());
  CHECK(bundle.has_tokens());
  const Matrix pooled = bundle.pooled(1);
  CHECK(pooled(0, 0) == doctest::Approx(2.0));
  CHECK(pooled(1, 1) == doctest::Approx(10.0 / 3.0));
  CHECK(bundle.tokens(0)[1].rows() == 3);
}
