#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "microtrain/data.hpp"
#include "microtrain/errors.hpp"
#include "microtrain/metrics.hpp"
#include "microtrain/rng.hpp"

namespace data = microtrain::data;
using data::DatasetSpec;
using microtrain::ConfigError;
using microtrain::Tensor;

namespace {

std::string tmp_dir(const std::string& tag) {
  const auto dir =
      std::filesystem::temp_directory_path() / ("microtrain_data_" + tag);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir.string();
}

bool images_identical(const Tensor& a, const Tensor& b) {
  return a.same_shape(b) &&
         std::memcmp(a.data(), b.data(),
                     static_cast<size_t>(a.size()) * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("default test split is exactly 60/60") {
  DatasetSpec spec;
  spec.n_train = 16;
  spec.n_val = 8;
  spec.n_test = 120;
  spec.positive_fraction = 0.5;
  const data::Dataset ds = data::generate(spec);
  int pos = 0;
  for (const auto& s : ds.test) pos += s.label;
  CHECK(pos == 60);
  CHECK(ds.test.size() == 120);
  for (const auto& s : ds.test) {
    CHECK(s.image.shape() == std::vector<int>{1, 32, 32});
    for (long long i = 0; i < s.image.size(); ++i) {
      CHECK(s.image[i] >= 0.0);
      CHECK(s.image[i] <= 1.0);
    }
  }
}

TEST_CASE("generation is deterministic per spec") {
  DatasetSpec spec;
  spec.n_train = 24;
  spec.n_val = 8;
  spec.n_test = 8;
  spec.label_noise = 0.2;
  const data::Dataset a = data::generate(spec);
  const data::Dataset b = data::generate(spec);
  REQUIRE(a.train.size() == b.train.size());
  for (size_t i = 0; i < a.train.size(); ++i) {
    CHECK(a.train[i].label == b.train[i].label);
    CHECK(images_identical(a.train[i].image, b.train[i].image));
  }
}

TEST_CASE("noise=0 keeps generative ground truth; val/test stay clean") {
  DatasetSpec clean;
  clean.n_train = 64;
  clean.n_val = 32;
  clean.n_test = 32;
  clean.label_noise = 0.0;
  DatasetSpec noisy = clean;
  noisy.label_noise = 0.3;

  const data::Dataset a = data::generate(clean);
  const data::Dataset b = data::generate(noisy);

  int flips = 0;
  for (size_t i = 0; i < a.train.size(); ++i)
    flips += a.train[i].label != b.train[i].label;
  CHECK(flips > 0);  // the noisy run did flip training labels

  for (size_t i = 0; i < a.val.size(); ++i)
    CHECK(a.val[i].label == b.val[i].label);
  for (size_t i = 0; i < a.test.size(); ++i)
    CHECK(a.test[i].label == b.test[i].label);
  // images are identical too: noise only touches labels
  for (size_t i = 0; i < a.train.size(); ++i)
    CHECK(images_identical(a.train[i].image, b.train[i].image));
}

TEST_CASE("flip count near Binomial(n, 0.1) within 4 sigma") {
  DatasetSpec clean;
  clean.n_train = 10000;
  clean.n_val = 2;
  clean.n_test = 2;
  clean.n_train = 10000;
  DatasetSpec noisy = clean;
  noisy.label_noise = 0.1;
  const data::Dataset a = data::generate(clean);
  const data::Dataset b = data::generate(noisy);
  int flips = 0;
  for (size_t i = 0; i < a.train.size(); ++i)
    flips += a.train[i].label != b.train[i].label;
  const double mean = 10000 * 0.1;
  const double sigma = std::sqrt(10000 * 0.1 * 0.9);
  CHECK(std::abs(flips - mean) < 4.0 * sigma);
}

TEST_CASE("easy generator passes the pixel-sum separability check") {
  // Pilot-established band: on easy/noise=0 a plain pixel-sum threshold
  // reaches a solidly informative but imperfect AUC. Guards against a
  // degenerate generator (invisible or brightness-trivial stenosis).
  DatasetSpec spec;
  spec.n_train = 400;
  spec.n_val = 2;
  spec.n_test = 2;
  spec.difficulty = data::Difficulty::Easy;
  const data::Dataset ds = data::generate(spec);
  std::vector<int> labels;
  std::vector<double> sums;
  for (const auto& s : ds.train) {
    labels.push_back(s.label);
    double sum = 0.0;
    for (long long i = 0; i < s.image.size(); ++i) sum += s.image[i];
    sums.push_back(-sum);  // positives remove mass, so negate
  }
  const double auc = microtrain::metrics::auc_roc(labels, sums);
  CHECK(auc > 0.60);
  CHECK(auc < 0.98);
}

TEST_CASE("pretext rotations") {
  SUBCASE("rot by 0 is identity, two 90s equal one 180") {
    microtrain::Rng rng(5);
    Tensor img({1, 8, 8});
    for (long long i = 0; i < img.size(); ++i) img[i] = rng.u01();
    CHECK(images_identical(data::rot90(img, 0), img));
    CHECK(images_identical(data::rot90(data::rot90(img, 1), 1),
                           data::rot90(img, 2)));
    CHECK(images_identical(data::rot90(data::rot90(img, 2), 2), img));
  }
  SUBCASE("class counts differ by at most 1") {
    const auto set = data::generate_pretext(103, 9, 16, 16);
    int counts[4] = {0, 0, 0, 0};
    for (const auto& s : set) counts[s.orientation]++;
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) CHECK(std::abs(counts[a] - counts[b]) <= 1);
  }
  SUBCASE("deterministic") {
    const auto a = data::generate_pretext(12, 9, 16, 16);
    const auto b = data::generate_pretext(12, 9, 16, 16);
    for (size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].orientation == b[i].orientation);
      CHECK(images_identical(a[i].image, b[i].image));
    }
  }
}

TEST_CASE("pgm round trip within quantization") {
  const std::string dir = tmp_dir("pgm");
  DatasetSpec spec;
  spec.n_train = 2;
  spec.n_val = 2;
  spec.n_test = 2;
  const data::Dataset ds = data::generate(spec);
  const std::string path = dir + "/x.pgm";
  data::write_pgm(path, ds.train[0].image);
  const Tensor back = data::read_pgm(path);
  REQUIRE(back.same_shape(ds.train[0].image));
  for (long long i = 0; i < back.size(); ++i)
    CHECK(std::abs(back[i] - ds.train[0].image[i]) <= 1.0 / 255.0 + 1e-12);
}

TEST_CASE("pgm parser rejects junk") {
  const std::string dir = tmp_dir("pgmbad");
  {
    std::ofstream f(dir + "/bad.pgm", std::ios::binary);
    f << "P2\n2 2\n255\n0 0 0 0\n";
  }
  CHECK_THROWS_AS(data::read_pgm(dir + "/bad.pgm"), ConfigError);
  {
    std::ofstream f(dir + "/trunc.pgm", std::ios::binary);
    f << "P5\n4 4\n255\nxx";
  }
  CHECK_THROWS_AS(data::read_pgm(dir + "/trunc.pgm"), ConfigError);
  {
    std::ofstream f(dir + "/max.pgm", std::ios::binary);
    f << "P5\n1 1\n65535\nxx";
  }
  CHECK_THROWS_AS(data::read_pgm(dir + "/max.pgm"), ConfigError);
}

TEST_CASE("bilinear 64->32 matches hand-computed corner weights") {
  // Half-pixel centers: dst (0,0) maps to src (0.5, 0.5), averaging the
  // four corner pixels with equal weight 1/4.
  Tensor img({1, 64, 64});
  img[0] = 0.0;
  img[1] = 0.4;
  img[64] = 0.8;
  img[65] = 1.0;
  // distinct values in the far corner block as well
  img[62] = 0.2;
  img[63] = 0.6;
  img[126] = 0.1;
  img[127] = 0.9;
  const Tensor out = data::resample_bilinear(img, 32, 32);
  REQUIRE(out.shape() == std::vector<int>{1, 32, 32});
  CHECK(out[0] == doctest::Approx((0.0 + 0.4 + 0.8 + 1.0) / 4.0).epsilon(1e-12));
  CHECK(out[31] == doctest::Approx((0.2 + 0.6 + 0.1 + 0.9) / 4.0).epsilon(1e-12));
}

TEST_CASE("manifest loading") {
  const std::string dir = tmp_dir("manifest");
  DatasetSpec spec;
  spec.n_train = 6;
  spec.n_val = 2;
  spec.n_test = 2;
  const data::Dataset ds = data::generate(spec);
  data::write_split(dir, "train", ds.train);

  SUBCASE("round trip preserves order, ids and labels") {
    const auto loaded =
        data::load_directory(dir, dir + "/manifest_train.csv", 32, 32);
    REQUIRE(loaded.size() == ds.train.size());
    for (size_t i = 0; i < loaded.size(); ++i) {
      CHECK(loaded[i].id == ds.train[i].id);
      CHECK(loaded[i].label == ds.train[i].label);
    }
  }

  SUBCASE("missing file error names the row and file") {
    std::ofstream f(dir + "/manifest_missing.csv");
    f << "id,filename,label\nx,missing_file.pgm,0\n";
    f.close();
    try {
      data::load_directory(dir, dir + "/manifest_missing.csv", 32, 32);
      FAIL("expected throw");
    } catch (const ConfigError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("missing_file.pgm") != std::string::npos);
      CHECK(msg.find("row 2") != std::string::npos);
    }
  }

  SUBCASE("bad label rejected") {
    std::ofstream f(dir + "/manifest_badlabel.csv");
    f << "id,filename,label\nx," << ds.train[0].id << ".pgm,2\n";
    f.close();
    CHECK_THROWS_AS(
        data::load_directory(dir, dir + "/manifest_badlabel.csv", 32, 32),
        ConfigError);
  }

  SUBCASE("larger images are resampled to the target geometry") {
    const auto big = data::generate_pretext(4, 1, 64, 64);
    data::write_pgm(dir + "/big.pgm", big[0].image);
    std::ofstream f(dir + "/manifest_big.csv");
    f << "id,filename,label\nbig,big.pgm,1\n";
    f.close();
    const auto loaded =
        data::load_directory(dir, dir + "/manifest_big.csv", 32, 32);
    REQUIRE(loaded.size() == 1);
    CHECK(loaded[0].image.shape() == std::vector<int>{1, 32, 32});
  }
}

TEST_CASE("spec validation") {
  DatasetSpec bad;
  bad.n_train = 1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  DatasetSpec noise;
  noise.label_noise = 0.6;
  CHECK_THROWS_AS(noise.validate(), std::invalid_argument);
  DatasetSpec pf;
  pf.positive_fraction = 1.0;
  CHECK_THROWS_AS(pf.validate(), std::invalid_argument);
}
