#include <gtest/gtest.h>

#include <filesystem>

#include "ascnet/data.hpp"
#include "test_util.hpp"

using namespace ascnet;
using ascnet::testing::random_matrix;

namespace {

Dataset one_sample(Index n = 2, Index d = 3) {
  Dataset ds;
  ds.n_levels = n;
  ds.feat_dim = d;
  ds.n_classes = 4;
  VideoSample s;
  s.label = 3;
  s.source_id = "clip-0001";
  s.features = Matrix<double>(n, d);
  for (Index i = 0; i < s.features.size(); ++i) s.features.data()[i] = 0.25 * static_cast<double>(i) - 0.5;
  ds.samples.push_back(s);
  return ds;
}

ParseError::Kind parse_kind(const std::vector<std::uint8_t>& bytes) {
  try {
    decode_features(bytes);
  } catch (const ParseError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no parse error";
  return ParseError::Kind::Io;
}

// Fraction of rows at `level` whose nearest prototype is the true class.
double nearest_prototype_accuracy(const Dataset& ds, const Matrix<double>& protos, Index level) {
  int correct = 0;
  for (const auto& s : ds.samples) {
    Index best = 0;
    (protos.rowwise() - s.features.row(level)).rowwise().squaredNorm().minCoeff(&best);
    correct += best == s.label;
  }
  return static_cast<double>(correct) / static_cast<double>(ds.size());
}

}  // namespace

TEST(ProgressRatio, Examples) {
  EXPECT_DOUBLE_EQ(progress_ratio(1, 10), 0.1);
  EXPECT_DOUBLE_EQ(progress_ratio(10, 10), 1.0);
  EXPECT_DOUBLE_EQ(progress_ratio(5, 10), 0.5);
  EXPECT_THROW(progress_ratio(0, 10), ParameterError);
  EXPECT_THROW(progress_ratio(11, 10), ParameterError);
}

TEST(Ascf, EmptyContainerIsHeaderOnly) {
  Dataset ds = one_sample();
  ds.samples.clear();
  EXPECT_EQ(encode_features(ds).size(), kAscfHeaderBytes);
  EXPECT_EQ(kAscfHeaderBytes, 24u);
}

TEST(Ascf, OneSampleSize) {
  EXPECT_EQ(encode_features(one_sample()).size(), 24u + (4 + 8 + 2 * 3 * 4));
}

TEST(Ascf, HeaderLayout) {
  const auto bytes = encode_features(one_sample());
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "ASCF");
  const std::uint8_t version_and_count[] = {1, 0, 0, 0, 1, 0, 0, 0, 2, 0, 0, 0, 3, 0, 0, 0, 4, 0, 0, 0};
  EXPECT_TRUE(std::equal(std::begin(version_and_count), std::end(version_and_count), bytes.begin() + 4));
  EXPECT_EQ(bytes[24], 3);  // label
}

TEST(Ascf, RoundTripIsBitwise) {
  Rng rng(1);
  Dataset ds;
  ds.n_levels = 10;
  ds.feat_dim = 1024;
  ds.n_classes = 101;
  for (int i = 0; i < 3; ++i) {
    VideoSample s;
    s.label = 100 - i;
    s.source_id = source_id_from_hash(rng.engine()());
    s.features = random_matrix(10, 1024, rng).cast<float>().cast<double>();
    ds.samples.push_back(s);
  }
  const auto bytes = encode_features(ds);
  const Dataset back = decode_features(bytes, Split::Test);
  EXPECT_EQ(back.samples, ds.samples);
  EXPECT_EQ(back.split, Split::Test);
  EXPECT_EQ(encode_features(back), bytes);
}

TEST(Ascf, FileRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "ascnet_data_test.ascf";
  const Dataset ds = one_sample();
  const auto n = write_features(ds, path);
  EXPECT_EQ(n, std::filesystem::file_size(path));
  const Dataset back = load_features(path);
  EXPECT_EQ(back.samples[0].features, ds.samples[0].features);
  EXPECT_EQ(write_features(back, path), n);
  std::filesystem::remove(path);
}

TEST(Ascf, SourceIdHexSurvivesRewrite) {
  EXPECT_EQ(source_id_from_hash(source_id_hash("00ff00ff00ff00ff")), "00ff00ff00ff00ff");
  EXPECT_EQ(source_id_hash("clip"), source_id_hash("clip"));
  EXPECT_NE(source_id_hash("clip-a"), source_id_hash("clip-b"));
}

TEST(Ascf, DistinctParseErrors) {
  const auto good = encode_features(one_sample());

  auto bad_magic = good;
  bad_magic[0] = 'X';
  EXPECT_EQ(parse_kind(bad_magic), ParseError::Kind::BadMagic);

  auto bad_version = good;
  bad_version[4] = 2;
  EXPECT_EQ(parse_kind(bad_version), ParseError::Kind::BadVersion);

  auto bad_label = good;
  bad_label[24] = 4;
  EXPECT_EQ(parse_kind(bad_label), ParseError::Kind::LabelOutOfRange);

  auto trailing = good;
  trailing.push_back(0);
  EXPECT_EQ(parse_kind(trailing), ParseError::Kind::BadRecord);

  auto nan = good;
  nan[24 + 12 + 3] = 0x7f;
  nan[24 + 12 + 2] = 0xc0;
  EXPECT_EQ(parse_kind(nan), ParseError::Kind::NonFinite);
}

TEST(Ascf, TruncationReportsOffset) {
  const auto good = encode_features(one_sample());
  for (std::size_t cut : {std::size_t{2}, std::size_t{10}, std::size_t{24}, std::size_t{30}, good.size() - 1}) {
    std::vector<std::uint8_t> bytes(good.begin(), good.begin() + static_cast<std::ptrdiff_t>(cut));
    try {
      decode_features(bytes);
      FAIL() << "cut " << cut;
    } catch (const ParseError& e) {
      EXPECT_EQ(e.kind(), ParseError::Kind::Truncated);
      EXPECT_LE(e.offset(), cut);
    }
  }
  // The feature block of the only sample starts at byte 36.
  std::vector<std::uint8_t> mid(good.begin(), good.begin() + 40);
  try {
    decode_features(mid);
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 36u);
  }
}

TEST(Ascf, MissingFileIsIoError) {
  try {
    load_features("/nonexistent/dir/x.ascf");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.kind(), ParseError::Kind::Io);
  }
}

TEST(Synthetic, DefaultSpecShape) {
  const auto d = generate_synthetic(SyntheticSpec{});
  EXPECT_EQ(d.train.size(), 6u * 160);
  EXPECT_EQ(d.test.size(), 6u * 40);
  for (auto c : d.test.class_counts()) EXPECT_EQ(c, 40u);
  EXPECT_EQ(d.train.samples[0].features.rows(), 10);
  EXPECT_EQ(d.train.samples[0].features.cols(), 32);
  for (Index c = 0; c < 6; ++c) EXPECT_NEAR(d.prototypes.row(c).norm(), 1.0, 1e-12);
  EXPECT_NO_THROW(d.train.validate());
}

TEST(Synthetic, Deterministic) {
  SyntheticSpec spec;
  spec.samples_per_class = 20;
  const auto a = generate_synthetic(spec), b = generate_synthetic(spec);
  EXPECT_EQ(encode_features(a.train), encode_features(b.train));
  EXPECT_EQ(encode_features(a.test), encode_features(b.test));
  spec.seed = 1;
  EXPECT_NE(encode_features(generate_synthetic(spec).train), encode_features(a.train));
}

TEST(Synthetic, DegenerateSpecEqualsPrototype) {
  SyntheticSpec spec;
  spec.noise_sigma = 0.0;
  spec.convergence_rate = 1.0;
  spec.samples_per_class = 10;
  const auto d = generate_synthetic(spec);
  for (const auto* ds : {&d.train, &d.test}) {
    for (const auto& s : ds->samples) {
      for (Index n = 0; n < 10; ++n) {
        // float32 storage rounding only
        EXPECT_LT((s.features.row(n) - d.prototypes.row(s.label)).cwiseAbs().maxCoeff(), 1e-7);
      }
    }
    for (Index n = 0; n < 10; ++n) EXPECT_EQ(nearest_prototype_accuracy(*ds, d.prototypes, n), 1.0);
  }
}

TEST(Synthetic, EarlyLevelsAreHarder) {
  const auto d = generate_synthetic(SyntheticSpec{});
  Dataset all = d.train;
  all.samples.insert(all.samples.end(), d.test.samples.begin(), d.test.samples.end());
  std::vector<double> acc;
  for (Index n = 0; n < 10; ++n) acc.push_back(nearest_prototype_accuracy(all, d.prototypes, n));
  EXPECT_LT(acc.front(), acc.back());
  for (std::size_t n = 1; n < acc.size(); ++n) EXPECT_GE(acc[n] + 0.01, acc[n - 1]);
}

TEST(Synthetic, InvalidSpecs) {
  SyntheticSpec spec;
  spec.samples_per_class = 0;
  EXPECT_THROW(generate_synthetic(spec), ParameterError);
  spec = {};
  spec.noise_sigma = -1;
  EXPECT_THROW(generate_synthetic(spec), ParameterError);
  spec = {};
  spec.convergence_rate = 0;
  EXPECT_THROW(generate_synthetic(spec), ParameterError);
  spec = {};
  spec.ambiguity_pairs = {{0, 6}};
  EXPECT_THROW(generate_synthetic(spec), ParameterError);
  spec.ambiguity_pairs = {{0, 1}, {1, 2}};
  EXPECT_THROW(generate_synthetic(spec), ParameterError);
}
