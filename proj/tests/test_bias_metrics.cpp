#include <gtest/gtest.h>

#include <cmath>

#include "fixtures.hpp"
#include "tda/bias_metrics.hpp"

using namespace tda;

namespace {

Manifest small_manifest() {
  // 10 records: 6 of class a (3 framed, one of them also ruler), 4 of class b.
  return parse_manifest(
      "# classes: a,b\n"
      "sample_id,class_label,artifacts\n"
      "s0,a,frame\n"
      "s1,a,frame;ruler\n"
      "s2,a, Frame \n"
      "s3,a,\n"
      "s4,a,ruler\n"
      "s5,a,\n"
      "s6,b,ruler\n"
      "s7,b,\n"
      "s8,b,\n"
      "s9,b,frame\n");
}

// Brute-force count directly over the records.
std::size_t brute_count(const Manifest& m, const std::string& cls, const std::string& tag) {
  std::size_t n = 0;
  for (const auto& r : m.records())
    if (r.class_label == cls) {
      if (tag == "none" ? r.artifacts.empty() : r.artifacts.count(tag) > 0) ++n;
    }
  return n;
}

const BiasStatsRow& row(const BiasReport& rep, const std::string& tag) {
  for (const auto& r : rep.rows)
    if (r.artifact == tag) return r;
  throw std::runtime_error("no row " + tag);
}

}  // namespace

TEST(ArtifactCardinality, MatchesBruteForceCount) {
  const auto m = small_manifest();
  EXPECT_EQ(artifact_cardinality(m, "a", "frame"), 3u);
  for (const std::string cls : {"a", "b"})
    for (const std::string tag : {"frame", "ruler", "none", "hair"})
      EXPECT_EQ(artifact_cardinality(m, cls, tag), brute_count(m, cls, tag)) << cls << "/" << tag;
}

TEST(ArtifactCardinality, AbsentTagIsZero) {
  EXPECT_EQ(artifact_cardinality(small_manifest(), "b", "glasses"), 0u);
}

TEST(ArtifactCardinality, UnknownClassIsDeclaredClassError) {
  EXPECT_THROW(artifact_cardinality(small_manifest(), "c", "frame"), ValidationError);
}

TEST(ArtifactCardinality, EmptyManifestIsZero) {
  EXPECT_EQ(artifact_cardinality(Manifest{}, "anything", "frame"), 0u);
}

TEST(ArtifactCardinality, SkinLesionMalignantFrame) {
  const auto m = parse_manifest(fixtures::skin_lesion_csv());
  EXPECT_EQ(artifact_cardinality(m, "malignant", "frame"), 521u);
}

TEST(ArtifactRatio, ReferenceValues) {
  const auto t1 = parse_manifest(fixtures::skin_lesion_csv());
  EXPECT_NEAR(artifact_ratio(t1, "benign", "frame"), 0.0520, 0.00005);
  const auto t2 = parse_manifest(fixtures::face_csv());
  EXPECT_NEAR(artifact_ratio(t2, "male", "glasses"), 0.1119, 0.00005);
}

TEST(ArtifactRatio, SaturatesAtOne) {
  const auto m = parse_manifest("sample_id,class_label,artifacts\nx,a,frame\ny,a,frame\nz,b,\n");
  EXPECT_EQ(artifact_ratio(m, "a", "frame"), 1.0);
}

TEST(ArtifactRatio, ZeroRecordsOfClassIsDivisionError) {
  const auto m = parse_manifest("# classes: a,b\nsample_id,class_label,artifacts\nx,a,frame\n");
  try {
    artifact_ratio(m, "b", "frame");
    FAIL() << "expected an error";
  } catch (const ComputationError& e) {
    EXPECT_NE(std::string(e.what()).find("'b'"), std::string::npos);
  }
}

TEST(ArtifactRatio, ScaleCovariantUnderDuplication) {
  const auto m = small_manifest();
  Manifest doubled({"a", "b"}, {}, {});
  doubled.declare_classes({"a", "b"});
  for (const auto& r : m.records()) {
    doubled.add(r);
    auto copy = r;
    copy.sample_id += "_dup";
    doubled.add(copy);
  }
  for (const std::string tag : {"frame", "ruler", "none"})
    for (const std::string cls : {"a", "b"})
      EXPECT_DOUBLE_EQ(artifact_ratio(doubled, cls, tag), artifact_ratio(m, cls, tag));
}

TEST(ClassRatio, ReferenceValues) {
  EXPECT_NEAR(class_ratio(0.2605, 0.0520).value, 5.01, 0.02);
  EXPECT_NEAR(class_ratio(0.1119, 0.0144).value, 7.79, 0.03);
}

TEST(ClassRatio, SymmetricInputsGiveOne) {
  for (double x : {0.001, 0.25, 0.5, 1.0}) EXPECT_EQ(class_ratio(x, x).value, 1.0);
}

TEST(ClassRatio, InfiniteAndUndefinedAreFlagged) {
  const auto inf = class_ratio(0.3, 0.0);
  EXPECT_EQ(inf.kind, ClassRatio::Kind::infinite);
  EXPECT_EQ(inf.display(), "inf");
  const auto undef = class_ratio(0.0, 0.0);
  EXPECT_EQ(undef.kind, ClassRatio::Kind::undefined);
  EXPECT_EQ(undef.display(), "undefined");
}

TEST(ClassRatio, ReciprocalProductIsOne) {
  auto rng = make_rng(17);
  for (int i = 0; i < 200; ++i) {
    const double a = rng.uniform(0.01, 1.0), b = rng.uniform(0.01, 1.0);
    EXPECT_NEAR(class_ratio(a, b).value * class_ratio(b, a).value, 1.0, 1e-12);
  }
}

TEST(ClassRatio, RejectsOutOfRange) {
  EXPECT_THROW(class_ratio(1.2, 0.5), ValidationError);
  EXPECT_THROW(class_ratio(0.5, -0.1), ValidationError);
}

TEST(BiasReport, SkinLesionTable) {
  const auto rep = bias_report(parse_manifest(fixtures::skin_lesion_csv()));
  EXPECT_EQ(rep.total_c1, 2000u);
  EXPECT_EQ(rep.total_c2, 2001u);
  struct Expect {
    const char* tag;
    double ben, mal, q;
  };
  for (const auto& e : {Expect{"frame", 0.0520, 0.2605, 5.01}, Expect{"hair", 0.4788, 0.4340, 0.91},
                        Expect{"ruler", 0.2109, 0.2930, 1.39}, Expect{"others", 0.2129, 0.4090, 1.92},
                        Expect{"none", 0.2689, 0.1340, 0.50}}) {
    const auto& r = row(rep, e.tag);
    EXPECT_NEAR(r.ratio_c2, e.ben, 0.0001) << e.tag;
    EXPECT_NEAR(r.ratio_c1, e.mal, 0.0001) << e.tag;
    EXPECT_NEAR(r.class_ratio.value, e.q, 0.02) << e.tag;
  }
  // Tag counts overlap: they add to more than the class totals.
  std::size_t tagged_sum = 0;
  for (const auto& r : rep.rows)
    if (r.artifact != "none") tagged_sum += r.count_c2;
  EXPECT_GT(tagged_sum, rep.total_c2 - row(rep, "none").count_c2);
}

TEST(BiasReport, FaceTable) {
  const auto rep = bias_report(parse_manifest(fixtures::face_csv()));
  EXPECT_NEAR(row(rep, "glasses").ratio_c1, 0.1119, 0.0001);
  EXPECT_NEAR(row(rep, "glasses").ratio_c2, 0.0144, 0.0001);
  EXPECT_NEAR(row(rep, "glasses").class_ratio.value, 7.79, 0.02);
  EXPECT_NEAR(row(rep, "none").class_ratio.value, 0.90, 0.02);
  EXPECT_EQ(rep.total_c1, 23766u);
  EXPECT_EQ(rep.total_c2, 23243u);
}

TEST(BiasReport, NoneRowCountsEmptyArtifactSets) {
  const auto m = small_manifest();
  const auto rep = bias_report(m);
  EXPECT_EQ(row(rep, "none").count_c1, 2u);
  EXPECT_EQ(row(rep, "none").count_c2, 2u);
  EXPECT_EQ(rep.rows.back().artifact, "none");
  EXPECT_EQ(rep.total_c1 + rep.total_c2, m.records().size());
}

TEST(BiasReport, EmptyManifestFlagged) {
  const auto rep = bias_report(Manifest{});
  EXPECT_TRUE(rep.empty_manifest);
  EXPECT_TRUE(rep.rows.empty());
  EXPECT_EQ(rep.total_c1, 0u);
  EXPECT_EQ(rep.total_c2, 0u);
}

TEST(BiasReport, MoreThanTwoClassesRejected) {
  const auto m = parse_manifest("sample_id,class_label,artifacts\na,x,\nb,y,\nc,z,\n");
  try {
    bias_report(m);
    FAIL();
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("x"), std::string::npos);
    EXPECT_NE(msg.find("z"), std::string::npos);
  }
}

TEST(BiasReport, TextRenderingRoundsForDisplay) {
  const auto txt = render_text(bias_report(parse_manifest(fixtures::skin_lesion_csv())));
  EXPECT_NE(txt.find("26.05%"), std::string::npos);
  EXPECT_NE(txt.find("5.20%"), std::string::npos);
  EXPECT_NE(txt.find("5.01"), std::string::npos);
  const auto j = to_json(bias_report(parse_manifest(fixtures::skin_lesion_csv())));
  EXPECT_DOUBLE_EQ(j["rows"][0]["ratio_c1"].get<double>(), 521.0 / 2000.0);
}

TEST(ManifestParse, TagsNormalizedAndVocabularyEnforced) {
  const auto m = parse_manifest("# artifacts: frame\nsample_id,class_label,artifacts\nx,a, FRAME ;\ny,b,\n");
  EXPECT_EQ(m.records()[0].artifacts, std::set<std::string>{"frame"});
  EXPECT_THROW(parse_manifest("# artifacts: frame\nsample_id,class_label,artifacts\nx,a,hair\n"),
               ValidationError);
}

TEST(ManifestParse, ErrorsNameTheLine) {
  try {
    parse_manifest("sample_id,class_label,artifacts\nx,a,frame\ny,b\n");
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_manifest("id,label\n"), ValidationError);
  EXPECT_THROW(parse_manifest("sample_id,class_label,artifacts\nx,a,\nx,b,\n"), ValidationError);
  EXPECT_THROW(parse_manifest("# classes: a,b\nsample_id,class_label,artifacts\nx,c,\n"), ValidationError);
}

TEST(ManifestParse, FormatRoundTrip) {
  const auto m = small_manifest();
  const auto again = parse_manifest(format_manifest(m));
  EXPECT_EQ(again.classes(), m.classes());
  ASSERT_EQ(again.records().size(), m.records().size());
  for (std::size_t i = 0; i < m.records().size(); ++i) {
    EXPECT_EQ(again.records()[i].sample_id, m.records()[i].sample_id);
    EXPECT_EQ(again.records()[i].artifacts, m.records()[i].artifacts);
  }
}
