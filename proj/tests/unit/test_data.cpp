#include <gtest/gtest.h>

#include <fstream>

#include "helpers.hpp"
#include "oracles.hpp"
#include "sdmae/data.hpp"
#include "sdmae/error.hpp"
#include "sdmae/png_io.hpp"
#include "sdmae/toy.hpp"

using namespace sdmae;
namespace fs = std::filesystem;
using testing_support::shared_toy;
using testing_support::TempDir;

namespace {

void copy_tree(const fs::path& from, const fs::path& to) {
  fs::copy(from, to, fs::copy_options::recursive);
}

}  // namespace

TEST(Toy, DatasetCounts) {
  const Dataset ds = load_dataset(shared_toy(), toy_preset());
  EXPECT_EQ(ds.train.size(), 8u);
  EXPECT_EQ(ds.test.size(), 4u);
  for (const auto& v : ds.train) {
    EXPECT_EQ(v.size(), 120u);
    EXPECT_FALSE(v.labels.has_value());
  }
  for (const auto& v : ds.test) {
    ASSERT_TRUE(v.labels.has_value());
    EXPECT_EQ(v.labels->size(), v.size());
    ASSERT_TRUE(v.pixel_masks.has_value());
  }
  EXPECT_TRUE(ds.warnings.empty());
}

TEST(Toy, EveryTestVideoHasNormalAndAbnormalSpans) {
  const Dataset ds = load_dataset(shared_toy(), toy_preset());
  for (const auto& v : ds.test) {
    const auto& l = *v.labels;
    EXPECT_GT(std::count(l.begin(), l.end(), 1), 0) << v.video_id;
    EXPECT_GT(std::count(l.begin(), l.end(), 0), 0) << v.video_id;
  }
}

TEST(Toy, LabelsMatchPixelMasks) {
  const Dataset ds = load_dataset(shared_toy(), toy_preset());
  for (const auto& v : ds.test)
    for (std::size_t t = 0; t < v.size(); ++t)
      EXPECT_EQ((*v.labels)[t], count_nonzero((*v.pixel_masks)[t]) > 0 ? 1 : 0) << v.video_id << " " << t;
}

TEST(Toy, SameSeedBitIdentical) {
  TempDir a("toya"), b("toyb");
  ToyParams p;
  p.train_videos = 2;
  p.test_videos = 2;
  p.frames_per_video = 40;
  generate_toy_dataset(a.path(), p, 11);
  generate_toy_dataset(b.path(), p, 11);
  EXPECT_EQ(oracle::hash_tree(a.path()), oracle::hash_tree(b.path()));
}

TEST(Toy, SeedChangesContentNotStructure) {
  TempDir a("toys1"), b("toys2");
  ToyParams p;
  p.train_videos = 2;
  p.test_videos = 1;
  p.frames_per_video = 40;
  generate_toy_dataset(a.path(), p, 1);
  generate_toy_dataset(b.path(), p, 2);
  std::vector<std::string> la, lb;
  for (const auto& e : fs::recursive_directory_iterator(a.path())) la.push_back(fs::relative(e.path(), a.path()).string());
  for (const auto& e : fs::recursive_directory_iterator(b.path())) lb.push_back(fs::relative(e.path(), b.path()).string());
  std::sort(la.begin(), la.end());
  std::sort(lb.begin(), lb.end());
  EXPECT_EQ(la, lb);
  EXPECT_NE(oracle::slurp(a / "train/train_01/000010.png"), oracle::slurp(b / "train/train_01/000010.png"));
}

TEST(Data, LoadingIsDeterministic) {
  const auto a = load_split(shared_toy() / "test", toy_preset());
  const auto b = load_split(shared_toy() / "test", toy_preset());
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t t = 0; t < a[i].size(); ++t) ASSERT_EQ(a[i].frames[t].pixels, b[i].frames[t].pixels);
}

TEST(Data, ResizesAndConvertsToConfig) {
  ExperimentConfig cfg = toy_preset();
  cfg.frame_height = 32;
  cfg.frame_width = 48;
  cfg.channels = 3;
  const auto videos = load_split(shared_toy() / "test", cfg);
  const Image& img = videos[0].frames[0].pixels;
  EXPECT_EQ(img.height(), 32);
  EXPECT_EQ(img.width(), 48);
  EXPECT_EQ(img.channels(), 3);
  for (double v : img.data()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Data, TrainLabelsAreIgnoredWithWarning) {
  TempDir dir("trainlabels");
  copy_tree(shared_toy(), dir.path());
  fs::create_directories(dir / "train_labels");
  write_labels(dir / "train_labels" / "train_01.txt", std::vector<int>(120, 0));
  const Dataset ds = load_dataset(dir.path(), toy_preset());
  ASSERT_EQ(ds.warnings.size(), 1u);
  for (const auto& v : ds.train) EXPECT_FALSE(v.labels.has_value());
}

TEST(Data, EmptyTestVideoNamesVideo) {
  TempDir dir("emptyvid");
  copy_tree(shared_toy(), dir.path());
  fs::create_directories(dir / "test" / "test_09");
  try {
    load_dataset(dir.path(), toy_preset());
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("test_09"), std::string::npos) << e.what();
  }
}

TEST(Data, LabelLengthMismatchNamesVideo) {
  TempDir dir("badlabels");
  copy_tree(shared_toy(), dir.path());
  write_labels(dir / "test_labels" / "test_02.txt", std::vector<int>(5, 0));
  try {
    load_dataset(dir.path(), toy_preset());
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("test_02"), std::string::npos) << e.what();
  }
}

TEST(Data, MissingSplitIsError) {
  TempDir dir("nosplit");
  EXPECT_THROW(load_dataset(dir.path(), toy_preset()), DataError);
}

TEST(Data, LabelsRoundTripAndRejectGarbage) {
  TempDir dir("labels");
  const std::vector<int> l{0, 1, 1, 0};
  write_labels(dir / "l.txt", l);
  EXPECT_EQ(read_labels(dir / "l.txt"), l);
  std::ofstream(dir / "bad.txt") << "0\n2\n";
  EXPECT_THROW(read_labels(dir / "bad.txt"), DataError);
}

TEST(EventBank, ToyBankShape) {
  const auto bank = load_event_bank(shared_toy() / "bank");
  EXPECT_GE(bank.size(), 4u);
  for (const auto& e : bank) {
    EXPECT_GE(e.size(), 8u);
    EXPECT_NO_THROW(validate_event(e));
  }
}

TEST(EventBank, EmptyMaskRejected) {
  auto bank = load_event_bank(shared_toy() / "bank");
  OverlayEvent e = bank.front();
  for (double& v : e.masks[0].data()) v = 0.0;
  EXPECT_THROW(validate_event(e), DataError);
}

TEST(EventBank, CountMismatchNamesEvent) {
  OverlayEvent e = load_event_bank(shared_toy() / "bank").front();
  e.masks.pop_back();
  try {
    validate_event(e);
    FAIL();
  } catch (const DataError& err) {
    EXPECT_NE(std::string(err.what()).find(e.event_id), std::string::npos);
  }
}

TEST(EventBank, MissingMasksDirectory) {
  TempDir dir("nomasks");
  copy_tree(shared_toy() / "bank", dir.path());
  const auto first = *fs::directory_iterator(dir.path());
  fs::remove_all(first.path() / "masks");
  EXPECT_THROW(load_event_bank(dir.path()), DataError);
}
