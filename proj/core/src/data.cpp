#include "sdmae/data.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "sdmae/error.hpp"
#include "sdmae/png_io.hpp"

namespace fs = std::filesystem;

namespace sdmae {

std::string frame_file_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%06d.png", index);
  return buf;
}

std::vector<fs::path> list_png(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".png") out.push_back(entry.path());
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

std::vector<fs::path> list_subdirs(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_directory()) out.push_back(entry.path());
  std::sort(out.begin(), out.end());
  return out;
}

Image to_binary(const Image& img) {
  Image single = img.channels() == 1 ? img : slice_channels(img, 0, 1);
  for (double& v : single.data()) v = v > 0.5 ? 1.0 : 0.0;
  return single;
}

Frame load_frame(const fs::path& file, int index, const ExperimentConfig& cfg) {
  Image img = read_png(file);
  img = convert_channels(img, cfg.channels);
  img = resize_bilinear(img, cfg.frame_height, cfg.frame_width);
  for (double& v : img.data()) v = std::clamp(v, 0.0, 1.0);
  return Frame{std::move(img), index};
}

}  // namespace

std::vector<VideoSequence> load_split(const fs::path& split_dir, const ExperimentConfig& cfg) {
  if (!fs::is_directory(split_dir)) throw DataError("missing split directory " + split_dir.string());
  std::vector<VideoSequence> videos;
  for (const auto& dir : list_subdirs(split_dir)) {
    VideoSequence video;
    video.video_id = dir.filename().string();
    const auto files = list_png(dir);
    if (files.empty())
      throw DataError("video '" + video.video_id + "' in " + split_dir.string() + " has no frames");
    video.frames.reserve(files.size());
    for (std::size_t i = 0; i < files.size(); ++i)
      video.frames.push_back(load_frame(files[i], static_cast<int>(i), cfg));
    videos.push_back(std::move(video));
  }
  if (videos.empty()) throw DataError("split directory " + split_dir.string() + " has no videos");
  return videos;
}

std::vector<int> read_labels(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read labels " + path.string());
  std::vector<int> labels;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line == "0") {
      labels.push_back(0);
    } else if (line == "1") {
      labels.push_back(1);
    } else {
      throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected 0 or 1, got '" +
                      line + "'");
    }
  }
  return labels;
}

void write_labels(const fs::path& path, const std::vector<int>& labels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  for (int v : labels) out << v << '\n';
}

Dataset load_dataset(const fs::path& root, const ExperimentConfig& cfg) {
  Dataset ds;
  ds.train = load_split(root / "train", cfg);
  ds.test = load_split(root / "test", cfg);

  const fs::path train_labels = root / "train_labels";
  if (fs::is_directory(train_labels)) {
    ds.warnings.push_back("ignoring " + train_labels.string() +
                          ": training videos are treated as unlabeled");
  }

  const fs::path label_dir = root / "test_labels";
  if (!fs::is_directory(label_dir)) throw DataError("missing label directory " + label_dir.string());
  const fs::path mask_dir = root / "test_masks";
  for (auto& video : ds.test) {
    const fs::path label_file = label_dir / (video.video_id + ".txt");
    if (!fs::exists(label_file))
      throw DataError("video '" + video.video_id + "' has no label file " + label_file.string());
    auto labels = read_labels(label_file);
    if (labels.size() != video.frames.size())
      throw DataError("video '" + video.video_id + "': " + std::to_string(labels.size()) +
                      " labels for " + std::to_string(video.frames.size()) + " frames");
    video.labels = std::move(labels);

    const fs::path masks = mask_dir / video.video_id;
    if (fs::is_directory(masks)) {
      const auto files = list_png(masks);
      if (files.size() != video.frames.size())
        throw DataError("video '" + video.video_id + "': " + std::to_string(files.size()) +
                        " pixel masks for " + std::to_string(video.frames.size()) + " frames");
      std::vector<BinaryMap> maps;
      maps.reserve(files.size());
      for (const auto& f : files)
        maps.push_back(to_binary(resize_nearest(read_png(f), cfg.frame_height, cfg.frame_width)));
      video.pixel_masks = std::move(maps);
    }
  }
  return ds;
}

void validate_event(const OverlayEvent& event) {
  if (event.clip.empty()) throw DataError("event '" + event.event_id + "' has no frames");
  if (event.clip.size() != event.masks.size())
    throw DataError("event '" + event.event_id + "': " + std::to_string(event.clip.size()) +
                    " frames but " + std::to_string(event.masks.size()) + " masks");
  for (std::size_t i = 0; i < event.clip.size(); ++i) {
    if (!event.clip[i].same_spatial(event.masks[i]) || event.masks[i].channels() != 1)
      throw DataError("event '" + event.event_id + "': mask " + std::to_string(i) +
                      " does not match its frame");
    for (double v : event.masks[i].data())
      if (v != 0.0 && v != 1.0)
        throw DataError("event '" + event.event_id + "': mask values must be 0 or 1");
    if (count_nonzero(event.masks[i]) == 0)
      throw DataError("event '" + event.event_id + "': mask " + std::to_string(i) +
                      " is empty");
  }
}

std::vector<OverlayEvent> load_event_bank(const fs::path& root) {
  if (!fs::is_directory(root)) throw DataError("missing event bank " + root.string());
  std::vector<OverlayEvent> bank;
  for (const auto& dir : list_subdirs(root)) {
    OverlayEvent event;
    event.event_id = dir.filename().string();
    const fs::path frames = dir / "frames";
    const fs::path masks = dir / "masks";
    if (!fs::is_directory(frames))
      throw DataError("event '" + event.event_id + "': missing frames directory");
    if (!fs::is_directory(masks))
      throw DataError("event '" + event.event_id + "': missing masks directory");
    for (const auto& f : list_png(frames)) event.clip.push_back(read_png(f));
    for (const auto& f : list_png(masks)) event.masks.push_back(to_binary(read_png(f)));
    validate_event(event);
    bank.push_back(std::move(event));
  }
  if (bank.empty()) throw DataError("event bank " + root.string() + " is empty");
  return bank;
}

}  // namespace sdmae
