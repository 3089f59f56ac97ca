#ifndef PAWGAN_DATASET_HPP
#define PAWGAN_DATASET_HPP

// Manifest-based dataset handling: ingestion, stratified subsetting, image
// resizing and real/synthetic merging. Manifests persist as line-delimited
// text with a small header (class map + resolution) so they stay diff-able.

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pawgan/image.hpp"
#include "pawgan/rng.hpp"
#include "pawgan/types.hpp"

namespace pawgan {

struct Record {
  std::string image_ref;  // POSIX-style path, relative to the manifest's base_dir
  int class_id = 0;       // 1..class_count
  Split split = Split::train;
  Provenance provenance = Provenance::real;
  std::optional<LandmarkSet> landmarks;
  std::optional<CropBox> source_crop;
};

struct DatasetManifest {
  std::vector<Record> records;
  int class_count = 0;
  std::vector<std::string> class_names;
  int width = 0, height = 0;  // 0,0 while images are still at native size
  fs::path base_dir;          // runtime only; not persisted

  fs::path resolve(const Record& r) const { return base_dir / fs::path(r.image_ref); }

  const std::string& class_name(int class_id) const {
    check(class_id >= 1 && class_id <= class_count, "class id out of range");
    return class_names[static_cast<size_t>(class_id) - 1];
  }

  std::vector<int> per_class_counts(Split split) const {
    std::vector<int> counts(static_cast<size_t>(class_count), 0);
    for (const auto& r : records)
      if (r.split == split) ++counts[static_cast<size_t>(r.class_id) - 1];
    return counts;
  }

  size_t count_split(Split split) const {
    size_t n = 0;
    for (const auto& r : records)
      if (r.split == split) ++n;
    return n;
  }

  std::vector<const Record*> split_records(Split split) const {
    std::vector<const Record*> out;
    for (const auto& r : records)
      if (r.split == split) out.push_back(&r);
    return out;
  }

  void validate() const {
    check(class_count >= 1, "manifest: class_count must be >= 1");
    check(static_cast<int>(class_names.size()) == class_count,
          "manifest: class name list does not match class_count");
    std::set<std::string> seen;
    for (const auto& r : records) {
      check(r.class_id >= 1 && r.class_id <= class_count,
            "manifest: class_id " + std::to_string(r.class_id) + " outside [1, " +
                std::to_string(class_count) + "] for " + r.image_ref);
      check(seen.insert(r.image_ref).second, "manifest: duplicate image_ref " + r.image_ref);
      if (r.provenance == Provenance::synthetic)
        check(r.split == Split::train,
              "manifest: synthetic record in " + to_string(r.split) + " split: " + r.image_ref);
      if (r.landmarks) check(r.landmarks->all_finite(), "manifest: non-finite landmarks: " + r.image_ref);
    }
  }
};

// ------------------------------------------------------------- persistence

namespace detail {
inline std::string landmarks_field(const LandmarkSet& l) {
  std::string out;
  for (int i = 0; i < kLandmarkCount; ++i) {
    if (i) out += ';';
    out += fmt_real(l.points[i].x) + "," + fmt_real(l.points[i].y);
  }
  return out;
}

inline LandmarkSet parse_landmarks_field(std::string_view field) {
  auto pts = split_char(field, ';');
  check(pts.size() == kLandmarkCount, "manifest: landmark field must have 7 points");
  LandmarkSet l;
  for (int i = 0; i < kLandmarkCount; ++i) {
    auto xy = split_char(pts[static_cast<size_t>(i)], ',');
    check(xy.size() == 2, "manifest: bad landmark pair");
    l.points[static_cast<size_t>(i)] = {parse_real(xy[0]), parse_real(xy[1])};
  }
  return l;
}
}  // namespace detail

inline std::string manifest_to_text(const DatasetManifest& m) {
  m.validate();
  std::string out = "pawgan.manifest 1\n";
  out += "class_count " + std::to_string(m.class_count) + "\n";
  for (int i = 0; i < m.class_count; ++i) {
    const std::string& name = m.class_names[static_cast<size_t>(i)];
    check(name.find_first_of(" \t\n") == std::string::npos, "class name contains whitespace: " + name);
    out += "class " + std::to_string(i + 1) + " " + name + "\n";
  }
  out += "resolution " + std::to_string(m.width) + " " + std::to_string(m.height) + "\n";
  out += "records " + std::to_string(m.records.size()) + "\n";
  for (const auto& r : m.records) {
    check(r.image_ref.find_first_of(" \t\n") == std::string::npos,
          "image_ref contains whitespace: " + r.image_ref);
    out += "r " + r.image_ref + " " + std::to_string(r.class_id) + " " + to_string(r.split) + " " +
           to_string(r.provenance);
    if (r.landmarks) out += " L " + detail::landmarks_field(*r.landmarks);
    if (r.source_crop)
      out += " C " + std::to_string(r.source_crop->x0) + " " + std::to_string(r.source_crop->y0) +
             " " + std::to_string(r.source_crop->x1) + " " + std::to_string(r.source_crop->y1);
    out += "\n";
  }
  return out;
}

inline DatasetManifest manifest_from_text(const std::string& text, const fs::path& base_dir) {
  DatasetManifest m;
  m.base_dir = base_dir;
  auto lines = split_char(text, '\n');
  size_t i = 0;
  auto next = [&]() -> std::vector<std::string> {
    while (i < lines.size() && lines[i].empty()) ++i;
    check(i < lines.size(), "manifest: unexpected end of file");
    return split_ws(lines[i++]);
  };
  auto header = next();
  check(header.size() == 2 && header[0] == "pawgan.manifest" && header[1] == "1",
        "manifest: bad header");
  auto cc = next();
  check(cc.size() == 2 && cc[0] == "class_count", "manifest: expected class_count");
  m.class_count = static_cast<int>(parse_int(cc[1]));
  m.class_names.resize(static_cast<size_t>(m.class_count));
  for (int k = 0; k < m.class_count; ++k) {
    auto cl = next();
    check(cl.size() == 3 && cl[0] == "class", "manifest: expected class line");
    int id = static_cast<int>(parse_int(cl[1]));
    check(id == k + 1, "manifest: class ids must be 1..C in order");
    m.class_names[static_cast<size_t>(k)] = cl[2];
  }
  auto res = next();
  check(res.size() == 3 && res[0] == "resolution", "manifest: expected resolution");
  m.width = static_cast<int>(parse_int(res[1]));
  m.height = static_cast<int>(parse_int(res[2]));
  auto rc = next();
  check(rc.size() == 2 && rc[0] == "records", "manifest: expected record count");
  size_t n = static_cast<size_t>(parse_int(rc[1]));
  m.records.reserve(n);
  for (size_t k = 0; k < n; ++k) {
    auto f = next();
    check(f.size() >= 5 && f[0] == "r", "manifest: bad record line");
    Record r;
    r.image_ref = f[1];
    r.class_id = static_cast<int>(parse_int(f[2]));
    r.split = split_from_string(f[3]);
    r.provenance = provenance_from_string(f[4]);
    size_t pos = 5;
    while (pos < f.size()) {
      if (f[pos] == "L") {
        check(pos + 1 < f.size(), "manifest: dangling landmark marker");
        r.landmarks = detail::parse_landmarks_field(f[pos + 1]);
        pos += 2;
      } else if (f[pos] == "C") {
        check(pos + 4 < f.size(), "manifest: dangling crop marker");
        r.source_crop = CropBox{static_cast<int>(parse_int(f[pos + 1])),
                                static_cast<int>(parse_int(f[pos + 2])),
                                static_cast<int>(parse_int(f[pos + 3])),
                                static_cast<int>(parse_int(f[pos + 4]))};
        pos += 5;
      } else {
        throw Error("manifest: unknown record field '" + f[pos] + "'");
      }
    }
    m.records.push_back(std::move(r));
  }
  m.validate();
  return m;
}

// Saving re-relativizes image refs against the manifest's own directory, so
// a copied output tree keeps working and hashes identically.
inline void save_manifest(const DatasetManifest& m, const fs::path& path) {
  DatasetManifest copy = m;
  fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
  fs::create_directories(dir);
  for (auto& r : copy.records) {
    fs::path abs = m.resolve(r);
    r.image_ref = fs::relative(abs, dir).generic_string();
  }
  copy.base_dir = dir;
  write_text_file(path, manifest_to_text(copy));
}

inline DatasetManifest load_manifest(const fs::path& path) {
  check(fs::exists(path), "manifest not found: " + path.string());
  return manifest_from_text(read_text_file(path),
                            path.has_parent_path() ? path.parent_path() : fs::path("."));
}

// --------------------------------------------------------------- ingestion

enum class DirectoryLayout { class_per_folder, annotation_file };

struct IngestResult {
  DatasetManifest manifest;
  // (path, reason) for files that did not decode; reported, never silent.
  std::vector<std::pair<std::string, std::string>> skipped;
};

namespace detail {

inline void ingest_class_folder(const fs::path& class_dir, int class_id, Split split,
                                const fs::path& base, IngestResult& out) {
  for (const auto& p : list_dir_sorted(class_dir)) {
    if (!fs::is_regular_file(p) || !is_supported_image_ext(p)) continue;
    try {
      load_image(p);  // decodability gate
    } catch (const DecodeError& e) {
      out.skipped.emplace_back(p.string(), e.what());
      continue;
    }
    Record r;
    r.image_ref = fs::relative(p, base).generic_string();
    r.class_id = class_id;
    r.split = split;
    r.provenance = Provenance::real;
    out.manifest.records.push_back(std::move(r));
  }
}

// Class name for an Oxford-style file stem: strip the trailing _<number>.
inline std::string stem_class_name(const std::string& stem) {
  auto pos = stem.rfind('_');
  check(pos != std::string::npos && pos + 1 < stem.size(), "annotation stem without _<n>: " + stem);
  return stem.substr(0, pos);
}

}  // namespace detail

// Builds a manifest from a directory tree. class-per-folder expects
// root/<class>/img... or root/{train,test,val}/<class>/img...; class ids are
// assigned by sorted class-name order. annotation_file expects the
// Oxford-IIIT layout: root/images plus root/annotations/{trainval,test}.txt.
inline IngestResult ingest_directory(const fs::path& root, DirectoryLayout layout) {
  check(fs::exists(root) && fs::is_directory(root), "ingest: root is not a directory: " + root.string());
  IngestResult out;
  out.manifest.base_dir = root;

  if (layout == DirectoryLayout::class_per_folder) {
    std::vector<std::pair<fs::path, Split>> class_roots;
    bool split_dirs = fs::exists(root / "train") && fs::is_directory(root / "train");
    if (split_dirs) {
      for (auto [name, split] :
           {std::pair{"train", Split::train}, {"test", Split::test}, {"val", Split::val}}) {
        if (fs::exists(root / name)) class_roots.emplace_back(root / name, split);
      }
    } else {
      class_roots.emplace_back(root, Split::train);
    }
    std::set<std::string> names;
    for (const auto& [r, split] : class_roots)
      for (const auto& d : list_dir_sorted(r))
        if (fs::is_directory(d)) names.insert(d.filename().string());
    check(!names.empty(), "ingest: no class folders under " + root.string());
    out.manifest.class_names.assign(names.begin(), names.end());
    out.manifest.class_count = static_cast<int>(names.size());
    for (const auto& [r, split] : class_roots) {
      for (const auto& d : list_dir_sorted(r)) {
        if (!fs::is_directory(d)) continue;
        int class_id = 1 + static_cast<int>(std::distance(
                               names.begin(), names.find(d.filename().string())));
        detail::ingest_class_folder(d, class_id, split, root, out);
      }
    }
  } else {
    fs::path images = root / "images";
    fs::path ann = root / "annotations";
    check(fs::exists(images) && fs::exists(ann),
          "ingest: annotation-file layout needs images/ and annotations/ under " + root.string());
    std::map<std::string, int> class_ids;  // name -> declared id
    auto parse_split_file = [&](const fs::path& file, Split split) {
      if (!fs::exists(file)) return;
      for (const auto& line : split_char(read_text_file(file), '\n')) {
        if (line.empty() || line[0] == '#') continue;
        auto f = split_ws(line);
        check(f.size() >= 2, "ingest: bad annotation line: " + line);
        std::string stem = f[0];
        int class_id = static_cast<int>(parse_int(f[1]));
        std::string cname = detail::stem_class_name(stem);
        auto [it, inserted] = class_ids.emplace(cname, class_id);
        check(it->second == class_id, "ingest: inconsistent class id for " + cname);
        fs::path img;
        for (const char* ext : {".jpg", ".jpeg", ".png", ".ppm"}) {
          fs::path cand = images / (stem + ext);
          if (fs::exists(cand)) { img = cand; break; }
        }
        if (img.empty()) {
          out.skipped.emplace_back((images / stem).string(), "image file missing");
          continue;
        }
        try {
          load_image(img);
        } catch (const DecodeError& e) {
          out.skipped.emplace_back(img.string(), e.what());
          continue;
        }
        Record r;
        r.image_ref = fs::relative(img, root).generic_string();
        r.class_id = class_id;
        r.split = split;
        r.provenance = Provenance::real;
        out.manifest.records.push_back(std::move(r));
      }
    };
    parse_split_file(ann / "trainval.txt", Split::train);
    parse_split_file(ann / "test.txt", Split::test);
    check(!class_ids.empty(), "ingest: no usable annotation lines under " + ann.string());
    int max_id = 0;
    for (const auto& [name, id] : class_ids) max_id = std::max(max_id, id);
    out.manifest.class_count = max_id;
    out.manifest.class_names.assign(static_cast<size_t>(max_id), "");
    for (const auto& [name, id] : class_ids)
      out.manifest.class_names[static_cast<size_t>(id) - 1] = name;
    for (size_t i = 0; i < out.manifest.class_names.size(); ++i)
      check(!out.manifest.class_names[i].empty(),
            "ingest: class id " + std::to_string(i + 1) + " never appears in annotations");
  }

  check(!out.manifest.records.empty(), "ingest: no decodable images under " + root.string());
  out.manifest.validate();
  return out;
}

// --------------------------------------------------------------- subsetting

// Per class, keeps floor(fraction * n_train) records, chosen by seeded
// shuffle; the selection keeps the original record order and every non-train
// split passes through untouched.
inline DatasetManifest stratified_subset(const DatasetManifest& m, double fraction, uint64_t seed) {
  check(fraction > 0.0 && fraction <= 1.0, "subset: fraction must be in (0,1]");
  auto counts = m.per_class_counts(Split::train);
  std::vector<std::vector<size_t>> per_class_idx(static_cast<size_t>(m.class_count));
  for (size_t i = 0; i < m.records.size(); ++i)
    if (m.records[i].split == Split::train)
      per_class_idx[static_cast<size_t>(m.records[i].class_id) - 1].push_back(i);

  std::set<size_t> selected;
  Rng rng(seed, /*stream=*/0x5742);
  for (int c = 0; c < m.class_count; ++c) {
    size_t n = per_class_idx[static_cast<size_t>(c)].size();
    size_t keep = static_cast<size_t>(std::floor(fraction * static_cast<double>(n)));
    check(keep >= 1, "subset: fraction " + fmt_real(fraction) + " empties class '" +
                         m.class_names[static_cast<size_t>(c)] + "' (" + std::to_string(n) +
                         " train records)");
    auto idx = per_class_idx[static_cast<size_t>(c)];
    rng.shuffle(idx);
    idx.resize(keep);
    selected.insert(idx.begin(), idx.end());
  }

  DatasetManifest out = m;
  out.records.clear();
  for (size_t i = 0; i < m.records.size(); ++i) {
    if (m.records[i].split != Split::train || selected.count(i)) out.records.push_back(m.records[i]);
  }
  out.validate();
  return out;
}

// ----------------------------------------------------------------- resizing

struct ResizeOptions {
  bool letterbox = false;   // preserve aspect, pad with black
  bool reencode = true;     // false: pass already-correct files through untouched
};

inline DatasetManifest resize_images(const DatasetManifest& m, int out_w, int out_h,
                                     const fs::path& out_dir, ResizeOptions opts = {}) {
  check(out_w > 0 && out_h > 0, "resize: size must be positive");
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  check(!ec && fs::is_directory(out_dir), "resize: cannot create out_dir " + out_dir.string());

  DatasetManifest out = m;
  out.base_dir = out_dir;
  out.width = out_w;
  out.height = out_h;

  parallel_for(m.records.size(), [&](size_t i) {
    const Record& src = m.records[i];
    fs::path in_path = m.resolve(src);
    Record& dst = out.records[i];
    char name[32];
    std::snprintf(name, sizeof(name), "img_%06zu.ppm", i);

    std::vector<uint8_t> raw = read_binary_file(in_path);
    ImageU8 img = decode_image(raw, in_path.string());
    double sx = static_cast<double>(out_w) / img.width;
    double sy = static_cast<double>(out_h) / img.height;
    double off_x = 0, off_y = 0;

    if (!opts.reencode && img.width == out_w && img.height == out_h) {
      // byte-identical pass-through
      fs::path dst_path = out_dir / (fs::path(name).stem().string() +
                                     in_path.extension().string());
      write_binary_file(dst_path, raw.data(), raw.size());
      dst.image_ref = fs::relative(dst_path, out_dir).generic_string();
      return;
    }

    ImageU8 resized;
    if (opts.letterbox && img.width * out_h != img.height * out_w) {
      double s = std::min(sx, sy);
      int rw = std::max(1, static_cast<int>(std::lround(img.width * s)));
      int rh = std::max(1, static_cast<int>(std::lround(img.height * s)));
      ImageU8 inner = resize_bilinear(img, rw, rh);
      resized = ImageU8(out_w, out_h, img.channels);
      int ox = (out_w - rw) / 2, oy = (out_h - rh) / 2;
      for (int y = 0; y < rh; ++y)
        for (int x = 0; x < rw; ++x)
          for (int c = 0; c < img.channels; ++c)
            resized.at(x + ox, y + oy, c) = inner.at(x, y, c);
      sx = sy = s;
      off_x = ox;
      off_y = oy;
    } else {
      resized = resize_bilinear(img, out_w, out_h);
    }
    fs::path dst_path = out_dir / name;
    save_image(dst_path, resized);
    dst.image_ref = name;
    if (src.landmarks) {
      LandmarkSet scaled = *src.landmarks;
      for (auto& p : scaled.points) {
        p.x = p.x * sx + off_x;
        p.y = p.y * sy + off_y;
      }
      dst.landmarks = scaled;
    }
  });

  out.validate();
  return out;
}

// ------------------------------------------------------------------- merge

// Union of real and synthetic records. Synthetic input must be train-only
// and is optionally capped per class; test/val records of `real` are
// guaranteed to pass through untouched.
inline DatasetManifest merge(const DatasetManifest& real, const DatasetManifest& synthetic,
                             std::optional<int> per_class_cap = std::nullopt) {
  check(real.class_count == synthetic.class_count, "merge: class_count mismatch");
  check(real.class_names == synthetic.class_names, "merge: class name map mismatch");
  if (per_class_cap) check(*per_class_cap >= 0, "merge: negative per_class_cap");

  DatasetManifest out = real;
  std::vector<int> taken(static_cast<size_t>(real.class_count), 0);
  for (const auto& r : synthetic.records) {
    check(r.provenance == Provenance::synthetic,
          "merge: synthetic manifest contains a real record: " + r.image_ref);
    check(r.split == Split::train,
          "merge: synthetic record labeled split=" + to_string(r.split) + ": " + r.image_ref);
    int& t = taken[static_cast<size_t>(r.class_id) - 1];
    if (per_class_cap && t >= *per_class_cap) continue;
    ++t;
    Record copy = r;
    fs::path abs = synthetic.resolve(r);
    copy.image_ref = fs::relative(abs, real.base_dir).generic_string();
    out.records.push_back(std::move(copy));
  }
  out.validate();
  return out;
}

}  // namespace pawgan

#endif
