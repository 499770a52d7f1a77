#include <atomic>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <thread>

#include "insardet/io.hpp"
#include "insardet/serialize.hpp"
#include "insardet/synth.hpp"

namespace insardet {

namespace fs = std::filesystem;

namespace {

std::string scene_stem(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "scenes/%06zu", index);
  return buf;
}

DatasetEntry entry_for(const SceneRecord& rec) {
  const auto stem = scene_stem(rec.index);
  return {rec, stem + "_sparse.f32", stem + "_dt.f32", stem + "_mc.f32"};
}

bool scene_complete(const fs::path& root, const DatasetEntry& e, const ComposeOptions& opts) {
  auto done = [&](const std::string& rel) {
    return fs::exists(root / rel) && fs::exists(io::sidecar_path(root / rel));
  };
  return done(e.sparse_path) && (!opts.with_delaunay || done(e.delaunay_path)) &&
         (!opts.with_completion || done(e.completion_path));
}

}  // namespace

Dataset generate_dataset(const SynthConfig& cfg, std::size_t n_per_class, std::uint64_t seed,
                         const fs::path& out_dir, int jobs) {
  if (n_per_class == 0) throw std::invalid_argument("n_per_class must be positive");
  fs::create_directories(out_dir / "scenes");

  // A directory holds one configuration; refuse to mix scenes from another.
  const Json fingerprint = {{"config", cfg}, {"seed", seed}};
  const auto fp_path = out_dir / "dataset.json";
  if (fs::exists(fp_path)) {
    std::ifstream in(fp_path);
    const Json prev = Json::parse(in);
    if (prev != fingerprint) throw std::runtime_error("dataset directory holds a different configuration");
  } else {
    std::ofstream(fp_path) << fingerprint.dump(2) << '\n';
  }

  const SceneGenerator gen(cfg, seed, reference_noise_stats(seed));
  const std::size_t total = 2 * n_per_class;
  Dataset ds;
  ds.root = out_dir;
  ds.entries.resize(total);

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < total; i = next++) {
      try {
        const Label label = i < n_per_class ? Label::positive : Label::negative;
        auto entry = entry_for(gen.draw(i, label));
        if (scene_complete(out_dir, entry, cfg.compose)) {
          entry.record.observed = io::read_sparse(out_dir / entry.sparse_path).count();
        } else {
          const auto scene = gen.build(entry.record);
          entry.record.observed = scene.sparse.count();
          io::write_sparse(out_dir / entry.sparse_path, scene.sparse);
          if (scene.delaunay) io::write_dense(out_dir / entry.delaunay_path, *scene.delaunay);
          if (cfg.compose.with_completion) io::write_dense(out_dir / entry.completion_path, scene.interpolated);
        }
        ds.entries[i] = std::move(entry);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = total;
      }
    }
  };
  const int n_threads = std::max(1, std::min<int>(jobs, static_cast<int>(total)));
  {
    std::vector<std::jthread> pool;
    for (int t = 1; t < n_threads; ++t) pool.emplace_back(worker);
    worker();
  }
  if (failure) std::rethrow_exception(failure);

  std::ofstream manifest(out_dir / "manifest.jsonl");
  if (!manifest) throw std::runtime_error("cannot write manifest in " + out_dir.string());
  for (const auto& e : ds.entries) {
    Json j = e.record;
    j["sparse"] = e.sparse_path;
    if (cfg.compose.with_delaunay) j["delaunay"] = e.delaunay_path;
    if (cfg.compose.with_completion) j["completion"] = e.completion_path;
    manifest << j.dump() << '\n';
  }
  if (!manifest) throw std::runtime_error("I/O failure writing manifest");
  return ds;
}

Dataset read_manifest(const fs::path& manifest) {
  std::ifstream in(manifest);
  if (!in) throw std::runtime_error("cannot open manifest " + manifest.string());
  Dataset ds;
  ds.root = manifest.parent_path();
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      const Json j = Json::parse(line);
      DatasetEntry e;
      j.get_to(e.record);
      e.sparse_path = j.at("sparse").get<std::string>();
      e.delaunay_path = j.value("delaunay", "");
      e.completion_path = j.value("completion", "");
      ds.entries.push_back(std::move(e));
    } catch (const std::exception& ex) {
      throw io::ParseError(std::string("bad manifest record: ") + ex.what(), line_no);
    }
  }
  return ds;
}

}  // namespace insardet
