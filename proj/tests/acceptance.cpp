// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Usage: acceptance WORK_DIR

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <sys/wait.h>

#include "fixtures.hpp"
#include "tda/tda.hpp"

using namespace tda;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void require(bool cond, const std::string& what) {
    if (!cond) {
      pass = false;
      detail << " [violated: " << what << "]";
    }
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

const nlohmann::json& report_row(const nlohmann::json& rep, const std::string& tag) {
  for (const auto& r : rep.at("rows"))
    if (r.at("artifact") == tag) return r;
  throw std::runtime_error("no row " + tag);
}

// 1. stats on fixture manifests carrying the reference counts.
void criterion_tables(const fs::path& work, Outcome& o) {
  struct Want {
    std::string tag;
    double c2, c1, q;
  };
  struct Table {
    std::string name, csv;
    std::vector<Want> rows;
  };
  const std::vector<Table> tables{
      {"skin", fixtures::skin_lesion_csv(),
       {{"frame", 0.0520, 0.2605, 5.01}, {"ruler", 0.2109, 0.2930, 1.39}, {"hair", 0.4788, 0.4340, 0.91}}},
      {"face", fixtures::face_csv(), {{"glasses", 0.0144, 0.1119, 7.79}}}};
  double worst_time = 0.0;
  for (const auto& t : tables) {
    const auto dir = work / ("stats_" + t.name);
    fs::create_directories(dir);
    std::ofstream(dir / "manifest.csv") << t.csv;
    const auto cmd = std::string(TDA_CLI_PATH) + " stats " + (dir / "manifest.csv").string() + " --out " +
                     dir.string() + " >/dev/null";
    const auto t0 = std::chrono::steady_clock::now();
    const int status = std::system(cmd.c_str());
    const double secs = seconds_since(t0);
    worst_time = std::max(worst_time, secs);
    o.require(WIFEXITED(status) && WEXITSTATUS(status) == 0, t.name + " stats exit status");
    o.require(secs < 1.0, t.name + " runtime < 1 s");
    if (!fs::exists(dir / "bias_report.json")) {
      o.require(false, t.name + " bias_report.json written");
      continue;
    }
    const auto rep = nlohmann::json::parse(text::read_file(dir / "bias_report.json"));
    for (const auto& w : t.rows) {
      const auto& r = report_row(rep, w.tag);
      o.require(std::abs(r["ratio_c2"].get<double>() - w.c2) <= 0.01, t.name + " " + w.tag + " ratio c2");
      o.require(std::abs(r["ratio_c1"].get<double>() - w.c1) <= 0.01, t.name + " " + w.tag + " ratio c1");
      o.require(std::abs(r["class_ratio"].get<double>() - w.q) <= 0.02, t.name + " " + w.tag + " class ratio");
    }
  }
  o.detail << "slowest stats run " << text::fixed(worst_time, 3) << " s";
}

// 2. CBI against two hand-coded oracles on a frame-free test set.
void criterion_oracles(Outcome& o) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto pool = make_builtin_assets({});
  const auto cfg = fixtures::clean_test_config(100, 77);
  const auto ds = generate(cfg, pool);
  std::vector<RasterImage> images;
  std::vector<std::string> truth;
  for (const auto& s : ds.data.samples) {
    images.push_back(s.image);
    truth.push_back(s.label);
  }
  const auto& c = ds.data.classes;
  o.require(images.size() == 200, "200 test images");

  const fixtures::FrameDetector det{c[0], c[1]};
  const auto frames = select_assets(pool, ArtifactKind::frame, Split::eval);
  const auto res = run_cbi(det, images, truth, c, frames, ArtifactKind::frame);
  for (const auto& r : res.per_asset) {
    o.require(r.switched_count == 200.0, "frame detector switched 200 on " + r.asset_id);
    o.require(r.dir_c2_to_c1 == 1.0, "all switches toward " + c[0] + " on " + r.asset_id);
  }

  const fixtures::IntensityOracle oracle{c[0], c[1], fixtures::tinted_luminance(cfg.base_intensity)};
  std::size_t assets_checked = 0;
  for (auto kind : {ArtifactKind::frame, ArtifactKind::ruler, ArtifactKind::glasses}) {
    const auto eval = select_assets(pool, kind, Split::eval);
    const auto r = run_cbi(oracle, images, truth, c, eval, kind);
    for (const auto& rep : r.per_asset) {
      o.require(rep.switched_count == 0.0, "intensity oracle unswitched on " + rep.asset_id);
      ++assets_checked;
    }
  }
  const double secs = seconds_since(t0);
  o.require(secs < 10.0, "runtime < 10 s");
  o.detail << frames.size() << " frame assets at 200 switched, " << assets_checked
           << " assets at 0 for the intensity oracle, " << text::fixed(secs, 2) << " s";
}

struct SweepRun {
  nlohmann::json summary;
  double seconds = 0.0;
};

SweepRun sweep_into(const ExperimentConfig& cfg, const fs::path& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto in = load_inputs(cfg, true);
  SweepRun r;
  r.summary = run_sweep(cfg, in, out);
  write_summary(out, r.summary);
  r.seconds = seconds_since(t0);
  return r;
}

// 3. Mitigation on the default planted-frame dataset.
void criterion_mitigation(const ExperimentConfig& cfg, const SweepRun& run, double synth_secs, Outcome& o) {
  const auto& s = run.summary;
  o.require(cfg.p_grid == std::vector<double>({0.0, 0.25, 0.5, 0.75, 1.0}), "default p grid");
  o.require(s.contains("train_class_ratio") && std::abs(s["train_class_ratio"].get<double>() - 5.0) <= 0.5,
            "train class ratio near 5");
  if (!all_rows_ok(s)) {
    o.require(false, "all sweep rows ok");
    return;
  }
  const auto& rows = s["rows"];
  const auto base = cbi_report_from_json(rows[0]["report"]);
  o.require(rows[0]["p"].get<double>() == 0.0, "first row is p = 0");
  std::size_t best = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const auto r = cbi_report_from_json(rows[i]["report"]);
    o.require(r.switched_count <= base.switched_count / 2.0,
              "switched at p=" + text::fixed(rows[i]["p"].get<double>(), 2) + " <= half of p=0");
    if (best == 0 || r.switched_count < cbi_report_from_json(rows[best]["report"]).switched_count) best = i;
  }
  const auto b = cbi_report_from_json(rows[best]["report"]);
  o.require(std::abs(b.f1_diff) <= std::abs(base.f1_diff) / 3.0, "|f1_diff| at best p <= third of p=0");
  o.require(base.f1 - b.f1 <= 0.02, "clean F1 drop at best p <= 2 points");
  const double total = synth_secs + run.seconds;
  o.require(total < 300.0, "runtime < 5 min");
  o.detail << "switched p=0 " << text::fixed(base.switched_count, 1);
  for (std::size_t i = 1; i < rows.size(); ++i)
    o.detail << ", p=" << text::fixed(rows[i]["p"].get<double>(), 2) << " "
             << text::fixed(rows[i]["report"]["switched_count"].get<double>(), 1);
  o.detail << "; best p=" << text::fixed(rows[best]["p"].get<double>(), 2) << " f1_diff "
           << text::percent(b.f1_diff) << " vs " << text::percent(base.f1_diff) << ", F1 "
           << text::percent(b.f1) << " vs " << text::percent(base.f1) << "; " << text::fixed(total, 1) << " s";
}

// 4. Compositing invariants over random triples.
void criterion_compositing(Outcome& o) {
  auto rng = make_rng(404);
  const auto pool = make_builtin_assets({});
  std::size_t triples = 0, violations = 0, frames = 0;
  for (int k = 0; k < 1200; ++k) {
    const auto& asset = pool[rng.below(pool.size())];
    const int w = 16 + static_cast<int>(rng.below(80));
    const int h = asset.kind == ArtifactKind::glasses ? w : 16 + static_cast<int>(rng.below(80));
    RasterImage img(w, h);
    for (auto& v : img.data()) v = static_cast<std::uint8_t>(1 + rng.below(255));
    auto t = asset.kind == ArtifactKind::glasses ? GeometricTransform::identity()
                                                 : sample_transform(rng, TransformRanges{});
    const auto support = insertion_support(img.dims(), asset, t);
    const auto out = insert_artifact(img, asset, t);
    ++triples;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        if (!support.at(x, y) && out.at(x, y) != img.at(x, y)) ++violations;
    if (count_changed_pixels(img, out) > support.popcount()) ++violations;
    if (asset.kind == ArtifactKind::frame) {
      ++frames;
      violations += insert_artifact(out, asset, t) != out;
      violations += count_changed_pixels(img, out) != support.popcount();
    }
    if (asset.kind != ArtifactKind::glasses) {
      const GeometricTransform full{1.0, 360.0, 0.0, 0.0};
      violations += warp(asset.mask, GeometricTransform::identity(), asset.mask.dims()) != asset.mask;
      violations += warp(asset.mask, full, asset.mask.dims()) != asset.mask;
      violations += warp(img, GeometricTransform::identity(), img.dims()) != img;
      violations += warp(img, full, img.dims()) != img;
    }
  }
  o.require(triples >= 1000, "at least 1000 triples");
  o.require(violations == 0, "zero violations");
  o.detail << triples << " triples (" << frames << " frames), " << violations << " violations";
}

// 5. Analytic gradients against central differences.
void criterion_gradients(Outcome& o) {
  const auto pool = make_builtin_assets({});
  SynthConfig sc;
  sc.n_per_class = 50;
  const auto ds = generate(sc, pool);
  double worst_linear = 0.0, worst_mlp = 0.0;
  for (int i = 0; i < 100; ++i) {
    const auto& s = ds.data.samples[i];
    const double y = s.label == ds.data.classes[0] ? 1.0 : 0.0;
    auto lin = ToyModel::initialized(Architecture::linear, 32, 0, ds.data.classes[0], ds.data.classes[1], i);
    worst_linear = std::max(worst_linear, gradient_check(lin, featurize(s.image, 32), y, 1e-5));
    auto mlp = ToyModel::initialized(Architecture::mlp_1h, 16, 8, ds.data.classes[0], ds.data.classes[1], i);
    worst_mlp = std::max(worst_mlp, gradient_check(mlp, featurize(s.image, 16), y, 1e-5));
  }
  o.require(worst_linear < 1e-5, "linear max relative error < 1e-5");
  o.require(worst_mlp < 1e-4, "mlp max relative error < 1e-4");
  char buf[128];
  std::snprintf(buf, sizeof buf, "max relative error linear %.3e, mlp %.3e over 100 samples", worst_linear,
                worst_mlp);
  o.detail << buf;
}

// 6. Two sweeps of the same config.
void criterion_determinism(const fs::path& a, const fs::path& b, const ExperimentConfig& cfg, Outcome& o) {
  std::size_t compared = 0;
  auto same = [&](const fs::path& rel) {
    ++compared;
    const bool both = fs::exists(a / rel) && fs::exists(b / rel);
    o.require(both && text::read_file(a / rel) == text::read_file(b / rel), rel.string() + " identical");
  };
  same("summary.json");
  for (double p : cfg.p_grid) same(fs::path(p_label(p)) / "model.json");
  o.detail << compared << " files byte-identical";
}

// 7. Bernoulli frequencies and asset selection uniformity.
void criterion_sampling(Outcome& o) {
  const int n = 100000;
  for (double p : {0.25, 0.5, 0.75}) {
    auto rng = make_rng(7).split(static_cast<std::uint64_t>(p * 100));
    int hits = 0;
    for (int i = 0; i < n; ++i) hits += should_apply(rng, p);
    const double f = hits / double(n), sigma = std::sqrt(p * (1 - p) / n);
    o.require(std::abs(f - p) <= 3 * sigma, "frequency at p=" + text::fixed(p, 2));
    o.detail << "p=" << text::fixed(p, 2) << " freq " << text::fixed(f, 4) << "; ";
  }
  const auto pool = make_builtin_assets({});
  double worst = 0.0;
  for (auto kind : {ArtifactKind::frame, ArtifactKind::ruler, ArtifactKind::glasses}) {
    const auto candidates = select_assets(pool, kind, Split::train);
    std::map<std::uint64_t, int> freq;
    for (int i = 0; i < n; ++i) {
      auto rng = sample_stream(13, 0, std::to_string(i));
      if (!should_apply(rng, 1.0)) continue;
      ++freq[rng.below(candidates.size())];
    }
    const double expect = double(n) / candidates.size();
    o.require(freq.size() == candidates.size(), "every asset selected");
    for (const auto& [k, c] : freq) worst = std::max(worst, std::abs(c - expect) / expect);
  }
  o.require(worst <= 0.05, "selection within 5% of uniform");
  o.detail << "worst selection deviation " << text::percent(worst);
}

bool report(int id, const std::string& name, const std::function<void(Outcome&)>& fn) {
  Outcome o;
  try {
    fn(o);
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail << " [exception: " << e.what() << "]";
  }
  std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << " " << name << ": " << o.detail.str()
            << std::endl;
  return o.pass;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: acceptance WORK_DIR\n";
    return 2;
  }
  const fs::path work = argv[1];
  fs::remove_all(work);
  fs::create_directories(work);

  bool ok = true;
  ok &= report(1, "table reproduction", [&](Outcome& o) { criterion_tables(work, o); });
  ok &= report(2, "insertion oracles", criterion_oracles);

  ExperimentConfig cfg;
  SweepRun first;
  double synth_secs = 0.0;
  ok &= report(3, "mitigation", [&](Outcome& o) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto bundle = write_synth_bundle(work / "synth", SynthBundleConfig{});
    synth_secs = seconds_since(t0);
    cfg = load_experiment(bundle.experiment_path);
    first = sweep_into(cfg, work / "sweep_a");
    criterion_mitigation(cfg, first, synth_secs, o);
  });
  ok &= report(4, "compositing invariants", criterion_compositing);
  ok &= report(5, "gradient check", criterion_gradients);
  ok &= report(6, "determinism", [&](Outcome& o) {
    if (first.summary.is_null()) throw std::runtime_error("first sweep did not run");
    sweep_into(cfg, work / "sweep_b");
    criterion_determinism(work / "sweep_a", work / "sweep_b", cfg, o);
  });
  ok &= report(7, "sampling bounds", criterion_sampling);
  return ok ? 0 : 1;
}
