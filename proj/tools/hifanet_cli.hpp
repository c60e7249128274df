#pragma once

// Command-line front end. `run` is the whole program; main() only forwards
// argv so the commands can also be driven in-process.
//
// Config resolution: built-in defaults, then the --config JSON document,
// then explicit flags. The JSON document may carry the sections "scene",
// "model", "train", "noise" and "study"; unknown keys are rejected.
//
// Exit codes: 0 success, 2 usage error, 3 data error.

#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hifanet/hifanet.hpp"
#include "json.hpp"

namespace hifanet::cli {

using nlohmann::json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitData = 3;

/// Shortest round-trip decimal form; identical bytes on every run.
inline std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

/// Noise-sweep level sigma -> per-axis rotation (degrees) and translation (meters).
inline constexpr double kSweepRotDegPerSigma = 10.0;
inline constexpr double kSweepTransPerSigma = 1.0;

inline data::PoseNoise sweep_noise(double sigma) {
  return {kSweepRotDegPerSigma * sigma, kSweepTransPerSigma * sigma};
}

/// Seed offset between the training scene and the held-out scene.
inline constexpr std::uint64_t kTestSceneOffset = 1000;

struct StudyConfig {
  std::vector<double> distances{5.0, 10.0, 20.0};
  std::vector<double> sigma_rot_deg{1.0};
  std::vector<double> sigma_trans{0.05, 0.1};
  int trials = 10000;
  geo::CameraIntrinsics intrinsics;
};

inline void to_json(json& j, const StudyConfig& s) {
  j = json{{"distances", s.distances}, {"sigma_rot_deg", s.sigma_rot_deg}, {"sigma_trans", s.sigma_trans},
           {"trials", s.trials},       {"fx", s.intrinsics.fx},          {"fy", s.intrinsics.fy},
           {"cx", s.intrinsics.cx},    {"cy", s.intrinsics.cy},          {"width", s.intrinsics.width},
           {"height", s.intrinsics.height}};
}

inline void from_json(const json& j, StudyConfig& s) {
  s.distances = j.at("distances").get<std::vector<double>>();
  s.sigma_rot_deg = j.at("sigma_rot_deg").get<std::vector<double>>();
  s.sigma_trans = j.at("sigma_trans").get<std::vector<double>>();
  s.trials = j.at("trials").get<int>();
  s.intrinsics.fx = j.at("fx").get<double>();
  s.intrinsics.fy = j.at("fy").get<double>();
  s.intrinsics.cx = j.at("cx").get<double>();
  s.intrinsics.cy = j.at("cy").get<double>();
  s.intrinsics.width = j.at("width").get<int>();
  s.intrinsics.height = j.at("height").get<int>();
}

/// Everything a command may need, after all three config layers.
struct RunConfig {
  data::SceneConfig scene;
  HiFANetConfig model = desk_model();
  TrainConfig train;
  data::PoseNoise noise{0.5, 0.05};
  StudyConfig study;
  std::uint64_t seed = 42;
  std::string out = "out";

  /// Model preset matching the synthetic scene's 32-wide features.
  static HiFANetConfig desk_model() {
    HiFANetConfig c;
    c.d = 32;
    c.d1 = 8;
    c.d2 = 8;
    c.ffn_width = 32;
    return c;
  }
};

namespace detail {

template <typename T>
void merge_section(const json& doc, const char* key, T& target) {
  if (!doc.contains(key)) return;
  const json& patch = doc.at(key);
  if (!patch.is_object()) throw ConfigInvalid(std::string("config section '") + key + "' must be an object");
  json current = target;
  for (const auto& [name, _] : patch.items())
    if (!current.contains(name)) throw ConfigInvalid(std::string("unknown key '") + name + "' in section '" + key + "'");
  current.merge_patch(patch);
  try {
    target = current.get<T>();
  } catch (const json::exception& e) {
    throw ConfigInvalid(std::string("config section '") + key + "': " + e.what());
  }
}

inline void apply_config_file(const std::string& path, RunConfig& rc) {
  std::ifstream in(path);
  if (!in) throw ConfigInvalid("cannot open config file " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigInvalid("config file " + path + " is not valid JSON: " + e.what());
  }
  if (!doc.is_object()) throw ConfigInvalid("config file must hold a JSON object");
  for (const auto& [key, _] : doc.items())
    if (key != "scene" && key != "model" && key != "train" && key != "noise" && key != "study" && key != "seed")
      throw ConfigInvalid("unknown config section '" + key + "'");
  merge_section(doc, "scene", rc.scene);
  merge_section(doc, "model", rc.model);
  merge_section(doc, "train", rc.train);
  merge_section(doc, "noise", rc.noise);
  merge_section(doc, "study", rc.study);
  if (doc.contains("seed")) rc.seed = doc.at("seed").get<std::uint64_t>();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

inline std::filesystem::path prepare_out(const std::string& dir) {
  std::filesystem::path p(dir);
  std::filesystem::create_directories(p);
  return p;
}

inline json metrics_json(const MetricsReport& r) {
  json per_class = json::array();
  for (double v : r.per_class_iou) per_class.push_back(std::isnan(v) ? json(nullptr) : json(v));
  return json{{"miou", r.miou},
              {"avg_accuracy", r.avg_accuracy},
              {"overall_accuracy", r.overall_accuracy},
              {"per_class_iou", per_class}};
}

inline std::string confusion_csv(const MetricsReport& r) {
  std::ostringstream os;
  os << "truth";
  for (std::size_t c = 0; c < r.confusion.size(); ++c) os << ",pred_" << c;
  os << '\n';
  for (std::size_t t = 0; t < r.confusion.size(); ++t) {
    os << t;
    for (auto n : r.confusion[t]) os << ',' << n;
    os << '\n';
  }
  return os.str();
}

inline std::string history_csv(const std::vector<EpochRecord>& history) {
  std::ostringstream os;
  os << "epoch,lr,loss,miou,avg_accuracy\n";
  for (const auto& h : history)
    os << h.epoch << ',' << fmt(h.lr) << ',' << fmt(h.loss) << ',' << fmt(h.miou) << ',' << fmt(h.avg_accuracy)
       << '\n';
  return os.str();
}

/// Model dims follow the dataset unless the user pinned them.
inline void adopt_dataset_dims(HiFANetConfig& cfg, const io::DatasetHeader& h, const std::vector<std::string>& pinned) {
  auto is_pinned = [&](const std::string& f) { return std::find(pinned.begin(), pinned.end(), f) != pinned.end(); };
  if (!is_pinned("m")) cfg.m = h.m;
  if (!is_pinned("n")) cfg.n = h.n;
  if (!is_pinned("k")) cfg.k = h.k;
  if (!is_pinned("d")) cfg.d = h.d;
  if (!is_pinned("classes")) cfg.class_count = h.class_count;
}

}  // namespace detail

class App {
 public:
  App(std::ostream& out, std::ostream& err) : out_(out), err_(err) { build(); }

  int run(int argc, const char* const* argv) {
    try {
      app_.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
      const int code = app_.exit(e, out_, err_);
      return code == 0 ? kExitOk : kExitUsage;
    }
    try {
      resolve();
      return dispatch();
    } catch (const ConfigInvalid& e) {
      err_ << "error: " << e.what() << '\n';
      return kExitUsage;
    } catch (const UnknownVariant& e) {
      err_ << "error: " << e.what() << '\n';
      return kExitUsage;
    } catch (const std::exception& e) {
      err_ << "error: " << e.what() << '\n';
      return kExitData;
    }
  }

 private:
  std::ostream& out_;
  std::ostream& err_;
  CLI::App app_{"Hierarchical attention over multi-view patch observations"};
  RunConfig rc_;

  // Raw flag storage; only flags the user actually passed are applied.
  std::string config_path_;
  std::uint64_t seed_ = 0;
  std::string out_dir_;
  std::size_t m_ = 0, n_ = 0, k_ = 0, d_ = 0, heads_ = 0, d1_ = 0, d2_ = 0, ffn_ = 0, classes_ = 0;
  std::size_t epochs_ = 0, batch_size_ = 0, decay_every_ = 0, points_per_class_ = 0, camera_count_ = 0;
  double lr0_ = 0, sigma_rot_ = 0, sigma_trans_ = 0, corruption_ = 0, feature_noise_ = 0;
  std::vector<double> distances_, sigma_rot_list_, sigma_trans_list_;
  int trials_ = 0;
  std::string variant_ = "hifanet";
  std::string grouping_ = "spatial";
  std::string data_path_, model_dir_;
  double noise_max_ = 0.3;
  std::size_t noise_steps_ = 4;
  std::size_t patch_size_ = 0, bof_ = 0;

  std::vector<CLI::App*> subs_;
  std::vector<std::string> pinned_;  // model dims given explicitly

  CLI::App* study_ = nullptr;
  CLI::App* generate_ = nullptr;
  CLI::App* train_ = nullptr;
  CLI::App* evaluate_ = nullptr;
  CLI::App* sweep_ = nullptr;

  void common(CLI::App* s) {
    s->add_option("--config", config_path_, "JSON config file (sections: scene, model, train, noise, study)");
    s->add_option("--seed", seed_, "Master seed");
    s->add_option("--out", out_dir_, "Output directory (default: out)");
  }

  void scene_flags(CLI::App* s) {
    s->add_option("--points-per-class", points_per_class_, "Points sampled per class");
    s->add_option("--camera-count", camera_count_, "Cameras along the trajectory");
    s->add_option("--corruption", corruption_, "Label-map corruption rate")->check(CLI::Range(0.0, 1.0));
    s->add_option("--feature-noise", feature_noise_, "Feature noise sigma")->check(CLI::NonNegativeNumber);
    s->add_option("--sigma-rot", sigma_rot_, "Pose noise, degrees per Euler angle")->check(CLI::NonNegativeNumber);
    s->add_option("--sigma-trans", sigma_trans_, "Pose noise, meters per axis")->check(CLI::NonNegativeNumber);
  }

  void model_flags(CLI::App* s) {
    s->add_option("--m", m_, "Points per group")->check(CLI::PositiveNumber);
    s->add_option("--n", n_, "Bag-of-frames size")->check(CLI::PositiveNumber);
    s->add_option("--k", k_, "Patch side (odd)")->check(CLI::PositiveNumber);
    s->add_option("--d", d_, "Feature width")->check(CLI::PositiveNumber);
    s->add_option("--classes", classes_, "Class count")->check(CLI::PositiveNumber);
    s->add_option("--heads", heads_, "Attention heads")->check(CLI::PositiveNumber);
    s->add_option("--d1", d1_, "Per-head key width, patch and instance blocks")->check(CLI::PositiveNumber);
    s->add_option("--d2", d2_, "Per-head key width, inter-point block")->check(CLI::PositiveNumber);
    s->add_option("--ffn-width", ffn_, "Feed-forward hidden width")->check(CLI::PositiveNumber);
  }

  void train_flags(CLI::App* s) {
    s->add_option("--variant", variant_, "hifanet | hifanet_noPA | hifanet_noSP | avgpool_fc")->capture_default_str();
    s->add_option("--epochs", epochs_, "Training epochs")->check(CLI::PositiveNumber);
    s->add_option("--lr0", lr0_, "Initial learning rate")->check(CLI::PositiveNumber);
    s->add_option("--decay-every", decay_every_, "Epochs between learning-rate halvings")->check(CLI::PositiveNumber);
    s->add_option("--batch-size", batch_size_, "Groups per SGD step")->check(CLI::PositiveNumber);
  }

  void build() {
    app_.require_subcommand(1);
    app_.set_help_all_flag("--help-all");

    study_ = app_.add_subcommand("projection-study", "Pixel error of a projected point under pose noise");
    common(study_);
    study_->add_option("--distances", distances_, "Point distances, meters")->delimiter(',');
    study_->add_option("--sigma-rot", sigma_rot_list_, "Rotation noise levels, degrees")->delimiter(',');
    study_->add_option("--sigma-trans", sigma_trans_list_, "Translation noise levels, meters")->delimiter(',');
    study_->add_option("--trials", trials_, "Monte-Carlo trials per row")->check(CLI::Range(100, 100000000));

    generate_ = app_.add_subcommand("generate", "Synthesize a scene and write its observation tensors");
    common(generate_);
    scene_flags(generate_);
    model_flags(generate_);
    generate_->add_option("--grouping", grouping_, "spatial | temporal")
        ->check(CLI::IsMember({"spatial", "temporal"}))
        ->capture_default_str();

    train_ = app_.add_subcommand("train", "Train a model on a dataset file");
    common(train_);
    model_flags(train_);
    train_flags(train_);
    train_->add_option("--data", data_path_, "Dataset file")->required();

    evaluate_ = app_.add_subcommand("evaluate", "Score a trained model or the voting baseline");
    common(evaluate_);
    evaluate_->add_option("--data", data_path_, "Dataset file")->required();
    evaluate_->add_option("--model", model_dir_, "Directory written by 'train'");
    evaluate_->add_option("--variant", variant_, "majority_vote, or omit to use --model")->capture_default_str();
    evaluate_->add_option("--patch-size", patch_size_, "Voting window (default k)")->check(CLI::PositiveNumber);
    evaluate_->add_option("--bof", bof_, "Voting frames (default N)")->check(CLI::PositiveNumber);

    sweep_ = app_.add_subcommand("noise-sweep", "Train at zero pose noise, evaluate across noise levels");
    common(sweep_);
    scene_flags(sweep_);
    model_flags(sweep_);
    train_flags(sweep_);
    sweep_->add_option("--noise-max", noise_max_, "Largest sigma")->check(CLI::NonNegativeNumber)->capture_default_str();
    sweep_->add_option("--noise-steps", noise_steps_, "Number of sigma levels, including 0")
        ->check(CLI::Range(std::size_t{2}, std::size_t{1000}))
        ->capture_default_str();

    subs_ = {study_, generate_, train_, evaluate_, sweep_};
  }

  bool given(CLI::App* s, const char* flag) const { return s->count(flag) > 0; }

  CLI::App* active() const {
    for (CLI::App* s : subs_)
      if (s->parsed()) return s;
    return nullptr;
  }

  void resolve() {
    CLI::App* s = active();
    if (given(s, "--config")) detail::apply_config_file(config_path_, rc_);
    if (given(s, "--seed")) rc_.seed = seed_;
    rc_.out = given(s, "--out") ? out_dir_ : rc_.out;

    auto set = [&](const char* flag, auto& target, auto value) {
      if (s->get_option_no_throw(flag) && given(s, flag)) target = value;
    };
    set("--points-per-class", rc_.scene.points_per_class, points_per_class_);
    set("--camera-count", rc_.scene.camera_count, camera_count_);
    set("--corruption", rc_.scene.label_corruption_rate, corruption_);
    set("--feature-noise", rc_.scene.feature_noise_sigma, feature_noise_);
    if (s != study_) {
      set("--sigma-rot", rc_.noise.sigma_rot_deg, sigma_rot_);
      set("--sigma-trans", rc_.noise.sigma_trans, sigma_trans_);
    }
    set("--m", rc_.model.m, m_);
    set("--n", rc_.model.n, n_);
    set("--k", rc_.model.k, k_);
    set("--d", rc_.model.d, d_);
    set("--classes", rc_.model.class_count, classes_);
    set("--heads", rc_.model.heads, heads_);
    set("--d1", rc_.model.d1, d1_);
    set("--d2", rc_.model.d2, d2_);
    set("--ffn-width", rc_.model.ffn_width, ffn_);
    set("--epochs", rc_.train.epochs, epochs_);
    set("--lr0", rc_.train.lr0, lr0_);
    set("--decay-every", rc_.train.decay_every, decay_every_);
    set("--batch-size", rc_.train.batch_size, batch_size_);
    for (const char* f : {"--m", "--n", "--k", "--d", "--classes"})
      if (s->get_option_no_throw(f) && given(s, f)) pinned_.emplace_back(f + 2);

    if (s == study_) {
      if (given(s, "--distances")) rc_.study.distances = distances_;
      if (given(s, "--sigma-rot")) rc_.study.sigma_rot_deg = sigma_rot_list_;
      if (given(s, "--sigma-trans")) rc_.study.sigma_trans = sigma_trans_list_;
      if (given(s, "--trials")) rc_.study.trials = trials_;
    }

    // The scene's feature width and class count follow the model.
    rc_.scene.feature_dim = rc_.model.d;
    rc_.scene.class_count = rc_.model.class_count;
    rc_.train.seed = rc_.seed;
  }

  int dispatch() {
    CLI::App* s = active();
    if (s == study_) return cmd_projection_study();
    if (s == generate_) return cmd_generate();
    if (s == train_) return cmd_train();
    if (s == evaluate_) return cmd_evaluate();
    return cmd_noise_sweep();
  }

  int cmd_projection_study() {
    const StudyConfig& st = rc_.study;
    if (!st.intrinsics.is_valid()) throw ConfigInvalid("study intrinsics are invalid");
    if (st.trials < 100) throw ConfigInvalid("study needs at least 100 trials");
    if (st.distances.empty()) throw ConfigInvalid("no distances given");
    for (double v : st.sigma_rot_deg)
      if (v < 0) throw ConfigInvalid("negative rotation noise");
    for (double v : st.sigma_trans)
      if (v < 0) throw ConfigInvalid("negative translation noise");
    for (double v : st.distances)
      if (!(v > 0)) throw ConfigInvalid("distances must be positive");
    std::ostringstream csv;
    csv << "distance_m,sigma_rot_deg,sigma_trans_m,mean_err_px,p95_err_px\n";
    for (double sr : st.sigma_rot_deg)
      for (double stn : st.sigma_trans)
        for (const auto& row : geo::projection_error_study(st.distances, sr, stn, st.intrinsics, st.trials, rc_.seed))
          csv << fmt(row.distance) << ',' << fmt(sr) << ',' << fmt(stn) << ',' << fmt(row.mean_error_px) << ','
              << fmt(row.p95_error_px) << '\n';
    const auto dir = detail::prepare_out(rc_.out);
    detail::write_text(dir / "projection_study.csv", csv.str());
    out_ << "wrote " << (dir / "projection_study.csv").string() << '\n';
    return kExitOk;
  }

  data::Grouping grouping() const { return grouping_ == "temporal" ? data::Grouping::temporal : data::Grouping::spatial; }

  int cmd_generate() {
    rc_.model.validate();
    rc_.scene.seed = rc_.seed;
    const auto scene = data::generate_scene(rc_.scene);
    const auto built = data::build_observation_tensors(scene, rc_.model, rc_.noise, rc_.seed, grouping());
    const auto dir = detail::prepare_out(rc_.out);
    io::export_dataset(built.groups, rc_.model.class_count, (dir / "dataset.hifa").string());
    json summary{{"scene", rc_.scene},
                 {"model", rc_.model},
                 {"noise", rc_.noise},
                 {"grouping", grouping_},
                 {"total_points", built.total_points},
                 {"retained_points", built.retained.size()},
                 {"coverage", built.coverage()},
                 {"groups", built.groups.size()}};
    detail::write_text(dir / "generate.json", summary.dump(2) + "\n");
    out_ << "groups " << built.groups.size() << ", coverage " << fmt(built.coverage()) << '\n';
    if (built.groups.empty()) {
      err_ << "warning: no point has a full bag of " << rc_.model.n << " frames; dataset is empty\n";
    }
    return kExitOk;
  }

  int cmd_train() {
    const auto dataset = io::import_dataset(data_path_);
    detail::adopt_dataset_dims(rc_.model, dataset.header, pinned_);
    rc_.model.validate();
    rc_.train.validate();
    Model model = build_variant(variant_, rc_.model, rc_.seed);
    const auto history = train(model, dataset.groups, rc_.train);
    const auto dir = detail::prepare_out(rc_.out);
    io::save_checkpoint(model.params, (dir / "model.ckpt").string());
    json meta{{"variant", to_string(model.variant)}, {"model", rc_.model}, {"train", rc_.train}};
    detail::write_text(dir / "model.json", meta.dump(2) + "\n");
    detail::write_text(dir / "history.csv", detail::history_csv(history));
    out_ << "trained " << to_string(model.variant) << " for " << history.size() << " epochs, final loss "
         << fmt(history.back().loss) << '\n';
    return kExitOk;
  }

  Model load_model(const std::string& dir) {
    std::ifstream in(std::filesystem::path(dir) / "model.json");
    if (!in) throw CorruptFile("cannot open " + (std::filesystem::path(dir) / "model.json").string());
    json meta;
    try {
      meta = json::parse(in);
    } catch (const json::exception& e) {
      throw CorruptFile(std::string("model.json: ") + e.what());
    }
    Model m;
    m.variant = parse_variant(meta.at("variant").get<std::string>());
    m.config = meta.at("model").get<HiFANetConfig>();
    m.params = io::load_checkpoint((std::filesystem::path(dir) / "model.ckpt").string());
    Model expected = build_variant(m.variant, m.config, 0);
    if (expected.params.names() != m.params.names()) throw CorruptFile("checkpoint does not match model.json");
    for (const auto& name : expected.params.names())
      if (expected.params.at(name).shape() != m.params.at(name).shape())
        throw CorruptFile("checkpoint tensor " + name + " has the wrong shape");
    return m;
  }

  int cmd_evaluate() {
    const auto dataset = io::import_dataset(data_path_);
    const auto& h = dataset.header;
    MetricsReport report;
    std::string method;
    if (variant_ == "majority_vote") {
      const std::size_t ps = given(evaluate_, "--patch-size") ? patch_size_ : h.k;
      const std::size_t bof = given(evaluate_, "--bof") ? bof_ : h.n;
      if (ps > h.k || ps % 2 == 0) throw ConfigInvalid("--patch-size must be odd and at most k");
      if (bof > h.n) throw ConfigInvalid("--bof must be at most N");
      report = evaluate_vote(dataset.groups, ps, bof, h.class_count);
      method = "majority_vote";
    } else {
      if (!given(evaluate_, "--model")) throw ConfigInvalid("--model is required unless --variant majority_vote");
      Model model = load_model(model_dir_);
      report = evaluate(model, dataset.groups);
      method = to_string(model.variant);
    }
    const auto dir = detail::prepare_out(rc_.out);
    json j = detail::metrics_json(report);
    j["method"] = method;
    detail::write_text(dir / "metrics.json", j.dump(2) + "\n");
    detail::write_text(dir / "confusion.csv", detail::confusion_csv(report));
    out_ << method << ": miou " << fmt(report.miou) << ", avg_accuracy " << fmt(report.avg_accuracy) << '\n';
    return kExitOk;
  }

  int cmd_noise_sweep() {
    rc_.model.validate();
    rc_.train.validate();
    data::SceneConfig train_scene = rc_.scene;
    train_scene.seed = rc_.seed;
    const auto train_set = data::build_observation_tensors(data::generate_scene(train_scene), rc_.model, {}, rc_.seed);
    if (train_set.groups.empty()) throw EmptyDataset("training scene has no complete observations");
    Model model = build_variant(variant_, rc_.model, rc_.seed);
    const auto history = train(model, train_set.groups, rc_.train);

    data::SceneConfig test_cfg = rc_.scene;
    test_cfg.seed = rc_.seed + kTestSceneOffset;
    const auto test_scene = data::generate_scene(test_cfg);

    std::ostringstream csv;
    csv << "sigma,method,miou,avg_accuracy\n";
    const std::string wide = "majority_vote_k" + std::to_string(rc_.model.k);
    for (std::size_t i = 0; i < noise_steps_; ++i) {
      const double sigma = noise_max_ * double(i) / double(noise_steps_ - 1);
      const auto test = data::build_observation_tensors(test_scene, rc_.model, sweep_noise(sigma),
                                                        data::derive_seed(rc_.seed, 7, i));
      if (test.groups.empty()) throw EmptyDataset("no complete observations at sigma " + fmt(sigma));
      auto row = [&](const std::string& name, const MetricsReport& r) {
        csv << fmt(sigma) << ',' << name << ',' << fmt(r.miou) << ',' << fmt(r.avg_accuracy) << '\n';
      };
      row(to_string(model.variant), evaluate(model, test.groups));
      row("majority_vote_k1", evaluate_vote(test.groups, 1, rc_.model.n, rc_.model.class_count));
      row(wide, evaluate_vote(test.groups, rc_.model.k, rc_.model.n, rc_.model.class_count));
    }
    const auto dir = detail::prepare_out(rc_.out);
    detail::write_text(dir / "noise_sweep.csv", csv.str());
    detail::write_text(dir / "history.csv", detail::history_csv(history));
    out_ << "wrote " << (dir / "noise_sweep.csv").string() << '\n';
    return kExitOk;
  }
};

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  App app(out, err);
  return app.run(argc, argv);
}

/// Convenience for callers holding arguments as strings (argv[0] included).
inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace hifanet::cli
