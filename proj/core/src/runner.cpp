#include "floorlab/runner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <ios>
#include <json.hpp>
#include <map>
#include <sstream>

#include "floorlab/ensemble.hpp"
#include "floorlab/errors.hpp"
#include "floorlab/mnist.hpp"

#ifndef FLOORLAB_VERSION
#define FLOORLAB_VERSION "0.0.0"
#endif

namespace floorlab {

using nlohmann::ordered_json;

std::string_view version() { return FLOORLAB_VERSION; }

std::string fnv_hex(std::string_view bytes) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char b : bytes) {
    h ^= b;
    h *= 0x100000001B3ULL;
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

ExitCode classify_failure(const std::exception& e) {
  if (dynamic_cast<const ConfigError*>(&e) != nullptr) return ExitCode::kConfig;
  if (dynamic_cast<const BudgetError*>(&e) != nullptr) return ExitCode::kConfig;
  if (dynamic_cast<const FormatError*>(&e) != nullptr) return ExitCode::kData;
  if (dynamic_cast<const std::filesystem::filesystem_error*>(&e) != nullptr) return ExitCode::kData;
  if (dynamic_cast<const std::ios_base::failure*>(&e) != nullptr) return ExitCode::kData;
  return ExitCode::kNumeric;
}

std::vector<std::pair<std::string, std::string>> csv_schema(const std::string& experiment) {
  if (experiment == "floor-spin" || experiment == "floor-tripartite") {
    return {{"trials.csv", "n,trial,normalized_energy,steps,stop_reason,budget_consumed"},
            {"bands.csv", "n,trials,mean,std,min,max,q1,median,q3,iqr,floor_gap"}};
  }
  if (experiment == "sgd-spin") {
    return {{"trials.csv",
             "p,trial,normalized_energy,steps,stop_reason,budget_consumed,"
             "refined_normalized_energy,refine_steps"},
            {"table.csv", "p,mean,std,refined_mean,refined_std"}};
  }
  if (experiment == "teacher-student") {
    return {
        {"teacher.csv", "architecture,final_training_cost,test_cost,test_error_count,steps"},
        {"students.csv", "architecture,seed,final_training_cost,test_cost,test_error_count,steps"},
        {"table.csv", "architecture,training_cost,test_cost,mean_test_error,std_test_error"},
        {"disagreement.csv",
         "index,label,category,teacher_class,student_class,teacher_p_label,student_p_label"}};
  }
  if (experiment == "gd-vs-sgd-mnist") {
    return {{"traces.csv", "arm,seed,budget_consumed,training_cost"},
            {"bands.csv", "arm,budget_consumed,mean,std"},
            {"table.csv",
             "arm,training_cost_mean,training_cost_std,test_cost_mean,test_cost_std,"
             "test_error_mean,test_error_std"}};
  }
  throw ConfigError("unknown experiment '" + experiment + "'");
}

namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string num(double v) { return format_double(v); }

/// Rows of comma-separated cells under a fixed header.
class CsvTable {
 public:
  explicit CsvTable(std::string header) : text_(std::move(header) + "\n") {}

  template <typename... Cells>
  void row(const Cells&... cells) {
    std::size_t i = 0;
    ((text_ += (i++ == 0 ? "" : ",") + cell(cells)), ...);
    text_ += "\n";
  }

  [[nodiscard]] const std::string& text() const { return text_; }

 private:
  static std::string cell(double v) { return num(v); }
  static std::string cell(std::size_t v) { return std::to_string(v); }
  static std::string cell(int v) { return std::to_string(v); }
  static std::string cell(const std::string& v) { return v; }
  static std::string cell(std::string_view v) { return std::string(v); }
  static std::string cell(const char* v) { return v; }

  std::string text_;
};

std::string render_histogram(const std::string& title, const Histogram& h) {
  constexpr std::size_t kBarWidth = 50;
  std::size_t peak = 0;
  for (auto c : h.counts) peak = std::max(peak, c);
  std::string out = "# " + title + "\n# bin_center count bar\n";
  for (std::size_t b = 0; b < h.counts.size(); ++b) {
    const std::size_t len = peak == 0 ? 0 : (h.counts[b] * kBarWidth + peak - 1) / peak;
    char line[64];
    std::snprintf(line, sizeof line, "%+9.4f %6zu ", h.bin_center(b), h.counts[b]);
    out += line + std::string(len, '#') + "\n";
  }
  return out;
}

ordered_json summary_json(const Summary& s) {
  return {{"count", s.count},   {"mean", s.mean}, {"std", s.std},
          {"min", s.min},       {"max", s.max},   {"q1", s.q1},
          {"median", s.median}, {"q3", s.q3},     {"interquartile_range", s.iqr()}};
}

ordered_json report_json(const EnsembleReport& r) {
  ordered_json j = summary_json(r.summary);
  j["landscape"] = r.landscape;
  j["n"] = r.n;
  j["floor_gap"] = r.floor_gap;
  j["stop_reason_counts"] = r.stop_reason_counts;
  j["histogram"] = {{"edges", r.histogram.edges}, {"counts", r.histogram.counts}};
  if (r.refined_summary) j["refined"] = summary_json(*r.refined_summary);
  return j;
}

class Run {
 public:
  Run(const ExperimentConfig& config, RunManifest& manifest)
      : config_(config), manifest_(manifest), dir_(config.text("output_dir")) {
    std::filesystem::create_directories(dir_);
  }

  void execute() {
    const auto& e = config_.experiment;
    if (e == "floor-spin") {
      floor(LandscapeKind::kCoupled);
    } else if (e == "floor-tripartite") {
      floor(LandscapeKind::kTripartite);
    } else if (e == "sgd-spin") {
      sgd_spin();
    } else if (e == "teacher-student") {
      teacher_student();
    } else if (e == "gd-vs-sgd-mnist") {
      gd_vs_sgd();
    } else {
      throw ConfigError("unknown experiment '" + e + "'");
    }
  }

 private:
  std::uint64_t master() const { return config_.uint("master_seed"); }

  void emit(const std::string& name, const std::string& bytes) {
    std::ofstream out(dir_ / name, std::ios::binary | std::ios::trunc);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.close();
    if (!out) throw std::filesystem::filesystem_error("cannot write", dir_ / name, {});
    manifest_.outputs.push_back({name, bytes.size(), fnv_hex(bytes)});
  }

  void emit_json(const ordered_json& j) { emit("summary.json", j.dump(2) + "\n"); }

  void note_stream(std::string purpose, std::uint64_t base, std::uint64_t count) {
    const std::uint64_t key = derive_stream(base, purpose, 0).key();
    manifest_.seeds.push_back({std::move(purpose), base, count, key});
  }

  std::string header(const std::string& file) const {
    for (const auto& [name, columns] : csv_schema(config_.experiment)) {
      if (name == file) return columns;
    }
    throw std::logic_error("no CSV schema for " + file);
  }

  EnsembleSpec spin_spec(LandscapeKind kind) const {
    EnsembleSpec spec;
    spec.kind = kind;
    spec.n = config_.uint("n");
    spec.trials = config_.uint("trials");
    spec.fresh_couplings_per_trial = config_.flag("fresh_couplings");
    spec.descent.step_size = config_.real("step_size");
    spec.descent.grad_tol = config_.real("grad_tol");
    spec.descent.max_steps = config_.uint("max_steps");
    spec.master_seed = master();
    spec.memory_budget_bytes = config_.uint("memory_budget_mb") << 20;
    spec.bin_width = config_.real("bin_width");
    if (spec.trials < 1) throw ConfigError("key 'trials' must be >= 1");
    if (spec.n < 1) throw ConfigError("key 'n' must be >= 1");
    if (!(spec.bin_width > 0.0)) throw ConfigError("key 'bin_width' must be > 0");
    try {
      spec.descent.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    return spec;
  }

  void note_spin_streams(const EnsembleSpec& spec) {
    note_stream("couplings", master(), spec.fresh_couplings_per_trial ? spec.trials : 1);
    note_stream("init", master(), spec.trials);
  }

  void floor(LandscapeKind kind) {
    const EnsembleSpec base = spin_spec(kind);
    std::vector<std::uint64_t> dims =
        config_.has("dims") ? config_.uint_list("dims") : UIntList{base.n};
    std::sort(dims.begin(), dims.end());
    dims.erase(std::unique(dims.begin(), dims.end()), dims.end());
    note_spin_streams(base);

    CsvTable trials(header("trials.csv"));
    CsvTable bands(header("bands.csv"));
    std::string hist;
    ordered_json reports = ordered_json::array();
    for (std::uint64_t n : dims) {
      EnsembleSpec spec = base;
      spec.n = n;
      const auto report = run_ensemble(spec);
      for (const auto& t : report.trials) {
        trials.row(spec.n, t.index, t.normalized_energy, t.steps, to_string(t.stop_reason),
                   t.budget_consumed);
      }
      const auto& s = report.summary;
      bands.row(spec.n, s.count, s.mean, s.std, s.min, s.max, s.q1, s.median, s.q3, s.iqr(),
                report.floor_gap);
      hist += render_histogram(report.landscape + " n=" + std::to_string(n) + " trials=" +
                                   std::to_string(s.count) + " bin_width=" + num(spec.bin_width),
                               report.histogram) +
              "\n";
      reports.push_back(report_json(report));
    }
    emit("trials.csv", trials.text());
    emit("bands.csv", bands.text());
    emit("histogram.txt", hist);
    emit_json({{"experiment", config_.experiment},
               {"fresh_couplings_per_trial", base.fresh_couplings_per_trial},
               {"e_zero", TheoryConstants::e_zero},
               {"e_infinity", TheoryConstants::e_infinity},
               {"reports", reports}});
  }

  void sgd_spin() {
    EnsembleSpec base = spin_spec(LandscapeKind::kDecomposed);
    const auto& order = config_.text("pass_order");
    if (order == "cyclic") {
      base.pass_order = PassOrder::kCyclic;
    } else if (order == "uniform") {
      base.pass_order = PassOrder::kUniform;
    } else {
      throw ConfigError("key 'pass_order': expected cyclic or uniform, got '" + order + "'");
    }
    base.refine_descent = base.descent;
    base.refine_descent.max_steps = config_.uint("refine_max_steps");
    const double budget = config_.real("budget");
    if (!(budget > 0.0)) throw ConfigError("key 'budget' must be > 0");
    std::vector<std::size_t> p_values(config_.uint_list("P").begin(), config_.uint_list("P").end());
    for (auto p : p_values) {
      if (p < 1) throw ConfigError("key 'P': every value must be >= 1");
    }
    note_spin_streams(base);
    if (base.pass_order == PassOrder::kUniform) note_stream("sgd-order", master(), base.trials);

    const auto rows = compare_gd_sgd_spin(base, p_values, budget);
    CsvTable trials(header("trials.csv"));
    CsvTable table(header("table.csv"));
    std::string hist;
    ordered_json reports = ordered_json::array();
    for (const auto& row : rows) {
      for (const auto& t : row.report.trials) {
        trials.row(row.p_count, t.index, t.normalized_energy, t.steps, to_string(t.stop_reason),
                   t.budget_consumed, t.refined_normalized_energy.value_or(std::nan("")),
                   t.refine_steps);
      }
      table.row(row.p_count, row.mean, row.std, row.refined_mean, row.refined_std);
      std::vector<double> refined;
      for (const auto& t : row.report.trials) refined.push_back(*t.refined_normalized_energy);
      hist += render_histogram(
                  row.report.landscape + " n=" + std::to_string(base.n) + " after GD refinement",
                  histogram(refined, base.bin_width)) +
              "\n";
      auto j = report_json(row.report);
      j["p"] = row.p_count;
      reports.push_back(std::move(j));
    }
    emit("trials.csv", trials.text());
    emit("table.csv", table.text());
    emit("histogram.txt", hist);
    emit_json({{"experiment", config_.experiment},
               {"n", base.n},
               {"budget", budget},
               {"pass_order", order},
               {"reports", reports}});
  }

  struct MnistData {
    MnistDataset train;
    MnistDataset test;
  };

  MnistData load_data() {
    const auto files = MnistFiles::in_directory(config_.text("data_dir"));
    MnistData d{load_mnist(files.train_images, files.train_labels, SplitTag::kFullTrain),
                load_mnist(files.test_images, files.test_labels, SplitTag::kTest)};
    if (config_.flag("desk_scale")) {
      // make_splits needs an even count.
      const std::size_t train_count =
          std::min<std::size_t>(config_.uint("train_subsample"), d.train.size()) & ~std::size_t{1};
      const std::size_t test_count =
          std::min<std::size_t>(config_.uint("test_subsample"), d.test.size());
      if (train_count < 2 || test_count < 1) {
        throw ConfigError("desk-scale subsample sizes leave no data");
      }
      const auto train_key = derive_stream(master(), "subsample-train", 0).key();
      const auto test_key = derive_stream(master(), "subsample-test", 0).key();
      manifest_.seeds.push_back({"subsample-train", master(), 1, train_key});
      manifest_.seeds.push_back({"subsample-test", master(), 1, test_key});
      d.train = subsample(d.train, train_count, train_key);
      d.test = subsample(d.test, test_count, test_key);
    } else if (d.train.size() != kMnistTrainSize || d.test.size() != kMnistTestSize) {
      throw FormatError("mnist.size",
                        "full-scale mode needs 60000 training and 10000 test "
                        "samples; found " +
                            std::to_string(d.train.size()) + " and " +
                            std::to_string(d.test.size()) +
                            " (set desk_scale = true for a subset)");
    }
    return d;
  }

  /// Per-row seeds derived from the master seed; the config values label rows.
  std::vector<std::uint64_t> row_seeds(const std::string& purpose) {
    const auto& listed = config_.uint_list("seeds");
    std::vector<std::uint64_t> out;
    for (auto s : listed) out.push_back(derive_stream(master(), purpose, s).key());
    manifest_.seeds.push_back({purpose, master(), listed.size(), out.front()});
    return out;
  }

  std::size_t batch_size() const {
    const auto b = config_.uint("batch_size");
    if (b < 1) throw ConfigError("key 'batch_size' must be >= 1");
    return b;
  }

  static NetworkArchitecture parse_arch(const std::string& text, const std::string& key) {
    try {
      auto arch = NetworkArchitecture::parse(text);
      arch.validate();
      if (arch.input_width() != kMnistPixels || arch.output_width() != kMnistClasses) {
        throw std::invalid_argument("must start at 784 and end at 10");
      }
      return arch;
    } catch (const std::invalid_argument& e) {
      throw ConfigError("key '" + key + "': architecture '" + text + "': " + e.what());
    }
  }

  void teacher_student() {
    const auto teacher_arch =
        parse_arch(config_.text("teacher_architecture"), "teacher_architecture");
    std::vector<NetworkArchitecture> archs;
    for (const auto& a : config_.text_list("architectures")) {
      archs.push_back(parse_arch(a, "architectures"));
    }
    if (archs.size() < 2) throw ConfigError("key 'architectures' needs at least 2 entries");
    if (config_.uint_list("seeds").size() < 2)
      throw ConfigError("key 'seeds' needs at least 2 entries");
    const double step = config_.real("step_size");
    if (!(step > 0.0)) throw ConfigError("key 'step_size' must be > 0");

    const auto data = load_data();
    const auto split_key = derive_stream(master(), "split", 0).key();
    manifest_.seeds.push_back({"split", master(), 1, split_key});
    const auto [first, second] = make_splits(
        data.train, split_key, config_.flag("desk_scale") ? data.train.size() : kMnistTrainSize);

    TrainSettings settings;
    settings.batch_size = batch_size();
    settings.descent.step_size = step;
    const std::size_t per_epoch = (first.size() + settings.batch_size - 1) / settings.batch_size;
    settings.descent.max_steps = std::max<std::size_t>(1, config_.uint("epochs") * per_epoch);

    const auto teacher_key = derive_stream(master(), "teacher", 0).key();
    manifest_.seeds.push_back({"teacher", master(), 1, teacher_key});
    const auto teacher = train_teacher(first, data.test, teacher_arch, settings, teacher_key);
    const auto soft = generate_soft_labels(teacher.params, second);

    const auto seeds = row_seeds("student");
    const auto study = run_student_study(soft, data.test, archs, seeds, settings);

    CsvTable teacher_csv(header("teacher.csv"));
    const auto& tr = teacher.report;
    teacher_csv.row(teacher_arch.to_string(), tr.final_training_cost, tr.test_cost,
                    tr.test_error_count, tr.steps);

    const auto& listed = config_.uint_list("seeds");
    CsvTable students(header("students.csv"));
    for (const auto& cell : study.cells) {
      const auto& r = cell.report;
      students.row(study.rows[cell.arch_index].arch.to_string(),
                   listed[static_cast<std::size_t>(
                       std::find(seeds.begin(), seeds.end(), cell.seed) - seeds.begin())],
                   r.final_training_cost, r.test_cost, r.test_error_count, r.steps);
    }
    CsvTable table(header("table.csv"));
    ordered_json rows = ordered_json::array();
    for (const auto& row : study.rows) {
      table.row(row.arch.to_string(), row.training_cost, row.test_cost, row.mean_test_error,
                row.std_test_error);
      rows.push_back({{"architecture", row.arch.to_string()},
                      {"training_cost", row.training_cost},
                      {"test_cost", row.test_cost},
                      {"mean_test_error", row.mean_test_error},
                      {"std_test_error", row.std_test_error}});
    }

    // Middle-width student, first seed.
    const std::size_t mid = study.rows.size() / 2;
    const auto& pick = study.cells[mid * seeds.size()];
    const auto table_cmp = compare_teacher_student_predictions(teacher.params, pick.params,
                                                               data.test.images, data.test.labels);
    CsvTable dis(header("disagreement.csv"));
    auto dump = [&](const std::vector<PredictionPair>& bucket, AgreementCategory cat) {
      for (const auto& p : bucket) {
        dis.row(p.index, static_cast<std::size_t>(p.label), to_string(cat),
                argmax({p.teacher_probs.data(), static_cast<std::size_t>(p.teacher_probs.size())}),
                argmax({p.student_probs.data(), static_cast<std::size_t>(p.student_probs.size())}),
                p.teacher_probs[p.label], p.student_probs[p.label]);
      }
    };
    dump(table_cmp.teacher_only_right, AgreementCategory::kTeacherOnlyRight);
    dump(table_cmp.student_only_right, AgreementCategory::kStudentOnlyRight);
    dump(table_cmp.both_wrong, AgreementCategory::kBothWrong);

    emit("teacher.csv", teacher_csv.text());
    emit("students.csv", students.text());
    emit("table.csv", table.text());
    emit("disagreement.csv", dis.text());
    const auto ckpt = encode_checkpoint(teacher.params);
    emit("teacher.ckpt", std::string(ckpt.begin(), ckpt.end()));
    const auto soft_bytes = encode_soft_labels(soft);
    emit("soft_labels.bin", std::string(soft_bytes.begin(), soft_bytes.end()));
    emit_json({{"experiment", config_.experiment},
               {"train_size", data.train.size()},
               {"test_size", data.test.size()},
               {"teacher",
                {{"architecture", teacher_arch.to_string()},
                 {"checkpoint_id", soft.teacher_checkpoint_id()},
                 {"final_training_cost", tr.final_training_cost},
                 {"test_cost", tr.test_cost},
                 {"test_error_count", tr.test_error_count}}},
               {"students", rows},
               {"disagreement",
                {{"student_architecture", study.rows[mid].arch.to_string()},
                 {"both_right", table_cmp.both_right.size()},
                 {"both_wrong", table_cmp.both_wrong.size()},
                 {"teacher_only_right", table_cmp.teacher_only_right.size()},
                 {"student_only_right", table_cmp.student_only_right.size()}}}});
  }

  void gd_vs_sgd() {
    const auto arch = parse_arch(config_.text("architecture"), "architecture");
    const double budget = config_.real("budget");
    const double gd_step = config_.real("gd_step_size");
    const double sgd_step = config_.real("sgd_step_size");
    if (!(budget > 0.0) || !(gd_step > 0.0) || !(sgd_step > 0.0)) {
      throw ConfigError("keys 'budget', 'gd_step_size' and 'sgd_step_size' must be > 0");
    }
    const auto points = std::max<std::uint64_t>(1, config_.uint("trace_points"));

    DescentConfig gd;
    gd.step_size = gd_step;
    gd.max_steps =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(budget / gd_step)));
    gd.record_every = std::max<std::size_t>(1, gd.max_steps / points);
    TrainSettings sgd;
    sgd.batch_size = batch_size();
    sgd.descent.step_size = sgd_step;
    sgd.descent.max_steps =
        std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(budget / sgd_step)));
    sgd.descent.record_every = std::max<std::size_t>(1, sgd.descent.max_steps / points);

    const auto data = load_data();
    const auto seeds = row_seeds("run");
    const auto cmp = run_gd_vs_sgd_mnist(arch, data.train.hard_batch(), data.test, gd, sgd, seeds);

    const auto& listed = config_.uint_list("seeds");
    CsvTable traces(header("traces.csv"));
    auto trace_rows = [&](const std::string& arm, const std::vector<TrainReport>& reports) {
      for (std::size_t s = 0; s < reports.size(); ++s) {
        for (const auto& p : reports[s].training_cost)
          traces.row(arm, listed[s], p.budget, p.value);
      }
    };
    trace_rows("GD", cmp.gd);
    trace_rows("SGD", cmp.sgd);

    CsvTable bands(header("bands.csv"));
    for (const auto& b : cmp.gd_band) bands.row("GD", b.budget, b.mean, b.std);
    for (const auto& b : cmp.sgd_band) bands.row("SGD", b.budget, b.mean, b.std);

    CsvTable table(header("table.csv"));
    ordered_json arms = ordered_json::array();
    for (const auto* a : {&cmp.gd_summary, &cmp.sgd_summary}) {
      table.row(a->arm, a->training_cost.mean, a->training_cost.std, a->test_cost.mean,
                a->test_cost.std, a->test_error.mean, a->test_error.std);
      arms.push_back({{"arm", a->arm},
                      {"training_cost", summary_json(a->training_cost)},
                      {"test_cost", summary_json(a->test_cost)},
                      {"test_error", summary_json(a->test_error)}});
    }
    emit("traces.csv", traces.text());
    emit("bands.csv", bands.text());
    emit("table.csv", table.text());
    emit_json({{"experiment", config_.experiment},
               {"architecture", arch.to_string()},
               {"train_size", data.train.size()},
               {"test_size", data.test.size()},
               {"budget", budget},
               {"gd_steps", gd.max_steps},
               {"sgd_steps", sgd.descent.max_steps},
               {"batch_size", sgd.batch_size},
               {"arms", arms}});
  }

  const ExperimentConfig& config_;
  RunManifest& manifest_;
  std::filesystem::path dir_;
};

}  // namespace

std::string manifest_json(const RunManifest& m) {
  ordered_json seeds = ordered_json::array();
  for (const auto& s : m.seeds) {
    seeds.push_back({{"purpose", s.purpose},
                     {"base_seed", s.base_seed},
                     {"count", s.count},
                     {"first_key", s.first_key}});
  }
  ordered_json outputs = ordered_json::array();
  for (const auto& o : m.outputs) {
    outputs.push_back({{"name", o.name}, {"bytes", o.bytes}, {"fnv1a64", o.checksum}});
  }
  ordered_json j = {{"experiment", m.config.experiment},
                    {"version", m.version},
                    {"started_at", m.started_at},
                    {"finished_at", m.finished_at},
                    {"status", m.status == ExitCode::kOk ? "ok" : "failed"},
                    {"exit_code", static_cast<int>(m.status)},
                    {"config", serialize_config(m.config)},
                    {"derived_seeds", seeds},
                    {"outputs", outputs}};
  if (!m.error.empty()) j["error"] = m.error;
  return j.dump(2) + "\n";
}

RunManifest run(const ExperimentConfig& config) {
  RunManifest manifest;
  manifest.config = config;
  manifest.version = std::string(version());
  manifest.started_at = utc_now();
  std::filesystem::path dir;
  try {
    dir = config.text("output_dir");
    Run(config, manifest).execute();
  } catch (const std::exception& e) {
    manifest.status = classify_failure(e);
    manifest.error = e.what();
  }
  manifest.finished_at = utc_now();
  if (!dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    std::ofstream out(dir / "manifest.json", std::ios::binary | std::ios::trunc);
    out << manifest_json(manifest);
    if (!out && manifest.status == ExitCode::kOk) {
      manifest.status = ExitCode::kData;
      manifest.error = "cannot write " + (dir / "manifest.json").string();
    }
  }
  return manifest;
}

}  // namespace floorlab
