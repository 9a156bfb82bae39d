// fsnet command-line tool: train, select, predict, eval, synth, size, bench.
//
// Exit codes: 0 success, 1 training divergence, 2 usage or input error.

#include <openssl/evp.h>

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fsnet/data.hpp"
#include "fsnet/evaluator.hpp"
#include "fsnet/model_io.hpp"
#include "fsnet/text.hpp"
#include "fsnet/trainer.hpp"
#include "json.hpp"

#ifndef FSNET_VERSION
#define FSNET_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitDiverged = 1;
constexpr int kExitUsage = 2;

/// Bad flags, bad config or unreadable input.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open '" + path.string() + "'");
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::vector<char> buffer(1 << 16);
  while (in) {
    in.read(buffer.data(), static_cast<std::streamsize>(buffer.size()));
    EVP_DigestUpdate(ctx, buffer.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  EVP_DigestFinal_ex(ctx, digest, &length);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned int i = 0; i < length; ++i)
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  return hex.str();
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

fs::path with_suffix(const fs::path& path, const std::string& suffix) {
  fs::path p = path;
  p += suffix;
  return p;
}

// --- configuration ----------------------------------------------------------------

struct TrainFlags {
  std::string data;
  std::string test_data;
  std::string config;
  double train_fraction = 0.8;
  std::optional<std::uint64_t> split_seed;
  char delimiter = ',';
  bool no_header = false;
  int label_column = -1;

  std::optional<std::size_t> k, b, epochs;
  std::optional<double> lambda, lr, tau0, tau_end, dropout, leaky_slope;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> mode;
  std::optional<std::vector<std::size_t>> encoder, decoder, classifier_hidden;
  bool biases = false;
  bool raw_target = false;
  bool no_standardize = false;
};

fsnet::DelimitedOptions delimited(const TrainFlags& f) {
  return {f.delimiter, !f.no_header, f.label_column};
}

void add_data_flags(CLI::App* app, TrainFlags& f) {
  app->add_option("--delimiter", f.delimiter, "Field delimiter")->capture_default_str();
  app->add_flag("--no-header", f.no_header, "Data files have no header row");
  app->add_option("--label-column", f.label_column,
                  "Label column index; negative counts from the end")
      ->capture_default_str();
}

void add_train_flags(CLI::App* app, TrainFlags& f) {
  app->add_option("--data", f.data, "Training data (delimited text)")->required();
  app->add_option("--test-data", f.test_data, "Held-out data; otherwise --data is split");
  app->add_option("--train-fraction", f.train_fraction, "Train share when splitting --data")
      ->capture_default_str();
  app->add_option("--split-seed", f.split_seed, "Seed of the train/test split (default: --seed)");
  app->add_option("--config", f.config, "JSON config; flags override its values");
  add_data_flags(app, f);
  app->add_option("--k", f.k, "Number of selected features K (default 10)");
  app->add_option("--b", f.b, "Embedding size b (default 10)");
  app->add_option("--epochs", f.epochs, "Training epochs E (default 4000)");
  app->add_option("--lambda", f.lambda, "Reconstruction weight (default 1)");
  app->add_option("--lr", f.lr, "RMSprop learning rate (default 1e-3)");
  app->add_option("--tau0", f.tau0, "Initial temperature (default 10)");
  app->add_option("--tauE", f.tau_end, "Final temperature (default 0.01)");
  app->add_option("--dropout", f.dropout, "Dropout rate (default 0.2)");
  app->add_option("--leaky-slope", f.leaky_slope, "leakyReLU negative slope (default 0.2)");
  app->add_option("--seed", f.seed, "Training seed (default 0)");
  app->add_option("--mode", f.mode, "predictor | dense (default predictor)");
  app->add_option("--encoder", f.encoder, "Encoder widths (default 64 32 16)")->expected(1, -1);
  app->add_option("--decoder", f.decoder, "Decoder widths (default 32 64)")->expected(1, -1);
  app->add_option("--classifier-hidden", f.classifier_hidden, "Hidden classifier widths")
      ->expected(0, -1);
  app->add_flag("--biases", f.biases, "Add bias terms to the encoder, classifier and decoder");
  app->add_flag("--raw-target", f.raw_target, "Reconstruct untransformed inputs");
  app->add_flag("--no-standardize", f.no_standardize, "Do not z-score inputs");
}

template <typename T>
T json_get(const json& j, const std::string& key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw UsageError("config key '" + key + "': " + e.what());
  }
}

// Built-in defaults, overridden by the config file, overridden by flags.
fsnet::TrainConfig resolve_config(const TrainFlags& f, double& train_fraction) {
  fsnet::TrainConfig c;
  if (!f.config.empty()) {
    json j;
    try {
      j = json::parse(fsnet::read_file(f.config));
    } catch (const json::exception& e) {
      throw UsageError("config '" + f.config + "': " + e.what());
    } catch (const std::runtime_error& e) {
      throw UsageError(e.what());
    }
    if (!j.is_object()) throw UsageError("config '" + f.config + "' must hold a JSON object");
    for (const auto& [key, value] : j.items()) {
      if (key == "k") c.k = json_get<std::size_t>(j, key);
      else if (key == "b") c.b = json_get<std::size_t>(j, key);
      else if (key == "epochs") c.epochs = json_get<std::size_t>(j, key);
      else if (key == "lambda") c.lambda = json_get<double>(j, key);
      else if (key == "lr") c.learning_rate = json_get<double>(j, key);
      else if (key == "tau0") c.tau0 = json_get<double>(j, key);
      else if (key == "tauE") c.tau_end = json_get<double>(j, key);
      else if (key == "dropout") c.dropout = json_get<double>(j, key);
      else if (key == "leaky_slope") c.leaky_slope = json_get<double>(j, key);
      else if (key == "rmsprop_decay") c.rmsprop_decay = json_get<double>(j, key);
      else if (key == "rmsprop_epsilon") c.rmsprop_epsilon = json_get<double>(j, key);
      else if (key == "seed") c.seed = json_get<std::uint64_t>(j, key);
      else if (key == "inference_seed") c.inference_seed = json_get<std::uint64_t>(j, key);
      else if (key == "encoder") c.encoder = json_get<std::vector<std::size_t>>(j, key);
      else if (key == "decoder") c.decoder = json_get<std::vector<std::size_t>>(j, key);
      else if (key == "classifier_hidden") c.classifier_hidden = json_get<std::vector<std::size_t>>(j, key);
      else if (key == "biases") c.biases = json_get<bool>(j, key);
      else if (key == "standardize") c.standardize = json_get<bool>(j, key);
      else if (key == "raw_target") c.raw_target = json_get<bool>(j, key);
      else if (key == "train_fraction") train_fraction = json_get<double>(j, key);
      else if (key == "mode") {
        try {
          c.mode = fsnet::parse_mode(json_get<std::string>(j, key));
        } catch (const std::invalid_argument& e) {
          throw UsageError(std::string("config: ") + e.what());
        }
      } else {
        throw UsageError("config '" + f.config + "': unknown key '" + key + "'");
      }
    }
  }
  if (f.k) c.k = *f.k;
  if (f.b) c.b = *f.b;
  if (f.epochs) c.epochs = *f.epochs;
  if (f.lambda) c.lambda = *f.lambda;
  if (f.lr) c.learning_rate = *f.lr;
  if (f.tau0) c.tau0 = *f.tau0;
  if (f.tau_end) c.tau_end = *f.tau_end;
  if (f.dropout) c.dropout = *f.dropout;
  if (f.leaky_slope) c.leaky_slope = *f.leaky_slope;
  if (f.seed) c.seed = *f.seed;
  if (f.encoder) c.encoder = *f.encoder;
  if (f.decoder) c.decoder = *f.decoder;
  if (f.classifier_hidden) c.classifier_hidden = *f.classifier_hidden;
  if (f.biases) c.biases = true;
  if (f.raw_target) c.raw_target = true;
  if (f.no_standardize) c.standardize = false;
  if (f.mode) {
    try {
      c.mode = fsnet::parse_mode(*f.mode);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
  }
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw UsageError("train fraction must lie in (0, 1)");
  }
  return c;
}

json config_json(const fsnet::TrainConfig& c) {
  return json{{"k", c.k},
              {"b", c.b},
              {"epochs", c.epochs},
              {"lambda", c.lambda},
              {"lr", c.learning_rate},
              {"tau0", c.tau0},
              {"tauE", c.tau_end},
              {"dropout", c.dropout},
              {"leaky_slope", c.leaky_slope},
              {"rmsprop_decay", c.rmsprop_decay},
              {"rmsprop_epsilon", c.rmsprop_epsilon},
              {"seed", c.seed},
              {"inference_seed", c.inference_seed},
              {"mode", fsnet::to_string(c.mode)},
              {"encoder", c.encoder},
              {"decoder", c.decoder},
              {"classifier_hidden", c.classifier_hidden},
              {"biases", c.biases},
              {"standardize", c.standardize},
              {"raw_target", c.raw_target}};
}

json manifest_base(const std::string& command, const std::string& started) {
  return json{{"tool", "fsnet"},
              {"version", FSNET_VERSION},
              {"command", command},
              {"started", started},
              {"finished", utc_now()}};
}

json input_digest(const fs::path& path) {
  return json{{"path", path.string()}, {"sha256", sha256_file(path)}};
}

fsnet::Dataset load_data(const std::string& path, const fsnet::DelimitedOptions& options) {
  if (!fs::exists(path)) throw UsageError("data file '" + path + "' does not exist");
  try {
    return fsnet::load_delimited(path, options);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
}

struct Split {
  fsnet::Dataset train;
  std::optional<fsnet::Dataset> test;
};

// Relabels `data` with the codes of `label_names` (a training label set).
fsnet::Dataset recode_labels(const fsnet::Dataset& data, const std::vector<std::string>& label_names,
                             const std::string& what) {
  std::map<std::string, int> codes;
  for (std::size_t i = 0; i < label_names.size(); ++i) codes[label_names[i]] = static_cast<int>(i);
  std::vector<int> y;
  y.reserve(data.samples());
  for (int label : data.y()) {
    const std::string& name = data.label_names()[static_cast<std::size_t>(label)];
    auto it = codes.find(name);
    if (it == codes.end()) throw UsageError(what + ": label '" + name + "' unknown to the model");
    y.push_back(it->second);
  }
  return fsnet::Dataset(data.x(), std::move(y), label_names.size(), data.feature_names(), label_names);
}

Split prepare_split(const TrainFlags& f, double train_fraction, std::uint64_t seed) {
  fsnet::Dataset all = load_data(f.data, delimited(f));
  if (!f.test_data.empty()) {
    fsnet::Dataset test = load_data(f.test_data, delimited(f));
    if (test.features() != all.features()) {
      throw UsageError("test data has " + std::to_string(test.features()) +
                       " features, training data has " + std::to_string(all.features()));
    }
    return {all, recode_labels(test, all.label_names(), f.test_data)};
  }
  try {
    auto [train, test] = fsnet::split(all, fsnet::SplitSpec{train_fraction, f.split_seed.value_or(seed), true});
    return {std::move(train), std::move(test)};
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

// --- commands ----------------------------------------------------------------------

int cmd_train(const TrainFlags& f, const std::string& model_path, bool quiet) {
  const std::string started = utc_now();
  double train_fraction = f.train_fraction;
  const fsnet::TrainConfig config = resolve_config(f, train_fraction);
  Split data = prepare_split(f, train_fraction, config.seed);
  if (config.k > data.train.features()) {
    throw UsageError("K=" + std::to_string(config.k) + " exceeds the " +
                     std::to_string(data.train.features()) + " available features");
  }

  const fs::path model_file = model_path;
  const fs::path manifest_file = with_suffix(model_file, ".manifest.json");
  const fs::path report_file = with_suffix(model_file, ".report.tsv");

  fsnet::EpochCallback progress;
  if (!quiet) {
    const std::size_t every = std::max<std::size_t>(1, config.epochs / 10);
    progress = [every, &config](const fsnet::EpochRecord& r) {
      if (r.epoch % every == 0 || r.epoch == config.epochs) {
        std::cerr << "epoch " << r.epoch << "/" << config.epochs << " tau=" << r.temperature
                  << " loss=" << r.loss << " train_acc=" << r.train_accuracy;
        if (!std::isnan(r.test_accuracy)) std::cerr << " test_acc=" << r.test_accuracy;
        std::cerr << "\n";
      }
    };
  }
  fsnet::TrainResult result =
      fsnet::train(data.train, config, data.test ? &*data.test : nullptr, progress);
  result.model.manifest = manifest_file.filename().string();

  json inputs = json::array({input_digest(f.data)});
  if (!f.test_data.empty()) inputs.push_back(input_digest(f.test_data));
  json manifest = manifest_base("train", started);
  manifest["config"] = config_json(config);
  manifest["seed"] = config.seed;
  manifest["split"] = f.test_data.empty()
                          ? json{{"train_fraction", train_fraction},
                                 {"seed", f.split_seed.value_or(config.seed)},
                                 {"stratified", true}}
                          : json{{"test_data", f.test_data}};
  manifest["inputs"] = inputs;
  manifest["outputs"] = {model_file.filename().string(),
                         fsnet::preprocessing_path(model_file).filename().string(),
                         report_file.filename().string()};
  manifest["selected"] = result.model.selected;

  const std::string report = "# manifest=" + result.model.manifest + "\n" +
                             fsnet::format_train_report(result.report);
  fsnet::save_model(model_file, result.model);
  fsnet::write_file_atomic(report_file, report);
  fsnet::write_file_atomic(manifest_file, manifest.dump(2) + "\n");
  if (!quiet) {
    const auto& last = result.report.epochs.back();
    std::cerr << "selected " << result.model.selected.size() << " features; wrote "
              << model_file.string() << "\n";
    if (!std::isnan(last.test_accuracy)) std::cout << "test_accuracy=" << last.test_accuracy << "\n";
  }
  return kExitOk;
}

fsnet::FsNetModel load_model_or_fail(const std::string& path, bool require_preprocessing) {
  if (!fs::exists(path)) throw UsageError("model file '" + path + "' does not exist");
  try {
    return fsnet::load_model(path, require_preprocessing);
  } catch (const std::exception& e) {
    throw UsageError("cannot load model '" + path + "': " + e.what());
  }
}

int cmd_select(const std::string& model_path) {
  const fsnet::FsNetModel model = load_model_or_fail(model_path, false);
  for (std::size_t j : model.selected) {
    std::cout << j;
    if (j < model.feature_names.size()) std::cout << '\t' << model.feature_names[j];
    std::cout << '\n';
  }
  return kExitOk;
}

fsnet::Dataset load_for_model(const fsnet::FsNetModel& model, const std::string& path,
                              const fsnet::DelimitedOptions& options) {
  fsnet::Dataset data = load_data(path, options);
  if (data.features() != model.arch.inputs) {
    throw UsageError("dimension mismatch: model expects " + std::to_string(model.arch.inputs) +
                     " features (shape n x " + std::to_string(model.arch.inputs) + "), data '" +
                     path + "' is " + data.x().shape_string());
  }
  return recode_labels(data, model.label_names, path);
}

int cmd_eval(const std::string& model_path, const std::string& data_path, const std::string& out,
             std::size_t mi_bins, const fsnet::DelimitedOptions& options) {
  const std::string started = utc_now();
  const fsnet::FsNetModel model = load_model_or_fail(model_path, true);
  const fsnet::Dataset test = load_for_model(model, data_path, options);
  if (mi_bins < 1) throw UsageError("--mi-bins must be >= 1");
  fsnet::EvalReport report = fsnet::evaluate(model, test, mi_bins);
  const fs::path out_file = out;
  const fs::path manifest_file = with_suffix(out_file, ".manifest.json");
  report.manifest = manifest_file.filename().string();

  json manifest = manifest_base("eval", started);
  manifest["inputs"] = {input_digest(model_path), input_digest(data_path)};
  manifest["config"] = json{{"mi_bins", mi_bins}, {"model_manifest", model.manifest}};
  manifest["seed"] = model.config.seed;
  manifest["outputs"] = {out_file.filename().string()};
  fsnet::write_file_atomic(out_file, fsnet::format_eval_report(report));
  fsnet::write_file_atomic(manifest_file, manifest.dump(2) + "\n");
  std::cout << fsnet::format_eval_report(report);
  return kExitOk;
}

int cmd_predict(const std::string& model_path, const std::string& data_path, const std::string& out,
                const fsnet::DelimitedOptions& options) {
  const fsnet::FsNetModel model = load_model_or_fail(model_path, true);
  const fsnet::Dataset data = load_for_model(model, data_path, options);
  const fsnet::Matrix probs = fsnet::predict(model, data.x());
  std::ostringstream table;
  table << "label";
  for (const auto& name : model.label_names) table << "\tp_" << name;
  table << '\n';
  const auto labels = fsnet::predict_labels(model, data.x());
  for (std::size_t i = 0; i < data.samples(); ++i) {
    table << model.label_names[static_cast<std::size_t>(labels[i])];
    for (double p : probs.row(i)) table << '\t' << fsnet::text::format_double(p);
    table << '\n';
  }
  if (out.empty()) {
    std::cout << table.str();
  } else {
    fsnet::write_file_atomic(out, table.str());
  }
  return kExitOk;
}

int cmd_synth(std::size_t n, std::size_t d, std::size_t k_star, std::uint64_t seed,
              const std::string& out) {
  const std::string started = utc_now();
  fsnet::SyntheticDataset synthetic;
  try {
    synthetic = fsnet::make_synthetic(n, d, k_star, seed);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const fs::path data_file = out;
  const fs::path planted_file = with_suffix(data_file, ".planted");
  const fs::path manifest_file = with_suffix(data_file, ".manifest.json");
  const fs::path tmp_data = with_suffix(data_file, ".tmp");
  const fs::path tmp_planted = with_suffix(planted_file, ".tmp");
  fsnet::write_delimited(tmp_data, synthetic.data);
  fsnet::write_planted(tmp_planted, synthetic);
  {
    std::ofstream append(tmp_planted, std::ios::app);
    append << "manifest=" << manifest_file.filename().string() << "\n";
  }
  fs::rename(tmp_data, data_file);
  fs::rename(tmp_planted, planted_file);

  json manifest = manifest_base("synth", started);
  manifest["config"] = json{{"n", n}, {"d", d}, {"k_star", k_star}};
  manifest["seed"] = seed;
  manifest["inputs"] = json::array();
  manifest["outputs"] = {data_file.filename().string(), planted_file.filename().string()};
  manifest["planted"] = synthetic.planted;
  fsnet::write_file_atomic(manifest_file, manifest.dump(2) + "\n");
  return kExitOk;
}

int cmd_size(std::size_t d, const TrainFlags& f) {
  double fraction = f.train_fraction;
  const fsnet::TrainConfig c = resolve_config(f, fraction);
  fsnet::Architecture arch;
  try {
    arch = c.architecture(d, 2);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  std::cout << "d=" << d << "\n"
            << "k=" << c.k << "\n"
            << "b=" << c.b << "\n"
            << "param_count_predictor=" << fsnet::parameter_count(arch, fsnet::Mode::predictor, c.b) << "\n"
            << "param_count_dense=" << fsnet::parameter_count(arch, fsnet::Mode::dense, c.b) << "\n"
            << "compression_ratio=" << fsnet::text::format_double(fsnet::compression_ratio(arch, d, c.b)) << "\n"
            << "file_size_ratio=" << fsnet::text::format_double(fsnet::measured_size_ratio(arch, c.b)) << "\n";
  return kExitOk;
}

std::pair<std::uint64_t, std::uint64_t> parse_seed_range(const std::string& range) {
  const auto dots = range.find("..");
  auto parse = [&](std::string_view s) {
    auto v = fsnet::text::parse_integer(s);
    if (!v || *v < 0) throw UsageError("bad seed range '" + range + "' (expected a..b)");
    return static_cast<std::uint64_t>(*v);
  };
  if (dots == std::string::npos) {
    const auto v = parse(range);
    return {v, v};
  }
  const auto lo = parse(std::string_view(range).substr(0, dots));
  const auto hi = parse(std::string_view(range).substr(dots + 2));
  if (hi < lo) throw UsageError("bad seed range '" + range + "': end before start");
  return {lo, hi};
}

// Independent runs over a seed range; each seed draws its own split and initialization.
int cmd_bench(const TrainFlags& f, const std::string& seeds, double reference, double tolerance) {
  double fraction = f.train_fraction;
  const fsnet::TrainConfig base = resolve_config(f, fraction);
  const auto [lo, hi] = parse_seed_range(seeds);
  std::vector<double> accuracies;
  std::cout << "seed\ttest_accuracy\tselected\n";
  for (std::uint64_t s = lo; s <= hi; ++s) {
    fsnet::TrainConfig c = base;
    c.seed = s;
    TrainFlags per_seed = f;
    per_seed.split_seed = f.split_seed ? *f.split_seed : s;
    Split data = prepare_split(per_seed, fraction, s);
    if (!data.test) throw UsageError("bench needs a held-out split");
    const fsnet::TrainResult result = fsnet::train(data.train, c);
    const double acc = fsnet::accuracy(result.model, *data.test);
    accuracies.push_back(acc);
    std::cout << s << '\t' << fsnet::text::format_double(acc) << '\t';
    for (std::size_t i = 0; i < result.model.selected.size(); ++i)
      std::cout << (i ? "," : "") << result.model.selected[i];
    std::cout << std::endl;
  }
  double mean = 0.0;
  for (double a : accuracies) mean += a;
  mean /= static_cast<double>(accuracies.size());
  double var = 0.0;
  for (double a : accuracies) var += (a - mean) * (a - mean);
  const double sd = accuracies.size() > 1 ? std::sqrt(var / static_cast<double>(accuracies.size() - 1)) : 0.0;
  std::cout << "runs=" << accuracies.size() << "\n"
            << "mean_accuracy=" << fsnet::text::format_double(mean) << "\n"
            << "sd_accuracy=" << fsnet::text::format_double(sd) << "\n";
  if (!std::isnan(reference)) {
    const double deviation = mean - reference;
    std::cout << "reference=" << fsnet::text::format_double(reference) << "\n"
              << "deviation=" << fsnet::text::format_double(deviation) << "\n"
              << "within_tolerance=" << (std::abs(deviation) <= tolerance ? "yes" : "no") << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fsnet: supervised feature selection with weight-predictor networks"};
  app.set_version_flag("--version", FSNET_VERSION);
  app.require_subcommand(1);

  TrainFlags train_flags;
  std::string model_path = "fsnet.model";
  bool quiet = false;
  auto* train = app.add_subcommand("train", "Train a selector; writes model, report and manifest");
  add_train_flags(train, train_flags);
  train->add_option("--model", model_path, "Output model path")->capture_default_str();
  train->add_flag("--quiet", quiet, "No progress output");

  std::string select_model;
  auto* select = app.add_subcommand("select", "Print the selected feature indices and names");
  select->add_option("--model", select_model, "Model file")->required();

  std::string eval_model, eval_data, eval_out;
  std::size_t mi_bins = fsnet::kDefaultMiBins;
  TrainFlags eval_flags;
  auto* eval = app.add_subcommand("eval", "Evaluate a model on labelled data");
  eval->add_option("--model", eval_model, "Model file")->required();
  eval->add_option("--data", eval_data, "Test data")->required();
  eval->add_option("--out", eval_out, "Report path (key=value lines)")->required();
  eval->add_option("--mi-bins", mi_bins, "Histogram bins of the MI estimate")->capture_default_str();
  add_data_flags(eval, eval_flags);

  std::string predict_model, predict_data, predict_out;
  TrainFlags predict_flags;
  auto* predict = app.add_subcommand("predict", "Class probabilities for every row of a data file");
  predict->add_option("--model", predict_model, "Model file")->required();
  predict->add_option("--data", predict_data, "Data in the training layout")->required();
  predict->add_option("--out", predict_out, "Output table (default stdout)");
  add_data_flags(predict, predict_flags);

  std::size_t synth_n = 200, synth_d = 500, synth_k = 5;
  std::uint64_t synth_seed = 0;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth", "Generate a planted-feature synthetic dataset");
  synth->add_option("--n", synth_n, "Samples")->capture_default_str();
  synth->add_option("--d", synth_d, "Features")->capture_default_str();
  synth->add_option("--k-star", synth_k, "Planted features")->capture_default_str();
  synth->add_option("--seed", synth_seed, "Generator seed")->capture_default_str();
  synth->add_option("--out", synth_out, "Data path; <out>.planted lists the planted indices")->required();

  std::size_t size_d = 7129;
  TrainFlags size_flags;
  auto* size = app.add_subcommand("size", "Parameter counts and compression ratio for an input width");
  size->add_option("--d", size_d, "Input dimension")->capture_default_str();
  size->add_option("--k", size_flags.k, "Selected features (default 10)");
  size->add_option("--b", size_flags.b, "Embedding size (default 10)");
  size->add_option("--encoder", size_flags.encoder, "Encoder widths")->expected(1, -1);
  size->add_option("--decoder", size_flags.decoder, "Decoder widths")->expected(1, -1);
  size->add_option("--config", size_flags.config, "JSON config");

  TrainFlags bench_flags;
  std::string bench_seeds = "0..19";
  double reference = std::nan("");
  double tolerance = 0.08;
  auto* bench = app.add_subcommand("bench", "Repeated random-split runs with a summary");
  add_train_flags(bench, bench_flags);
  bench->add_option("--seeds", bench_seeds, "Seed range a..b")->capture_default_str();
  bench->add_option("--reference", reference, "Reference mean accuracy to compare against");
  bench->add_option("--tolerance", tolerance, "Allowed deviation from --reference")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*train) return cmd_train(train_flags, model_path, quiet);
    if (*select) return cmd_select(select_model);
    if (*eval) return cmd_eval(eval_model, eval_data, eval_out, mi_bins, delimited(eval_flags));
    if (*predict) return cmd_predict(predict_model, predict_data, predict_out, delimited(predict_flags));
    if (*synth) return cmd_synth(synth_n, synth_d, synth_k, synth_seed, synth_out);
    if (*size) return cmd_size(size_d, size_flags);
    if (*bench) return cmd_bench(bench_flags, bench_seeds, reference, tolerance);
  } catch (const fsnet::DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDiverged;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
