#include "fsnet/model_io.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "fsnet/text.hpp"

namespace fsnet {

namespace {

constexpr std::string_view kModelMagic = "fsnet-model";
constexpr std::string_view kPrepMagic = "fsnet-preprocessing";
constexpr std::string_view kBinning = "equal-width;frequency=proportion;empty-bin=midpoint";

std::string join_sizes(const std::vector<std::size_t>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(values[i]);
  }
  return out;
}

std::string join_names(const std::vector<std::string>& names) {
  std::string out;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i].find_first_of("\t\n") != std::string::npos) {
      throw std::invalid_argument("name '" + names[i] + "' contains a tab or newline");
    }
    if (i) out += '\t';
    out += names[i];
  }
  return out;
}

void write_block(std::ostringstream& out, const std::string& name, const Matrix& m) {
  out << "block " << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out << ' ';
      out << text::format_double(row[c]);
    }
    out << '\n';
  }
}

// Line cursor with error messages that carry the line number.
class Reader {
 public:
  Reader(std::string_view content, std::string what) : content_(content), what_(std::move(what)) {}

  bool next(std::string_view& line) {
    while (pos_ < content_.size()) {
      std::size_t end = content_.find('\n', pos_);
      if (end == std::string_view::npos) end = content_.size();
      line = content_.substr(pos_, end - pos_);
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      pos_ = end + 1;
      ++line_no_;
      if (!text::trim(line).empty()) return true;
    }
    return false;
  }

  std::string_view expect_line(const char* context) {
    std::string_view line;
    if (!next(line)) fail(std::string("unexpected end of file while reading ") + context);
    return line;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw FormatError(what_ + ": line " + std::to_string(line_no_) + ": " + msg);
  }

  Matrix read_block(std::string_view header, std::string& name) {
    auto parts = text::split(header, ' ');
    if (parts.size() != 4 || parts[0] != "block") fail("expected 'block <name> <rows> <cols>'");
    name = std::string(parts[1]);
    auto rows = text::parse_integer(parts[2]);
    auto cols = text::parse_integer(parts[3]);
    if (!rows || !cols || *rows < 0 || *cols < 0) fail("bad block shape");
    Matrix m(static_cast<std::size_t>(*rows), static_cast<std::size_t>(*cols));
    for (std::size_t r = 0; r < m.rows(); ++r) {
      auto line = expect_line("block rows");
      auto cells = text::split(text::trim(line), ' ');
      if (cells.size() != m.cols()) {
        fail("block '" + name + "' row has " + std::to_string(cells.size()) + " values, expected " +
             std::to_string(m.cols()));
      }
      for (std::size_t c = 0; c < m.cols(); ++c) {
        auto v = text::parse_double(cells[c]);
        if (!v) fail("bad number '" + std::string(cells[c]) + "'");
        m(r, c) = *v;
      }
    }
    return m;
  }

 private:
  std::string_view content_;
  std::string what_;
  std::size_t pos_ = 0;
  std::size_t line_no_ = 0;
};

void read_magic(Reader& in, std::string_view magic) {
  auto line = in.expect_line("header");
  auto parts = text::split(text::trim(line), ' ');
  if (parts.size() != 2 || parts[0] != magic) in.fail("missing '" + std::string(magic) + "' header");
  auto version = text::parse_integer(parts[1]);
  if (!version || *version != kModelFormatVersion) {
    in.fail("unsupported format version '" + std::string(parts[1]) + "'");
  }
}

class KeyValues {
 public:
  explicit KeyValues(Reader& in) : in_(in) {}

  void add(std::string_view line) {
    auto eq = line.find('=');
    if (eq == std::string_view::npos) in_.fail("expected key=value");
    values_[std::string(line.substr(0, eq))] = std::string(line.substr(eq + 1));
  }

  const std::string& str(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) in_.fail("missing key '" + key + "'");
    return it->second;
  }

  double real(const std::string& key) const {
    auto v = text::parse_double(str(key));
    if (!v) in_.fail("key '" + key + "' is not a number");
    return *v;
  }

  std::size_t size(const std::string& key) const {
    auto v = text::parse_integer(str(key));
    if (!v || *v < 0) in_.fail("key '" + key + "' is not a count");
    return static_cast<std::size_t>(*v);
  }

  std::uint64_t u64(const std::string& key) const {
    const std::string& s = str(key);
    try {
      std::size_t used = 0;
      auto v = std::stoull(s, &used);
      if (used != s.size()) throw std::invalid_argument(s);
      return v;
    } catch (const std::exception&) {
      in_.fail("key '" + key + "' is not an unsigned integer");
    }
  }

  std::vector<std::size_t> sizes(const std::string& key) const {
    std::vector<std::size_t> out;
    const std::string& s = str(key);
    if (s.empty()) return out;
    for (auto cell : text::split(s, ',')) {
      auto v = text::parse_integer(cell);
      if (!v || *v < 0) in_.fail("key '" + key + "' holds a bad count list");
      out.push_back(static_cast<std::size_t>(*v));
    }
    return out;
  }

  std::vector<std::string> names(const std::string& key) const {
    std::vector<std::string> out;
    const std::string& s = str(key);
    if (s.empty()) return out;
    for (auto cell : text::split(s, '\t')) out.emplace_back(cell);
    return out;
  }

 private:
  Reader& in_;
  std::map<std::string, std::string> values_;
};

}  // namespace

std::string serialize_model(const FsNetModel& model) {
  const TrainConfig& c = model.config;
  std::ostringstream out;
  out << kModelMagic << ' ' << kModelFormatVersion << '\n'
      << "mode=" << to_string(c.mode) << '\n'
      << "inputs=" << model.arch.inputs << '\n'
      << "k=" << model.arch.selected << '\n'
      << "b=" << c.b << '\n'
      << "classes=" << model.arch.classes << '\n'
      << "encoder=" << join_sizes(model.arch.encoder) << '\n'
      << "classifier_hidden=" << join_sizes(model.arch.classifier_hidden) << '\n'
      << "decoder=" << join_sizes(model.arch.decoder) << '\n'
      << "biases=" << (c.biases ? 1 : 0) << '\n'
      << "lambda=" << text::format_double(c.lambda) << '\n'
      << "learning_rate=" << text::format_double(c.learning_rate) << '\n'
      << "epochs=" << c.epochs << '\n'
      << "tau0=" << text::format_double(c.tau0) << '\n'
      << "tau_end=" << text::format_double(c.tau_end) << '\n'
      << "dropout=" << text::format_double(c.dropout) << '\n'
      << "leaky_slope=" << text::format_double(c.leaky_slope) << '\n'
      << "rmsprop_decay=" << text::format_double(c.rmsprop_decay) << '\n'
      << "rmsprop_epsilon=" << text::format_double(c.rmsprop_epsilon) << '\n'
      << "seed=" << c.seed << '\n'
      << "inference_seed=" << c.inference_seed << '\n'
      << "standardize=" << (c.standardize ? 1 : 0) << '\n'
      << "raw_target=" << (c.raw_target ? 1 : 0) << '\n'
      << "binning=" << kBinning << '\n'
      << "labels=" << join_names(model.label_names) << '\n'
      << "manifest=" << model.manifest << '\n';
  write_block(out, "selection", model.params.selection);
  for (std::size_t i = 0; i < model.params.encoder.size(); ++i)
    write_block(out, "encoder." + std::to_string(i), model.params.encoder[i]);
  for (std::size_t i = 0; i < model.params.classifier.size(); ++i)
    write_block(out, "classifier." + std::to_string(i), model.params.classifier[i]);
  for (std::size_t i = 0; i < model.params.decoder.size(); ++i)
    write_block(out, "decoder." + std::to_string(i), model.params.decoder[i]);
  write_block(out, "reconstruction", model.params.reconstruction);
  for (std::size_t i = 0; i < model.params.encoder_bias.size(); ++i)
    write_block(out, "encoder_bias." + std::to_string(i), model.params.encoder_bias[i]);
  for (std::size_t i = 0; i < model.params.classifier_bias.size(); ++i)
    write_block(out, "classifier_bias." + std::to_string(i), model.params.classifier_bias[i]);
  for (std::size_t i = 0; i < model.params.decoder_bias.size(); ++i)
    write_block(out, "decoder_bias." + std::to_string(i), model.params.decoder_bias[i]);
  out << "selected=" << join_sizes(model.selected) << '\n' << "end\n";
  return out.str();
}

FsNetModel parse_model(std::string_view content) {
  Reader in(content, "model");
  read_magic(in, kModelMagic);
  KeyValues kv(in);
  std::string_view line;
  while (true) {
    line = in.expect_line("model header");
    if (line.starts_with("block ")) break;
    kv.add(line);
  }

  FsNetModel model;
  TrainConfig& c = model.config;
  try {
    c.mode = parse_mode(kv.str("mode"));
  } catch (const std::invalid_argument& e) {
    in.fail(e.what());
  }
  c.k = kv.size("k");
  c.b = kv.size("b");
  c.encoder = kv.sizes("encoder");
  c.classifier_hidden = kv.sizes("classifier_hidden");
  c.decoder = kv.sizes("decoder");
  c.biases = kv.size("biases") != 0;
  c.lambda = kv.real("lambda");
  c.learning_rate = kv.real("learning_rate");
  c.epochs = kv.size("epochs");
  c.tau0 = kv.real("tau0");
  c.tau_end = kv.real("tau_end");
  c.dropout = kv.real("dropout");
  c.leaky_slope = kv.real("leaky_slope");
  c.rmsprop_decay = kv.real("rmsprop_decay");
  c.rmsprop_epsilon = kv.real("rmsprop_epsilon");
  c.seed = kv.u64("seed");
  c.inference_seed = kv.u64("inference_seed");
  c.standardize = kv.size("standardize") != 0;
  c.raw_target = kv.size("raw_target") != 0;
  if (kv.str("binning") != kBinning) in.fail("unsupported binning convention '" + kv.str("binning") + "'");
  model.label_names = kv.names("labels");
  model.manifest = kv.str("manifest");
  try {
    model.arch = c.architecture(kv.size("inputs"), kv.size("classes"));
  } catch (const std::invalid_argument& e) {
    in.fail(e.what());
  }

  // Expected blocks in order; shapes are checked against a fresh initialization.
  Rng shape_rng(0);
  Parameters expected = init_params(model.arch, c.mode, c.b, shape_rng);
  std::vector<std::string> names{"selection"};
  for (std::size_t i = 0; i < expected.encoder.size(); ++i) names.push_back("encoder." + std::to_string(i));
  for (std::size_t i = 0; i < expected.classifier.size(); ++i) names.push_back("classifier." + std::to_string(i));
  for (std::size_t i = 0; i < expected.decoder.size(); ++i) names.push_back("decoder." + std::to_string(i));
  names.push_back("reconstruction");
  for (std::size_t i = 0; i < expected.encoder_bias.size(); ++i) names.push_back("encoder_bias." + std::to_string(i));
  for (std::size_t i = 0; i < expected.classifier_bias.size(); ++i) names.push_back("classifier_bias." + std::to_string(i));
  for (std::size_t i = 0; i < expected.decoder_bias.size(); ++i) names.push_back("decoder_bias." + std::to_string(i));

  auto slots = expected.all();
  for (std::size_t i = 0; i < slots.size(); ++i) {
    if (i > 0) line = in.expect_line("weight block");
    std::string name;
    Matrix m = in.read_block(line, name);
    if (name != names[i]) in.fail("expected block '" + names[i] + "', found '" + name + "'");
    if (m.rows() != slots[i]->rows() || m.cols() != slots[i]->cols()) {
      in.fail("block '" + name + "' has shape " + m.shape_string() + ", expected " +
              slots[i]->shape_string());
    }
    *slots[i] = std::move(m);
  }
  model.params = std::move(expected);

  line = in.expect_line("selected indices");
  if (!line.starts_with("selected=")) in.fail("expected 'selected='");
  KeyValues sel(in);
  sel.add(line);
  model.selected = sel.sizes("selected");
  if (model.selected.size() != model.arch.selected) in.fail("selected list does not hold K indices");
  for (std::size_t j : model.selected)
    if (j >= model.arch.inputs) in.fail("selected index " + std::to_string(j) + " out of range");
  line = in.expect_line("end marker");
  if (text::trim(line) != "end") in.fail("expected 'end'");
  if (model.label_names.size() != model.arch.classes) in.fail("label list does not match class count");
  return model;
}

std::string serialize_preprocessing(const FsNetModel& model) {
  std::ostringstream out;
  out << kPrepMagic << ' ' << kModelFormatVersion << '\n'
      << "features=" << model.arch.inputs << '\n'
      << "binning=" << kBinning << '\n'
      << "feature_names=" << join_names(model.feature_names) << '\n';
  const std::size_t d = model.transform.features();
  write_block(out, "mean", Matrix(1, d, model.transform.mean()));
  write_block(out, "scale", Matrix(1, d, model.transform.scale()));
  write_block(out, "embeddings", model.embeddings.table());
  out << "end\n";
  return out.str();
}

void parse_preprocessing(std::string_view content, FsNetModel& model) {
  Reader in(content, "preprocessing");
  read_magic(in, kPrepMagic);
  KeyValues kv(in);
  std::string_view line;
  while (true) {
    line = in.expect_line("preprocessing header");
    if (line.starts_with("block ")) break;
    kv.add(line);
  }
  const std::size_t d = kv.size("features");
  if (d != model.arch.inputs) {
    in.fail("covers " + std::to_string(d) + " features, model expects " +
            std::to_string(model.arch.inputs));
  }
  if (kv.str("binning") != kBinning) in.fail("unsupported binning convention");
  auto names = kv.names("feature_names");
  if (!names.empty() && names.size() != d) in.fail("feature name count does not match features");

  std::string name;
  Matrix mean = in.read_block(line, name);
  if (name != "mean" || mean.rows() != 1 || mean.cols() != d) in.fail("bad 'mean' block");
  Matrix scale = in.read_block(in.expect_line("scale block"), name);
  if (name != "scale" || scale.rows() != 1 || scale.cols() != d) in.fail("bad 'scale' block");
  Matrix table = in.read_block(in.expect_line("embedding block"), name);
  if (name != "embeddings") in.fail("expected 'embeddings' block");
  if (model.config.mode == Mode::predictor &&
      (table.rows() != d || table.cols() != model.config.b)) {
    in.fail("embedding table is " + table.shape_string() + ", expected " + std::to_string(d) +
            "x" + std::to_string(model.config.b));
  }
  if (text::trim(in.expect_line("end marker")) != "end") in.fail("expected 'end'");

  auto mv = mean.values();
  auto sv = scale.values();
  model.transform = Standardizer({mv.begin(), mv.end()}, {sv.begin(), sv.end()});
  model.embeddings = FeatureEmbeddings(std::move(table));
  model.feature_names = std::move(names);
}

std::filesystem::path preprocessing_path(const std::filesystem::path& model_path) {
  std::filesystem::path p = model_path;
  p += ".prep";
  return p;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("write failed for '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

void save_model(const std::filesystem::path& model_path, const FsNetModel& model) {
  const std::string model_text = serialize_model(model);
  const std::string prep_text = serialize_preprocessing(model);
  write_file_atomic(preprocessing_path(model_path), prep_text);
  write_file_atomic(model_path, model_text);
}

FsNetModel load_model(const std::filesystem::path& model_path, bool require_preprocessing) {
  FsNetModel model = parse_model(read_file(model_path));
  const auto prep = preprocessing_path(model_path);
  if (require_preprocessing || std::filesystem::exists(prep)) {
    parse_preprocessing(read_file(prep), model);
  }
  return model;
}

std::string format_train_report(const TrainReport& report) {
  std::ostringstream out;
  out << "epoch\ttau\tloss\tclassification_loss\treconstruction_loss\ttrain_accuracy\t"
         "test_accuracy\ttest_reconstruction_error\n";
  auto num = [](double v) { return std::isnan(v) ? std::string("NA") : text::format_double(v); };
  for (const auto& r : report.epochs) {
    out << r.epoch << '\t' << num(r.temperature) << '\t' << num(r.loss) << '\t'
        << num(r.classification_loss) << '\t' << num(r.reconstruction_loss) << '\t'
        << num(r.train_accuracy) << '\t' << num(r.test_accuracy) << '\t'
        << num(r.test_reconstruction_error) << '\n';
  }
  return out.str();
}

}  // namespace fsnet
