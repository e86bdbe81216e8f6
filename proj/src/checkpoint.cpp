#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "kiae/csv.hpp"
#include "kiae/error.hpp"
#include "kiae/model.hpp"

namespace kiae {

namespace {

constexpr const char* kMagic = "KIAE-CHECKPOINT 1";

std::string hex(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::hex);
  if (ec != std::errc{}) throw FormatError("checkpoint: cannot format value");
  return std::string(buf, end);
}

double parse_hex(const std::string& token, const std::string& path) {
  std::string_view text = token;
  bool negative = !text.empty() && text.front() == '-';
  if (negative) text.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v, std::chars_format::hex);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw ParseError(path + ": bad tensor value '" + token + "'");
  return negative ? -v : v;
}

std::string optional_text(const std::optional<std::size_t>& v) {
  return v ? std::to_string(*v) : "none";
}

}  // namespace

void save_checkpoint(const KiaeModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write checkpoint '" + path + "'");
  const auto& c = model.config();
  out << kMagic << '\n';
  out << "config input_dim " << c.input_dim << '\n';
  out << "config lstm_hidden " << c.lstm_hidden << '\n';
  out << "config fc_a " << c.fc_a << '\n';
  out << "config fc_b " << c.fc_b << '\n';
  out << "config repr_dim " << c.repr_dim << '\n';
  out << "config omega1 " << hex(c.omega1) << '\n';
  out << "config omega2 " << hex(c.omega2) << '\n';
  out << "config batch_size " << c.batch_size << '\n';
  out << "config epochs " << c.epochs << '\n';
  out << "config learning_rate " << hex(c.learning_rate) << '\n';
  out << "config sequence_mode " << to_string(c.sequence_mode) << '\n';
  out << "config window " << optional_text(c.window) << '\n';
  out << "config jump " << optional_text(c.jump) << '\n';
  out << "config repr_activation " << to_string(c.repr_activation) << '\n';
  out << "config seed " << c.seed << '\n';
  for (const auto& b : model.blocks()) {
    out << "tensor " << b.name << ' ' << b.rows << ' ' << b.cols << '\n';
    auto values = model.view(b);
    for (std::size_t r = 0; r < b.rows; ++r) {
      for (std::size_t col = 0; col < b.cols; ++col) {
        if (col > 0) out << ' ';
        out << hex(values[r * b.cols + col]);
      }
      out << '\n';
    }
  }
  out << "end\n";
  if (!out) throw IoError("write failed for checkpoint '" + path + "'");
}

KiaeModel load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open checkpoint '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line != kMagic)
    throw FormatError(path + ": not a checkpoint (bad header)");

  std::map<std::string, std::string> fields;
  std::streampos tensors_start = in.tellg();
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string kind, key, value;
    ls >> kind;
    if (kind != "config") break;
    ls >> key >> value;
    fields[key] = value;
    tensors_start = in.tellg();
  }
  auto get = [&](const std::string& key) -> const std::string& {
    auto it = fields.find(key);
    if (it == fields.end()) throw FormatError(path + ": missing config field '" + key + "'");
    return it->second;
  };
  auto count = [&](const std::string& key) -> std::size_t { return std::stoull(get(key)); };
  auto opt = [&](const std::string& key) -> std::optional<std::size_t> {
    const auto& v = get(key);
    if (v == "none") return std::nullopt;
    return std::stoull(v);
  };

  KiaeConfig c;
  try {
    c.input_dim = count("input_dim");
    c.lstm_hidden = count("lstm_hidden");
    c.fc_a = count("fc_a");
    c.fc_b = count("fc_b");
    c.repr_dim = count("repr_dim");
    c.omega1 = parse_hex(get("omega1"), path);
    c.omega2 = parse_hex(get("omega2"), path);
    c.batch_size = count("batch_size");
    c.epochs = count("epochs");
    c.learning_rate = parse_hex(get("learning_rate"), path);
    c.sequence_mode = parse_sequence_mode(get("sequence_mode"));
    c.window = opt("window");
    c.jump = opt("jump");
    c.repr_activation = parse_repr_activation(get("repr_activation"));
    c.seed = std::stoull(get("seed"));
  } catch (const std::logic_error&) {
    throw FormatError(path + ": malformed config field");
  }

  KiaeModel model = KiaeModel::zeros(c);
  in.clear();
  in.seekg(tensors_start);
  auto params = model.parameters();
  for (const auto& b : model.blocks()) {
    if (!std::getline(in, line)) throw FormatError(path + ": truncated before tensor " + b.name);
    std::istringstream hs(line);
    std::string tag, name;
    std::size_t rows = 0, cols = 0;
    hs >> tag >> name >> rows >> cols;
    if (tag != "tensor" || name != b.name || rows != b.rows || cols != b.cols) {
      throw FormatError(path + ": expected tensor " + b.name + " " + std::to_string(b.rows) +
                        "x" + std::to_string(b.cols) + ", found '" + line + "'");
    }
    for (std::size_t r = 0; r < rows; ++r) {
      if (!std::getline(in, line)) throw FormatError(path + ": truncated tensor " + b.name);
      std::istringstream vs(line);
      std::string token;
      for (std::size_t col = 0; col < cols; ++col) {
        if (!(vs >> token)) throw FormatError(path + ": short row in tensor " + b.name);
        params[b.offset + r * cols + col] = parse_hex(token, path);
      }
    }
  }
  if (!std::getline(in, line) || line != "end") throw FormatError(path + ": missing end marker");
  return model;
}

}  // namespace kiae
