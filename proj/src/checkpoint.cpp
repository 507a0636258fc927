#include "leorach/checkpoint.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace leorach {

namespace {

constexpr const char* kMagic = "leorach-checkpoint";
constexpr int kVersion = 1;

std::string hex_double(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%a", v);
  return buf;
}

double parse_double(const std::string& token) {
  const char* begin = token.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (end == begin || *end != '\0')
    throw std::runtime_error("checkpoint: bad numeric token '" + token + "'");
  return v;
}

const char* activation_name(Activation a) {
  return a == Activation::Tanh ? "tanh" : "identity";
}

Activation parse_activation(const std::string& name) {
  if (name == "tanh") return Activation::Tanh;
  if (name == "identity") return Activation::Identity;
  throw std::runtime_error("checkpoint: unknown activation '" + name + "'");
}

void write_values(std::ostringstream& out, const char* tag, int index,
                  const std::vector<double>& values) {
  out << tag << index;
  for (double v : values) out << ' ' << hex_double(v);
  out << '\n';
}

}  // namespace

std::string serialize_checkpoint(const SegmentMap& segments) {
  std::ostringstream out;
  out << kMagic << ' ' << kVersion << '\n';
  for (const auto& [name, net] : segments) {
    out << "segment " << name << '\n';
    out << "dims";
    for (int d : net.layer_dims) out << ' ' << d;
    out << '\n';
    out << "activations " << activation_name(net.hidden_activation) << ' '
        << activation_name(net.output_activation) << '\n';
    for (int l = 0; l < net.num_layers(); ++l) {
      write_values(out, "W", l, net.weights[static_cast<std::size_t>(l)].data);
      write_values(out, "b", l, net.biases[static_cast<std::size_t>(l)]);
    }
  }
  return out.str();
}

SegmentMap parse_checkpoint(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("checkpoint: empty file");
  {
    std::istringstream header(line);
    std::string magic;
    int version = 0;
    header >> magic >> version;
    if (magic != kMagic) throw std::runtime_error("checkpoint: bad magic '" + magic + "'");
    if (version != kVersion)
      throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
  }

  SegmentMap segments;
  std::string current_name;
  DenseNet current;
  bool have_segment = false;

  auto flush = [&]() {
    if (!have_segment) return;
    if (current.weights.size() + 1 != current.layer_dims.size())
      throw std::runtime_error("checkpoint: segment '" + current_name + "' is incomplete");
    segments[current_name] = std::move(current);
    current = DenseNet{};
  };

  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "segment") {
      flush();
      ls >> current_name;
      have_segment = true;
    } else if (key == "dims") {
      int d;
      while (ls >> d) current.layer_dims.push_back(d);
      if (current.layer_dims.size() < 2)
        throw std::runtime_error("checkpoint: segment '" + current_name + "' needs >= 2 dims");
    } else if (key == "activations") {
      std::string hidden, output;
      ls >> hidden >> output;
      current.hidden_activation = parse_activation(hidden);
      current.output_activation = parse_activation(output);
    } else if (key[0] == 'W' || key[0] == 'b') {
      const int layer = std::stoi(key.substr(1));
      const std::size_t l = static_cast<std::size_t>(layer);
      if (l + 1 >= current.layer_dims.size())
        throw std::runtime_error("checkpoint: layer index out of range in '" + key + "'");
      std::vector<double> values;
      std::string token;
      while (ls >> token) values.push_back(parse_double(token));
      const int rows = current.layer_dims[l + 1];
      const int cols = current.layer_dims[l];
      if (key[0] == 'W') {
        if (static_cast<int>(values.size()) != rows * cols)
          throw std::runtime_error("checkpoint: wrong weight count for " + key);
        Matrix w(rows, cols);
        w.data = std::move(values);
        if (current.weights.size() != l)
          throw std::runtime_error("checkpoint: out-of-order weights for " + key);
        current.weights.push_back(std::move(w));
      } else {
        if (static_cast<int>(values.size()) != rows)
          throw std::runtime_error("checkpoint: wrong bias count for " + key);
        if (current.biases.size() != l)
          throw std::runtime_error("checkpoint: out-of-order biases for " + key);
        current.biases.push_back(std::move(values));
      }
    } else {
      throw std::runtime_error("checkpoint: unknown line '" + line + "'");
    }
  }
  flush();
  return segments;
}

void save_checkpoint(const std::filesystem::path& path, const SegmentMap& segments) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("checkpoint: cannot open '" + path.string() + "' for write");
  out << serialize_checkpoint(segments);
  if (!out) throw std::runtime_error("checkpoint: write to '" + path.string() + "' failed");
}

SegmentMap load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_checkpoint(buf.str());
}

}  // namespace leorach
