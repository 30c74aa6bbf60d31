#include "ffgen/checkpoint.hpp"

#include <fstream>
#include <sstream>
#include <vector>

#include "ffgen/errors.hpp"
#include "ffgen/format.hpp"

namespace ffgen::trainer {

namespace {

void write_matrix(std::string& out, const Eigen::MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out += ' ';
      out += format_double(m(i, j));
    }
    out += '\n';
  }
}

void write_vector(std::string& out, const Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i > 0) out += ' ';
    out += format_double(v[i]);
  }
  out += '\n';
}

void write_layers(std::string& out, const std::vector<DenseLayer>& layers, std::string_view weight_tag,
                  std::string_view bias_tag) {
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto& w = layers[l].weight;
    out += "layer " + std::to_string(l) + ' ' + std::string(weight_tag) + ' ' + std::to_string(w.rows()) + ' ' +
           std::to_string(w.cols()) + '\n';
    write_matrix(out, w);
    out += "layer " + std::to_string(l) + ' ' + std::string(bias_tag) + ' ' + std::to_string(layers[l].bias.size()) +
           '\n';
    write_vector(out, layers[l].bias);
  }
}

class Reader {
 public:
  explicit Reader(std::string_view text) : text_(text) {}

  bool done() {
    skip_blank();
    return pos_ >= text_.size();
  }

  std::vector<std::string_view> tokens() {
    skip_blank();
    if (pos_ >= text_.size()) throw ParseError("checkpoint: unexpected end of file", line_ + 1);
    auto end = text_.find('\n', pos_);
    if (end == std::string_view::npos) end = text_.size();
    std::string_view line = text_.substr(pos_, end - pos_);
    pos_ = end + 1;
    ++line_;
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
      const std::size_t start = i;
      while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
      if (i > start) out.push_back(line.substr(start, i - start));
    }
    return out;
  }

  std::size_t line() const { return line_; }

  double number(std::string_view tok) const {
    const auto v = parse_double(tok);
    if (!v) throw ParseError("checkpoint: bad number '" + std::string(tok) + "'", line_);
    return *v;
  }

  long long integer(std::string_view tok) const {
    const auto v = parse_int(tok);
    if (!v || *v < 0) throw ParseError("checkpoint: bad integer '" + std::string(tok) + "'", line_);
    return *v;
  }

  std::vector<std::string_view> expect(std::string_view head, std::size_t count) {
    auto toks = tokens();
    if (toks.size() != count || toks[0] != head) {
      throw ParseError("checkpoint: expected '" + std::string(head) + "' with " + std::to_string(count - 1) +
                           " field(s)",
                       line_);
    }
    return toks;
  }

  std::vector<double> row(std::size_t n) {
    auto toks = tokens();
    if (toks.size() != n) {
      throw ParseError("checkpoint: expected " + std::to_string(n) + " values, got " + std::to_string(toks.size()),
                       line_);
    }
    std::vector<double> out;
    out.reserve(n);
    for (auto t : toks) out.push_back(number(t));
    return out;
  }

 private:
  void skip_blank() {
    while (pos_ < text_.size()) {
      auto end = text_.find('\n', pos_);
      if (end == std::string_view::npos) end = text_.size();
      const auto line = trim(text_.substr(pos_, end - pos_));
      if (!line.empty() && line.front() != '#') return;
      pos_ = end + 1;
      ++line_;
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 0;
};

void read_layers(Reader& r, std::vector<DenseLayer>& layers, std::string_view weight_tag, std::string_view bias_tag) {
  for (std::size_t l = 0; l < layers.size(); ++l) {
    auto head = r.tokens();
    if (head.size() != 5 || head[0] != "layer" || r.integer(head[1]) != static_cast<long long>(l) ||
        head[2] != weight_tag) {
      throw ParseError("checkpoint: expected 'layer " + std::to_string(l) + ' ' + std::string(weight_tag) + "'",
                       r.line());
    }
    auto& w = layers[l].weight;
    if (r.integer(head[3]) != w.rows() || r.integer(head[4]) != w.cols()) {
      throw ParseError("checkpoint: layer shape disagrees with layer_widths", r.line());
    }
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      const auto values = r.row(static_cast<std::size_t>(w.cols()));
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = values[static_cast<std::size_t>(j)];
    }
    auto bhead = r.tokens();
    auto& b = layers[l].bias;
    if (bhead.size() != 4 || bhead[0] != "layer" || r.integer(bhead[1]) != static_cast<long long>(l) ||
        bhead[2] != bias_tag || r.integer(bhead[3]) != b.size()) {
      throw ParseError("checkpoint: expected 'layer " + std::to_string(l) + ' ' + std::string(bias_tag) + "'",
                       r.line());
    }
    const auto values = r.row(static_cast<std::size_t>(b.size()));
    for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = values[static_cast<std::size_t>(i)];
  }
}

}  // namespace

std::string serialize_checkpoint(const Checkpoint& ckpt) {
  const auto& s = ckpt.spec;
  if (s.schedule) throw InvalidInput("checkpoint: custom Gaussian schedules cannot be serialised");
  std::string out;
  out += "ffgen-checkpoint " + std::to_string(kCheckpointMajor) + '.' + std::to_string(kCheckpointMinor) + '\n';
  out += "spec.family " + std::string(trajectory::to_string(s.family)) + '\n';
  out += "spec.dim " + std::to_string(s.dim) + '\n';
  out += "spec.horizon " + format_double(s.horizon) + '\n';
  out += "spec.t_min " + format_double(s.t_min) + '\n';
  out += "spec.curve_exponent " + format_double(s.curve_exponent) + '\n';
  out += "spec.overlap_count " + std::to_string(s.overlap_count) + '\n';
  out += "spec.sigma_min " + format_double(s.sigma_min) + '\n';
  out += "spec.sigma_max " + format_double(s.sigma_max) + '\n';
  out += "spec.poisson_amplitude " + format_double(s.poisson_amplitude) + '\n';
  out += "prior.kind " + std::string(sampler::to_string(s.prior.kind)) + '\n';
  out += "prior.sigma " + format_double(s.prior.sigma) + '\n';
  out += "prior.tau " + format_double(s.prior.tau) + '\n';
  out += "prior.max_exponent " + format_double(s.prior.max_exponent) + '\n';
  out += "prior.bound " + format_double(s.prior.bound) + '\n';
  out += "prior.radius " + format_double(s.prior.radius) + '\n';
  out += "layer_widths";
  for (auto w : ckpt.net.widths()) out += ' ' + std::to_string(w);
  out += '\n';
  write_layers(out, ckpt.net.layers(), "weight", "bias");
  if (ckpt.optim) {
    const auto& o = *ckpt.optim;
    out += "optimizer 1\n";
    out += "optimizer.step " + std::to_string(o.step) + '\n';
    out += "optimizer.learning_rate " + format_double(o.learning_rate) + '\n';
    out += "optimizer.adam " + format_double(o.beta1) + ' ' + format_double(o.beta2) + ' ' +
           format_double(o.epsilon) + '\n';
    write_layers(out, o.first_moment, "m_weight", "m_bias");
    write_layers(out, o.second_moment, "v_weight", "v_bias");
  } else {
    out += "optimizer 0\n";
  }
  out += "end\n";
  return out;
}

Checkpoint parse_checkpoint(std::string_view text) {
  Reader r(text);
  auto magic = r.tokens();
  if (magic.size() != 2 || magic[0] != "ffgen-checkpoint") {
    throw ParseError("checkpoint: missing 'ffgen-checkpoint <version>' header", r.line());
  }
  const auto dot = magic[1].find('.');
  const auto major = parse_int(magic[1].substr(0, dot));
  if (!major || dot == std::string_view::npos) throw ParseError("checkpoint: malformed version", r.line());
  if (*major != kCheckpointMajor) {
    throw ParseError("checkpoint: unsupported major version " + std::to_string(*major) + " (reader supports " +
                         std::to_string(kCheckpointMajor) + ")",
                     r.line());
  }

  Checkpoint ckpt;
  auto& s = ckpt.spec;
  s.family = trajectory::parse_family(r.expect("spec.family", 2)[1]);
  s.dim = static_cast<std::size_t>(r.integer(r.expect("spec.dim", 2)[1]));
  s.horizon = r.number(r.expect("spec.horizon", 2)[1]);
  s.t_min = r.number(r.expect("spec.t_min", 2)[1]);
  s.curve_exponent = r.number(r.expect("spec.curve_exponent", 2)[1]);
  s.overlap_count = static_cast<std::size_t>(r.integer(r.expect("spec.overlap_count", 2)[1]));
  s.sigma_min = r.number(r.expect("spec.sigma_min", 2)[1]);
  s.sigma_max = r.number(r.expect("spec.sigma_max", 2)[1]);
  s.poisson_amplitude = r.number(r.expect("spec.poisson_amplitude", 2)[1]);
  s.prior.kind = sampler::parse_prior_kind(r.expect("prior.kind", 2)[1]);
  s.prior.sigma = r.number(r.expect("prior.sigma", 2)[1]);
  s.prior.tau = r.number(r.expect("prior.tau", 2)[1]);
  s.prior.max_exponent = r.number(r.expect("prior.max_exponent", 2)[1]);
  s.prior.bound = r.number(r.expect("prior.bound", 2)[1]);
  s.prior.radius = r.number(r.expect("prior.radius", 2)[1]);

  auto widths_tok = r.tokens();
  if (widths_tok.size() < 3 || widths_tok[0] != "layer_widths") {
    throw ParseError("checkpoint: expected 'layer_widths' with at least two widths", r.line());
  }
  std::vector<std::size_t> widths;
  for (std::size_t i = 1; i < widths_tok.size(); ++i) widths.push_back(static_cast<std::size_t>(r.integer(widths_tok[i])));
  try {
    ckpt.net = FieldNet(widths);
  } catch (const InvalidInput& e) {
    throw ParseError(std::string("checkpoint: ") + e.what(), r.line());
  }
  read_layers(r, ckpt.net.layers(), "weight", "bias");

  const auto has_optim = r.integer(r.expect("optimizer", 2)[1]);
  if (has_optim == 1) {
    OptimState o = OptimState::for_net(ckpt.net, 1.0);
    o.step = static_cast<std::size_t>(r.integer(r.expect("optimizer.step", 2)[1]));
    o.learning_rate = r.number(r.expect("optimizer.learning_rate", 2)[1]);
    const auto adam = r.expect("optimizer.adam", 4);
    o.beta1 = r.number(adam[1]);
    o.beta2 = r.number(adam[2]);
    o.epsilon = r.number(adam[3]);
    read_layers(r, o.first_moment, "m_weight", "m_bias");
    read_layers(r, o.second_moment, "v_weight", "v_bias");
    ckpt.optim = std::move(o);
  } else if (has_optim != 0) {
    throw ParseError("checkpoint: optimizer flag must be 0 or 1", r.line());
  }
  r.expect("end", 1);
  if (!r.done()) throw ParseError("checkpoint: trailing content after 'end'", r.line() + 1);
  if (ckpt.net.data_dim() != s.dim) throw ParseError("checkpoint: network output width differs from spec.dim", r.line());
  return ckpt;
}

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  const std::string text = serialize_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out << text;
  if (!out) throw IoError("failed writing checkpoint " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read checkpoint " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_checkpoint(buf.str());
}

}  // namespace ffgen::trainer
