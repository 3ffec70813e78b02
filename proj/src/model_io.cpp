#include "lfkit/model_io.hpp"

#include <fmt/format.h>

#include <cstring>
#include <sstream>

#include "lfkit/core.hpp"
#include "lfkit/dataset_io.hpp"

namespace lfkit {

namespace {

constexpr std::string_view kMagic = "lfkit-model 1";

std::string num(double v) { return fmt::format("{:.17g}", v); }

ModelFile base(const std::string& type, const std::string& training_hash) {
  ModelFile f;
  f.header["type"] = type;
  f.header["training_hash"] = training_hash;
  return f;
}

void expect_type(const ModelFile& f, const std::string& type, const std::filesystem::path& path) {
  if (f.at("type") != type) {
    throw Error(ErrorKind::config_error,
                fmt::format("{} holds a {} model, expected {}", path.string(), f.at("type"), type));
  }
}

void expect_payload(const ModelFile& f, std::size_t n, const std::filesystem::path& path) {
  if (f.payload.size() != n) {
    throw Error(ErrorKind::config_error,
                fmt::format("{} payload has {} values, expected {}", path.string(), f.payload.size(), n));
  }
}

Eigen::VectorXd to_vector(const double* data, std::size_t n) {
  return Eigen::Map<const Eigen::VectorXd>(data, static_cast<Eigen::Index>(n));
}

void append(std::vector<double>& out, const Eigen::VectorXd& v) {
  out.insert(out.end(), v.data(), v.data() + v.size());
}

}  // namespace

const std::string& ModelFile::at(const std::string& key) const {
  const auto it = header.find(key);
  if (it == header.end()) throw Error(ErrorKind::config_error, "model header lacks " + key);
  return it->second;
}

double ModelFile::number(const std::string& key) const {
  const auto& text = at(key);
  try {
    return std::stod(text);
  } catch (const std::exception&) {
    throw Error(ErrorKind::config_error, fmt::format("model header {}={} is not a number", key, text));
  }
}

void write_model_file(const std::filesystem::path& path, const ModelFile& file) {
  std::string out(kMagic);
  out += '\n';
  for (const auto& [k, v] : file.header) {
    if (k == "payload_doubles") continue;
    out += fmt::format("{}={}\n", k, v);
  }
  out += fmt::format("payload_doubles={}\n\n", file.payload.size());
  out.append(reinterpret_cast<const char*>(file.payload.data()), file.payload.size() * sizeof(double));
  write_file(path, out);
}

ModelFile read_model_file(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  std::size_t pos = 0;
  auto next_line = [&]() -> std::string {
    const auto nl = bytes.find('\n', pos);
    if (nl == std::string::npos) throw Error(ErrorKind::config_error, "truncated model file " + path.string());
    std::string line = bytes.substr(pos, nl - pos);
    pos = nl + 1;
    return line;
  };
  if (next_line() != kMagic) throw Error(ErrorKind::config_error, "not a model file: " + path.string());
  ModelFile f;
  for (std::string line = next_line(); !line.empty(); line = next_line()) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(ErrorKind::config_error, "bad model header line: " + line);
    f.header[line.substr(0, eq)] = line.substr(eq + 1);
  }
  const auto n = static_cast<std::size_t>(f.number("payload_doubles"));
  if (bytes.size() - pos != n * sizeof(double)) {
    throw Error(ErrorKind::config_error, "model payload size mismatch in " + path.string());
  }
  f.payload.resize(n);
  std::memcpy(f.payload.data(), bytes.data() + pos, n * sizeof(double));
  return f;
}

void save_svm(const std::filesystem::path& path, const LinearSvmModel& m,
              const std::string& training_hash) {
  auto f = base("svm", training_hash);
  f.header["cost"] = num(m.cost);
  f.header["bias"] = num(m.bias);
  f.header["dims"] = std::to_string(m.w.size());
  f.header["converged"] = m.stats.converged ? "true" : "false";
  append(f.payload, m.w);
  write_model_file(path, f);
}

LinearSvmModel load_svm(const std::filesystem::path& path) {
  const auto f = read_model_file(path);
  expect_type(f, "svm", path);
  LinearSvmModel m;
  m.cost = f.number("cost");
  m.bias = f.number("bias");
  const auto d = static_cast<std::size_t>(f.number("dims"));
  expect_payload(f, d, path);
  m.w = to_vector(f.payload.data(), d);
  m.stats.converged = f.at("converged") == "true";
  return m;
}

void save_svr(const std::filesystem::path& path, const LinearSvrModel& m,
              const std::string& training_hash) {
  auto f = base("svr", training_hash);
  f.header["cost"] = num(m.cost);
  f.header["epsilon"] = num(m.epsilon);
  f.header["bias"] = num(m.bias);
  f.header["dims"] = std::to_string(m.w.size());
  f.header["converged"] = m.stats.converged ? "true" : "false";
  append(f.payload, m.w);
  write_model_file(path, f);
}

LinearSvrModel load_svr(const std::filesystem::path& path) {
  const auto f = read_model_file(path);
  expect_type(f, "svr", path);
  LinearSvrModel m;
  m.cost = f.number("cost");
  m.epsilon = f.number("epsilon");
  m.bias = f.number("bias");
  const auto d = static_cast<std::size_t>(f.number("dims"));
  expect_payload(f, d, path);
  m.w = to_vector(f.payload.data(), d);
  m.stats.converged = f.at("converged") == "true";
  return m;
}

void save_platt(const std::filesystem::path& path, const PlattModel& m,
                const std::string& training_hash) {
  auto f = base("platt", training_hash);
  f.header["A"] = num(m.a);
  f.header["B"] = num(m.b);
  f.header["degenerate"] = m.degenerate ? "true" : "false";
  write_model_file(path, f);
}

PlattModel load_platt(const std::filesystem::path& path) {
  const auto f = read_model_file(path);
  expect_type(f, "platt", path);
  PlattModel m;
  m.a = f.number("A");
  m.b = f.number("B");
  m.degenerate = f.at("degenerate") == "true";
  return m;
}

void save_pca(const std::filesystem::path& path, const PcaModel& m,
              const std::string& training_hash) {
  auto f = base("pca", training_hash);
  f.header["dims"] = std::to_string(m.dimension());
  f.header["rank"] = std::to_string(m.rank());
  f.header["requested"] = std::to_string(m.requested);
  f.header["rank_deficient"] = m.rank_deficient ? "true" : "false";
  append(f.payload, m.mean);
  f.payload.insert(f.payload.end(), m.components.data(), m.components.data() + m.components.size());
  f.payload.insert(f.payload.end(), m.explained_variance.begin(), m.explained_variance.end());
  write_model_file(path, f);
}

PcaModel load_pca(const std::filesystem::path& path) {
  const auto f = read_model_file(path);
  expect_type(f, "pca", path);
  const auto d = static_cast<std::size_t>(f.number("dims"));
  const auto k = static_cast<std::size_t>(f.number("rank"));
  expect_payload(f, d + d * k + k, path);
  PcaModel m;
  m.requested = static_cast<std::size_t>(f.number("requested"));
  m.rank_deficient = f.at("rank_deficient") == "true";
  m.mean = to_vector(f.payload.data(), d);
  m.components = Eigen::Map<const Eigen::MatrixXd>(f.payload.data() + d, static_cast<Eigen::Index>(d),
                                                   static_cast<Eigen::Index>(k));
  m.explained_variance.assign(f.payload.begin() + static_cast<std::ptrdiff_t>(d + d * k), f.payload.end());
  return m;
}

void save_standardizer(const std::filesystem::path& path, const Standardizer& s,
                       const std::string& training_hash) {
  auto f = base("standardizer", training_hash);
  f.header["dims"] = std::to_string(s.mean.size());
  append(f.payload, s.mean);
  append(f.payload, s.scale);
  write_model_file(path, f);
}

Standardizer load_standardizer(const std::filesystem::path& path) {
  const auto f = read_model_file(path);
  expect_type(f, "standardizer", path);
  const auto d = static_cast<std::size_t>(f.number("dims"));
  expect_payload(f, 2 * d, path);
  Standardizer s;
  s.mean = to_vector(f.payload.data(), d);
  s.scale = to_vector(f.payload.data() + d, d);
  return s;
}

}  // namespace lfkit
