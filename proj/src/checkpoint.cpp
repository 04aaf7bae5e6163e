#include "startnet/checkpoint.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

namespace startnet {

using nlohmann::json;

NamedTensor to_named(const std::string& name, const Matrix& m) {
  NamedTensor t;
  t.name = name;
  t.rows = m.rows();
  t.cols = m.cols();
  t.data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) t.data.push_back(m(r, c));
  return t;
}

NamedTensor to_named(const std::string& name, const Vector& v) {
  NamedTensor t;
  t.name = name;
  t.rows = v.size();
  t.cols = 1;
  t.data.assign(v.data(), v.data() + v.size());
  return t;
}

Matrix matrix_from(const NamedTensor& t) {
  Matrix m(t.rows, t.cols);
  if (static_cast<long>(t.data.size()) != t.rows * t.cols) {
    throw ValidationError("checkpoint tensor '" + t.name + "': data length " +
                          std::to_string(t.data.size()) + " does not match shape " +
                          std::to_string(t.rows) + "x" + std::to_string(t.cols));
  }
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < t.rows; ++r)
    for (Eigen::Index c = 0; c < t.cols; ++c) m(r, c) = t.data[k++];
  return m;
}

Vector vector_from(const NamedTensor& t) {
  if (t.cols != 1) {
    throw ValidationError("checkpoint tensor '" + t.name + "': expected a vector, got " +
                          std::to_string(t.rows) + "x" + std::to_string(t.cols));
  }
  Matrix m = matrix_from(t);
  return m.col(0);
}

long Checkpoint::meta_at(const std::string& key) const {
  auto it = meta.find(key);
  if (it == meta.end()) throw ValidationError("checkpoint: missing meta field '" + key + "'");
  return it->second;
}

const NamedTensor& Checkpoint::tensor_at(const std::string& name) const {
  auto it = tensors.find(name);
  if (it == tensors.end()) throw ValidationError("checkpoint: missing tensor '" + name + "'");
  return it->second;
}

void write_checkpoint(const std::filesystem::path& path, const std::string& kind,
                      const std::map<std::string, long>& meta,
                      const std::vector<NamedTensor>& tensors, const std::string& config_echo) {
  json doc;
  doc["format_version"] = kFormatVersion;
  doc["kind"] = kind;
  doc["meta"] = meta;
  json jt = json::object();
  for (const NamedTensor& t : tensors) {
    for (double v : t.data) {
      if (!std::isfinite(v)) {
        throw NumericError("write_checkpoint: non-finite value in tensor '" + t.name + "'");
      }
    }
    jt[t.name] = json{{"rows", t.rows}, {"cols", t.cols}, {"data", t.data}};
  }
  doc["tensors"] = std::move(jt);
  if (!config_echo.empty()) doc["config"] = json::parse(config_echo);
  std::ofstream out(path);
  if (!out) throw ValidationError("write_checkpoint: cannot open '" + path.string() + "'");
  out << doc.dump(1) << "\n";
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("read_checkpoint: cannot open '" + path.string() + "'");
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw ValidationError("read_checkpoint: '" + path.string() + "' is not valid JSON: " +
                          e.what());
  }
  try {
    if (doc.at("format_version").get<int>() != kFormatVersion) {
      throw ValidationError("read_checkpoint: unsupported format_version in '" + path.string() +
                            "'");
    }
    Checkpoint ckpt;
    ckpt.kind = doc.at("kind").get<std::string>();
    for (auto& [key, value] : doc.at("meta").items()) ckpt.meta[key] = value.get<long>();
    for (auto& [name, jt] : doc.at("tensors").items()) {
      NamedTensor t;
      t.name = name;
      t.rows = jt.at("rows").get<long>();
      t.cols = jt.at("cols").get<long>();
      t.data = jt.at("data").get<std::vector<double>>();
      for (double v : t.data) {
        if (!std::isfinite(v)) {
          throw ValidationError("read_checkpoint: non-finite value in tensor '" + name + "'");
        }
      }
      ckpt.tensors.emplace(name, std::move(t));
    }
    return ckpt;
  } catch (const json::exception& e) {
    throw ValidationError("read_checkpoint: malformed checkpoint '" + path.string() + "': " +
                          e.what());
  }
}

}  // namespace startnet
