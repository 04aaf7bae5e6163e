#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "startnet/common.hpp"

namespace startnet {

/// One tensor in the checkpoint container, flattened row-major.
struct NamedTensor {
  std::string name;
  long rows = 0;
  long cols = 1;  // 1 for vectors
  std::vector<double> data;
};

NamedTensor to_named(const std::string& name, const Matrix& m);
NamedTensor to_named(const std::string& name, const Vector& v);
Matrix matrix_from(const NamedTensor& t);
Vector vector_from(const NamedTensor& t);

/// JSON checkpoint container: format version, kind tag, integer metadata
/// (dimensions), and a map of row-major tensors.
struct Checkpoint {
  std::string kind;
  std::map<std::string, long> meta;
  std::map<std::string, NamedTensor> tensors;

  long meta_at(const std::string& key) const;
  const NamedTensor& tensor_at(const std::string& name) const;
};

void write_checkpoint(const std::filesystem::path& path, const std::string& kind,
                      const std::map<std::string, long>& meta,
                      const std::vector<NamedTensor>& tensors,
                      const std::string& config_echo = {});

Checkpoint read_checkpoint(const std::filesystem::path& path);

}  // namespace startnet
