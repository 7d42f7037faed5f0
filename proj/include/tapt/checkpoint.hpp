#pragma once

#include "tapt/tensor.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace tapt {

/// One record of the TAPTCKPT container.
struct NamedTensor {
  std::string name;
  std::vector<std::uint32_t> dims;
  std::vector<float> data;
};

/// Named float32 tensors plus key=value metadata.
///
/// Layout (all integers little-endian):
///   "TAPTCKPT" | u32 version | u32 len, metadata bytes ("key=value\n"...)
///   then per tensor: u32 name len, name | u32 ndim, u32 dims... | f32 payload
class Checkpoint {
 public:
  static constexpr std::uint32_t kVersion = 1;

  std::map<std::string, std::string> metadata;

  template <typename Scalar>
  void add(std::string name, const Matrix<Scalar>& m);
  void add(NamedTensor tensor);

  bool contains(std::string_view name) const;
  const NamedTensor& at(std::string_view name) const;
  const std::vector<NamedTensor>& tensors() const { return tensors_; }

  /// The named tensor as a matrix; throws DataError unless it is 2-D with the
  /// expected shape.
  template <typename Scalar>
  Matrix<Scalar> matrix(std::string_view name, Index rows, Index cols) const;

  const std::string& meta(const std::string& key) const;

 private:
  std::vector<NamedTensor> tensors_;
};

void write_checkpoint(const Checkpoint& ckpt, std::ostream& out);
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint read_checkpoint(std::istream& in);
Checkpoint load_checkpoint(const std::filesystem::path& path);

std::string to_bytes(const Checkpoint& ckpt);

}  // namespace tapt
