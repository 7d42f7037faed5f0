#include "tapt/checkpoint.hpp"

#include "tapt/errors.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace tapt {

namespace {

constexpr char kMagic[8] = {'T', 'A', 'P', 'T', 'C', 'K', 'P', 'T'};

void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xFFu);
  out.write(b, 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw DataError("checkpoint: truncated integer");
  return std::uint32_t(b[0]) | std::uint32_t(b[1]) << 8 | std::uint32_t(b[2]) << 16 |
         std::uint32_t(b[3]) << 24;
}

std::string get_bytes(std::istream& in, std::uint32_t n) {
  std::string s(n, '\0');
  if (n > 0 && !in.read(s.data(), n)) throw DataError("checkpoint: truncated string");
  return s;
}

}  // namespace

template <typename Scalar>
void Checkpoint::add(std::string name, const Matrix<Scalar>& m) {
  NamedTensor t;
  t.name = std::move(name);
  t.dims = {static_cast<std::uint32_t>(m.rows()), static_cast<std::uint32_t>(m.cols())};
  t.data.resize(static_cast<std::size_t>(m.size()));
  for (Index i = 0; i < m.size(); ++i) t.data[static_cast<std::size_t>(i)] = static_cast<float>(m.data()[i]);
  add(std::move(t));
}

void Checkpoint::add(NamedTensor tensor) {
  if (contains(tensor.name)) throw std::invalid_argument("checkpoint: duplicate tensor " + tensor.name);
  std::size_t n = 1;
  for (auto d : tensor.dims) n *= d;
  if (n != tensor.data.size()) throw ShapeError("checkpoint: payload size does not match dims of " + tensor.name);
  tensors_.push_back(std::move(tensor));
}

bool Checkpoint::contains(std::string_view name) const {
  for (const auto& t : tensors_) {
    if (t.name == name) return true;
  }
  return false;
}

const NamedTensor& Checkpoint::at(std::string_view name) const {
  for (const auto& t : tensors_) {
    if (t.name == name) return t;
  }
  throw DataError("checkpoint: missing tensor " + std::string(name));
}

const std::string& Checkpoint::meta(const std::string& key) const {
  auto it = metadata.find(key);
  if (it == metadata.end()) throw DataError("checkpoint: missing metadata key " + key);
  return it->second;
}

template <typename Scalar>
Matrix<Scalar> Checkpoint::matrix(std::string_view name, Index rows, Index cols) const {
  const NamedTensor& t = at(name);
  if (t.dims.size() != 2 || t.dims[0] != rows || t.dims[1] != cols) {
    std::string dims;
    for (auto d : t.dims) dims += (dims.empty() ? "" : "x") + std::to_string(d);
    throw DataError("checkpoint: tensor " + std::string(name) + " has dims [" + dims + "], expected " +
                    shape_string(rows, cols));
  }
  Matrix<Scalar> m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<Scalar>(t.data[static_cast<std::size_t>(i)]);
  return m;
}

void write_checkpoint(const Checkpoint& ckpt, std::ostream& out) {
  out.write(kMagic, sizeof kMagic);
  put_u32(out, Checkpoint::kVersion);
  std::string meta;
  for (const auto& [k, v] : ckpt.metadata) {
    if (k.find('=') != std::string::npos || k.find('\n') != std::string::npos || v.find('\n') != std::string::npos) {
      throw std::invalid_argument("checkpoint: metadata entry not representable: " + k);
    }
    meta += k + "=" + v + "\n";
  }
  put_u32(out, static_cast<std::uint32_t>(meta.size()));
  out.write(meta.data(), static_cast<std::streamsize>(meta.size()));
  for (const auto& t : ckpt.tensors()) {
    put_u32(out, static_cast<std::uint32_t>(t.name.size()));
    out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    put_u32(out, static_cast<std::uint32_t>(t.dims.size()));
    for (auto d : t.dims) put_u32(out, d);
    for (float f : t.data) put_u32(out, std::bit_cast<std::uint32_t>(f));
  }
  if (!out) throw std::runtime_error("checkpoint: write failed");
}

Checkpoint read_checkpoint(std::istream& in) {
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) throw DataError("checkpoint: bad magic");
  const std::uint32_t version = get_u32(in);
  if (version != Checkpoint::kVersion) {
    throw DataError("checkpoint: unsupported version " + std::to_string(version));
  }
  Checkpoint ckpt;
  const std::string meta = get_bytes(in, get_u32(in));
  std::istringstream lines(meta);
  std::string line;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw DataError("checkpoint: malformed metadata line: " + line);
    ckpt.metadata[line.substr(0, eq)] = line.substr(eq + 1);
  }
  while (in.peek() != std::char_traits<char>::eof()) {
    NamedTensor t;
    t.name = get_bytes(in, get_u32(in));
    const std::uint32_t ndim = get_u32(in);
    if (ndim > 8) throw DataError("checkpoint: implausible rank for " + t.name);
    std::size_t n = 1;
    for (std::uint32_t i = 0; i < ndim; ++i) {
      t.dims.push_back(get_u32(in));
      n *= t.dims.back();
    }
    t.data.resize(n);
    for (std::size_t i = 0; i < n; ++i) t.data[i] = std::bit_cast<float>(get_u32(in));
    ckpt.add(std::move(t));
  }
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  write_checkpoint(ckpt, out);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  return read_checkpoint(in);
}

std::string to_bytes(const Checkpoint& ckpt) {
  std::ostringstream out(std::ios::binary);
  write_checkpoint(ckpt, out);
  return out.str();
}

template void Checkpoint::add(std::string, const Matrix<float>&);
template void Checkpoint::add(std::string, const Matrix<double>&);
template Matrix<float> Checkpoint::matrix(std::string_view, Index, Index) const;
template Matrix<double> Checkpoint::matrix(std::string_view, Index, Index) const;

}  // namespace tapt
