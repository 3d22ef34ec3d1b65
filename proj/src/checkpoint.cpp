#include "gtn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

namespace gtn {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

namespace {

constexpr std::size_t kMagicSize = 8;

class Fnv1a {
 public:
  void update(const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      hash_ ^= p[i];
      hash_ *= 1099511628211ULL;
    }
  }
  std::uint64_t value() const { return hash_; }

 private:
  std::uint64_t hash_ = 1469598103934665603ULL;
};

class Writer {
 public:
  template <typename T>
  void put(const T& value) {
    append(&value, sizeof(T));
  }
  void append(const void* data, std::size_t len) {
    const auto* p = static_cast<const char*>(data);
    buffer_.insert(buffer_.end(), p, p + len);
  }
  void put_matrix(const Matrix& m) {
    append(m.data(), static_cast<std::size_t>(m.size()) * sizeof(double));
  }
  const std::vector<char>& buffer() const { return buffer_; }

 private:
  std::vector<char> buffer_;
};

class Reader {
 public:
  Reader(const std::vector<char>& data, std::string path) : data_(data), path_(std::move(path)) {}

  template <typename T>
  T get() {
    T value;
    read(&value, sizeof(T));
    return value;
  }
  void read(void* out, std::size_t len) {
    if (len > data_.size() - pos_) throw CheckpointError(path_ + ": truncated checkpoint");
    std::memcpy(out, data_.data() + pos_, len);
    pos_ += len;
  }
  void get_matrix(Matrix& m, Index rows, Index cols) {
    m.resize(rows, cols);
    read(m.data(), static_cast<std::size_t>(m.size()) * sizeof(double));
  }
  std::size_t position() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }

 private:
  const std::vector<char>& data_;
  std::string path_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const ModelState& state, const std::string& path) {
  const Index rows = state.e_in.rows();
  const Index d = state.e_in.cols();
  if (rows != state.num_users + state.num_items) throw ShapeError("state rows != n + m");
  if (state.adam_m.rows() != rows || state.adam_m.cols() != d || state.adam_v.rows() != rows ||
      state.adam_v.cols() != d) {
    throw ShapeError("optimizer moments do not mirror the embeddings");
  }

  Writer w;
  w.append(kCheckpointMagic, kMagicSize);
  w.put<std::uint64_t>(state.num_users);
  w.put<std::uint64_t>(state.num_items);
  w.put<std::uint64_t>(d);
  w.put<std::uint64_t>(state.seed);
  w.put<std::int64_t>(state.epoch);
  w.put<std::int64_t>(state.adam_step);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(state.spec.backend));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(state.spec.combine));
  w.put<std::uint32_t>(static_cast<std::uint32_t>(state.spec.num_layers));
  w.put<std::uint32_t>(0);
  w.put<double>(state.spec.lambda);
  w.put_matrix(state.e_in);
  w.put_matrix(state.adam_m);
  w.put_matrix(state.adam_v);
  Fnv1a h;
  h.update(w.buffer().data(), w.buffer().size());
  w.put<std::uint64_t>(h.value());

  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot write checkpoint " + path);
    out.write(w.buffer().data(), static_cast<std::streamsize>(w.buffer().size()));
    if (!out) throw CheckpointError("failed writing checkpoint " + path);
  }
  std::filesystem::rename(tmp, path);
}

ModelState load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path);
  const std::vector<char> data((std::istreambuf_iterator<char>(in)),
                               std::istreambuf_iterator<char>());
  Reader r(data, path);

  char magic[kMagicSize];
  r.read(magic, kMagicSize);
  if (std::memcmp(magic, kCheckpointMagic, kMagicSize) != 0) {
    throw CheckpointError(path + ": not a GTNCKPT1 checkpoint (bad magic header)");
  }
  ModelState state;
  state.num_users = static_cast<Index>(r.get<std::uint64_t>());
  state.num_items = static_cast<Index>(r.get<std::uint64_t>());
  const auto d = static_cast<Index>(r.get<std::uint64_t>());
  state.seed = r.get<std::uint64_t>();
  state.epoch = r.get<std::int64_t>();
  state.adam_step = r.get<std::int64_t>();
  const auto backend = r.get<std::uint32_t>();
  const auto combine = r.get<std::uint32_t>();
  state.spec.num_layers = static_cast<int>(r.get<std::uint32_t>());
  r.get<std::uint32_t>();
  state.spec.lambda = r.get<double>();
  if (backend > 1 || combine > 1) throw CheckpointError(path + ": unknown backend or combine id");
  state.spec.backend = static_cast<Backend>(backend);
  state.spec.combine = static_cast<LayerCombine>(combine);

  const Index rows = state.num_users + state.num_items;
  const auto needed = static_cast<std::size_t>(rows) * static_cast<std::size_t>(d) * 3 *
                          sizeof(double) + sizeof(std::uint64_t);
  if (state.num_users < 0 || state.num_items < 0 || d < 0 || needed != r.remaining()) {
    throw CheckpointError(path + ": truncated or inconsistent checkpoint");
  }
  r.get_matrix(state.e_in, rows, d);
  r.get_matrix(state.adam_m, rows, d);
  r.get_matrix(state.adam_v, rows, d);

  Fnv1a h;
  h.update(data.data(), r.position());
  if (r.get<std::uint64_t>() != h.value()) throw CheckpointError(path + ": checksum mismatch");
  return state;
}

void check_checkpoint_shape(const ModelState& state, Index num_users, Index num_items,
                            Index embed_dim) {
  if (state.num_users != num_users || state.num_items != num_items ||
      state.embed_dim() != embed_dim) {
    throw ShapeError("checkpoint shape " + std::to_string(state.num_users) + "x" +
                     std::to_string(state.num_items) + " d=" + std::to_string(state.embed_dim()) +
                     " does not match run shape " + std::to_string(num_users) + "x" +
                     std::to_string(num_items) + " d=" + std::to_string(embed_dim));
  }
}

}  // namespace gtn
