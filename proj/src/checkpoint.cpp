#include "spinq/checkpoint.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>

namespace spinq {

namespace {

constexpr char kMagic[8] = {'S', 'P', 'Q', 'C', 'K', 'P', 'T', '\0'};

class Writer {
 public:
  explicit Writer(std::ofstream& os) : os_(os) {}
  template <typename T>
  void pod(const T& v) { os_.write(reinterpret_cast<const char*>(&v), sizeof(T)); }
  void doubles(const double* p, std::size_t n) {
    pod<std::uint64_t>(n);
    os_.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
  }
  void matrix(const Eigen::MatrixXd& m) {
    pod<std::int64_t>(m.rows());
    pod<std::int64_t>(m.cols());
    os_.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(m.size() * sizeof(double)));
  }

 private:
  std::ofstream& os_;
};

class Reader {
 public:
  explicit Reader(std::ifstream& is) : is_(is) {}
  template <typename T>
  T pod() {
    T v{};
    is_.read(reinterpret_cast<char*>(&v), sizeof(T));
    check();
    return v;
  }
  std::vector<double> doubles() {
    const auto n = pod<std::uint64_t>();
    if (n > (1u << 26)) throw std::runtime_error("checkpoint: implausible vector length");
    std::vector<double> v(n);
    is_.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
    check();
    return v;
  }
  Eigen::MatrixXd matrix() {
    const auto r = pod<std::int64_t>();
    const auto c = pod<std::int64_t>();
    if (r < 0 || c < 0 || r > 100000 || c > 100000) throw std::runtime_error("checkpoint: bad matrix shape");
    Eigen::MatrixXd m(r, c);
    is_.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
    check();
    return m;
  }

 private:
  void check() {
    if (!is_) throw std::runtime_error("checkpoint: truncated file");
  }
  std::ifstream& is_;
};

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ck) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("checkpoint: cannot write " + tmp);
    Writer w(os);
    os.write(kMagic, sizeof(kMagic));
    w.pod(kCheckpointVersion);
    w.pod<std::uint32_t>(static_cast<std::uint32_t>(ck.model.size()));
    os.write(ck.model.data(), static_cast<std::streamsize>(ck.model.size()));
    w.pod<std::int32_t>(ck.iteration);
    w.pod<std::int32_t>(ck.m);
    w.pod<std::int32_t>(ck.block.sites);
    w.pod<std::uint64_t>(ck.block.sz.size());
    for (int s : ck.block.sz) w.pod<std::int32_t>(s);
    w.matrix(ck.block.hamiltonian);
    w.pod<std::uint64_t>(ck.block.edge_operators.size());
    for (const auto& op : ck.block.edge_operators) w.matrix(op);
    w.doubles(ck.energies.data(), ck.energies.size());
    w.doubles(ck.truncation_errors.data(), ck.truncation_errors.size());
    if (!os) throw std::runtime_error("checkpoint: write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

std::optional<Checkpoint> load_checkpoint(const std::string& path, const ModelSpec& spec) {
  if (!std::filesystem::exists(path)) return std::nullopt;
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("checkpoint: cannot open " + path);
  char magic[sizeof(kMagic)];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("checkpoint: " + path + " is not a checkpoint file");
  Reader r(is);
  const auto version = r.pod<std::uint32_t>();
  if (version != kCheckpointVersion)
    throw std::runtime_error("checkpoint: unsupported format version " + std::to_string(version));
  Checkpoint ck;
  const auto len = r.pod<std::uint32_t>();
  if (len > 4096) throw std::runtime_error("checkpoint: bad model name");
  ck.model.resize(len);
  is.read(ck.model.data(), len);
  if (ck.model != spec.to_string())
    throw std::runtime_error("checkpoint: " + path + " belongs to " + ck.model);
  ck.iteration = r.pod<std::int32_t>();
  ck.m = r.pod<std::int32_t>();
  ck.block.sites = r.pod<std::int32_t>();
  const auto nsz = r.pod<std::uint64_t>();
  if (nsz > 100000) throw std::runtime_error("checkpoint: bad block size");
  ck.block.sz.resize(nsz);
  for (auto& s : ck.block.sz) s = r.pod<std::int32_t>();
  ck.block.hamiltonian = r.matrix();
  const auto nops = r.pod<std::uint64_t>();
  if (nops > 64) throw std::runtime_error("checkpoint: bad operator count");
  for (std::uint64_t k = 0; k < nops; ++k) ck.block.edge_operators.push_back(r.matrix());
  ck.energies = r.doubles();
  ck.truncation_errors = r.doubles();
  return ck;
}

}  // namespace spinq
