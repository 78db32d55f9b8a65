#include "repscope/tensor_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>
#include <sstream>

#include <json.hpp>

#include "repscope/error.hpp"

namespace repscope {

namespace {

constexpr std::uint8_t kMagic[4] = {0x4C, 0x52, 0x45, 0x50};
constexpr std::size_t kFixedHeader = 8;

template <typename T>
void check_finite(const std::vector<T>& data) {
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!std::isfinite(data[i])) {
      throw ValidationError("tensor contains a non-finite value at flat index " + std::to_string(i));
    }
  }
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

std::uint64_t get_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int b = 0; b < 8; ++b) v |= static_cast<std::uint64_t>(p[b]) << (8 * b);
  return v;
}

std::uint64_t checked_product(std::span<const std::uint64_t> dims, const std::string& origin) {
  std::uint64_t n = 1;
  for (auto d : dims) {
    if (d == 0) throw FormatError(origin + ": zero-length dimension");
    if (n > UINT64_MAX / d) throw FormatError(origin + ": dimension product overflows");
    n *= d;
  }
  return n;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failure on " + path.string());
  return bytes;
}

LrepHeader decode_header(std::span<const std::uint8_t> bytes, const std::string& origin,
                         std::size_t* payload_offset) {
  if (bytes.size() < kFixedHeader) throw FormatError(origin + ": truncated header");
  if (!std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin())) {
    throw FormatError(origin + ": bad magic (expected \"LREP\")");
  }
  LrepHeader h;
  h.version = bytes[4];
  if (h.version != kLrepVersion) {
    throw FormatError(origin + ": unsupported LREP version " + std::to_string(h.version));
  }
  if (bytes[5] > 1) throw FormatError(origin + ": unsupported dtype code " + std::to_string(bytes[5]));
  h.dtype = static_cast<DType>(bytes[5]);
  const std::size_t ndim = bytes[6];
  if (ndim == 0) throw FormatError(origin + ": ndim must be at least 1");
  const std::size_t dims_end = kFixedHeader + 8 * ndim;
  if (bytes.size() < dims_end) throw FormatError(origin + ": truncated dimension list");
  for (std::size_t i = 0; i < ndim; ++i) h.dims.push_back(get_u64(bytes.data() + kFixedHeader + 8 * i));
  checked_product(h.dims, origin);
  if (payload_offset) *payload_offset = dims_end;
  return h;
}

}  // namespace

std::string_view to_string(DType d) { return d == DType::f32 ? "f32" : "f64"; }

DType parse_dtype(std::string_view s) {
  if (s == "f32") return DType::f32;
  if (s == "f64") return DType::f64;
  throw FormatError("unknown dtype '" + std::string(s) + "'");
}

Tensor::Tensor(std::vector<std::uint64_t> dims, std::vector<float> data)
    : dims_(std::move(dims)), data_(std::move(data)) {
  validate();
}

Tensor::Tensor(std::vector<std::uint64_t> dims, std::vector<double> data)
    : dims_(std::move(dims)), data_(std::move(data)) {
  validate();
}

void Tensor::validate() const {
  if (dims_.empty()) throw ValidationError("tensor dims must be non-empty");
  if (dims_.size() > 255) throw ValidationError("tensor rank exceeds 255");
  std::uint64_t n = 1;
  for (auto d : dims_) {
    if (d == 0) throw ValidationError("tensor dims must all be >= 1");
    n *= d;
  }
  if (n != size()) {
    throw ValidationError("tensor payload has " + std::to_string(size()) + " values, dims imply " +
                          std::to_string(n));
  }
  std::visit([](const auto& v) { check_finite(v); }, data_);
}

Tensor Tensor::from_matrix(const Matrix& m, DType dtype) {
  std::vector<std::uint64_t> dims = {static_cast<std::uint64_t>(m.rows()),
                                     static_cast<std::uint64_t>(m.cols())};
  if (dtype == DType::f32) {
    std::vector<float> v;
    v.reserve(m.size());
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) v.push_back(static_cast<float>(m(i, j)));
    return Tensor(std::move(dims), std::move(v));
  }
  std::vector<double> v;
  v.reserve(m.size());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) v.push_back(m(i, j));
  return Tensor(std::move(dims), std::move(v));
}

std::size_t Tensor::size() const {
  return std::visit([](const auto& v) { return v.size(); }, data_);
}

double Tensor::at(std::size_t i) const {
  return std::visit([i](const auto& v) { return static_cast<double>(v[i]); }, data_);
}

Matrix Tensor::to_matrix() const {
  if (ndim() != 2) throw ValidationError("expected a 2-D tensor, got " + std::to_string(ndim()) + "-D");
  const auto rows = static_cast<Eigen::Index>(dims_[0]);
  const auto cols = static_cast<Eigen::Index>(dims_[1]);
  Matrix m(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = at(k++);
  return m;
}

std::vector<Matrix> Tensor::to_matrices() const {
  if (ndim() != 3) throw ValidationError("expected a 3-D tensor, got " + std::to_string(ndim()) + "-D");
  const auto rows = static_cast<Eigen::Index>(dims_[1]);
  const auto cols = static_cast<Eigen::Index>(dims_[2]);
  std::vector<Matrix> out;
  std::size_t k = 0;
  for (std::uint64_t s = 0; s < dims_[0]; ++s) {
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = at(k++);
    out.push_back(std::move(m));
  }
  return out;
}

bool operator==(const Tensor& a, const Tensor& b) {
  if (a.dims_ != b.dims_ || a.data_.index() != b.data_.index()) return false;
  return std::visit(
      [&](const auto& va) {
        const auto& vb = std::get<std::decay_t<decltype(va)>>(b.data_);
        return va.size() == vb.size() &&
               std::memcmp(va.data(), vb.data(), va.size() * sizeof(va[0])) == 0;
      },
      a.data_);
}

std::vector<std::uint8_t> encode_lrep(const Tensor& t) {
  std::vector<std::uint8_t> out(std::begin(kMagic), std::end(kMagic));
  out.push_back(kLrepVersion);
  out.push_back(static_cast<std::uint8_t>(t.dtype()));
  out.push_back(static_cast<std::uint8_t>(t.ndim()));
  out.push_back(0);
  for (auto d : t.dims()) put_u64(out, d);
  if (t.dtype() == DType::f32) {
    for (float v : t.f32_data()) {
      const auto bits = std::bit_cast<std::uint32_t>(v);
      for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(bits >> (8 * b)));
    }
  } else {
    for (double v : t.f64_data()) put_u64(out, std::bit_cast<std::uint64_t>(v));
  }
  return out;
}

void write_lrep(const Tensor& tensor, const std::filesystem::path& path) {
  const auto bytes = encode_lrep(tensor);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failure on " + path.string());
}

Tensor decode_lrep(std::span<const std::uint8_t> bytes, const std::string& origin) {
  std::size_t offset = 0;
  LrepHeader h = decode_header(bytes, origin, &offset);
  const std::uint64_t count = checked_product(h.dims, origin);
  const std::size_t width = h.dtype == DType::f32 ? 4 : 8;
  const std::uint64_t expected = count * width;
  const std::uint64_t actual = bytes.size() - offset;
  if (actual < expected) {
    throw FormatError(origin + ": truncated payload (" + std::to_string(actual) + " bytes, expected " +
                      std::to_string(expected) + ")");
  }
  if (actual > expected) {
    throw FormatError(origin + ": " + std::to_string(actual - expected) + " trailing bytes after payload");
  }
  const std::uint8_t* p = bytes.data() + offset;
  try {
    if (h.dtype == DType::f32) {
      std::vector<float> data(count);
      for (std::uint64_t i = 0; i < count; ++i) {
        std::uint32_t bits = 0;
        for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(p[4 * i + b]) << (8 * b);
        data[i] = std::bit_cast<float>(bits);
      }
      return Tensor(std::move(h.dims), std::move(data));
    }
    std::vector<double> data(count);
    for (std::uint64_t i = 0; i < count; ++i) data[i] = std::bit_cast<double>(get_u64(p + 8 * i));
    return Tensor(std::move(h.dims), std::move(data));
  } catch (const ValidationError& e) {
    throw FormatError(origin + ": " + e.what());
  }
}

Tensor read_lrep(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  return decode_lrep(bytes, path.string());
}

LrepHeader read_lrep_header(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> head(kFixedHeader);
  in.read(reinterpret_cast<char*>(head.data()), kFixedHeader);
  head.resize(static_cast<std::size_t>(in.gcount()));
  if (head.size() == kFixedHeader) {
    const std::size_t ndim = head[6];
    head.resize(kFixedHeader + 8 * ndim);
    in.read(reinterpret_cast<char*>(head.data() + kFixedHeader), static_cast<std::streamsize>(8 * ndim));
    head.resize(kFixedHeader + static_cast<std::size_t>(in.gcount()));
  }
  return decode_header(head, path.string(), nullptr);
}

// ---------------------------------------------------------------------------
// Manifest

std::string_view to_string(Pooling p) { return p == Pooling::none ? "none" : "mean"; }

Pooling parse_pooling(std::string_view s) {
  if (s == "none") return Pooling::none;
  if (s == "mean") return Pooling::mean;
  throw FormatError("unknown pooling '" + std::string(s) + "' (expected none|mean)");
}

void validate_manifest(const RunManifest& m) {
  if (m.num_layers < 1) throw FormatError("num_layers must be >= 1");
  if (m.prompt_ids.empty()) throw FormatError("prompt_ids must be non-empty");
  std::set<std::string> seen;
  for (const auto& id : m.prompt_ids) {
    if (!seen.insert(id).second) throw FormatError("duplicate prompt id '" + id + "'");
  }
  if (m.layer_files.size() != m.layer_count()) {
    throw FormatError("layer_files has " + std::to_string(m.layer_files.size()) + " entries, expected " +
                      std::to_string(m.layer_count()) + " (layers 0.." + std::to_string(m.num_layers) + ")");
  }
  for (int layer = 0; layer <= m.num_layers; ++layer) {
    auto it = m.layer_files.find(layer);
    if (it == m.layer_files.end()) throw FormatError("layer_files is missing layer " + std::to_string(layer));
    const auto& files = it->second;
    if (files.empty()) throw FormatError("layer " + std::to_string(layer) + " lists no files");
    if (m.pooling == Pooling::mean && files.size() != 1) {
      throw FormatError("pooled layer " + std::to_string(layer) + " must reference exactly one file");
    }
    if (m.pooling == Pooling::none && files.size() != 1 && files.size() != m.prompt_ids.size()) {
      throw FormatError("token layer " + std::to_string(layer) + " lists " + std::to_string(files.size()) +
                        " files for " + std::to_string(m.prompt_ids.size()) + " prompts");
    }
  }
}

RunManifest parse_manifest(const std::string& text, const std::string& origin) {
  using nlohmann::json;
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw FormatError(origin + ": manifest is not valid JSON: " + e.what());
  }
  try {
    RunManifest m;
    m.model_id = j.at("model_id").get<std::string>();
    m.num_layers = j.at("num_layers").get<int>();
    m.pooling = parse_pooling(j.at("pooling").get<std::string>());
    m.prompt_ids = j.at("prompt_ids").get<std::vector<std::string>>();
    if (j.contains("dtype")) m.dtype = parse_dtype(j.at("dtype").get<std::string>());
    for (const auto& [key, value] : j.at("layer_files").items()) {
      std::size_t used = 0;
      int layer = -1;
      try {
        layer = std::stoi(key, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != key.size() || layer < 0) throw FormatError(origin + ": bad layer index '" + key + "'");
      if (value.is_string()) {
        m.layer_files[layer] = {value.get<std::string>()};
      } else {
        m.layer_files[layer] = value.get<std::vector<std::string>>();
      }
    }
    validate_manifest(m);
    return m;
  } catch (const json::exception& e) {
    throw FormatError(origin + ": manifest schema error: " + e.what());
  } catch (const FormatError& e) {
    const std::string msg = e.what();
    if (msg.rfind(origin, 0) == 0) throw;
    throw FormatError(origin + ": " + msg);
  }
}

std::string serialize_manifest(const RunManifest& m) {
  nlohmann::ordered_json j;
  j["model_id"] = m.model_id;
  j["num_layers"] = m.num_layers;
  j["pooling"] = std::string(to_string(m.pooling));
  j["dtype"] = std::string(to_string(m.dtype));
  j["prompt_ids"] = m.prompt_ids;
  nlohmann::ordered_json files = nlohmann::ordered_json::object();
  for (const auto& [layer, list] : m.layer_files) {
    if (m.pooling == Pooling::mean || list.size() == 1) {
      files[std::to_string(layer)] = list.front();
    } else {
      files[std::to_string(layer)] = list;
    }
  }
  j["layer_files"] = files;
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Run bundles

RunBundle::RunBundle(RunManifest manifest, std::filesystem::path run_dir)
    : manifest_(std::move(manifest)), run_dir_(std::move(run_dir)) {
  validate_manifest(manifest_);
  const std::size_t n = manifest_.prompt_ids.size();
  std::uint64_t width = 0;
  std::vector<std::uint64_t> token_counts;
  for (const auto& [layer, files] : manifest_.layer_files) {
    const std::string where = "layer " + std::to_string(layer);
    std::vector<LrepHeader> headers;
    for (const auto& rel : files) {
      const auto path = resolve(rel);
      if (!std::filesystem::exists(path)) throw IoError(where + ": missing layer file " + path.string());
      headers.push_back(read_lrep_header(path));
    }
    auto check_width = [&](std::uint64_t d, const std::string& file) {
      if (width == 0) width = d;
      if (d != width) {
        throw FormatError(where + ": " + file + " has width " + std::to_string(d) + ", other layers have " +
                          std::to_string(width));
      }
    };
    if (manifest_.pooling == Pooling::mean) {
      const auto& h = headers.front();
      if (h.dims.size() != 2 || h.dims[0] != n) {
        throw FormatError(where + ": pooled tensor " + files.front() + " must be " + std::to_string(n) +
                          " x D to match prompt_ids");
      }
      check_width(h.dims[1], files.front());
    } else if (files.size() == 1 && n > 1) {
      const auto& h = headers.front();
      if (h.dims.size() != 3 || h.dims[0] != n) {
        throw FormatError(where + ": token tensor " + files.front() + " must be " + std::to_string(n) +
                          " x L x D to match prompt_ids");
      }
      check_width(h.dims[2], files.front());
    } else {
      std::vector<std::uint64_t> counts;
      for (std::size_t i = 0; i < headers.size(); ++i) {
        const auto& h = headers[i];
        if (h.dims.size() != 2) throw FormatError(where + ": token file " + files[i] + " must be 2-D (L x D)");
        check_width(h.dims[1], files[i]);
        counts.push_back(h.dims[0]);
      }
      if (token_counts.empty()) token_counts = counts;
      if (counts != token_counts) throw FormatError(where + ": per-prompt token counts differ from layer 0");
    }
  }
}

std::vector<TokenMatrix> RunBundle::tokens(std::size_t layer) const {
  if (!has_tokens()) {
    throw GranularityError("run '" + manifest_.model_id + "' stores pooled embeddings only; token matrices unavailable");
  }
  if (layer >= layer_count()) throw ValidationError("layer " + std::to_string(layer) + " out of range");
  const auto& files = manifest_.layer_files.at(static_cast<int>(layer));
  if (files.size() == 1 && prompt_count() > 1) return read_lrep(resolve(files.front())).to_matrices();
  std::vector<TokenMatrix> out;
  out.reserve(files.size());
  for (const auto& rel : files) out.push_back(read_lrep(resolve(rel)).to_matrix());
  return out;
}

PooledMatrix RunBundle::pooled(std::size_t layer) const {
  if (layer >= layer_count()) throw ValidationError("layer " + std::to_string(layer) + " out of range");
  if (!has_tokens()) return read_lrep(resolve(manifest_.layer_files.at(static_cast<int>(layer)).front())).to_matrix();
  const auto toks = tokens(layer);
  PooledMatrix out(static_cast<Eigen::Index>(toks.size()), toks.front().cols());
  for (std::size_t i = 0; i < toks.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = mean_pool(toks[i]).transpose();
  return out;
}

RunBundle load_run(const std::filesystem::path& manifest_path) {
  std::filesystem::path path = manifest_path;
  if (std::filesystem::is_directory(path)) path /= "manifest.json";
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return RunBundle(parse_manifest(ss.str(), path.string()), path.parent_path());
}

namespace {

void write_manifest_file(const std::filesystem::path& dir, const RunManifest& m) {
  std::ofstream out(dir / "manifest.json", std::ios::trunc);
  if (!out) throw IoError("cannot write " + (dir / "manifest.json").string());
  out << serialize_manifest(m);
}

std::string layer_name(std::size_t layer) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "layer_%03zu", layer);
  return buf;
}

}  // namespace

RunManifest write_pooled_run(const std::filesystem::path& dir, const std::string& model_id,
                             const std::vector<std::string>& prompt_ids,
                             const std::vector<PooledMatrix>& layers, DType dtype) {
  if (layers.size() < 2) throw ValidationError("a run needs at least two layer dumps (embedding + one block)");
  std::filesystem::create_directories(dir);
  RunManifest m;
  m.model_id = model_id;
  m.num_layers = static_cast<int>(layers.size()) - 1;
  m.pooling = Pooling::mean;
  m.prompt_ids = prompt_ids;
  m.dtype = dtype;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const std::string file = layer_name(l) + ".lrep";
    write_lrep(Tensor::from_matrix(layers[l], dtype), dir / file);
    m.layer_files[static_cast<int>(l)] = {file};
  }
  validate_manifest(m);
  write_manifest_file(dir, m);
  return m;
}

RunManifest write_token_run(const std::filesystem::path& dir, const std::string& model_id,
                            const std::vector<std::string>& prompt_ids,
                            const std::vector<std::vector<TokenMatrix>>& tokens, DType dtype) {
  if (tokens.size() < 2) throw ValidationError("a run needs at least two layer dumps (embedding + one block)");
  RunManifest m;
  m.model_id = model_id;
  m.num_layers = static_cast<int>(tokens.size()) - 1;
  m.pooling = Pooling::none;
  m.prompt_ids = prompt_ids;
  m.dtype = dtype;
  for (std::size_t l = 0; l < tokens.size(); ++l) {
    if (tokens[l].size() != prompt_ids.size()) throw ValidationError("token layer size differs from prompt count");
    const std::string sub = layer_name(l);
    std::filesystem::create_directories(dir / sub);
    auto& files = m.layer_files[static_cast<int>(l)];
    for (std::size_t p = 0; p < tokens[l].size(); ++p) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "/prompt_%04zu.lrep", p);
      const std::string file = sub + buf;
      write_lrep(Tensor::from_matrix(tokens[l][p], dtype), dir / file);
      files.push_back(file);
    }
  }
  validate_manifest(m);
  write_manifest_file(dir, m);
  return m;
}

}  // namespace repscope
