#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "repscope/matrix.hpp"

namespace repscope {

enum class DType : std::uint8_t { f32 = 0, f64 = 1 };

std::string_view to_string(DType d);
DType parse_dtype(std::string_view s);

/// Dense row-major tensor with its on-disk element type. Values are kept in
/// the stored precision so write/read is bit-exact; numerics go through
/// to_matrix(), which promotes to double.
class Tensor {
 public:
  Tensor() = default;
  Tensor(std::vector<std::uint64_t> dims, std::vector<float> data);
  Tensor(std::vector<std::uint64_t> dims, std::vector<double> data);

  /// Copies a matrix in row-major order; f32 rounds each entry.
  static Tensor from_matrix(const Matrix& m, DType dtype = DType::f64);

  DType dtype() const { return std::holds_alternative<std::vector<float>>(data_) ? DType::f32 : DType::f64; }
  std::span<const std::uint64_t> dims() const { return dims_; }
  std::size_t ndim() const { return dims_.size(); }
  std::size_t size() const;
  double at(std::size_t flat_index) const;

  const std::vector<float>& f32_data() const { return std::get<std::vector<float>>(data_); }
  const std::vector<double>& f64_data() const { return std::get<std::vector<double>>(data_); }

  /// Requires ndim == 2.
  Matrix to_matrix() const;
  /// Requires ndim == 3; returns dims[0] matrices of dims[1] x dims[2].
  std::vector<Matrix> to_matrices() const;

  /// Bitwise equality of dtype, dims and payload.
  friend bool operator==(const Tensor& a, const Tensor& b);

 private:
  void validate() const;

  std::vector<std::uint64_t> dims_;
  std::variant<std::vector<float>, std::vector<double>> data_;
};

/// Header fields of an LREP file, readable without touching the payload.
struct LrepHeader {
  std::uint8_t version = 1;
  DType dtype = DType::f64;
  std::vector<std::uint64_t> dims;
};

inline constexpr std::uint8_t kLrepVersion = 1;

/// LREP v1: "LREP", u8 version, u8 dtype, u8 ndim, u8 reserved (0),
/// ndim x u64 LE dims, row-major LE payload.
void write_lrep(const Tensor& tensor, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_lrep(const Tensor& tensor);

Tensor read_lrep(const std::filesystem::path& path);
Tensor decode_lrep(std::span<const std::uint8_t> bytes, const std::string& origin = "<memory>");
LrepHeader read_lrep_header(const std::filesystem::path& path);

enum class Pooling { none, mean };

std::string_view to_string(Pooling p);
Pooling parse_pooling(std::string_view s);

/// Description of a dump directory. For pooling=mean each layer maps to one
/// N x D file. For pooling=none a layer maps either to one N x L x D file
/// (equal-length prompts) or to a list of per-prompt L_i x D files aligned
/// with prompt_ids.
struct RunManifest {
  std::string model_id;
  int num_layers = 0;
  Pooling pooling = Pooling::mean;
  std::vector<std::string> prompt_ids;
  std::map<int, std::vector<std::string>> layer_files;
  DType dtype = DType::f32;

  std::size_t layer_count() const { return static_cast<std::size_t>(num_layers) + 1; }
};

RunManifest parse_manifest(const std::string& json_text, const std::string& origin = "<manifest>");
std::string serialize_manifest(const RunManifest& manifest);
/// Throws FormatError on a structurally invalid manifest.
void validate_manifest(const RunManifest& manifest);

/// A loaded manifest plus on-demand access to per-layer tensors. load_run
/// validates file presence and shapes from headers only.
class RunBundle {
 public:
  RunBundle(RunManifest manifest, std::filesystem::path run_dir);

  const RunManifest& manifest() const { return manifest_; }
  const std::filesystem::path& run_dir() const { return run_dir_; }
  std::size_t layer_count() const { return manifest_.layer_count(); }
  std::size_t prompt_count() const { return manifest_.prompt_ids.size(); }
  bool has_tokens() const { return manifest_.pooling == Pooling::none; }

  /// Token matrices of every prompt at a layer; GranularityError for pooled runs.
  std::vector<TokenMatrix> tokens(std::size_t layer) const;
  /// Pooled matrix at a layer; token runs are mean-pooled on the fly.
  PooledMatrix pooled(std::size_t layer) const;

 private:
  std::filesystem::path resolve(const std::string& rel) const { return run_dir_ / rel; }

  RunManifest manifest_;
  std::filesystem::path run_dir_;
};

/// Accepts either a manifest file or a directory containing manifest.json.
RunBundle load_run(const std::filesystem::path& manifest_path);

/// Writes manifest.json plus one pooled LREP file per layer.
RunManifest write_pooled_run(const std::filesystem::path& dir, const std::string& model_id,
                             const std::vector<std::string>& prompt_ids,
                             const std::vector<PooledMatrix>& layers, DType dtype = DType::f32);

/// Writes manifest.json plus per-prompt token files; tokens[layer][prompt].
RunManifest write_token_run(const std::filesystem::path& dir, const std::string& model_id,
                            const std::vector<std::string>& prompt_ids,
                            const std::vector<std::vector<TokenMatrix>>& tokens,
                            DType dtype = DType::f32);

}  // namespace repscope
