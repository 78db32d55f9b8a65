#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "repscope/augment.hpp"
#include "repscope/entropy.hpp"
#include "repscope/error.hpp"
#include "repscope/geometry.hpp"
#include "repscope/invariance.hpp"
#include "repscope/report.hpp"
#include "repscope/spectrum.hpp"
#include "repscope/stats.hpp"
#include "repscope/tensor_io.hpp"
#include "repscope/theory.hpp"

namespace py = pybind11;
using namespace repscope;

namespace {

py::array tensor_to_array(const Tensor& t) {
  std::vector<py::ssize_t> shape(t.dims().begin(), t.dims().end());
  if (t.dtype() == DType::f32) {
    py::array_t<float> a(shape);
    std::copy(t.f32_data().begin(), t.f32_data().end(), a.mutable_data());
    return a;
  }
  py::array_t<double> a(shape);
  std::copy(t.f64_data().begin(), t.f64_data().end(), a.mutable_data());
  return a;
}

Tensor array_to_tensor(const py::array& arr) {
  std::vector<std::uint64_t> dims;
  for (py::ssize_t i = 0; i < arr.ndim(); ++i) dims.push_back(static_cast<std::uint64_t>(arr.shape(i)));
  if (arr.dtype().is(py::dtype::of<float>())) {
    auto a = py::array_t<float, py::array::c_style | py::array::forcecast>::ensure(arr);
    return Tensor(dims, std::vector<float>(a.data(), a.data() + a.size()));
  }
  auto a = py::array_t<double, py::array::c_style | py::array::forcecast>::ensure(arr);
  if (!a) throw ValidationError("array is not convertible to float64");
  return Tensor(dims, std::vector<double>(a.data(), a.data() + a.size()));
}

py::object to_python(const nlohmann::ordered_json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Layer-wise representation-quality metrics";
  m.attr("__version__") = toolkit_version();

  auto base = py::register_exception<Error>(m, "RepscopeError", PyExc_RuntimeError);
  auto validation = py::register_exception<ValidationError>(m, "ValidationError", base.ptr());
  py::register_exception<FormatError>(m, "FormatError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());
  py::register_exception<GranularityError>(m, "GranularityError", base.ptr());
  py::register_exception<DegenerateStepError>(m, "DegenerateStepError", validation.ptr());

  m.def("gram_spectrum", [](const Matrix& z) { return gram_spectrum(z).probs(); }, py::arg("z"));
  m.def("singular_spectrum", [](const Matrix& z) { return singular_spectrum(z).probs(); }, py::arg("z"));
  m.def("matrix_entropy", &matrix_entropy, py::arg("z"), py::arg("alpha") = 1.0);
  m.def("collision_entropy_fast", &collision_entropy_fast, py::arg("z"));
  m.def(
      "prompt_entropy",
      [](const Matrix& tokens, double alpha, bool normalized) {
        return prompt_entropy(tokens, EntropyConfig{alpha, normalized});
      },
      py::arg("tokens"), py::arg("alpha") = 1.0, py::arg("normalized") = false);
  m.def(
      "dataset_entropy",
      [](const Matrix& pooled, double alpha, bool normalized) {
        return dataset_entropy(pooled, EntropyConfig{alpha, normalized});
      },
      py::arg("pooled"), py::arg("alpha") = 1.0, py::arg("normalized") = false);
  m.def("effective_rank", &effective_rank, py::arg("z"));
  m.def("logdet_entropy", &logdet_entropy, py::arg("z"), py::arg("ridge") = 1e-8);
  m.def("curvature", &curvature, py::arg("tokens"));

  m.def(
      "infonce",
      [](const Matrix& z1, const Matrix& z2, double t) { return infonce(PairedEmbeddings(z1, z2), t); },
      py::arg("z1"), py::arg("z2"), py::arg("temperature") = kDefaultTemperature);
  m.def(
      "dime",
      [](const Matrix& z1, const Matrix& z2, double alpha, std::size_t perms, std::uint64_t seed) {
        return dime(PairedEmbeddings(z1, z2), alpha, perms, seed);
      },
      py::arg("z1"), py::arg("z2"), py::arg("alpha") = 1.0, py::arg("permutations") = kDefaultDimePermutations,
      py::arg("seed") = 0);
  m.def(
      "lidar",
      [](const Matrix& emb, std::size_t classes, std::size_t per_class, double delta) {
        return lidar(ClassBundle(emb, classes, per_class), delta);
      },
      py::arg("embeddings"), py::arg("num_classes"), py::arg("samples_per_class"),
      py::arg("delta") = kDefaultLidarDelta);

  m.def(
      "augment_pair",
      [](const std::string& text, double ps, double pc, double pk, std::uint64_t seed) {
        AugmentConfig cfg{ps, pc, pk, seed};
        cfg.validate();
        return augment_pair(text, cfg);
      },
      py::arg("text"), py::arg("p_split") = 0.3, py::arg("p_char") = 0.3, py::arg("p_keyboard") = 0.3,
      py::arg("seed") = 0);

  m.def(
      "spearman", [](std::vector<double> x, std::vector<double> y) { return spearman(x, y); }, py::arg("x"),
      py::arg("y"));
  m.def(
      "kendall", [](std::vector<double> x, std::vector<double> y) { return kendall(x, y); }, py::arg("x"),
      py::arg("y"));
  m.def(
      "distance_correlation", [](const Matrix& x, const Matrix& y) { return distance_correlation(x, y); },
      py::arg("x"), py::arg("y"));

  m.def(
      "read_lrep", [](const std::filesystem::path& p) { return tensor_to_array(read_lrep(p)); }, py::arg("path"));
  m.def(
      "write_lrep", [](const py::array& a, const std::filesystem::path& p) { write_lrep(array_to_tensor(a), p); },
      py::arg("array"), py::arg("path"));
  m.def(
      "decode_lrep",
      [](const py::bytes& b) {
        const std::string s = b;
        return tensor_to_array(decode_lrep(std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size())));
      },
      py::arg("data"));
  m.def(
      "encode_lrep",
      [](const py::array& a) {
        const auto bytes = encode_lrep(array_to_tensor(a));
        return py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
      },
      py::arg("array"));

  m.def(
      "compute_report",
      [](const std::filesystem::path& run, const std::string& metrics, double alpha, bool normalized,
         std::uint64_t seed, std::size_t threads) {
        MetricConfig cfg;
        cfg.entropy = EntropyConfig{alpha, normalized};
        cfg.seed = seed;
        cfg.threads = threads;
        const RunBundle bundle = load_run(run);
        return to_python(compute_report(bundle, parse_metric_list(metrics), cfg).to_json());
      },
      py::arg("run"), py::arg("metrics") = "dataset-entropy", py::arg("alpha") = 1.0,
      py::arg("normalized") = false, py::arg("seed") = 0, py::arg("threads") = 0);
  m.def(
      "run_info",
      [](const std::filesystem::path& run) {
        const RunBundle b = load_run(run);
        py::dict d;
        d["model_id"] = b.manifest().model_id;
        d["num_layers"] = b.manifest().num_layers;
        d["pooling"] = std::string(to_string(b.manifest().pooling));
        d["prompt_count"] = b.prompt_count();
        return d;
      },
      py::arg("run"));
}
