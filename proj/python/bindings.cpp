#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "sccdr/pipeline.hpp"

namespace py = pybind11;
using namespace sccdr;

namespace {

RunConfig make_config(const std::map<std::string, std::string>& overrides) {
  RunConfig cfg;
  for (const auto& [k, v] : overrides) set_key(cfg, k, v);
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Bindings for the sccdr pipeline";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_RuntimeError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  m.def("config_keys", [] {
    std::vector<std::tuple<std::string, std::string, std::string>> out;
    for (const auto& k : config_keys()) out.emplace_back(k.name, k.default_value, k.help);
    return out;
  }, "(name, default, help) for every config key");

  m.def("synth", [](const std::filesystem::path& out, const std::map<std::string, std::string>& cfg) {
    const auto c = make_config(cfg);
    generate(c.synth, out);
    write_effective_config(out / "effective_config.txt", c);
  }, py::arg("out"), py::arg("config") = std::map<std::string, std::string>{});

  m.def("prepare", [](const std::filesystem::path& data, const std::map<std::string, std::string>& cfg) {
    prepare(data, make_config(cfg));
  }, py::arg("data"), py::arg("config") = std::map<std::string, std::string>{});

  m.def("train", [](const std::filesystem::path& data, const std::filesystem::path& out,
                    const std::map<std::string, std::string>& overrides) {
    auto cfg = training_config(data, std::nullopt);
    for (const auto& [k, v] : overrides) set_key(cfg, k, v);
    py::gil_scoped_release release;
    const auto result = run_training(load_prepared(data, cfg), cfg, out);
    std::vector<std::map<std::string, double>> rows;
    for (const auto& r : result.log.records)
      rows.push_back({{"epoch", r.epoch}, {"L_intra_s", r.intra_s}, {"L_intra_t", r.intra_t},
                      {"L_inter_u", r.inter_u}, {"L_inter_n", r.inter_n}});
    return rows;
  }, py::arg("data"), py::arg("out"), py::arg("config") = std::map<std::string, std::string>{},
     "train and write the model directory; returns the per-epoch losses");

  m.def("evaluate", [](const std::filesystem::path& model, const std::filesystem::path& data,
                       const std::vector<int>& topn, bool include_train_items) {
    EvalOptions opts;
    opts.include_train_items = include_train_items;
    return run_eval(model, data, topn, opts).hit_at;
  }, py::arg("model"), py::arg("data"), py::arg("topn") = std::vector<int>{50, 100},
     py::arg("include_train_items") = false);

  m.def("schedule", [](int n_epoch, int n_neg) {
    const auto s = build_schedule(n_epoch, n_neg);
    return std::make_pair(s.n_step, s.initial_active);
  }, py::arg("n_epoch"), py::arg("n_neg"), "(n_step, initial_active)");

  m.def("std_final_half", [](const std::vector<double>& xs) { return std_final_half(xs); });
}
