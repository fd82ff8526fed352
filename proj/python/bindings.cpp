#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "fleetmx/cli.hpp"
#include "fleetmx/cp.hpp"
#include "fleetmx/error.hpp"
#include "fleetmx/ingest.hpp"
#include "fleetmx/seqmine.hpp"
#include "fleetmx/seqmodel.hpp"
#include "fleetmx/synth.hpp"
#include "fleetmx/tensor.hpp"

namespace py = pybind11;
using namespace fleetmx;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

tensor::Tensor3 to_tensor(const Array& arr) {
  require(arr.ndim() == 3, ErrorCategory::kDimensionMismatch, "expected a 3-d array");
  const tensor::Dims d{static_cast<std::size_t>(arr.shape(0)), static_cast<std::size_t>(arr.shape(1)),
                       static_cast<std::size_t>(arr.shape(2))};
  return tensor::Tensor3(d, std::vector<double>(arr.data(), arr.data() + arr.size()));
}

Array from_tensor(const tensor::Tensor3& t) {
  const auto d = t.dims();
  Array out({d.i, d.j, d.k});
  std::copy(t.data().begin(), t.data().end(), out.mutable_data());
  return out;
}

tensor::Matrix to_matrix(const Array& arr) {
  require(arr.ndim() == 2, ErrorCategory::kDimensionMismatch, "expected a 2-d array");
  return tensor::Matrix(static_cast<std::size_t>(arr.shape(0)), static_cast<std::size_t>(arr.shape(1)),
                        std::vector<double>(arr.data(), arr.data() + arr.size()));
}

Array from_matrix(const tensor::Matrix& m) {
  Array out({m.rows(), m.cols()});
  std::copy(m.data().begin(), m.data().end(), out.mutable_data());
  return out;
}

py::dict model_dict(const cp::CpModel& m) {
  py::dict d;
  d["a"] = from_matrix(m.a);
  d["b"] = from_matrix(m.b);
  d["c"] = from_matrix(m.c);
  d["weights"] = m.weights;
  d["fit"] = m.fit;
  d["iterations"] = m.iterations;
  d["converged"] = m.converged;
  d["fit_trace"] = m.fit_trace;
  d["warnings"] = m.warnings;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "fleetmx native core";

  static py::handle error = py::exception<Error>(m, "FleetmxError", PyExc_RuntimeError).release();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(error, (std::string(to_string(e.category())) + ": " + e.what()).c_str());
    }
  });

  m.def("unfold", [](const Array& t, int mode) { return from_matrix(tensor::unfold(to_tensor(t), mode)); });
  m.def("fold", [](const Array& mat, int mode, std::array<std::size_t, 3> dims) {
    return from_tensor(tensor::fold(to_matrix(mat), mode, {dims[0], dims[1], dims[2]}));
  });
  m.def("khatri_rao", [](const Array& a, const Array& b) {
    return from_matrix(tensor::khatri_rao(to_matrix(a), to_matrix(b)));
  });
  m.def("mttkrp", [](const Array& t, const Array& f1, const Array& f2, int mode) {
    return from_matrix(tensor::mttkrp(to_tensor(t), to_matrix(f1), to_matrix(f2), mode));
  });
  m.def("frob_norm", [](const Array& t) { return tensor::frob_norm(to_tensor(t)); });
  m.def("reconstruct", [](const Array& a, const Array& b, const Array& c, std::vector<double> weights) {
    return from_tensor(tensor::reconstruct(to_matrix(a), to_matrix(b), to_matrix(c), weights));
  });

  m.def(
      "cp_als",
      [](const Array& t, int rank, int max_iters, double tol, std::uint64_t seed, int restarts) {
        return model_dict(cp::cp_als(to_tensor(t), {rank, max_iters, tol, seed, restarts}));
      },
      py::arg("tensor"), py::arg("rank"), py::arg("max_iters") = 500, py::arg("tol") = 1e-8,
      py::arg("seed") = cli::kDefaultSeed, py::arg("restarts") = 1);
  m.def("congruence", [](const Array& a1, const Array& b1, const Array& c1, const Array& a2, const Array& b2,
                         const Array& c2) {
    return cp::congruence(cp::make_model(to_matrix(a1), to_matrix(b1), to_matrix(c1)),
                          cp::make_model(to_matrix(a2), to_matrix(b2), to_matrix(c2)));
  });

  m.def("normal_cdf", &seqmine::normal_cdf);
  m.def("two_prop_z", [](std::size_t x1, std::size_t n1, std::size_t x2, std::size_t n2) {
    const auto r = seqmine::two_prop_z(x1, n1, x2, n2);
    return py::make_tuple(r.z, r.p);
  });
  m.def(
      "differential",
      [](const std::vector<std::pair<std::string, std::vector<int>>>& seqs, const std::string& target,
         std::size_t min_len, std::size_t max_len, std::size_t top_n) {
        std::vector<seqmine::EventSequence> es;
        for (std::size_t n = 0; n < seqs.size(); ++n) es.push_back({std::to_string(n), seqs[n].first, seqs[n].second});
        py::list out;
        for (const auto& d : seqmine::differential(es, target, {min_len, max_len, top_n})) {
          py::dict row;
          row["pattern"] = d.pattern;
          row["left_support"] = d.left_support;
          row["left_norm"] = d.left_norm;
          row["right_support"] = d.right_support;
          row["right_norm"] = d.right_norm;
          row["i_ratio"] = d.i_ratio;
          row["z"] = d.z;
          row["p"] = d.p;
          out.append(row);
        }
        return out;
      },
      py::arg("sequences"), py::arg("target"), py::arg("min_len") = 3, py::arg("max_len") = 4,
      py::arg("top_n") = 8);

  py::class_<seqmodel::LstmConfig>(m, "LstmConfig")
      .def(py::init<>())
      .def_readwrite("embed_dim", &seqmodel::LstmConfig::embed_dim)
      .def_readwrite("hidden_dim", &seqmodel::LstmConfig::hidden_dim)
      .def_readwrite("layers", &seqmodel::LstmConfig::layers)
      .def_readwrite("dropout_keep", &seqmodel::LstmConfig::dropout_keep)
      .def_readwrite("bptt_steps", &seqmodel::LstmConfig::bptt_steps)
      .def_readwrite("batch_size", &seqmodel::LstmConfig::batch_size)
      .def_readwrite("epochs", &seqmodel::LstmConfig::epochs)
      .def_readwrite("lr", &seqmodel::LstmConfig::lr)
      .def_readwrite("decay_after", &seqmodel::LstmConfig::decay_after)
      .def_readwrite("lr_decay", &seqmodel::LstmConfig::lr_decay)
      .def_readwrite("max_grad_norm", &seqmodel::LstmConfig::max_grad_norm)
      .def_readwrite("init_scale", &seqmodel::LstmConfig::init_scale)
      .def_readwrite("seed", &seqmodel::LstmConfig::seed);

  py::class_<seqmodel::SeqModel>(m, "SeqModel")
      .def_property_readonly("vocab", [](const seqmodel::SeqModel& s) { return s.vocab.labels(); })
      .def_readonly("train_history", &seqmodel::SeqModel::train_history)
      .def_readonly("valid_history", &seqmodel::SeqModel::valid_history)
      .def_readonly("best_epoch", &seqmodel::SeqModel::best_epoch)
      .def("perplexity", [](const seqmodel::SeqModel& s, const std::vector<seqmodel::TokenSeq>& seqs) {
        return seqmodel::perplexity(s, seqs);
      })
      .def("predict_next",
           [](const seqmodel::SeqModel& s, const seqmodel::TokenSeq& prefix, std::size_t top_k) {
             std::vector<std::pair<std::string, double>> out;
             for (const auto& p : seqmodel::predict_next(s, prefix, top_k)) out.emplace_back(p.label, p.probability);
             return out;
           })
      .def("save", [](const seqmodel::SeqModel& s, const std::string& path) { seqmodel::save_model(path, s); });

  m.def("train_lstm", &seqmodel::train, py::arg("train"), py::arg("valid"), py::arg("config"));
  m.def("load_lstm", &seqmodel::load_model);
  m.def("unigram_perplexity", [](const std::vector<seqmodel::TokenSeq>& train, const std::vector<seqmodel::TokenSeq>& eval) {
    return seqmodel::perplexity(seqmodel::unigram_baseline(train), eval);
  });
  m.def("split_by_vehicle", [](std::size_t n, std::uint64_t seed) {
    const auto s = seqmodel::split_by_vehicle(n, seed);
    return py::make_tuple(s.train, s.valid, s.test);
  });
  m.def("grad_check", [](const seqmodel::LstmConfig& cfg, const seqmodel::TokenSeq& seq, bool corrupt) {
    seqmodel::GradCheckOptions opts;
    opts.corrupt_forget_gate = corrupt;
    return seqmodel::grad_check(cfg, seq, opts).max_rel_error;
  }, py::arg("config"), py::arg("sequence"), py::arg("corrupt_forget_gate") = false);

  m.def("demo_spec_json", [] { return synth::to_json(synth::demo_spec()); });
  m.def("generate", [](const std::string& spec_json) {
    const auto g = synth::generate(synth::parse_spec(spec_json));
    py::dict d;
    d["vehicles_csv"] = g.vehicles_csv;
    d["maintenance_csv"] = g.maintenance_csv;
    d["manifest_json"] = g.manifest.to_json();
    return d;
  });
  m.def(
      "build_tensor",
      [](const std::string& vehicles_csv, const std::string& maintenance_csv, const std::string& start,
         const std::string& end) {
        std::istringstream vin(vehicles_csv), min(maintenance_csv);
        const auto vehicles = ingest::parse_vehicles(vin);
        const auto maint = ingest::parse_maintenance(min);
        ingest::TensorizeSpec spec;
        if (!start.empty()) spec.window_start = *ingest::parse_year_month(start);
        if (!end.empty()) spec.window_end = ingest::parse_year_month(end);
        const auto b = ingest::build_tensor(vehicles, maint.records, spec);
        return py::make_tuple(from_tensor(b.tensor), b.tensor.labels());
      },
      py::arg("vehicles_csv"), py::arg("maintenance_csv"), py::arg("window_start") = "",
      py::arg("window_end") = "");

  m.def("run_cli", [](const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return py::make_tuple(code, out.str(), err.str());
  });
}
