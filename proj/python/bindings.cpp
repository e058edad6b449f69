// Python bindings for the core operations. Grids cross the boundary as
// 2-D float64 numpy arrays plus a (xll, yll, cellsize, nodata) header.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "floodgraph/conformal.hpp"
#include "floodgraph/evaluation.hpp"
#include "floodgraph/inventory.hpp"
#include "floodgraph/pipeline.hpp"
#include "floodgraph/risk.hpp"
#include "floodgraph/sage.hpp"
#include "floodgraph/scenario.hpp"
#include "floodgraph/shapley.hpp"
#include "floodgraph/terrain.hpp"

namespace py = pybind11;
using namespace floodgraph;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Grid grid_from_py(const Array& arr, double xll, double yll, double cellsize, double nodata) {
  if (arr.ndim() != 2) throw std::invalid_argument("grid array must be 2-D");
  Grid g(static_cast<int>(arr.shape(0)), static_cast<int>(arr.shape(1)), xll, yll, cellsize,
         nodata);
  const double* data = arr.data();
  std::copy(data, data + g.size(), g.values.begin());
  return g;
}

py::tuple grid_to_py(const Grid& g) {
  Array arr({g.nrows, g.ncols});
  std::copy(g.values.begin(), g.values.end(), arr.mutable_data());
  return py::make_tuple(arr, py::make_tuple(g.xll, g.yll, g.cellsize, g.nodata));
}

FeatureVector feature_vector(const std::vector<double>& v) {
  if (v.size() != kNumFactors)
    throw std::invalid_argument("feature vector must have 12 entries");
  FeatureVector f{};
  std::copy(v.begin(), v.end(), f.begin());
  return f;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "watershed-graph flash-flood susceptibility core";

  m.def("factor_names", [] {
    std::vector<std::string> names(kFactorNames.begin(), kFactorNames.end());
    return names;
  });

  // raster primitives
  m.def("load_ascii_grid", [](const std::string& path) { return grid_to_py(load_ascii_grid(path)); },
        py::arg("path"));
  m.def("store_ascii_grid",
        [](const Array& arr, double xll, double yll, double cellsize, double nodata,
           const std::string& path) {
          store_ascii_grid(grid_from_py(arr, xll, yll, cellsize, nodata), path);
        },
        py::arg("values"), py::arg("xll"), py::arg("yll"), py::arg("cellsize"),
        py::arg("nodata"), py::arg("path"));
  m.def("binary_open",
        [](const Array& arr, double xll, double yll, double cellsize, double nodata) {
          return grid_to_py(
              binary_open(BinaryGrid(grid_from_py(arr, xll, yll, cellsize, nodata))).raster);
        },
        py::arg("mask"), py::arg("xll") = 0.0, py::arg("yll") = 0.0, py::arg("cellsize") = 30.0,
        py::arg("nodata") = -9999.0);
  m.def("euclidean_distance",
        [](const Array& arr, double xll, double yll, double cellsize, double nodata) {
          return grid_to_py(
              euclidean_distance(BinaryGrid(grid_from_py(arr, xll, yll, cellsize, nodata))));
        },
        py::arg("mask"), py::arg("xll") = 0.0, py::arg("yll") = 0.0, py::arg("cellsize") = 30.0,
        py::arg("nodata") = -9999.0);

  // terrain and flow
  m.def("derive_terrain",
        [](const Array& dem, double xll, double yll, double cellsize, double nodata) {
          const auto t = derive_terrain(grid_from_py(dem, xll, yll, cellsize, nodata));
          py::dict out;
          out["slope"] = grid_to_py(t.slope);
          out["aspect"] = grid_to_py(t.aspect);
          out["plan_curv"] = grid_to_py(t.plan_curv);
          out["prof_curv"] = grid_to_py(t.prof_curv);
          out["tri"] = grid_to_py(t.tri);
          return out;
        },
        py::arg("dem"), py::arg("xll") = 0.0, py::arg("yll") = 0.0, py::arg("cellsize") = 30.0,
        py::arg("nodata") = -9999.0);
  m.def("d8_flow",
        [](const Array& dem, double xll, double yll, double cellsize, double nodata) {
          const auto f = d8_flow(grid_from_py(dem, xll, yll, cellsize, nodata));
          py::dict out;
          out["directions"] = grid_to_py(f.directions);
          out["accumulation"] = grid_to_py(f.accumulation);
          out["specific_area"] = grid_to_py(f.specific_area);
          out["filled_dem"] = grid_to_py(f.filled_dem);
          return out;
        },
        py::arg("dem"), py::arg("xll") = 0.0, py::arg("yll") = 0.0, py::arg("cellsize") = 30.0,
        py::arg("nodata") = -9999.0);

  // metrics
  m.def("compute_metrics",
        [](const std::vector<double>& probs, const std::vector<int>& labels, double threshold) {
          const MetricReport r = compute_metrics(probs, labels, threshold);
          py::dict out;
          out["auc"] = r.auc;
          out["f1_macro"] = r.f1_macro;
          out["kappa"] = r.kappa;
          out["tpr"] = r.tpr;
          out["fpr"] = r.fpr;
          out["brier"] = r.brier;
          out["n_pos"] = r.n_pos;
          out["n_neg"] = r.n_neg;
          out["auc_defined"] = r.auc_defined;
          return out;
        },
        py::arg("probs"), py::arg("labels"), py::arg("threshold") = 0.5);

  // conformal
  m.def("calibrate",
        [](const std::vector<double>& probs_true, double alpha) {
          const CalibratedPredictor c = calibrate(probs_true, alpha);
          py::dict out;
          out["qhat"] = c.qhat;
          out["n_cal"] = c.n_cal;
          out["alpha"] = c.alpha;
          out["saturated"] = c.saturated;
          return out;
        },
        py::arg("probs_true_class"), py::arg("alpha") = 0.10);
  m.def("prediction_set",
        [](double qhat, double p0, double p1) {
          CalibratedPredictor cal;
          cal.qhat = qhat;
          const PredictionSet s = predict_set(cal, {p0, p1});
          return py::make_tuple(s.contains_class0, s.contains_class1);
        },
        py::arg("qhat"), py::arg("p0"), py::arg("p1"));

  // classification products
  m.def("classify_value",
        [](double p) { return static_cast<int>(classify_value(p)); }, py::arg("p"));

  // exact Shapley attribution of an arbitrary python callable
  m.def("exact_shapley",
        [](const py::function& f, const std::vector<std::vector<double>>& samples,
           const std::vector<std::vector<double>>& background) {
          std::vector<FeatureVector> xs, bg;
          for (const auto& s : samples) xs.push_back(feature_vector(s));
          for (const auto& b : background) bg.push_back(feature_vector(b));
          const ModelFn fn = [&f](const FeatureVector& x) {
            std::vector<double> v(x.begin(), x.end());
            return f(v).cast<double>();
          };
          const Attribution attr = exact_shapley(fn, xs, bg);
          py::list phi;
          for (const auto& row : attr.phi) phi.append(std::vector<double>(row.begin(), row.end()));
          py::dict out;
          out["phi"] = phi;
          out["base_value"] = attr.base_value;
          out["predictions"] = attr.predictions;
          return out;
        },
        py::arg("model"), py::arg("samples"), py::arg("background"));

  // scenario + pipeline
  m.def("generate_scenario",
        [](int rows, int cols, double cellsize_m, std::uint64_t seed, double flood_fraction) {
          ScenarioParams p;
          p.rows = rows;
          p.cols = cols;
          p.cellsize_m = cellsize_m;
          p.seed = seed;
          p.flood_fraction = flood_fraction;
          const Scenario sc = generate_scenario(p);
          py::dict out;
          out["dem"] = grid_to_py(sc.dem);
          out["rainfall"] = grid_to_py(sc.rainfall);
          out["soil_clay"] = grid_to_py(sc.soil_clay);
          out["lulc"] = grid_to_py(sc.lulc);
          out["reference_db"] = grid_to_py(sc.reference_db);
          out["monsoon_db"] = grid_to_py(sc.monsoon_db);
          out["permanent_water"] = grid_to_py(sc.permanent_water.raster);
          out["truth"] = grid_to_py(sc.truth.raster);
          out["districts"] = grid_to_py(sc.districts);
          return out;
        },
        py::arg("rows") = 128, py::arg("cols") = 128, py::arg("cellsize_m") = 100.0,
        py::arg("seed") = 1, py::arg("flood_fraction") = 0.02);
  m.def("run_pipeline",
        [](const std::string& config_path) { run_pipeline(load_config(config_path)); },
        py::arg("config_path"));
  m.def("write_scenario_bundle",
        [](const std::string& out_dir, int size, std::uint64_t seed) {
          PipelineConfig cfg;
          cfg.out_dir = out_dir;
          cfg.rows = size;
          cfg.cols = size;
          cfg.seed = seed;
          cfg.train.seed = seed;
          write_scenario_bundle(cfg);
          return out_dir + "/scenario.cfg";
        },
        py::arg("out_dir"), py::arg("size") = 128, py::arg("seed") = 1);
}
