#include "floodgraph/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <json.hpp>

#include "floodgraph/conformal.hpp"
#include "floodgraph/evaluation.hpp"
#include "floodgraph/inventory.hpp"
#include "floodgraph/rng.hpp"
#include "floodgraph/sage.hpp"
#include "floodgraph/shapley.hpp"
#include "floodgraph/util.hpp"

namespace floodgraph {

namespace fs = std::filesystem;
using nlohmann::json;

// --- config ------------------------------------------------------------------

void PipelineConfig::validate() const {
  if (!(change_threshold_db < 0.0))
    throw std::invalid_argument("config: change_threshold_db must be negative");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("config: alpha must be in (0, 1)");
  if (ratio < 1) throw std::invalid_argument("config: ratio must be >= 1");
  if (buffer_m < 0.0) throw std::invalid_argument("config: buffer_m must be >= 0");
  if (k_blocks < 1) throw std::invalid_argument("config: k_blocks must be >= 1");
  if (channel_min_area_km2 <= 0.0 || watershed_min_area_km2 <= 0.0)
    throw std::invalid_argument("config: channel areas must be > 0");
  if (!(class_bounds.low_max < class_bounds.moderate_max &&
        class_bounds.moderate_max < class_bounds.high_max && class_bounds.high_max < 1.0))
    throw std::invalid_argument("config: class boundaries must increase below 1");
  if (width_narrow_max <= 0.0 || width_narrow_max >= 2.0)
    throw std::invalid_argument("config: width_narrow_max out of range");
  baseline_kind_from_name(model);  // throws on unknown names
  if (train.epochs < 1) throw std::invalid_argument("config: epochs must be >= 1");
}

ScenarioParams PipelineConfig::scenario_params() const {
  ScenarioParams p;
  p.rows = rows;
  p.cols = cols;
  p.cellsize_m = cellsize_m;
  p.seed = seed;
  p.flood_fraction = flood_fraction;
  p.channel_min_area_km2 = channel_min_area_km2;
  p.watershed_min_area_km2 = watershed_min_area_km2;
  p.max_slope_deg = max_slope_deg;
  p.max_dist_m = max_dist_m;
  return p;
}

namespace {

std::string fmt_double(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

struct ConfigIO {
  std::map<std::string, std::function<void(PipelineConfig&, const std::string&)>> setters;
  std::vector<std::pair<std::string, std::function<std::string(const PipelineConfig&)>>> getters;

  void str(const std::string& key, std::string PipelineConfig::*field) {
    setters[key] = [field](PipelineConfig& c, const std::string& v) { c.*field = v; };
    getters.push_back({key, [field](const PipelineConfig& c) { return c.*field; }});
  }
  void dbl(const std::string& key, double PipelineConfig::*field) {
    setters[key] = [field](PipelineConfig& c, const std::string& v) { c.*field = std::stod(v); };
    getters.push_back({key, [field](const PipelineConfig& c) { return fmt_double(c.*field); }});
  }
  void integer(const std::string& key, int PipelineConfig::*field) {
    setters[key] = [field](PipelineConfig& c, const std::string& v) { c.*field = std::stoi(v); };
    getters.push_back(
        {key, [field](const PipelineConfig& c) { return std::to_string(c.*field); }});
  }
};

const ConfigIO& config_io() {
  static const ConfigIO io = [] {
    ConfigIO io;
    io.str("dem_path", &PipelineConfig::dem_path);
    io.str("rainfall_path", &PipelineConfig::rainfall_path);
    io.str("lulc_path", &PipelineConfig::lulc_path);
    io.str("soil_clay_path", &PipelineConfig::soil_clay_path);
    io.str("reference_db_path", &PipelineConfig::reference_db_path);
    io.str("monsoon_db_path", &PipelineConfig::monsoon_db_path);
    io.str("permanent_water_path", &PipelineConfig::permanent_water_path);
    io.str("districts_path", &PipelineConfig::districts_path);
    io.str("assets_path", &PipelineConfig::assets_path);
    io.str("out_dir", &PipelineConfig::out_dir);
    io.setters["seed"] = [](PipelineConfig& c, const std::string& v) {
      c.seed = std::stoull(v);
      c.train.seed = c.seed;
    };
    io.getters.push_back(
        {"seed", [](const PipelineConfig& c) { return std::to_string(c.seed); }});
    io.integer("rows", &PipelineConfig::rows);
    io.integer("cols", &PipelineConfig::cols);
    io.dbl("cellsize_m", &PipelineConfig::cellsize_m);
    io.dbl("flood_fraction", &PipelineConfig::flood_fraction);
    io.dbl("change_threshold_db", &PipelineConfig::change_threshold_db);
    io.dbl("max_slope_deg", &PipelineConfig::max_slope_deg);
    io.dbl("max_dist_m", &PipelineConfig::max_dist_m);
    io.integer("per_year_cap", &PipelineConfig::per_year_cap);
    io.integer("ratio", &PipelineConfig::ratio);
    io.dbl("buffer_m", &PipelineConfig::buffer_m);
    io.integer("train_year_first", &PipelineConfig::train_year_first);
    io.integer("train_year_last", &PipelineConfig::train_year_last);
    io.integer("test_year_first", &PipelineConfig::test_year_first);
    io.integer("test_year_last", &PipelineConfig::test_year_last);
    io.dbl("channel_min_area_km2", &PipelineConfig::channel_min_area_km2);
    io.dbl("watershed_min_area_km2", &PipelineConfig::watershed_min_area_km2);
    io.integer("k_blocks", &PipelineConfig::k_blocks);
    io.dbl("alpha", &PipelineConfig::alpha);
    io.setters["class_low_max"] = [](PipelineConfig& c, const std::string& v) {
      c.class_bounds.low_max = std::stod(v);
    };
    io.getters.push_back({"class_low_max", [](const PipelineConfig& c) {
                            return fmt_double(c.class_bounds.low_max);
                          }});
    io.setters["class_moderate_max"] = [](PipelineConfig& c, const std::string& v) {
      c.class_bounds.moderate_max = std::stod(v);
    };
    io.getters.push_back({"class_moderate_max", [](const PipelineConfig& c) {
                            return fmt_double(c.class_bounds.moderate_max);
                          }});
    io.setters["class_high_max"] = [](PipelineConfig& c, const std::string& v) {
      c.class_bounds.high_max = std::stod(v);
    };
    io.getters.push_back({"class_high_max", [](const PipelineConfig& c) {
                            return fmt_double(c.class_bounds.high_max);
                          }});
    io.dbl("width_narrow_max", &PipelineConfig::width_narrow_max);
    io.str("model", &PipelineConfig::model);
    io.setters["learning_rate"] = [](PipelineConfig& c, const std::string& v) {
      c.train.learning_rate = std::stod(v);
    };
    io.getters.push_back({"learning_rate", [](const PipelineConfig& c) {
                            return fmt_double(c.train.learning_rate);
                          }});
    io.setters["weight_decay"] = [](PipelineConfig& c, const std::string& v) {
      c.train.weight_decay = std::stod(v);
    };
    io.getters.push_back({"weight_decay", [](const PipelineConfig& c) {
                            return fmt_double(c.train.weight_decay);
                          }});
    io.setters["epochs"] = [](PipelineConfig& c, const std::string& v) {
      c.train.epochs = std::stoi(v);
    };
    io.getters.push_back(
        {"epochs", [](const PipelineConfig& c) { return std::to_string(c.train.epochs); }});
    io.setters["dropout_p"] = [](PipelineConfig& c, const std::string& v) {
      c.train.dropout_p = std::stod(v);
    };
    io.getters.push_back({"dropout_p", [](const PipelineConfig& c) {
                            return fmt_double(c.train.dropout_p);
                          }});
    io.setters["sage_aggregator"] = [](PipelineConfig& c, const std::string& v) {
      if (v == "weighted")
        c.train.sage_weighted_mean = true;
      else if (v == "uniform")
        c.train.sage_weighted_mean = false;
      else
        throw std::invalid_argument("config: sage_aggregator must be weighted or uniform");
    };
    io.getters.push_back({"sage_aggregator", [](const PipelineConfig& c) {
                            return c.train.sage_weighted_mean ? std::string("weighted")
                                                              : std::string("uniform");
                          }});
    io.setters["forest_trees"] = [](PipelineConfig& c, const std::string& v) {
      c.train.forest_trees = std::stoi(v);
    };
    io.getters.push_back({"forest_trees", [](const PipelineConfig& c) {
                            return std::to_string(c.train.forest_trees);
                          }});
    io.setters["forest_max_depth"] = [](PipelineConfig& c, const std::string& v) {
      c.train.forest_max_depth = std::stoi(v);
    };
    io.getters.push_back({"forest_max_depth", [](const PipelineConfig& c) {
                            return std::to_string(c.train.forest_max_depth);
                          }});
    io.setters["gbt_rounds"] = [](PipelineConfig& c, const std::string& v) {
      c.train.gbt_rounds = std::stoi(v);
    };
    io.getters.push_back({"gbt_rounds", [](const PipelineConfig& c) {
                            return std::to_string(c.train.gbt_rounds);
                          }});
    io.setters["gbt_learning_rate"] = [](PipelineConfig& c, const std::string& v) {
      c.train.gbt_learning_rate = std::stod(v);
    };
    io.getters.push_back({"gbt_learning_rate", [](const PipelineConfig& c) {
                            return fmt_double(c.train.gbt_learning_rate);
                          }});
    io.setters["gbt_max_depth"] = [](PipelineConfig& c, const std::string& v) {
      c.train.gbt_max_depth = std::stoi(v);
    };
    io.getters.push_back({"gbt_max_depth", [](const PipelineConfig& c) {
                            return std::to_string(c.train.gbt_max_depth);
                          }});
    io.setters["gbt_pos_weight"] = [](PipelineConfig& c, const std::string& v) {
      c.train.gbt_pos_weight = std::stod(v);
    };
    io.getters.push_back({"gbt_pos_weight", [](const PipelineConfig& c) {
                            return fmt_double(c.train.gbt_pos_weight);
                          }});
    io.integer("shap_background_rows", &PipelineConfig::shap_background_rows);
    io.integer("shap_samples", &PipelineConfig::shap_samples);
    return io;
  }();
  return io;
}

}  // namespace

PipelineConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config '" + path.string() + "'");
  PipelineConfig cfg;
  const auto& io = config_io();
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      if (line.find_first_not_of(" \t\r") != std::string::npos)
        throw ParseError("config '" + path.string() + "' line " + std::to_string(line_no) +
                         ": expected 'key = value'");
      continue;
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = io.setters.find(key);
    if (it == io.setters.end())
      throw ParseError("config '" + path.string() + "' line " + std::to_string(line_no) +
                       ": unknown key '" + key + "'");
    try {
      it->second(cfg, value);
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception& e) {
      throw ParseError("config '" + path.string() + "' line " + std::to_string(line_no) +
                       ": bad value for '" + key + "': " + e.what());
    }
  }
  cfg.train.seed = cfg.seed;
  cfg.validate();
  return cfg;
}

void store_config(const PipelineConfig& config, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
  for (const auto& [key, get] : config_io().getters) out << key << " = " << get(config) << "\n";
}

// --- stage plumbing ------------------------------------------------------------

namespace {

struct Ctx {
  const PipelineConfig& cfg;
  fs::path out;

  fs::path p(const std::string& name) const { return out / name; }

  Grid need(const fs::path& path, const std::string& hint) const {
    if (!fs::exists(path))
      throw std::runtime_error("missing input '" + path.string() + "' (" + hint + ")");
    return load_ascii_grid(path);
  }

  Grid need_cfg(const std::string& cfg_path, const std::string& key) const {
    if (cfg_path.empty()) throw std::runtime_error("config key '" + key + "' is not set");
    return need(cfg_path, "configured as " + key);
  }
};

json config_echo(const PipelineConfig& cfg) {
  json j;
  for (const auto& [key, get] : config_io().getters) j[key] = get(cfg);
  return j;
}

FactorStack load_stack(const Ctx& ctx) {
  FactorStack stack;
  stack.grids[0] = ctx.need_cfg(ctx.cfg.dem_path, "dem_path");
  stack.grids[1] = ctx.need(ctx.p("slope.asc"), "run the terrain stage first");
  stack.grids[2] = ctx.need(ctx.p("aspect.asc"), "run the terrain stage first");
  stack.grids[3] = ctx.need(ctx.p("plan_curv.asc"), "run the terrain stage first");
  stack.grids[4] = ctx.need(ctx.p("prof_curv.asc"), "run the terrain stage first");
  stack.grids[5] = ctx.need(ctx.p("twi.asc"), "run the terrain stage first");
  stack.grids[6] = ctx.need(ctx.p("spi.asc"), "run the terrain stage first");
  stack.grids[7] = ctx.need(ctx.p("tri.asc"), "run the terrain stage first");
  stack.grids[8] = ctx.need_cfg(ctx.cfg.rainfall_path, "rainfall_path");
  stack.grids[9] = ctx.need_cfg(ctx.cfg.lulc_path, "lulc_path");
  stack.grids[10] = ctx.need_cfg(ctx.cfg.soil_clay_path, "soil_clay_path");
  stack.grids[11] = ctx.need(ctx.p("dist_river.asc"), "run the terrain stage first");
  return stack;
}

WatershedPartition load_partition(const Ctx& ctx) {
  WatershedPartition part;
  part.labels = ctx.need(ctx.p("watersheds.asc"), "run the terrain stage first");
  const fs::path meta = ctx.p("watersheds.csv");
  if (!fs::exists(meta))
    throw std::runtime_error("missing input '" + meta.string() + "' (run the terrain stage)");
  std::ifstream in(meta);
  std::string line;
  std::getline(in, line);  // header
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tok;
    std::getline(ls, tok, ',');
    std::getline(ls, tok, ',');
    part.areas_km2.push_back(std::stod(tok));
    std::getline(ls, tok, ',');
    part.downstream.push_back(std::stoi(tok));
  }
  part.count = static_cast<int>(part.areas_km2.size());
  return part;
}

FlowModel load_flow(const Ctx& ctx) {
  FlowModel flow;
  flow.directions = ctx.need(ctx.p("flow_dir.asc"), "run the terrain stage first");
  flow.accumulation = ctx.need(ctx.p("flow_acc.asc"), "run the terrain stage first");
  flow.specific_area = flow.accumulation.like(flow.accumulation.nodata);
  for (std::size_t i = 0; i < flow.accumulation.size(); ++i)
    if (!flow.accumulation.is_nodata(flow.accumulation.values[i]))
      flow.specific_area.values[i] = flow.accumulation.values[i] * flow.accumulation.cellsize;
  return flow;
}

SampleTable need_table(const Ctx& ctx, const std::string& name) {
  const fs::path path = ctx.p(name);
  if (!fs::exists(path))
    throw std::runtime_error("missing input '" + path.string() +
                             "' (run the inventory stage first)");
  return load_sample_table_csv(path);
}

/// Per-cell model predictions over the stack; cells with any nodata factor
/// are nodata.
Grid susceptibility_raster(const BaselineModel& model, const FactorStack& stack) {
  const Grid& ref = stack.grids[0];
  Grid out = ref.like(ref.nodata);
  parallel_for(static_cast<std::size_t>(ref.nrows), [&](std::size_t r) {
    for (int c = 0; c < ref.ncols; ++c) {
      FeatureVector f{};
      bool ok = true;
      for (int j = 0; j < kNumFactors && ok; ++j) {
        const double v = stack.grids[static_cast<std::size_t>(j)].at(static_cast<int>(r), c);
        if (stack.grids[static_cast<std::size_t>(j)].is_nodata(v))
          ok = false;
        else
          f[static_cast<std::size_t>(j)] = v;
      }
      if (ok) out.at(static_cast<int>(r), c) = predict_baseline(model, f);
    }
  });
  return out;
}

Grid sage_susceptibility_raster(const SageModel& model, const BasinGraph& graph,
                                const WatershedPartition& partition) {
  const auto probs = sage_node_probs(model, graph);
  Grid out = partition.labels.like(partition.labels.nodata);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double w = partition.labels.values[i];
    if (!partition.labels.is_nodata(w)) out.values[i] = probs[static_cast<std::size_t>(w)];
  }
  return out;
}

// --- stages --------------------------------------------------------------------

json stage_terrain(const Ctx& ctx) {
  const Grid dem = ctx.need_cfg(ctx.cfg.dem_path, "dem_path");
  const TerrainDerivatives terrain = derive_terrain(dem);
  const FlowModel flow = d8_flow(dem);
  const auto [twi, spi] = wetness_indices(flow, terrain);
  const BinaryGrid channels = extract_channels(flow, ctx.cfg.channel_min_area_km2);
  const Grid dist = distance_to_channels(channels);
  const BinaryGrid wchan = extract_channels(flow, ctx.cfg.watershed_min_area_km2);
  const WatershedPartition partition = delineate_watersheds(flow, wchan);

  store_ascii_grid(terrain.slope, ctx.p("slope.asc"));
  store_ascii_grid(terrain.aspect, ctx.p("aspect.asc"));
  store_ascii_grid(terrain.plan_curv, ctx.p("plan_curv.asc"));
  store_ascii_grid(terrain.prof_curv, ctx.p("prof_curv.asc"));
  store_ascii_grid(terrain.tri, ctx.p("tri.asc"));
  store_ascii_grid(twi, ctx.p("twi.asc"));
  store_ascii_grid(spi, ctx.p("spi.asc"));
  store_ascii_grid(flow.directions, ctx.p("flow_dir.asc"));
  store_ascii_grid(flow.accumulation, ctx.p("flow_acc.asc"));
  store_ascii_grid(channels.raster, ctx.p("channels.asc"));
  store_ascii_grid(dist, ctx.p("dist_river.asc"));
  store_ascii_grid(partition.labels, ctx.p("watersheds.asc"));
  {
    std::ofstream meta(ctx.p("watersheds.csv"));
    meta << "id,area_km2,downstream\n";
    for (int w = 0; w < partition.count; ++w)
      meta << w << ',' << fmt_double(partition.areas_km2[static_cast<std::size_t>(w)]) << ','
           << partition.downstream[static_cast<std::size_t>(w)] << '\n';
  }

  json frag;
  frag["valid_cells"] = dem.count_valid();
  frag["channel_cells"] = channels.count_ones();
  frag["watersheds"] = partition.count;
  return frag;
}

json stage_inventory(const Ctx& ctx) {
  const Grid reference = ctx.need_cfg(ctx.cfg.reference_db_path, "reference_db_path");
  const Grid monsoon = ctx.need_cfg(ctx.cfg.monsoon_db_path, "monsoon_db_path");
  const BinaryGrid permanent(ctx.need_cfg(ctx.cfg.permanent_water_path, "permanent_water_path"));
  const Grid slope = ctx.need(ctx.p("slope.asc"), "run the terrain stage first");
  const Grid dist = ctx.need(ctx.p("dist_river.asc"), "run the terrain stage first");

  const BinaryGrid mask =
      detect_change(reference, monsoon, permanent, slope, dist, ctx.cfg.change_threshold_db,
                    ctx.cfg.max_slope_deg, ctx.cfg.max_dist_m);
  store_ascii_grid(mask.raster, ctx.p("change_mask.asc"));

  // Per-year sampling without replacement across years: each year draws
  // from the cells not yet sampled, its allowance capped both by the
  // configured per-year cap and by an even split of what remains so the
  // later (test) years are never starved.
  std::vector<SamplePoint> floods;
  Grid remaining = mask.raster;
  long cells_left = mask.count_ones();
  for (int year = ctx.cfg.train_year_first; year <= ctx.cfg.test_year_last; ++year) {
    const int years_left = ctx.cfg.test_year_last - year + 1;
    const long fair_share = (cells_left + years_left - 1) / years_left;
    const int allowance =
        static_cast<int>(std::min<long>(ctx.cfg.per_year_cap, std::max<long>(fair_share, 1)));
    const auto pts =
        sample_flood_points(BinaryGrid(remaining), allowance, year,
                            mix_seed(ctx.cfg.seed, 0x9EA0 + static_cast<std::uint64_t>(year)));
    for (const auto& p : pts) {
      remaining.at(remaining.row_of_y(p.y), remaining.col_of_x(p.x)) = 0.0;
      floods.push_back(p);
    }
    cells_left -= static_cast<long>(pts.size());
  }

  // Eligible non-flood domain: valid DEM cells.
  const Grid dem = ctx.need_cfg(ctx.cfg.dem_path, "dem_path");
  Grid domain = dem.like(0.0);
  for (std::size_t i = 0; i < dem.size(); ++i)
    domain.values[i] = dem.is_nodata(dem.values[i]) ? 0.0 : 1.0;
  const auto nonfloods = sample_nonflood(BinaryGrid(domain), floods, ctx.cfg.ratio,
                                         ctx.cfg.buffer_m, mix_seed(ctx.cfg.seed, 0xB0FF));

  Inventory inv;
  inv.ratio = ctx.cfg.ratio;
  inv.buffer_m = ctx.cfg.buffer_m;
  inv.points = floods;
  inv.points.insert(inv.points.end(), nonfloods.begin(), nonfloods.end());
  store_points_csv(floods, ctx.p("flood_points.csv"));
  store_points_csv(nonfloods, ctx.p("nonflood_points.csv"));

  const TemporalSplit split =
      split_temporal(inv, {ctx.cfg.train_year_first, ctx.cfg.train_year_last},
                     {ctx.cfg.test_year_first, ctx.cfg.test_year_last});
  store_points_csv(split.train.points, ctx.p("points_train.csv"));
  store_points_csv(split.test.points, ctx.p("points_test.csv"));

  const FactorStack stack = load_stack(ctx);
  const SampleTable train_table = extract_features(stack, split.train.points);
  const SampleTable test_table = extract_features(stack, split.test.points);
  store_sample_table_csv(train_table, ctx.p("samples_train.csv"));
  store_sample_table_csv(test_table, ctx.p("samples_test.csv"));

  const PearsonReport pearson = pearson_screen(train_table, 0.80);
  const VifReport vif = vif_screen(train_table, 10.0);

  json screening;
  screening["pearson_threshold"] = 0.80;
  screening["pearson_flagged"] = json::array();
  for (const auto& pair : pearson.flagged)
    screening["pearson_flagged"].push_back(
        {kFactorNames[pair.i], kFactorNames[pair.j], pair.r});
  screening["zero_variance"] = json::array();
  for (int j : pearson.zero_variance) screening["zero_variance"].push_back(kFactorNames[j]);
  screening["vif_threshold"] = 10.0;
  double max_vif = 0.0;
  for (int j = 0; j < kNumFactors; ++j) {
    if (FactorStack::is_categorical(j)) continue;
    const double v = vif.vif[static_cast<std::size_t>(j)];
    screening["vif"][kFactorNames[j]] = std::isinf(v) ? json("inf") : json(v);
    if (!std::isinf(v)) max_vif = std::max(max_vif, v);
  }
  screening["max_vif"] = max_vif;
  screening["vif_flagged"] = json::array();
  for (int j : vif.flagged) screening["vif_flagged"].push_back(kFactorNames[j]);
  {
    std::ofstream out(ctx.p("screening.json"));
    out << screening.dump(1) << '\n';
  }

  json frag;
  frag["flood_points"] = floods.size();
  frag["nonflood_points"] = nonfloods.size();
  frag["train_rows"] = train_table.rows.size();
  frag["test_rows"] = test_table.rows.size();
  frag["rows_dropped_train"] = train_table.dropped;
  frag["rows_dropped_test"] = test_table.dropped;
  frag["split_dropped"] = split.dropped;
  frag["screening"] = screening;
  return frag;
}

json stage_graph(const Ctx& ctx) {
  const WatershedPartition partition = load_partition(ctx);
  const FactorStack stack = load_stack(ctx);
  const FlowModel flow = load_flow(ctx);
  const auto train_points = load_points_csv(ctx.p("points_train.csv"));
  std::vector<SamplePoint> floods;
  for (const auto& p : train_points)
    if (p.label == 1) floods.push_back(p);

  const BasinGraph graph = build_graph(partition, stack, flow, floods);
  store_graph_csv(graph, ctx.p("graph_nodes.csv"), ctx.p("graph_edges.csv"));

  json frag;
  frag["nodes"] = graph.num_nodes();
  frag["edges_total"] = graph.edges.size();
  frag["edges_downstream"] = graph.edges.size() / 2;
  int flooded = 0;
  for (int l : graph.labels) flooded += l;
  frag["flooded_nodes"] = flooded;
  return frag;
}

json stage_train(const Ctx& ctx) {
  const SampleTable train_table = need_table(ctx, "samples_train.csv");
  const BasinGraph graph = load_graph_csv(ctx.p("graph_nodes.csv"), ctx.p("graph_edges.csv"));

  json frag;
  std::vector<int> y;
  for (const auto& row : train_table.rows) y.push_back(row.point.label);
  for (BaselineKind kind : {BaselineKind::logistic, BaselineKind::forest, BaselineKind::gbt,
                            BaselineKind::stacking}) {
    const BaselineModel model = fit_baseline(kind, train_table, ctx.cfg.train);
    store_baseline_json(model, ctx.cfg.train,
                        ctx.p(std::string("model_") + baseline_kind_name(kind) + ".json"));
    std::vector<double> probs;
    probs.reserve(train_table.rows.size());
    for (const auto& row : train_table.rows)
      probs.push_back(predict_baseline(model, row.features));
    frag[baseline_kind_name(kind)] = {{"train_auc", compute_metrics(probs, y).auc}};
  }

  const SageFitResult sage = fit_sage(graph, ctx.cfg.train);
  store_sage_json(sage.model, ctx.cfg.train, ctx.p("model_gnn.json"));
  store_loss_trace_csv(sage.loss_trace, ctx.p("loss_trace.csv"));
  {
    const auto probs = sage_node_probs(sage.model, graph);
    frag["gnn"] = {{"train_auc", compute_metrics(probs, graph.labels).auc},
                   {"final_loss", sage.loss_trace.back()}};
  }
  return frag;
}

json stage_evaluate(const Ctx& ctx) {
  const WatershedPartition partition = load_partition(ctx);
  const BasinGraph graph = load_graph_csv(ctx.p("graph_nodes.csv"), ctx.p("graph_edges.csv"));
  SampleTable train_table = need_table(ctx, "samples_train.csv");

  const BlockAssignment blocks = kmeans_blocks(
      watershed_centroids(partition), ctx.cfg.k_blocks, mix_seed(ctx.cfg.seed, 0xB10C));
  train_table = assign_blocks(train_table, partition, blocks);
  store_sample_table_csv(train_table, ctx.p("samples_train.csv"));

  std::vector<CvSummary> summaries;
  for (BaselineKind kind : {BaselineKind::logistic, BaselineKind::forest, BaselineKind::gbt,
                            BaselineKind::stacking})
    summaries.push_back(lobo_cv(train_table, blocks, kind, ctx.cfg.train));
  summaries.push_back(lobo_cv_sage(graph, blocks, ctx.cfg.train));
  store_cv_csv(summaries, ctx.p("cv_metrics.csv"));

  json frag;
  for (const auto& s : summaries) {
    json folds = json::array();
    for (const auto& f : s.folds) {
      if (f.skipped) {
        folds.push_back({{"fold", f.fold}, {"skipped", true}, {"note", f.note}});
      } else {
        folds.push_back({{"fold", f.fold},
                         {"auc", f.metrics.auc},
                         {"f1_macro", f.metrics.f1_macro},
                         {"kappa", f.metrics.kappa},
                         {"tpr", f.metrics.tpr},
                         {"fpr", f.metrics.fpr},
                         {"brier", f.metrics.brier},
                         {"n_train", f.n_train},
                         {"n_test", f.n_test}});
      }
    }
    frag[s.model] = {{"mean_auc", s.mean_auc},
                     {"sd_auc", s.sd_auc},
                     {"folds_used", s.folds_used},
                     {"folds", folds}};
  }
  return frag;
}

json stage_conformal(const Ctx& ctx) {
  const SampleTable train_table = need_table(ctx, "samples_train.csv");
  const SampleTable test_table = need_table(ctx, "samples_test.csv");
  const FactorStack stack = load_stack(ctx);
  const BaselineKind kind = baseline_kind_from_name(ctx.cfg.model);

  // Seeded stratified 60/20/20 split of the training rows into proper
  // train / calibration / evaluation.
  std::vector<std::size_t> proper, calib, heldout;
  {
    Rng rng(mix_seed(ctx.cfg.seed, 0xC0F0));
    for (int cls = 0; cls < 2; ++cls) {
      std::vector<std::size_t> members;
      for (std::size_t i = 0; i < train_table.rows.size(); ++i)
        if (train_table.rows[i].point.label == cls) members.push_back(i);
      rng.shuffle(members);
      const std::size_t n60 = members.size() * 60 / 100;
      const std::size_t n80 = members.size() * 80 / 100;
      for (std::size_t i = 0; i < members.size(); ++i) {
        if (i < n60)
          proper.push_back(members[i]);
        else if (i < n80)
          calib.push_back(members[i]);
        else
          heldout.push_back(members[i]);
      }
    }
    std::sort(proper.begin(), proper.end());
    std::sort(calib.begin(), calib.end());
    std::sort(heldout.begin(), heldout.end());
  }

  SampleTable proper_table;
  for (std::size_t i : proper) proper_table.rows.push_back(train_table.rows[i]);
  const BaselineModel base = fit_baseline(kind, proper_table, ctx.cfg.train);

  std::vector<double> cal_probs_true;
  for (std::size_t i : calib) {
    const double p1 = predict_baseline(base, train_table.rows[i].features);
    cal_probs_true.push_back(train_table.rows[i].point.label == 1 ? p1 : 1.0 - p1);
  }
  const CalibratedPredictor cal = calibrate(cal_probs_true, ctx.cfg.alpha);

  auto rows_report = [&](const std::vector<const SampleRow*>& rows) {
    std::vector<std::array<double, 2>> probs;
    std::vector<int> labels, strata;
    for (const auto* row : rows) {
      const double p1 = predict_baseline(base, row->features);
      probs.push_back({1.0 - p1, p1});
      labels.push_back(row->point.label);
      strata.push_back(static_cast<int>(classify_value(p1, ctx.cfg.class_bounds)));
    }
    return coverage_report(cal, probs, labels, strata);
  };

  std::vector<const SampleRow*> held_rows, temporal_rows;
  for (std::size_t i : heldout) held_rows.push_back(&train_table.rows[i]);
  for (const auto& row : test_table.rows) temporal_rows.push_back(&row);
  const CoverageReport held_rep = rows_report(held_rows);
  store_coverage_json(cal, held_rep, ctx.p("coverage.json"));

  json frag;
  frag["model"] = ctx.cfg.model;
  frag["alpha"] = cal.alpha;
  frag["qhat"] = cal.qhat;
  frag["n_cal"] = cal.n_cal;
  frag["saturated"] = cal.saturated;
  auto cov_json = [](const CoverageReport& rep) {
    auto cov = [](double v) -> json { return v == kCoverageUndefined ? json(nullptr) : json(v); };
    return json{{"overall", rep.overall},
                {"by_class",
                 {{"low", cov(rep.by_class[0])},
                  {"moderate", cov(rep.by_class[1])},
                  {"high", cov(rep.by_class[2])},
                  {"very_high", cov(rep.by_class[3])}}},
                {"mean_width", rep.mean_width},
                {"mean_half_width", rep.mean_half_width},
                {"empty_set_fraction", rep.empty_set_fraction},
                {"n_test", rep.n_test}};
  };
  frag["coverage_heldout"] = cov_json(held_rep);
  if (!temporal_rows.empty()) {
    const CoverageReport temporal_rep = rows_report(temporal_rows);
    frag["coverage_temporal"] = cov_json(temporal_rep);
  }

  const Grid susceptibility = susceptibility_raster(base, stack);
  store_ascii_grid(susceptibility, ctx.p("susceptibility.asc"));
  const IntervalMaps maps = interval_maps(cal, susceptibility);
  store_ascii_grid(maps.lower, ctx.p("susceptibility_lower.asc"));
  store_ascii_grid(maps.upper, ctx.p("susceptibility_upper.asc"));
  store_ascii_grid(maps.width, ctx.p("width.asc"));

  // Node-level product from the graph model, painted over watersheds.
  {
    const WatershedPartition partition = load_partition(ctx);
    const BasinGraph graph = load_graph_csv(ctx.p("graph_nodes.csv"), ctx.p("graph_edges.csv"));
    const SageModel gnn = load_sage_json(ctx.p("model_gnn.json"));
    store_ascii_grid(sage_susceptibility_raster(gnn, graph, partition),
                     ctx.p("susceptibility_gnn.asc"));
  }
  return frag;
}

json stage_explain(const Ctx& ctx) {
  const SampleTable train_table = need_table(ctx, "samples_train.csv");
  const FactorStack stack = load_stack(ctx);
  const WatershedPartition partition = load_partition(ctx);
  const BaselineKind kind = baseline_kind_from_name(ctx.cfg.model);
  const fs::path model_path = ctx.p(std::string("model_") + ctx.cfg.model + ".json");
  if (!fs::exists(model_path))
    throw std::runtime_error("missing input '" + model_path.string() +
                             "' (run the train stage first)");
  const BaselineModel model = load_baseline_json(model_path);

  // Stratified seeded subsamples for the background and the explained rows.
  auto stratified_pick = [&](std::size_t cap, std::uint64_t salt) {
    std::vector<std::size_t> picked;
    Rng rng(mix_seed(ctx.cfg.seed, salt));
    for (int cls = 0; cls < 2; ++cls) {
      std::vector<std::size_t> members;
      for (std::size_t i = 0; i < train_table.rows.size(); ++i)
        if (train_table.rows[i].point.label == cls) members.push_back(i);
      rng.shuffle(members);
      const std::size_t share = std::max<std::size_t>(
          1, cap * members.size() / std::max<std::size_t>(1, train_table.rows.size()));
      for (std::size_t i = 0; i < members.size() && i < share; ++i)
        picked.push_back(members[i]);
    }
    std::sort(picked.begin(), picked.end());
    if (picked.size() > cap) picked.resize(cap);
    return picked;
  };

  std::vector<FeatureVector> background;
  for (std::size_t i :
       stratified_pick(static_cast<std::size_t>(ctx.cfg.shap_background_rows), 0xBA5E))
    background.push_back(train_table.rows[i].features);

  std::vector<FeatureVector> samples;
  std::vector<std::pair<double, double>> locations;
  for (std::size_t i : stratified_pick(static_cast<std::size_t>(ctx.cfg.shap_samples), 0x5A3B)) {
    samples.push_back(train_table.rows[i].features);
    locations.push_back({train_table.rows[i].point.x, train_table.rows[i].point.y});
  }

  const Attribution attr = exact_shapley(model, samples, background);
  store_attribution_csv(attr, ctx.p("attribution.csv"));

  const auto ranking = global_importance(attr);
  {
    std::ofstream out(ctx.p("importance.csv"));
    out << "rank,factor,mean_abs_phi\n";
    for (std::size_t r = 0; r < ranking.size(); ++r)
      out << r + 1 << ',' << kFactorNames[ranking[r].first] << ','
          << fmt_double(ranking[r].second) << '\n';
  }

  const Grid dominant = dominant_factor_map(model, stack, background, &partition);
  store_ascii_grid(dominant, ctx.p("dominant_factor.asc"));

  json frag;
  frag["model"] = ctx.cfg.model;
  frag["samples"] = samples.size();
  frag["background_rows"] = background.size();
  frag["base_value"] = attr.base_value;
  double max_residual = 0.0;
  for (std::size_t i = 0; i < attr.phi.size(); ++i) {
    double s = 0.0;
    for (double p : attr.phi[i]) s += p;
    max_residual = std::max(max_residual,
                            std::abs(s - (attr.predictions[i] - attr.base_value)));
  }
  frag["efficiency_max_residual"] = max_residual;
  frag["ranking"] = json::array();
  for (const auto& [factor, value] : ranking)
    frag["ranking"].push_back({kFactorNames[factor], value});

  if (!ctx.cfg.districts_path.empty()) {
    const Grid districts = ctx.need_cfg(ctx.cfg.districts_path, "districts_path");
    const DistrictAttribution da = district_aggregate(attr, locations, districts);
    json dj;
    for (const auto& [district, mean_phi] : da.mean_abs_phi) {
      json entry;
      entry["dominant_factor"] = kFactorNames[da.dominant_factor.at(district)];
      for (int j = 0; j < kNumFactors; ++j)
        entry["mean_abs_phi"][kFactorNames[j]] = mean_phi[static_cast<std::size_t>(j)];
      dj[std::to_string(district)] = entry;
    }
    json out;
    out["districts"] = dj;
    out["skipped_samples"] = da.skipped_samples;
    out["empty_districts"] = da.empty_districts;
    std::ofstream f(ctx.p("district_shap.json"));
    f << out.dump(1) << '\n';
    frag["districts"] = out;
  }
  return frag;
}

json stage_risk(const Ctx& ctx) {
  const Grid susceptibility =
      ctx.need(ctx.p("susceptibility.asc"), "run the conformal stage first");
  const Grid width = ctx.need(ctx.p("width.asc"), "run the conformal stage first");

  const Grid class_map = classify(susceptibility, ctx.cfg.class_bounds);
  const Grid tiers = decision_tiers(class_map, width, ctx.cfg.width_narrow_max);
  store_ascii_grid(class_map, ctx.p("class_map.asc"));
  store_ascii_grid(tiers, ctx.p("tier_map.asc"));
  store_pgm(susceptibility, ctx.p("susceptibility.pgm"), 0.0, 1.0);
  store_pgm(width, ctx.p("width.pgm"), 0.0, 1.0);
  store_pgm(class_map, ctx.p("class_map.pgm"), 0.0, 3.0);
  store_pgm(tiers, ctx.p("tier_map.pgm"), 1.0, 4.0);

  const ZoneAreas zones = zone_area_summary(class_map);
  json zj;
  const char* zone_names[4] = {"low", "moderate", "high", "very_high"};
  for (std::size_t c = 0; c < 4; ++c)
    zj[zone_names[c]] = {{"km2", zones.km2[c]}, {"percent", zones.percent[c]}};
  zj["total_km2"] = zones.total_km2;
  {
    std::ofstream out(ctx.p("zone_areas.json"));
    out << zj.dump(1) << '\n';
  }

  json frag;
  frag["zones"] = zj;
  if (!ctx.cfg.assets_path.empty()) {
    if (!fs::exists(ctx.cfg.assets_path))
      throw std::runtime_error("missing input '" + ctx.cfg.assets_path +
                               "' (configured as assets_path)");
    const auto assets = load_assets_csv(ctx.cfg.assets_path);
    const auto exposure = exposure_overlay(assets, class_map);
    store_exposure_json(exposure, ctx.p("exposure.json"));
    json ej;
    for (const auto& [cat, e] : exposure)
      ej[cat] = {{"points_total", e.points_total},
                 {"points_exposed", e.points_exposed},
                 {"line_km_total", e.line_km_total},
                 {"line_km_exposed", e.line_km_exposed}};
    frag["exposure"] = ej;
  }
  return frag;
}

using StageFn = json (*)(const Ctx&);

const std::vector<std::pair<std::string, StageFn>>& stage_table() {
  static const std::vector<std::pair<std::string, StageFn>> table = {
      {"terrain", &stage_terrain},   {"inventory", &stage_inventory},
      {"graph", &stage_graph},       {"train", &stage_train},
      {"evaluate", &stage_evaluate}, {"conformal", &stage_conformal},
      {"explain", &stage_explain},   {"risk", &stage_risk},
  };
  return table;
}

void write_manifest(const fs::path& out, const std::vector<std::string>& completed) {
  std::ofstream manifest(out / "MANIFEST.txt");
  for (const auto& s : completed) manifest << "stage " << s << " completed\n";
}

}  // namespace

const std::vector<std::string>& pipeline_stage_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& [name, fn] : stage_table()) n.push_back(name);
    return n;
  }();
  return names;
}

PipelineConfig write_scenario_bundle(const PipelineConfig& config) {
  config.validate();
  const fs::path dir = fs::path(config.out_dir) / "scenario";
  fs::create_directories(dir);

  PipelineConfig out_cfg = config;
  // Keep the watershed threshold usable at the generated extent: the
  // regional 150 km^2 default would merge a desk-scale domain into a
  // single unit. 1/80 of the domain gives a few dozen units.
  const double domain_km2 = static_cast<double>(config.rows) * config.cols *
                            config.cellsize_m * config.cellsize_m / 1e6;
  out_cfg.watershed_min_area_km2 = std::min(config.watershed_min_area_km2, domain_km2 / 80.0);

  Scenario sc = generate_scenario(out_cfg.scenario_params());
  store_ascii_grid(sc.dem, dir / "dem.asc");
  store_ascii_grid(sc.rainfall, dir / "rainfall.asc");
  store_ascii_grid(sc.soil_clay, dir / "soil_clay.asc");
  store_ascii_grid(sc.lulc, dir / "lulc.asc");
  store_ascii_grid(sc.reference_db, dir / "reference_db.asc");
  store_ascii_grid(sc.monsoon_db, dir / "monsoon_db.asc");
  store_ascii_grid(sc.permanent_water.raster, dir / "permanent_water.asc");
  store_ascii_grid(sc.districts, dir / "districts.asc");
  store_ascii_grid(sc.truth.raster, dir / "truth.asc");
  store_assets_csv(demo_assets(sc.dem), dir / "assets.csv");

  out_cfg.dem_path = (dir / "dem.asc").string();
  out_cfg.rainfall_path = (dir / "rainfall.asc").string();
  out_cfg.lulc_path = (dir / "lulc.asc").string();
  out_cfg.soil_clay_path = (dir / "soil_clay.asc").string();
  out_cfg.reference_db_path = (dir / "reference_db.asc").string();
  out_cfg.monsoon_db_path = (dir / "monsoon_db.asc").string();
  out_cfg.permanent_water_path = (dir / "permanent_water.asc").string();
  out_cfg.districts_path = (dir / "districts.asc").string();
  out_cfg.assets_path = (dir / "assets.csv").string();
  store_config(out_cfg, fs::path(config.out_dir) / "scenario.cfg");
  return out_cfg;
}

void run_stage(const PipelineConfig& config, const std::string& stage) {
  config.validate();
  fs::create_directories(config.out_dir);
  Ctx ctx{config, fs::path(config.out_dir)};
  for (const auto& [name, fn] : stage_table()) {
    if (name != stage) continue;
    const json frag = fn(ctx);
    std::ofstream out(ctx.p("report_" + name + ".json"));
    out << frag.dump(1) << '\n';
    return;
  }
  throw std::invalid_argument("unknown stage '" + stage + "'");
}

void run_pipeline(const PipelineConfig& config) {
  config.validate();
  fs::create_directories(config.out_dir);
  Ctx ctx{config, fs::path(config.out_dir)};

  json report;
  report["config"] = config_echo(config);
  report["stage_order"] = pipeline_stage_names();

  std::vector<std::string> completed;
  for (const auto& [name, fn] : stage_table()) {
    try {
      report["stages"][name] = fn(ctx);
    } catch (const std::exception& e) {
      write_manifest(ctx.out, completed);
      throw std::runtime_error("stage '" + name + "' failed: " + e.what());
    }
    completed.push_back(name);
    write_manifest(ctx.out, completed);
  }

  std::ofstream out(ctx.p("run_report.json"));
  out << report.dump(1) << '\n';
}

}  // namespace floodgraph
