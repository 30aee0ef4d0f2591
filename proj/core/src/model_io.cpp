#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "lpgnet/models.hpp"

namespace lpgnet {
namespace {

using nlohmann::json;

json eps_json(double eps) {
  if (std::isinf(eps)) return "inf";
  return eps;
}

double eps_from_json(const json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "inf") return kInfiniteEpsilon;
    throw std::runtime_error("manifest: bad epsilon string");
  }
  return j.get<double>();
}

json mlp_to_json(const MlpModel& m) {
  json j;
  j["input_dim"] = m.input_dim;
  j["num_classes"] = m.num_classes;
  j["hidden_size"] = m.hidden_size;
  j["num_hidden"] = m.num_hidden;
  j["dropout"] = m.dropout;
  j["layers"] = json::array();
  for (size_t l = 0; l < m.weights.size(); ++l)
    j["layers"].push_back({{"rows", m.weights[l].rows()},
                           {"cols", m.weights[l].cols()},
                           {"w", m.weights[l].values()},
                           {"b", m.biases[l]}});
  return j;
}

MlpModel mlp_from_json(const json& j) {
  MlpModel m;
  m.input_dim = j.at("input_dim").get<int>();
  m.num_classes = j.at("num_classes").get<int>();
  m.hidden_size = j.at("hidden_size").get<int>();
  m.num_hidden = j.at("num_hidden").get<int>();
  m.dropout = j.at("dropout").get<double>();
  for (const auto& layer : j.at("layers")) {
    m.weights.emplace_back(layer.at("rows").get<int>(), layer.at("cols").get<int>(),
                           layer.at("w").get<std::vector<double>>());
    m.biases.push_back(layer.at("b").get<std::vector<double>>());
  }
  return m;
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

constexpr char kCacheMagic[8] = {'L', 'P', 'G', 'D', 'V', 'E', 'C', '1'};

void write_matrix_binary(const DenseMatrix& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out.write(kCacheMagic, sizeof(kCacheMagic));
  const int64_t rows = m.rows(), cols = m.cols();
  out.write(reinterpret_cast<const char*>(&rows), sizeof(rows));
  out.write(reinterpret_cast<const char*>(&cols), sizeof(cols));
  out.write(reinterpret_cast<const char*>(m.values().data()),
            static_cast<std::streamsize>(m.size() * sizeof(double)));
}

DenseMatrix read_matrix_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCacheMagic, sizeof(magic)) != 0)
    throw std::runtime_error(path.string() + ": not a degree-vector cache file");
  int64_t rows = 0, cols = 0;
  in.read(reinterpret_cast<char*>(&rows), sizeof(rows));
  in.read(reinterpret_cast<char*>(&cols), sizeof(cols));
  std::vector<double> values(static_cast<size_t>(rows * cols));
  in.read(reinterpret_cast<char*>(values.data()),
          static_cast<std::streamsize>(values.size() * sizeof(double)));
  if (!in) throw std::runtime_error(path.string() + ": truncated cache file");
  return DenseMatrix(static_cast<int>(rows), static_cast<int>(cols), std::move(values));
}

json config_to_json(const TrainConfig& c) {
  return {{"learning_rate", c.learning_rate},
          {"dropout", c.dropout},
          {"hidden_size", c.hidden_size},
          {"num_hidden", c.num_hidden},
          {"epochs", c.epochs},
          {"weight_decay", c.weight_decay},
          {"seed", c.seed},
          {"snapshot_rule",
           c.snapshot_rule == SnapshotRule::best_validation_f1 ? "validation_f1" : "validation_loss"}};
}

TrainConfig config_from_json(const json& j) {
  TrainConfig c;
  c.learning_rate = j.at("learning_rate").get<double>();
  c.dropout = j.at("dropout").get<double>();
  c.hidden_size = j.at("hidden_size").get<int>();
  c.num_hidden = j.at("num_hidden").get<int>();
  c.epochs = j.at("epochs").get<int>();
  c.weight_decay = j.at("weight_decay").get<double>();
  c.seed = j.at("seed").get<uint64_t>();
  c.snapshot_rule = j.at("snapshot_rule").get<std::string>() == "validation_loss"
                        ? SnapshotRule::best_validation_loss
                        : SnapshotRule::best_validation_f1;
  return c;
}

json plan_to_json(const BudgetPlan& p) {
  return {{"setting", to_string(p.setting)},
          {"total_epsilon", eps_json(p.total_epsilon)},
          {"nl", p.nl}};
}

BudgetPlan plan_from_json(const json& j) {
  return plan_budget(setting_from_string(j.at("setting").get<std::string>()),
                     eps_from_json(j.at("total_epsilon")), j.at("nl").get<int>());
}

}  // namespace

void save_model(const TrainedModel& model, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  json manifest;
  manifest["kind"] = to_string(model.kind);
  manifest["plan"] = plan_to_json(model.plan);
  manifest["config"] = config_to_json(model.config);

  switch (model.kind) {
    case ModelKind::mlp: {
      write_file(dir / "mlp_0.json", mlp_to_json(model.mlp()).dump(2));
      manifest["mlps"] = {"mlp_0.json"};
      break;
    }
    case ModelKind::gcn:
    case ModelKind::dpgcn: {
      const GcnTrained& g = model.gcn();
      write_file(dir / "mlp_0.json", mlp_to_json(g.net).dump(2));
      manifest["mlps"] = {"mlp_0.json"};
      manifest["normalization"] = to_string(g.norm_mode);
      manifest["dp"] = g.dp;
      if (g.dp) {
        manifest["eps_r"] = g.eps_r;
        manifest["noisy_fraction"] = g.noisy_fraction;
        std::string edges;
        for (const auto& [u, v] : g.released_edges)
          edges += std::to_string(u) + ' ' + std::to_string(v) + '\n';
        write_file(dir / "released_edges.txt", edges);
      }
      break;
    }
    case ModelKind::lpgnet: {
      const TrainedLpgnet& m = model.lpgnet();
      manifest["nl"] = m.nl;
      manifest["num_classes"] = m.num_classes;
      manifest["feature_dim"] = m.feature_dim;
      manifest["seed"] = m.seed;
      json names = json::array();
      for (size_t i = 0; i < m.mlps.size(); ++i) {
        const std::string name = "mlp_" + std::to_string(i) + ".json";
        write_file(dir / name, mlp_to_json(m.mlps[i]).dump(2));
        names.push_back(name);
      }
      manifest["mlps"] = names;
      json train_cache = json::array();
      for (size_t i = 0; i < m.train_cache.size(); ++i) {
        const std::string name = "degvec_train_" + std::to_string(i) + ".bin";
        write_matrix_binary(m.train_cache[i], dir / name);
        train_cache.push_back(name);
      }
      manifest["train_cache"] = train_cache;
      json infer_cache = json::array();
      for (size_t i = 0; i < m.inference_cache.size(); ++i) {
        const std::string name = "degvec_infer_" + std::to_string(i) + ".bin";
        write_matrix_binary(m.inference_cache[i], dir / name);
        infer_cache.push_back(name);
      }
      manifest["inference_cache"] = infer_cache;
      break;
    }
  }
  write_file(dir / "manifest.json", manifest.dump(2));
  write_file(dir / "ledger.json", model.budget().to_json());
}

TrainedModel load_model(const std::filesystem::path& dir) {
  const json manifest = json::parse(read_file(dir / "manifest.json"));
  TrainedModel model;
  model.kind = model_kind_from_string(manifest.at("kind").get<std::string>());
  model.plan = plan_from_json(manifest.at("plan"));
  model.config = config_from_json(manifest.at("config"));
  model.ledger = BudgetLedger::from_json(read_file(dir / "ledger.json"));

  switch (model.kind) {
    case ModelKind::mlp: {
      model.impl = mlp_from_json(json::parse(read_file(dir / "mlp_0.json")));
      break;
    }
    case ModelKind::gcn:
    case ModelKind::dpgcn: {
      GcnTrained g;
      g.net = mlp_from_json(json::parse(read_file(dir / "mlp_0.json")));
      g.norm_mode = adj_norm_from_string(manifest.at("normalization").get<std::string>());
      g.dp = manifest.at("dp").get<bool>();
      if (g.dp) {
        g.eps_r = manifest.at("eps_r").get<double>();
        g.noisy_fraction = manifest.at("noisy_fraction").get<double>();
        std::ifstream in(dir / "released_edges.txt");
        int u, v;
        while (in >> u >> v) g.released_edges.emplace_back(u, v);
      }
      model.impl = std::move(g);
      break;
    }
    case ModelKind::lpgnet: {
      TrainedLpgnet m;
      m.nl = manifest.at("nl").get<int>();
      m.num_classes = manifest.at("num_classes").get<int>();
      m.feature_dim = manifest.at("feature_dim").get<int>();
      m.seed = manifest.at("seed").get<uint64_t>();
      m.plan = model.plan;
      m.ledger = model.ledger;
      for (const auto& name : manifest.at("mlps"))
        m.mlps.push_back(mlp_from_json(json::parse(read_file(dir / name.get<std::string>()))));
      for (const auto& name : manifest.at("train_cache"))
        m.train_cache.push_back(read_matrix_binary(dir / name.get<std::string>()));
      for (const auto& name : manifest.at("inference_cache"))
        m.inference_cache.push_back(read_matrix_binary(dir / name.get<std::string>()));
      model.impl = std::move(m);
      break;
    }
  }
  return model;
}

}  // namespace lpgnet
