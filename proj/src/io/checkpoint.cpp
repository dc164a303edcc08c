#include "shortmr/io/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "shortmr/errors.hpp"

namespace shortmr::io {

namespace {

using nlohmann::json;

json spec_to_json(const ModelSpec& s) {
  return json{{"arch", s.arch},
              {"stages", s.stages},
              {"base_channels", s.base_channels},
              {"input_shape", {s.input_shape[0], s.input_shape[1], s.input_shape[2]}},
              {"classes", s.classes},
              {"feature_layer", s.feature_layer}};
}

ModelSpec spec_from_json(const json& j) {
  ModelSpec s;
  s.arch = j.at("arch").get<std::string>();
  s.stages = j.at("stages").get<int>();
  s.base_channels = j.at("base_channels").get<int>();
  const auto sh = j.at("input_shape");
  s.input_shape = {sh.at(0).get<std::int64_t>(), sh.at(1).get<std::int64_t>(),
                   sh.at(2).get<std::int64_t>()};
  s.classes = j.at("classes").get<int>();
  s.feature_layer = j.at("feature_layer").get<std::string>();
  return s;
}

json cfg_to_json(const TrainConfig& c) {
  return json{{"max_epochs", c.max_epochs},
              {"batch_size", c.batch_size},
              {"grad_accum", c.grad_accum},
              {"learning_rate", c.learning_rate},
              {"cosine_horizon", c.cosine_horizon},
              {"weight_decay", c.weight_decay},
              {"patience", c.patience},
              {"selection", c.selection == SelectionMetric::val_f1 ? "val_f1"
                                                                   : "val_loss"},
              {"threads", c.threads},
              {"seed", c.seed}};
}

TrainConfig cfg_from_json(const json& j) {
  TrainConfig c;
  c.max_epochs = j.at("max_epochs").get<int>();
  c.batch_size = j.at("batch_size").get<int>();
  c.grad_accum = j.at("grad_accum").get<int>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.cosine_horizon = j.at("cosine_horizon").get<int>();
  c.weight_decay = j.at("weight_decay").get<double>();
  c.patience = j.at("patience").get<int>();
  c.selection = j.at("selection").get<std::string>() == "val_f1"
                    ? SelectionMetric::val_f1
                    : SelectionMetric::val_loss;
  c.threads = j.at("threads").get<unsigned>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

json history_to_json(const History& h) {
  json arr = json::array();
  for (const auto& e : h) {
    arr.push_back(json{{"epoch", e.epoch},
                       {"lr", e.lr},
                       {"train_loss", e.train_loss},
                       {"val_loss", e.val_loss},
                       {"val_f1_macro", e.val_f1_macro},
                       {"val_f1", {e.val_f1[0], e.val_f1[1]}}});
  }
  return arr;
}

History history_from_json(const json& arr) {
  History h;
  for (const auto& e : arr) {
    EpochStats st;
    st.epoch = e.at("epoch").get<int>();
    st.lr = e.at("lr").get<double>();
    st.train_loss = e.at("train_loss").get<double>();
    st.val_loss = e.at("val_loss").get<double>();
    st.val_f1_macro = e.at("val_f1_macro").get<double>();
    st.val_f1 = {e.at("val_f1").at(0).get<double>(),
                 e.at("val_f1").at(1).get<double>()};
    h.push_back(st);
  }
  return h;
}

}  // namespace

void save_checkpoint(const TrainedModel& model,
                     const std::filesystem::path& path) {
  json j;
  j["model_spec"] = spec_to_json(model.spec);
  j["train_config"] = cfg_to_json(model.cfg);
  j["history"] = history_to_json(model.history);
  j["target"] = model.target == Target::diagnosis ? "diagnosis" : "attribute";
  j["best_epoch"] = model.best_epoch;
  j["best_val_f1"] = model.best_val_f1;
  j["best_val_loss"] = model.best_val_loss;
  j["model_id"] = model.model_id;
  const std::string blob = j.dump();

  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw RuntimeFailure("cannot write '" + path.string() + "'");
  f.write("SMCK", 4);
  auto put_u64 = [&f](std::uint64_t v) {
    std::uint8_t b[8];
    for (int i = 0; i < 8; ++i) b[i] = (v >> (8 * i)) & 0xFF;
    f.write(reinterpret_cast<const char*>(b), 8);
  };
  put_u64(1);  // version
  put_u64(blob.size());
  f.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  const auto& params = model.net.params();
  put_u64(params.size());
  for (float p : params) {
    std::uint32_t u;
    std::memcpy(&u, &p, 4);
    std::uint8_t b[4] = {static_cast<std::uint8_t>(u & 0xFF),
                         static_cast<std::uint8_t>((u >> 8) & 0xFF),
                         static_cast<std::uint8_t>((u >> 16) & 0xFF),
                         static_cast<std::uint8_t>((u >> 24) & 0xFF)};
    f.write(reinterpret_cast<const char*>(b), 4);
  }
  if (!f) throw RuntimeFailure("write failed for '" + path.string() + "'");
}

TrainedModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw RuntimeFailure("cannot open checkpoint '" + path.string() + "'");
  char magic[4];
  f.read(magic, 4);
  if (!f || std::memcmp(magic, "SMCK", 4) != 0) {
    throw ValidationError("'" + path.string() + "' is not a checkpoint file");
  }
  auto get_u64 = [&f, &path] {
    std::uint8_t b[8];
    f.read(reinterpret_cast<char*>(b), 8);
    if (!f) throw ValidationError("truncated checkpoint '" + path.string() + "'");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
  };
  const std::uint64_t version = get_u64();
  if (version != 1) {
    throw ValidationError("unsupported checkpoint version " +
                          std::to_string(version));
  }
  const std::uint64_t blob_len = get_u64();
  std::string blob(blob_len, '\0');
  f.read(blob.data(), static_cast<std::streamsize>(blob_len));
  if (!f) throw ValidationError("truncated checkpoint '" + path.string() + "'");
  json j;
  try {
    j = json::parse(blob);
  } catch (const std::exception& e) {
    throw ValidationError("corrupt checkpoint metadata: " + std::string(e.what()));
  }

  TrainedModel model(spec_from_json(j.at("model_spec")));
  model.cfg = cfg_from_json(j.at("train_config"));
  model.history = history_from_json(j.at("history"));
  model.target = j.at("target").get<std::string>() == "diagnosis"
                     ? Target::diagnosis
                     : Target::attribute;
  model.best_epoch = j.at("best_epoch").get<int>();
  model.best_val_f1 = j.at("best_val_f1").get<double>();
  model.best_val_loss = j.at("best_val_loss").get<double>();
  model.model_id = j.at("model_id").get<std::string>();

  const std::uint64_t n = get_u64();
  if (n != model.net.param_count()) {
    throw ValidationError("checkpoint parameter count mismatch");
  }
  auto& params = model.net.params();
  for (std::uint64_t i = 0; i < n; ++i) {
    std::uint8_t b[4];
    f.read(reinterpret_cast<char*>(b), 4);
    if (!f) throw ValidationError("truncated checkpoint '" + path.string() + "'");
    const std::uint32_t u = static_cast<std::uint32_t>(b[0]) |
                            (static_cast<std::uint32_t>(b[1]) << 8) |
                            (static_cast<std::uint32_t>(b[2]) << 16) |
                            (static_cast<std::uint32_t>(b[3]) << 24);
    float p;
    std::memcpy(&p, &u, 4);
    params[i] = p;
  }
  return model;
}

}  // namespace shortmr::io
