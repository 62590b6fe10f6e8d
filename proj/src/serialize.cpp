#include "tfa/serialize.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

namespace tfa {

using nlohmann::json;

json to_json(const Matrix& m) { return json{{"rows", m.rows()}, {"cols", m.cols()}, {"values", m.values()}}; }

Matrix matrix_from_json(const json& j) {
  const auto rows = j.at("rows").get<std::size_t>();
  const auto cols = j.at("cols").get<std::size_t>();
  const auto values = j.at("values").get<std::vector<double>>();
  if (values.size() != rows * cols) throw std::runtime_error("matrix values length != rows*cols");
  Matrix m(rows, cols);
  std::copy(values.begin(), values.end(), m.data());
  return m;
}

json to_json(const FeedForwardBlock& f) {
  json layers = json::array();
  for (const auto& l : f.layers()) layers.push_back({{"W", to_json(l.W)}, {"b", l.b}});
  return json{{"layers", layers}};
}

FeedForwardBlock ffn_from_json(const json& j) {
  std::vector<AffineLayer> layers;
  for (const auto& l : j.at("layers")) layers.push_back({matrix_from_json(l.at("W")), l.at("b").get<std::vector<double>>()});
  return FeedForwardBlock(std::move(layers));
}

json to_json(const SelfAttentionLayer& a) {
  json heads = json::array();
  for (const auto& h : a.heads())
    heads.push_back({{"W_O", to_json(h.W_O)}, {"W_V", to_json(h.W_V)}, {"W_K", to_json(h.W_K)}, {"W_Q", to_json(h.W_Q)}});
  json out{{"heads", heads}};
  if (a.temperature) out["temperature"] = *a.temperature;
  return out;
}

SelfAttentionLayer attention_from_json(const json& j) {
  std::vector<AttentionHead> heads;
  for (const auto& h : j.at("heads"))
    heads.push_back({matrix_from_json(h.at("W_O")), matrix_from_json(h.at("W_V")), matrix_from_json(h.at("W_K")),
                     matrix_from_json(h.at("W_Q"))});
  SelfAttentionLayer a(std::move(heads));
  if (j.contains("temperature")) a.temperature = j.at("temperature").get<double>();
  return a;
}

json to_json(const Transformer& T) {
  json stages = json::array();
  stages.push_back({{"kind", "ffn"}, {"payload", to_json(T.ffns()[0])}});
  for (std::size_t k = 0; k < T.length(); ++k) {
    stages.push_back({{"kind", "sa"}, {"payload", to_json(T.attentions()[k])}});
    stages.push_back({{"kind", "ffn"}, {"payload", to_json(T.ffns()[k + 1])}});
  }
  return json{{"format_version", kModelFormatVersion},
              {"K", T.length()},
              {"dims", size_report(T).dims},
              {"embedding", {{"W", to_json(T.embedding().W)}, {"B", to_json(T.embedding().B)}}},
              {"stages", stages}};
}

Transformer transformer_from_json(const json& j) {
  if (j.at("format_version").get<int>() != kModelFormatVersion) throw std::runtime_error("unsupported model format_version");
  EmbeddingLayer emb{matrix_from_json(j.at("embedding").at("W")), matrix_from_json(j.at("embedding").at("B"))};
  std::vector<FeedForwardBlock> ffns;
  std::vector<SelfAttentionLayer> sas;
  for (const auto& s : j.at("stages")) {
    const auto kind = s.at("kind").get<std::string>();
    if (kind == "ffn") {
      if (ffns.size() != sas.size()) throw std::runtime_error("stages must alternate ffn, sa, ffn, ...");
      ffns.push_back(ffn_from_json(s.at("payload")));
    } else if (kind == "sa") {
      if (ffns.size() != sas.size() + 1) throw std::runtime_error("stages must alternate ffn, sa, ffn, ...");
      sas.push_back(attention_from_json(s.at("payload")));
    } else {
      throw std::runtime_error("unknown stage kind: " + kind);
    }
  }
  if (sas.size() != j.at("K").get<std::size_t>()) throw std::runtime_error("stage count does not match K");
  Transformer T(std::move(emb), std::move(ffns), std::move(sas));
  if (size_report(T).dims != j.at("dims").get<std::vector<std::size_t>>())
    throw std::runtime_error("dims do not match stage shapes");
  return T;
}

std::string dump_model(const Transformer& T) { return to_json(T).dump(1); }

Transformer parse_model(const std::string& text) {
  try {
    return transformer_from_json(json::parse(text));
  } catch (const json::exception& e) {
    throw std::runtime_error(std::string("invalid model document: ") + e.what());
  }
}

void save_model(const Transformer& T, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << dump_model(T) << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

Transformer load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_model(ss.str());
}

}  // namespace tfa
