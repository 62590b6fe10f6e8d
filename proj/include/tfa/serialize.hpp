#pragma once

#include <string>

#include <json.hpp>

#include "tfa/transformer.hpp"

namespace tfa {

inline constexpr int kModelFormatVersion = 1;

nlohmann::json to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j);
nlohmann::json to_json(const FeedForwardBlock& f);
FeedForwardBlock ffn_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SelfAttentionLayer& a);
SelfAttentionLayer attention_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Transformer& T);
Transformer transformer_from_json(const nlohmann::json& j);

std::string dump_model(const Transformer& T);
Transformer parse_model(const std::string& text);
void save_model(const Transformer& T, const std::string& path);
Transformer load_model(const std::string& path);

}  // namespace tfa
