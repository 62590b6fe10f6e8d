#pragma once

#include <random>
#include <vector>

#include "tfa/attention.hpp"
#include "tfa/ffn.hpp"
#include "tfa/matrix.hpp"
#include "tfa/transformer.hpp"

namespace testing_util {

inline tfa::Matrix random_matrix(std::size_t r, std::size_t c, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  tfa::Matrix m(r, c);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
  return m;
}

inline std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

// Layer sizes d_in -> hidden... -> d_out.
inline tfa::FeedForwardBlock random_ffn(const std::vector<std::size_t>& sizes, std::mt19937_64& rng,
                                        double scale = 1.0) {
  std::vector<tfa::AffineLayer> layers;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l)
    layers.push_back({random_matrix(sizes[l + 1], sizes[l], rng, scale), random_vector(sizes[l + 1], rng, scale)});
  return tfa::FeedForwardBlock(std::move(layers));
}

inline tfa::SelfAttentionLayer random_attention(std::size_t d, std::size_t H, std::size_t S, std::mt19937_64& rng,
                                                double scale = 1.0) {
  std::vector<tfa::AttentionHead> heads;
  for (std::size_t h = 0; h < H; ++h)
    heads.push_back({random_matrix(d, S, rng, scale), random_matrix(S, d, rng, scale), random_matrix(S, d, rng, scale),
                     random_matrix(S, d, rng, scale)});
  return tfa::SelfAttentionLayer(std::move(heads));
}

// Embedding d_in -> d0, then K (attention, ffn) stages of dimension d0 ending at d_out.
inline tfa::Transformer random_transformer(std::size_t d_in, std::size_t d0, std::size_t d_out, std::size_t n,
                                           std::size_t K, std::mt19937_64& rng, double scale = 0.5) {
  tfa::EmbeddingLayer emb{random_matrix(d0, d_in, rng, scale), random_matrix(d0, n, rng, scale)};
  std::vector<tfa::FeedForwardBlock> ffns;
  std::vector<tfa::SelfAttentionLayer> sas;
  ffns.push_back(random_ffn({d0, 3, d0}, rng, scale));
  for (std::size_t k = 1; k <= K; ++k) {
    sas.push_back(random_attention(d0, 2, 2, rng, scale));
    ffns.push_back(random_ffn({d0, 4, k == K ? d_out : d0}, rng, scale));
  }
  return tfa::Transformer(std::move(emb), std::move(ffns), std::move(sas));
}

}  // namespace testing_util
