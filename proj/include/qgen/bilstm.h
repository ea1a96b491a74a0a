// Copyright 2026 The qgen Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Attention BiLSTM sequence classifier with hand-written backpropagation.
//
//   h_t   = [LSTM_fwd(x_1..x_t); LSTM_bwd(x_t..x_n)]
//   s_t   = v_att . tanh(W_att h_t + b_att),  alpha = softmax(s)
//   q     = sum_t alpha_t h_t
//   logit = W_out q + b_out
//
// With one output the logit feeds a sigmoid and binary cross-entropy; with
// several it feeds a softmax and categorical cross-entropy.

#ifndef QGEN_BILSTM_H_
#define QGEN_BILSTM_H_

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace qgen {

struct BiLstmParams {
  // LSTM gate blocks are stacked in the order input, forget, cell, output.
  Eigen::MatrixXd embedding;  // vocab x d_e
  Eigen::MatrixXd fwd_w, fwd_u, fwd_b;  // 4d_h x d_e, 4d_h x d_h, 4d_h x 1
  Eigen::MatrixXd bwd_w, bwd_u, bwd_b;
  Eigen::MatrixXd att_w, att_b, att_v;  // 2d_h x 2d_h, 2d_h x 1, 2d_h x 1
  Eigen::MatrixXd out_w, out_b;         // C x 2d_h, C x 1

  BiLstmParams() = default;
  BiLstmParams(int vocab, int embed_dim, int hidden_dim, int outputs);

  int embed_dim() const { return static_cast<int>(embedding.cols()); }
  int hidden_dim() const { return static_cast<int>(fwd_u.cols()); }
  int outputs() const { return static_cast<int>(out_w.rows()); }

  void SetZero();
  void InitRandom(std::mt19937_64& rng);

  std::vector<std::pair<std::string, Eigen::MatrixXd*>> Tensors();
  std::vector<std::pair<std::string, const Eigen::MatrixXd*>> Tensors() const;
};

struct ForwardResult {
  Eigen::VectorXd logits;
  Eigen::VectorXd attention;  // one weight per token
};

class AttentionBiLstm {
 public:
  AttentionBiLstm() = default;
  explicit AttentionBiLstm(BiLstmParams params) : params_(std::move(params)) {}

  const BiLstmParams& params() const { return params_; }
  BiLstmParams& mutable_params() { return params_; }

  // ids must be non-empty and within the embedding table.
  ForwardResult Forward(const std::vector<int>& ids) const;

  // Summed loss over a batch of equal-length sequences. targets holds 0/1
  // for a single output and a class index otherwise. When grad is non-null
  // the summed gradient is added to it (shapes must match).
  double Loss(const std::vector<std::vector<int>>& batch,
              const std::vector<int>& targets, BiLstmParams* grad) const;

 private:
  BiLstmParams params_;
};

// Binary cross-entropy on a logit, computed as softplus(z) - y z.
double BinaryCrossEntropy(double logit, int label);
double Sigmoid(double z);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class AdamOptimizer {
 public:
  AdamOptimizer(const BiLstmParams& shape, AdamConfig config);
  // params -= step(grad * scale)
  void Step(BiLstmParams& params, const BiLstmParams& grad, double scale);

 private:
  AdamConfig config_;
  BiLstmParams m_, v_;
  long step_ = 0;
};

}  // namespace qgen

#endif  // QGEN_BILSTM_H_
