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

#include "qgen/bilstm.h"

#include <cmath>
#include <stdexcept>

namespace qgen {
namespace {

using Eigen::MatrixXd;

MatrixXd SigmoidOf(const MatrixXd& z) {
  return z.unaryExpr([](double x) { return Sigmoid(x); });
}

MatrixXd TanhOf(const MatrixXd& z) {
  return z.unaryExpr([](double x) { return std::tanh(x); });
}

void FillUniform(MatrixXd& m, double bound, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = dist(rng);
  }
}

// Activations of one LSTM direction, indexed by processing step.
struct LstmTrace {
  std::vector<MatrixXd> i, f, g, o, c, tanh_c, h;
};

std::size_t Position(std::size_t step, std::size_t len, bool reverse) {
  return reverse ? len - 1 - step : step;
}

void RunLstm(const MatrixXd& w, const MatrixXd& u, const MatrixXd& b,
             const std::vector<MatrixXd>& x, bool reverse, LstmTrace& tr) {
  const Eigen::Index hd = u.cols();
  const Eigen::Index batch = x[0].cols();
  const std::size_t len = x.size();
  MatrixXd h = MatrixXd::Zero(hd, batch);
  MatrixXd c = MatrixXd::Zero(hd, batch);
  for (std::size_t k = 0; k < len; ++k) {
    MatrixXd z = w * x[Position(k, len, reverse)] + u * h;
    z.colwise() += b.col(0);
    tr.i.push_back(SigmoidOf(z.topRows(hd)));
    tr.f.push_back(SigmoidOf(z.middleRows(hd, hd)));
    tr.g.push_back(TanhOf(z.middleRows(2 * hd, hd)));
    tr.o.push_back(SigmoidOf(z.bottomRows(hd)));
    c = tr.f.back().cwiseProduct(c) + tr.i.back().cwiseProduct(tr.g.back());
    tr.tanh_c.push_back(TanhOf(c));
    h = tr.o.back().cwiseProduct(tr.tanh_c.back());
    tr.c.push_back(c);
    tr.h.push_back(h);
  }
}

// dh is indexed by sequence position; dx receives input gradients.
void BackLstm(const MatrixXd& w, const MatrixXd& u,
              const std::vector<MatrixXd>& x, bool reverse,
              const LstmTrace& tr, const std::vector<MatrixXd>& dh,
              MatrixXd& gw, MatrixXd& gu, MatrixXd& gb,
              std::vector<MatrixXd>& dx) {
  const Eigen::Index hd = u.cols();
  const Eigen::Index batch = x[0].cols();
  const std::size_t len = x.size();
  const MatrixXd zero = MatrixXd::Zero(hd, batch);
  MatrixXd dh_next = zero;
  MatrixXd dc_next = zero;
  MatrixXd dz(4 * hd, batch);
  for (std::size_t k = len; k-- > 0;) {
    const std::size_t t = Position(k, len, reverse);
    const MatrixXd& c_prev = k > 0 ? tr.c[k - 1] : zero;
    const MatrixXd& h_prev = k > 0 ? tr.h[k - 1] : zero;
    const MatrixXd d = dh[t] + dh_next;
    const auto& i = tr.i[k].array();
    const auto& f = tr.f[k].array();
    const auto& g = tr.g[k].array();
    const auto& o = tr.o[k].array();
    const auto& tc = tr.tanh_c[k].array();
    const Eigen::ArrayXXd dc =
        dc_next.array() + d.array() * o * (1.0 - tc.square());
    dz.topRows(hd) = (dc * g * i * (1.0 - i)).matrix();
    dz.middleRows(hd, hd) = (dc * c_prev.array() * f * (1.0 - f)).matrix();
    dz.middleRows(2 * hd, hd) = (dc * i * (1.0 - g.square())).matrix();
    dz.bottomRows(hd) = (d.array() * tc * o * (1.0 - o)).matrix();
    dc_next = (dc * f).matrix();
    gw.noalias() += dz * x[t].transpose();
    gu.noalias() += dz * h_prev.transpose();
    gb += dz.rowwise().sum();
    dh_next.noalias() = u.transpose() * dz;
    dx[t].noalias() += w.transpose() * dz;
  }
}

}  // namespace

double Sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double BinaryCrossEntropy(double logit, int label) {
  // softplus(z) = max(z, 0) + log1p(exp(-|z|))
  const double softplus =
      std::max(logit, 0.0) + std::log1p(std::exp(-std::abs(logit)));
  return softplus - (label ? logit : 0.0);
}

BiLstmParams::BiLstmParams(int vocab, int embed_dim, int hidden_dim,
                           int outputs) {
  embedding = MatrixXd::Zero(vocab, embed_dim);
  for (MatrixXd* w : {&fwd_w, &bwd_w}) *w = MatrixXd::Zero(4 * hidden_dim, embed_dim);
  for (MatrixXd* u : {&fwd_u, &bwd_u}) *u = MatrixXd::Zero(4 * hidden_dim, hidden_dim);
  for (MatrixXd* b : {&fwd_b, &bwd_b}) *b = MatrixXd::Zero(4 * hidden_dim, 1);
  att_w = MatrixXd::Zero(2 * hidden_dim, 2 * hidden_dim);
  att_b = MatrixXd::Zero(2 * hidden_dim, 1);
  att_v = MatrixXd::Zero(2 * hidden_dim, 1);
  out_w = MatrixXd::Zero(outputs, 2 * hidden_dim);
  out_b = MatrixXd::Zero(outputs, 1);
}

void BiLstmParams::SetZero() {
  for (auto& [name, t] : Tensors()) t->setZero();
}

void BiLstmParams::InitRandom(std::mt19937_64& rng) {
  const int hd = hidden_dim();
  FillUniform(embedding, 0.5, rng);
  const double lstm_bound = 1.0 / std::sqrt(static_cast<double>(hd));
  for (MatrixXd* m : {&fwd_w, &fwd_u, &bwd_w, &bwd_u}) {
    FillUniform(*m, lstm_bound, rng);
  }
  for (MatrixXd* b : {&fwd_b, &bwd_b}) {
    b->setZero();
    b->middleRows(hd, hd).setOnes();  // forget gate bias
  }
  const double att_bound = 1.0 / std::sqrt(2.0 * hd);
  FillUniform(att_w, att_bound, rng);
  att_b.setZero();
  FillUniform(att_v, att_bound, rng);
  FillUniform(out_w, att_bound, rng);
  out_b.setZero();
}

std::vector<std::pair<std::string, MatrixXd*>> BiLstmParams::Tensors() {
  return {{"embedding", &embedding}, {"fwd_w", &fwd_w}, {"fwd_u", &fwd_u},
          {"fwd_b", &fwd_b},         {"bwd_w", &bwd_w}, {"bwd_u", &bwd_u},
          {"bwd_b", &bwd_b},         {"att_w", &att_w}, {"att_b", &att_b},
          {"att_v", &att_v},         {"out_w", &out_w}, {"out_b", &out_b}};
}

std::vector<std::pair<std::string, const MatrixXd*>> BiLstmParams::Tensors()
    const {
  std::vector<std::pair<std::string, const MatrixXd*>> out;
  for (auto& [name, t] : const_cast<BiLstmParams*>(this)->Tensors()) {
    out.emplace_back(name, t);
  }
  return out;
}

namespace {

// Shared forward/backward pass over a batch of equal-length sequences.
class BatchPass {
 public:
  BatchPass(const BiLstmParams& p, const std::vector<std::vector<int>>& batch)
      : p_(p), batch_(batch) {
    if (batch.empty() || batch[0].empty()) {
      throw std::invalid_argument("empty batch or sequence");
    }
    len_ = batch[0].size();
    const Eigen::Index b = static_cast<Eigen::Index>(batch.size());
    for (const auto& seq : batch) {
      if (seq.size() != len_) throw std::invalid_argument("ragged batch");
      for (int id : seq) {
        if (id < 0 || id >= p.embedding.rows()) {
          throw std::out_of_range("token id outside the vocabulary");
        }
      }
    }
    x_.assign(len_, MatrixXd(p.embed_dim(), b));
    for (std::size_t t = 0; t < len_; ++t) {
      for (Eigen::Index j = 0; j < b; ++j) {
        x_[t].col(j) = p.embedding.row(batch[j][t]).transpose();
      }
    }
    RunLstm(p.fwd_w, p.fwd_u, p.fwd_b, x_, false, fwd_);
    RunLstm(p.bwd_w, p.bwd_u, p.bwd_b, x_, true, bwd_);
    const Eigen::Index hd = p.hidden_dim();
    hs_.assign(len_, MatrixXd(2 * hd, b));
    a_.resize(len_);
    MatrixXd scores(len_, b);
    for (std::size_t t = 0; t < len_; ++t) {
      hs_[t].topRows(hd) = fwd_.h[t];
      hs_[t].bottomRows(hd) = bwd_.h[len_ - 1 - t];
      MatrixXd pre = p.att_w * hs_[t];
      pre.colwise() += p.att_b.col(0);
      a_[t] = TanhOf(pre);
      scores.row(t) = p.att_v.transpose() * a_[t];
    }
    alpha_ = MatrixXd(len_, b);
    for (Eigen::Index j = 0; j < b; ++j) {
      const double m = scores.col(j).maxCoeff();
      alpha_.col(j) = (scores.col(j).array() - m).exp().matrix();
      alpha_.col(j) /= alpha_.col(j).sum();
    }
    q_ = MatrixXd::Zero(2 * hd, b);
    for (std::size_t t = 0; t < len_; ++t) {
      q_.array() += hs_[t].array().rowwise() * alpha_.row(t).array();
    }
    logits_ = p.out_w * q_;
    logits_.colwise() += p.out_b.col(0);
  }

  const MatrixXd& logits() const { return logits_; }
  const MatrixXd& alpha() const { return alpha_; }

  void Backward(const MatrixXd& dlogits, BiLstmParams& g) const {
    const Eigen::Index hd = p_.hidden_dim();
    const Eigen::Index b = dlogits.cols();
    g.out_w.noalias() += dlogits * q_.transpose();
    g.out_b += dlogits.rowwise().sum();
    const MatrixXd dq = p_.out_w.transpose() * dlogits;
    MatrixXd dalpha(len_, b);
    for (std::size_t t = 0; t < len_; ++t) {
      dalpha.row(t) = hs_[t].cwiseProduct(dq).colwise().sum();
    }
    const Eigen::RowVectorXd centre =
        alpha_.cwiseProduct(dalpha).colwise().sum();
    const MatrixXd ds =
        (alpha_.array() * (dalpha.rowwise() - centre).array()).matrix();
    std::vector<MatrixXd> dh_fwd(len_), dh_bwd(len_);
    for (std::size_t t = 0; t < len_; ++t) {
      const MatrixXd dpre =
          ((p_.att_v * ds.row(t)).array() * (1.0 - a_[t].array().square()))
              .matrix();
      g.att_w.noalias() += dpre * hs_[t].transpose();
      g.att_b += dpre.rowwise().sum();
      g.att_v.noalias() += a_[t] * ds.row(t).transpose();
      MatrixXd dhs = (dq.array().rowwise() * alpha_.row(t).array()).matrix();
      dhs.noalias() += p_.att_w.transpose() * dpre;
      dh_fwd[t] = dhs.topRows(hd);
      dh_bwd[t] = dhs.bottomRows(hd);
    }
    std::vector<MatrixXd> dx(len_, MatrixXd::Zero(p_.embed_dim(), b));
    BackLstm(p_.fwd_w, p_.fwd_u, x_, false, fwd_, dh_fwd, g.fwd_w, g.fwd_u,
             g.fwd_b, dx);
    BackLstm(p_.bwd_w, p_.bwd_u, x_, true, bwd_, dh_bwd, g.bwd_w, g.bwd_u,
             g.bwd_b, dx);
    for (std::size_t t = 0; t < len_; ++t) {
      for (Eigen::Index j = 0; j < b; ++j) {
        g.embedding.row(batch_[j][t]) += dx[t].col(j).transpose();
      }
    }
  }

 private:
  const BiLstmParams& p_;
  const std::vector<std::vector<int>>& batch_;
  std::size_t len_ = 0;
  std::vector<MatrixXd> x_;
  LstmTrace fwd_, bwd_;
  std::vector<MatrixXd> hs_, a_;
  MatrixXd alpha_, q_, logits_;
};

}  // namespace

ForwardResult AttentionBiLstm::Forward(const std::vector<int>& ids) const {
  const std::vector<std::vector<int>> batch = {ids};
  BatchPass pass(params_, batch);
  return {pass.logits().col(0), pass.alpha().col(0)};
}

double AttentionBiLstm::Loss(const std::vector<std::vector<int>>& batch,
                             const std::vector<int>& targets,
                             BiLstmParams* grad) const {
  if (targets.size() != batch.size()) {
    throw std::invalid_argument("batch and target sizes differ");
  }
  BatchPass pass(params_, batch);
  const MatrixXd& z = pass.logits();
  MatrixXd dz(z.rows(), z.cols());
  double loss = 0;
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    const int y = targets[j];
    if (z.rows() == 1) {
      loss += BinaryCrossEntropy(z(0, j), y);
      dz(0, j) = Sigmoid(z(0, j)) - y;
    } else {
      if (y < 0 || y >= z.rows()) throw std::out_of_range("class index");
      const double m = z.col(j).maxCoeff();
      const Eigen::VectorXd e = (z.col(j).array() - m).exp().matrix();
      const double sum = e.sum();
      loss += std::log(sum) + m - z(y, j);
      dz.col(j) = e / sum;
      dz(y, j) -= 1.0;
    }
  }
  if (grad) pass.Backward(dz, *grad);
  return loss;
}

AdamOptimizer::AdamOptimizer(const BiLstmParams& shape, AdamConfig config)
    : config_(config), m_(shape), v_(shape) {
  m_.SetZero();
  v_.SetZero();
}

void AdamOptimizer::Step(BiLstmParams& params, const BiLstmParams& grad,
                         double scale) {
  ++step_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(step_));
  auto p = params.Tensors();
  auto g = grad.Tensors();
  auto m = m_.Tensors();
  auto v = v_.Tensors();
  for (std::size_t k = 0; k < p.size(); ++k) {
    const Eigen::ArrayXXd gk = g[k].second->array() * scale;
    m[k].second->array() =
        config_.beta1 * m[k].second->array() + (1 - config_.beta1) * gk;
    v[k].second->array() = config_.beta2 * v[k].second->array() +
                           (1 - config_.beta2) * gk.square();
    p[k].second->array() -=
        config_.learning_rate * (m[k].second->array() / c1) /
        ((v[k].second->array() / c2).sqrt() + config_.epsilon);
  }
}

}  // namespace qgen
