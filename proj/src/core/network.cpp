#include "network.hpp"

#include <cmath>

#include "common.hpp"

namespace gist::deepcluster {

void EncoderConfig::validate(int T) const {
    if (conv_layers != 2) throw ConfigError("encoder uses exactly two convolutional layers");
    if (latent < 2) throw ConfigError("latent dimension must be >= 2");
    if (kernel1 >= T || kernel2 >= T) throw ConfigError("kernel size must be smaller than segment length");
    if (kernel1 < 1 || kernel2 < 1 || kernel1 % 2 == 0 || kernel2 % 2 == 0)
        throw ConfigError("kernel sizes must be odd and positive");
    if (filters1 < 1 || filters2 < 1 || hidden < 1) throw ConfigError("filter/hidden sizes must be positive");
    if (pool < 1) throw ConfigError("pool factor must be >= 1");
    if (T % (pool * pool) != 0) throw ConfigError("segment length must be divisible by pool^2");
    if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("dropout must lie in [0,1)");
}

namespace {

void xavier_init(ParamBlock& b, Rng& rng) {
    const double lim = std::sqrt(6.0 / double(b.value.rows() + b.value.cols()));
    for (long i = 0; i < b.value.rows(); ++i)
        for (long j = 0; j < b.value.cols(); ++j) b.value(i, j) = rng.uniform(-lim, lim);
}

inline Eigen::MatrixXd sigmoid(const Eigen::MatrixXd& x) {
    return (1.0 / (1.0 + (-x.array()).exp())).matrix();
}

}  // namespace

Autoencoder::Autoencoder(const EncoderConfig& cfg, int T, int F, uint64_t seed) : cfg_(cfg), T_(T), F_(F) {
    cfg_.validate(T);
    Tp_ = T / (cfg.pool * cfg.pool);
    dropout_seed_ = mix_seed(seed, 0x64726f70ull);

    const int c1 = cfg.filters1, c2 = cfg.filters2, h = cfg.hidden, L = cfg.latent;
    conv1_w_.init("conv1_w", long(cfg.kernel1) * F, c1);
    conv1_b_.init("conv1_b", 1, c1);
    conv2_w_.init("conv2_w", long(cfg.kernel2) * c1, c2);
    conv2_b_.init("conv2_b", 1, c2);
    lstm_f_wx_.init("lstm_f_wx", c2, 4 * h);
    lstm_f_wh_.init("lstm_f_wh", h, 4 * h);
    lstm_f_b_.init("lstm_f_b", 1, 4 * h);
    lstm_b_wx_.init("lstm_b_wx", c2, 4 * h);
    lstm_b_wh_.init("lstm_b_wh", h, 4 * h);
    lstm_b_b_.init("lstm_b_b", 1, 4 * h);
    latent_w_.init("latent_w", 2 * h, L);
    latent_b_.init("latent_b", 1, L);
    seed_w_.init("seed_w", L, long(Tp_) * c2);
    seed_b_.init("seed_b", 1, long(Tp_) * c2);
    conv3_w_.init("conv3_w", long(cfg.kernel2) * c2, c1);
    conv3_b_.init("conv3_b", 1, c1);
    conv4_w_.init("conv4_w", long(cfg.kernel1) * c1, c1);
    conv4_b_.init("conv4_b", 1, c1);
    lstm_d_wx_.init("lstm_d_wx", c1, 4 * h);
    lstm_d_wh_.init("lstm_d_wh", h, 4 * h);
    lstm_d_b_.init("lstm_d_b", 1, 4 * h);
    out_w_.init("out_w", h, F);
    out_b_.init("out_b", 1, F);

    Rng rng(mix_seed(seed, 0x696e6974ull));
    for (ParamBlock* b : blocks())
        if (b->value.rows() > 1) xavier_init(*b, rng);  // biases stay zero
    // forget-gate bias starts open
    for (ParamBlock* b : {&lstm_f_b_, &lstm_b_b_, &lstm_d_b_})
        b->value.block(0, h, 1, h).setConstant(1.0);
}

std::vector<ParamBlock*> Autoencoder::blocks() {
    return {&conv1_w_, &conv1_b_, &conv2_w_, &conv2_b_,  &lstm_f_wx_, &lstm_f_wh_, &lstm_f_b_, &lstm_b_wx_,
            &lstm_b_wh_, &lstm_b_b_, &latent_w_, &latent_b_, &seed_w_, &seed_b_, &conv3_w_, &conv3_b_,
            &conv4_w_, &conv4_b_, &lstm_d_wx_, &lstm_d_wh_, &lstm_d_b_, &out_w_, &out_b_};
}

std::vector<const ParamBlock*> Autoencoder::blocks() const {
    auto* self = const_cast<Autoencoder*>(this);
    std::vector<const ParamBlock*> out;
    for (ParamBlock* b : self->blocks()) out.push_back(b);
    return out;
}

void Autoencoder::zero_grads() {
    for (ParamBlock* b : blocks()) b->grad.setZero();
}

void Autoencoder::adam_step(double lr, int step, double beta1, double beta2, double eps) {
    const double bc1 = 1.0 - std::pow(beta1, step);
    const double bc2 = 1.0 - std::pow(beta2, step);
    for (ParamBlock* b : blocks()) {
        b->adam_m = beta1 * b->adam_m + (1.0 - beta1) * b->grad;
        b->adam_v = beta2 * b->adam_v + (1.0 - beta2) * b->grad.cwiseProduct(b->grad);
        Eigen::ArrayXXd mhat = b->adam_m.array() / bc1;
        Eigen::ArrayXXd vhat = b->adam_v.array() / bc2;
        b->value.array() -= lr * mhat / (vhat.sqrt() + eps);
    }
}

Eigen::VectorXd Autoencoder::flat_params() const {
    long total = 0;
    for (const ParamBlock* b : blocks()) total += b->value.size();
    Eigen::VectorXd out(total);
    long at = 0;
    for (const ParamBlock* b : blocks()) {
        Eigen::Map<const Eigen::VectorXd> m(b->value.data(), b->value.size());
        out.segment(at, b->value.size()) = m;
        at += b->value.size();
    }
    return out;
}

void Autoencoder::set_flat_params(const Eigen::VectorXd& theta) {
    long at = 0;
    for (ParamBlock* b : blocks()) {
        Eigen::Map<Eigen::VectorXd> m(b->value.data(), b->value.size());
        m = theta.segment(at, b->value.size());
        at += b->value.size();
    }
    if (at != theta.size()) throw ContractViolation("set_flat_params: size mismatch");
}

Eigen::VectorXd Autoencoder::flat_grads() const {
    long total = 0;
    for (const ParamBlock* b : blocks()) total += b->grad.size();
    Eigen::VectorXd out(total);
    long at = 0;
    for (const ParamBlock* b : blocks()) {
        Eigen::Map<const Eigen::VectorXd> m(b->grad.data(), b->grad.size());
        out.segment(at, b->grad.size()) = m;
        at += b->grad.size();
    }
    return out;
}

namespace {

// 'same' 1-D convolution over a batched sequence; W stored as (k*Cin) x Cout
Seq conv_forward(const Seq& x, const ParamBlock& w, const ParamBlock& b, int kernel) {
    const int len = int(x.size());
    const long batch = x[0].rows();
    const long cin = x[0].cols();
    const long cout = w.value.cols();
    const int pad = kernel / 2;
    Seq y(static_cast<size_t>(len));
    for (int t = 0; t < len; ++t) {
        Eigen::MatrixXd acc = b.value.replicate(batch, 1);
        for (int o = 0; o < kernel; ++o) {
            int src = t + o - pad;
            if (src < 0 || src >= len) continue;
            acc.noalias() += x[size_t(src)] * w.value.block(long(o) * cin, 0, cin, cout);
        }
        y[size_t(t)] = std::move(acc);
    }
    return y;
}

Seq conv_backward(const Seq& x, const Seq& gy, ParamBlock& w, ParamBlock& b, int kernel) {
    const int len = int(x.size());
    const long cin = x[0].cols();
    const long cout = w.value.cols();
    const int pad = kernel / 2;
    Seq gx(size_t(len), Eigen::MatrixXd::Zero(x[0].rows(), cin));
    for (int t = 0; t < len; ++t) {
        b.grad += gy[size_t(t)].colwise().sum();
        for (int o = 0; o < kernel; ++o) {
            int src = t + o - pad;
            if (src < 0 || src >= len) continue;
            w.grad.block(long(o) * cin, 0, cin, cout).noalias() += x[size_t(src)].transpose() * gy[size_t(t)];
            gx[size_t(src)].noalias() += gy[size_t(t)] * w.value.block(long(o) * cin, 0, cin, cout).transpose();
        }
    }
    return gx;
}

void relu_inplace(Seq& x) {
    for (auto& m : x) m = m.cwiseMax(0.0);
}

Seq relu_backward(const Seq& pre, const Seq& gy) {
    Seq gx(pre.size());
    for (size_t t = 0; t < pre.size(); ++t)
        gx[t] = (pre[t].array() > 0.0).cast<double>().matrix().cwiseProduct(gy[t]);
    return gx;
}

Seq pool_forward(const Seq& x, int p, std::vector<Eigen::MatrixXi>& argmax) {
    const int out_len = int(x.size()) / p;
    Seq y(static_cast<size_t>(out_len));
    argmax.assign(size_t(out_len), Eigen::MatrixXi());
    for (int u = 0; u < out_len; ++u) {
        Eigen::MatrixXd best = x[size_t(u * p)];
        Eigen::MatrixXi arg = Eigen::MatrixXi::Zero(best.rows(), best.cols());
        for (int r = 1; r < p; ++r) {
            const auto& cand = x[size_t(u * p + r)];
            for (long i = 0; i < best.rows(); ++i)
                for (long j = 0; j < best.cols(); ++j)
                    if (cand(i, j) > best(i, j)) {
                        best(i, j) = cand(i, j);
                        arg(i, j) = r;
                    }
        }
        y[size_t(u)] = std::move(best);
        argmax[size_t(u)] = std::move(arg);
    }
    return y;
}

Seq pool_backward(const Seq& gy, int p, const std::vector<Eigen::MatrixXi>& argmax, int in_len) {
    Seq gx(size_t(in_len), Eigen::MatrixXd::Zero(gy[0].rows(), gy[0].cols()));
    for (size_t u = 0; u < gy.size(); ++u) {
        const auto& arg = argmax[u];
        for (long i = 0; i < gy[u].rows(); ++i)
            for (long j = 0; j < gy[u].cols(); ++j) gx[u * size_t(p) + size_t(arg(i, j))](i, j) += gy[u](i, j);
    }
    return gx;
}

Seq upsample_forward(const Seq& x, int p) {
    Seq y(x.size() * size_t(p));
    for (size_t u = 0; u < x.size(); ++u)
        for (int r = 0; r < p; ++r) y[u * size_t(p) + size_t(r)] = x[u];
    return y;
}

Seq upsample_backward(const Seq& gy, int p) {
    Seq gx(gy.size() / size_t(p));
    for (size_t u = 0; u < gx.size(); ++u) {
        gx[u] = gy[u * size_t(p)];
        for (int r = 1; r < p; ++r) gx[u] += gy[u * size_t(p) + size_t(r)];
    }
    return gx;
}

}  // namespace

namespace {

// processes x in the stored order; gate layout [i | f | g | o]
void lstm_forward(const Seq& x, const ParamBlock& wx, const ParamBlock& wh,
                  const ParamBlock& b, Seq& h_out, Seq& c_out, Seq& gi, Seq& gf, Seq& gg, Seq& go) {
    const int steps = int(x.size());
    const long batch = x[0].rows();
    const long hidden = wh.value.rows();
    h_out.assign(size_t(steps) + 1, Eigen::MatrixXd::Zero(batch, hidden));
    c_out.assign(size_t(steps) + 1, Eigen::MatrixXd::Zero(batch, hidden));
    gi.assign(size_t(steps), {});
    gf.assign(size_t(steps), {});
    gg.assign(size_t(steps), {});
    go.assign(size_t(steps), {});
    for (int t = 0; t < steps; ++t) {
        Eigen::MatrixXd z = x[size_t(t)] * wx.value + h_out[size_t(t)] * wh.value;
        z.rowwise() += b.value.row(0);
        gi[size_t(t)] = sigmoid(z.block(0, 0, batch, hidden));
        gf[size_t(t)] = sigmoid(z.block(0, hidden, batch, hidden));
        gg[size_t(t)] = z.block(0, 2 * hidden, batch, hidden).array().tanh().matrix();
        go[size_t(t)] = sigmoid(z.block(0, 3 * hidden, batch, hidden));
        c_out[size_t(t) + 1] =
            gf[size_t(t)].cwiseProduct(c_out[size_t(t)]) + gi[size_t(t)].cwiseProduct(gg[size_t(t)]);
        h_out[size_t(t) + 1] = go[size_t(t)].cwiseProduct(c_out[size_t(t) + 1].array().tanh().matrix());
    }
}

// dh_seq indexed like the step outputs (position t = gradient on h_{t+1})
Seq lstm_backward(const Seq& x, const Seq& h, const Seq& c, const Seq& gi, const Seq& gf, const Seq& gg,
                  const Seq& go, const Seq& dh_seq, ParamBlock& wx, ParamBlock& wh, ParamBlock& b) {
    const int steps = int(x.size());
    const long batch = x[0].rows();
    const long hidden = wh.value.rows();
    Seq dx(size_t(steps), Eigen::MatrixXd::Zero(batch, x[0].cols()));
    Eigen::MatrixXd dh_next = Eigen::MatrixXd::Zero(batch, hidden);
    Eigen::MatrixXd dc_next = Eigen::MatrixXd::Zero(batch, hidden);
    for (int t = steps - 1; t >= 0; --t) {
        Eigen::MatrixXd dh = dh_next + dh_seq[size_t(t)];
        Eigen::MatrixXd tc = c[size_t(t) + 1].array().tanh().matrix();
        Eigen::MatrixXd dgo = dh.cwiseProduct(tc);
        Eigen::MatrixXd dc =
            dc_next + dh.cwiseProduct(go[size_t(t)]).cwiseProduct((1.0 - tc.array().square()).matrix());
        Eigen::MatrixXd dgi = dc.cwiseProduct(gg[size_t(t)]);
        Eigen::MatrixXd dgg = dc.cwiseProduct(gi[size_t(t)]);
        Eigen::MatrixXd dgf = dc.cwiseProduct(c[size_t(t)]);
        dc_next = dc.cwiseProduct(gf[size_t(t)]);

        Eigen::MatrixXd dz(batch, 4 * hidden);
        dz.block(0, 0, batch, hidden) =
            dgi.cwiseProduct(gi[size_t(t)]).cwiseProduct((1.0 - gi[size_t(t)].array()).matrix());
        dz.block(0, hidden, batch, hidden) =
            dgf.cwiseProduct(gf[size_t(t)]).cwiseProduct((1.0 - gf[size_t(t)].array()).matrix());
        dz.block(0, 2 * hidden, batch, hidden) = dgg.cwiseProduct((1.0 - gg[size_t(t)].array().square()).matrix());
        dz.block(0, 3 * hidden, batch, hidden) =
            dgo.cwiseProduct(go[size_t(t)]).cwiseProduct((1.0 - go[size_t(t)].array()).matrix());

        wx.grad.noalias() += x[size_t(t)].transpose() * dz;
        wh.grad.noalias() += h[size_t(t)].transpose() * dz;
        b.grad += dz.colwise().sum();
        dx[size_t(t)] = dz * wx.value.transpose();
        dh_next = dz * wh.value.transpose();
    }
    return dx;
}

Seq reversed(const Seq& x) {
    Seq out(x.rbegin(), x.rend());
    return out;
}

}  // namespace

Eigen::MatrixXd Autoencoder::encode(const Seq& x, bool train_mode) {
    if (int(x.size()) != T_ || x[0].cols() != F_) throw ContractViolation("encode: segment shape mismatch");
    batch_ = x[0].rows();

    c1_cache_.input = x;
    c1_cache_.pre_act = conv_forward(x, conv1_w_, conv1_b_, cfg_.kernel1);
    Seq a1 = c1_cache_.pre_act;
    relu_inplace(a1);
    p1_cache_.in_len = int(a1.size());
    Seq a1p = pool_forward(a1, cfg_.pool, p1_cache_.argmax);

    drop_mask_c1_.clear();
    if (train_mode && cfg_.dropout > 0.0) {
        Rng rng(mix_seed(dropout_seed_, ++dropout_counter_, 1));
        drop_mask_c1_.resize(a1p.size());
        for (size_t t = 0; t < a1p.size(); ++t) {
            drop_mask_c1_[t] = Eigen::MatrixXd::Zero(a1p[t].rows(), a1p[t].cols());
            for (long i = 0; i < a1p[t].rows(); ++i)
                for (long j = 0; j < a1p[t].cols(); ++j)
                    drop_mask_c1_[t](i, j) = rng.uniform() >= cfg_.dropout ? 1.0 / (1.0 - cfg_.dropout) : 0.0;
            a1p[t] = a1p[t].cwiseProduct(drop_mask_c1_[t]);
        }
    }

    c2_cache_.input = a1p;
    c2_cache_.pre_act = conv_forward(a1p, conv2_w_, conv2_b_, cfg_.kernel2);
    Seq a2 = c2_cache_.pre_act;
    relu_inplace(a2);
    p2_cache_.in_len = int(a2.size());
    Seq a2p = pool_forward(a2, cfg_.pool, p2_cache_.argmax);

    drop_mask_c2_.clear();
    if (train_mode && cfg_.dropout > 0.0) {
        Rng rng(mix_seed(dropout_seed_, dropout_counter_, 2));
        drop_mask_c2_.resize(a2p.size());
        for (size_t t = 0; t < a2p.size(); ++t) {
            drop_mask_c2_[t] = Eigen::MatrixXd::Zero(a2p[t].rows(), a2p[t].cols());
            for (long i = 0; i < a2p[t].rows(); ++i)
                for (long j = 0; j < a2p[t].cols(); ++j)
                    drop_mask_c2_[t](i, j) = rng.uniform() >= cfg_.dropout ? 1.0 / (1.0 - cfg_.dropout) : 0.0;
            a2p[t] = a2p[t].cwiseProduct(drop_mask_c2_[t]);
        }
    }

    lf_cache_.x = a2p;
    lf_cache_.reversed = false;
    lstm_forward(lf_cache_.x, lstm_f_wx_, lstm_f_wh_, lstm_f_b_, lf_cache_.h, lf_cache_.c, lf_cache_.gi,
                 lf_cache_.gf, lf_cache_.gg, lf_cache_.go);
    lb_cache_.x = reversed(a2p);
    lb_cache_.reversed = true;
    lstm_forward(lb_cache_.x, lstm_b_wx_, lstm_b_wh_, lstm_b_b_, lb_cache_.h, lb_cache_.c, lb_cache_.gi,
                 lb_cache_.gf, lb_cache_.gg, lb_cache_.go);

    enc_concat_.resize(batch_, 2 * cfg_.hidden);
    enc_concat_ << lf_cache_.h.back(), lb_cache_.h.back();

    drop_mask_latent_.resize(0, 0);
    if (train_mode && cfg_.dropout > 0.0) {
        Rng rng(mix_seed(dropout_seed_, dropout_counter_, 3));
        drop_mask_latent_ = Eigen::MatrixXd::Zero(enc_concat_.rows(), enc_concat_.cols());
        for (long i = 0; i < enc_concat_.rows(); ++i)
            for (long j = 0; j < enc_concat_.cols(); ++j)
                drop_mask_latent_(i, j) = rng.uniform() >= cfg_.dropout ? 1.0 / (1.0 - cfg_.dropout) : 0.0;
        enc_concat_ = enc_concat_.cwiseProduct(drop_mask_latent_);
    }

    latent_cache_ = enc_concat_ * latent_w_.value;
    latent_cache_.rowwise() += latent_b_.value.row(0);
    return latent_cache_;
}

Seq Autoencoder::decode(const Eigen::MatrixXd& latent, bool /*train_mode*/) {
    if (latent.cols() != cfg_.latent) throw ContractViolation("decode: latent dimension mismatch");
    const long batch = latent.rows();
    const int d0 = cfg_.filters2;

    Eigen::MatrixXd seed_flat = latent * seed_w_.value;
    seed_flat.rowwise() += seed_b_.value.row(0);
    seed_cache_.assign(size_t(Tp_), Eigen::MatrixXd());
    for (int u = 0; u < Tp_; ++u) seed_cache_[size_t(u)] = seed_flat.middleCols(long(u) * d0, d0);

    Seq up1 = upsample_forward(seed_cache_, cfg_.pool);
    c3_cache_.input = up1;
    c3_cache_.pre_act = conv_forward(up1, conv3_w_, conv3_b_, cfg_.kernel2);
    Seq a3 = c3_cache_.pre_act;
    relu_inplace(a3);

    Seq up2 = upsample_forward(a3, cfg_.pool);
    c4_cache_.input = up2;
    c4_cache_.pre_act = conv_forward(up2, conv4_w_, conv4_b_, cfg_.kernel1);
    Seq a4 = c4_cache_.pre_act;
    relu_inplace(a4);

    ld_cache_.x = a4;
    ld_cache_.reversed = false;
    lstm_forward(ld_cache_.x, lstm_d_wx_, lstm_d_wh_, lstm_d_b_, ld_cache_.h, ld_cache_.c, ld_cache_.gi,
                 ld_cache_.gf, ld_cache_.gg, ld_cache_.go);

    dec_lstm_out_.assign(size_t(T_), Eigen::MatrixXd());
    Seq recon(static_cast<size_t>(T_));
    for (int t = 0; t < T_; ++t) {
        dec_lstm_out_[size_t(t)] = ld_cache_.h[size_t(t) + 1];
        recon[size_t(t)] = dec_lstm_out_[size_t(t)] * out_w_.value;
        recon[size_t(t)].rowwise() += out_b_.value.row(0);
    }
    (void)batch;
    return recon;
}

void Autoencoder::forward(const Seq& x, bool train_mode, Eigen::MatrixXd& latent, Seq& recon) {
    latent = encode(x, train_mode);
    recon = decode(latent, train_mode);
}

void Autoencoder::backward(const Seq& grad_recon, const Eigen::MatrixXd& grad_latent) {
    const long batch = batch_;
    const long hidden = cfg_.hidden;
    const int d0 = cfg_.filters2;

    // output projection + decoder LSTM
    Seq dh_d(size_t(T_), Eigen::MatrixXd::Zero(batch, hidden));
    for (int t = 0; t < T_; ++t) {
        out_w_.grad.noalias() += dec_lstm_out_[size_t(t)].transpose() * grad_recon[size_t(t)];
        out_b_.grad += grad_recon[size_t(t)].colwise().sum();
        dh_d[size_t(t)] = grad_recon[size_t(t)] * out_w_.value.transpose();
    }
    Seq da4 = lstm_backward(ld_cache_.x, ld_cache_.h, ld_cache_.c, ld_cache_.gi, ld_cache_.gf, ld_cache_.gg,
                            ld_cache_.go, dh_d, lstm_d_wx_, lstm_d_wh_, lstm_d_b_);

    Seq dpre4 = relu_backward(c4_cache_.pre_act, da4);
    Seq dup2 = conv_backward(c4_cache_.input, dpre4, conv4_w_, conv4_b_, cfg_.kernel1);
    Seq da3 = upsample_backward(dup2, cfg_.pool);
    Seq dpre3 = relu_backward(c3_cache_.pre_act, da3);
    Seq dup1 = conv_backward(c3_cache_.input, dpre3, conv3_w_, conv3_b_, cfg_.kernel2);
    Seq dseed = upsample_backward(dup1, cfg_.pool);

    Eigen::MatrixXd dseed_flat(batch, long(Tp_) * d0);
    for (int u = 0; u < Tp_; ++u) dseed_flat.middleCols(long(u) * d0, d0) = dseed[size_t(u)];
    seed_w_.grad.noalias() += latent_cache_.transpose() * dseed_flat;
    seed_b_.grad += dseed_flat.colwise().sum();

    Eigen::MatrixXd dlatent = grad_latent + dseed_flat * seed_w_.value.transpose();

    latent_w_.grad.noalias() += enc_concat_.transpose() * dlatent;
    latent_b_.grad += dlatent.colwise().sum();
    Eigen::MatrixXd dconcat = dlatent * latent_w_.value.transpose();
    if (drop_mask_latent_.size() > 0) dconcat = dconcat.cwiseProduct(drop_mask_latent_);

    const int Tp = Tp_;
    Seq dh_f(size_t(Tp), Eigen::MatrixXd::Zero(batch, hidden));
    Seq dh_b(size_t(Tp), Eigen::MatrixXd::Zero(batch, hidden));
    dh_f[size_t(Tp) - 1] = dconcat.leftCols(hidden);
    dh_b[size_t(Tp) - 1] = dconcat.rightCols(hidden);

    Seq dx_f = lstm_backward(lf_cache_.x, lf_cache_.h, lf_cache_.c, lf_cache_.gi, lf_cache_.gf, lf_cache_.gg,
                             lf_cache_.go, dh_f, lstm_f_wx_, lstm_f_wh_, lstm_f_b_);
    Seq dx_b = lstm_backward(lb_cache_.x, lb_cache_.h, lb_cache_.c, lb_cache_.gi, lb_cache_.gf, lb_cache_.gg,
                             lb_cache_.go, dh_b, lstm_b_wx_, lstm_b_wh_, lstm_b_b_);
    Seq dx_b_orig = reversed(dx_b);

    Seq da2p(static_cast<size_t>(Tp));
    for (int t = 0; t < Tp; ++t) da2p[size_t(t)] = dx_f[size_t(t)] + dx_b_orig[size_t(t)];
    if (!drop_mask_c2_.empty())
        for (int t = 0; t < Tp; ++t) da2p[size_t(t)] = da2p[size_t(t)].cwiseProduct(drop_mask_c2_[size_t(t)]);

    Seq da2 = pool_backward(da2p, cfg_.pool, p2_cache_.argmax, p2_cache_.in_len);
    Seq dpre2 = relu_backward(c2_cache_.pre_act, da2);
    Seq da1p = conv_backward(c2_cache_.input, dpre2, conv2_w_, conv2_b_, cfg_.kernel2);
    if (!drop_mask_c1_.empty())
        for (size_t t = 0; t < da1p.size(); ++t) da1p[t] = da1p[t].cwiseProduct(drop_mask_c1_[t]);

    Seq da1 = pool_backward(da1p, cfg_.pool, p1_cache_.argmax, p1_cache_.in_len);
    Seq dpre1 = relu_backward(c1_cache_.pre_act, da1);
    conv_backward(c1_cache_.input, dpre1, conv1_w_, conv1_b_, cfg_.kernel1);  // input grad unused
}

Seq make_batch(const std::vector<Eigen::MatrixXd>& segments, const std::vector<int>& indices) {
    if (indices.empty()) throw ContractViolation("make_batch: empty index set");
    const long T = segments[size_t(indices[0])].rows();
    const long F = segments[size_t(indices[0])].cols();
    Seq x(size_t(T), Eigen::MatrixXd(long(indices.size()), F));
    for (size_t b = 0; b < indices.size(); ++b) {
        const auto& seg = segments[size_t(indices[b])];
        if (seg.rows() != T || seg.cols() != F) throw ContractViolation("make_batch: inconsistent segment shapes");
        for (long t = 0; t < T; ++t) x[size_t(t)].row(long(b)) = seg.row(t);
    }
    return x;
}

double composite_loss(Autoencoder& ae, const Seq& x, const Eigen::MatrixXd& centroids,
                      const std::vector<int>& assignments, double lambda, bool train_mode, bool do_backward,
                      double* rec_out, double* clu_out) {
    Eigen::MatrixXd latent;
    Seq recon;
    ae.forward(x, train_mode, latent, recon);
    const long batch = x[0].rows();
    const long T = long(x.size());
    const long F = x[0].cols();

    double rec = 0.0;
    Seq err(x.size());
    for (size_t t = 0; t < x.size(); ++t) {
        err[t] = recon[t] - x[t];
        rec += err[t].squaredNorm();
    }
    const double denom = double(batch) * double(T) * double(F);
    rec /= denom;

    double clu = 0.0;
    Eigen::MatrixXd dz = Eigen::MatrixXd::Zero(batch, latent.cols());
    if (lambda != 0.0) {
        if (long(assignments.size()) != batch) throw ContractViolation("composite_loss: assignment size mismatch");
        for (long b = 0; b < batch; ++b) {
            Eigen::RowVectorXd diff = latent.row(b) - centroids.row(assignments[size_t(b)]);
            clu += diff.squaredNorm();
            dz.row(b) = 2.0 * lambda / double(batch) * diff;
        }
        clu /= double(batch);
    }

    if (rec_out) *rec_out = rec;
    if (clu_out) *clu_out = clu;

    if (do_backward) {
        Seq grad_recon(x.size());
        const double scale = 2.0 * (1.0 - lambda) / denom;
        for (size_t t = 0; t < x.size(); ++t) grad_recon[t] = scale * err[t];
        ae.backward(grad_recon, dz);
    }
    return (1.0 - lambda) * rec + lambda * clu;
}

}  // namespace gist::deepcluster
