#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

namespace gist::deepcluster {

// Batched sequence: seq[t] is a B x C matrix (batch rows, channel columns).
using Seq = std::vector<Eigen::MatrixXd>;

struct ParamBlock {
    std::string name;
    Eigen::MatrixXd value;
    Eigen::MatrixXd grad;
    Eigen::MatrixXd adam_m, adam_v;

    void init(const std::string& n, long rows, long cols) {
        name = n;
        value = Eigen::MatrixXd::Zero(rows, cols);
        grad = Eigen::MatrixXd::Zero(rows, cols);
        adam_m = Eigen::MatrixXd::Zero(rows, cols);
        adam_v = Eigen::MatrixXd::Zero(rows, cols);
    }
};

struct EncoderConfig {
    int conv_layers = 2;  // fixed two-conv front end
    int kernel1 = 5;
    int filters1 = 16;
    int kernel2 = 5;
    int filters2 = 32;
    int pool = 2;     // pooling factor after each conv
    int hidden = 32;  // recurrent hidden size
    int latent = 16;
    double dropout = 0.0;

    void validate(int T) const;
};

// Convolutional-recurrent autoencoder over T x F segments. Two 1-D conv
// layers with ReLU and max-pooling feed a bidirectional LSTM whose final
// states map linearly to the latent vector; the decoder mirrors it with a
// linear seed, two upsample+conv stages and an LSTM ahead of the per-step
// output projection. Single-threaded; forward caches activations for the
// matching backward call.
class Autoencoder {
  public:
    Autoencoder() = default;
    Autoencoder(const EncoderConfig& cfg, int T, int F, uint64_t seed);

    // train_mode enables dropout (seeded); latent comes back as B x latent.
    Eigen::MatrixXd encode(const Seq& x, bool train_mode = false);
    Seq decode(const Eigen::MatrixXd& latent, bool train_mode = false);

    // full pass caching everything needed for backward()
    void forward(const Seq& x, bool train_mode, Eigen::MatrixXd& latent, Seq& recon);
    // grad_recon: dLoss/d recon per step; grad_latent: dLoss/d latent
    // (additive path through the clustering term). Accumulates into grads.
    void backward(const Seq& grad_recon, const Eigen::MatrixXd& grad_latent);

    std::vector<ParamBlock*> blocks();
    std::vector<const ParamBlock*> blocks() const;
    void zero_grads();
    void adam_step(double lr, int step, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

    // flat parameter access for optimizers and gradient checks
    Eigen::VectorXd flat_params() const;
    void set_flat_params(const Eigen::VectorXd& theta);
    Eigen::VectorXd flat_grads() const;

    const EncoderConfig& config() const { return cfg_; }
    int seq_len() const { return T_; }
    int feature_count() const { return F_; }
    int pooled_len() const { return Tp_; }

  private:
    EncoderConfig cfg_;
    int T_ = 0, F_ = 0, Tp_ = 0;
    uint64_t dropout_seed_ = 0;
    uint64_t dropout_counter_ = 0;

    // parameters
    ParamBlock conv1_w_, conv1_b_, conv2_w_, conv2_b_;
    ParamBlock lstm_f_wx_, lstm_f_wh_, lstm_f_b_;
    ParamBlock lstm_b_wx_, lstm_b_wh_, lstm_b_b_;
    ParamBlock latent_w_, latent_b_;
    ParamBlock seed_w_, seed_b_;
    ParamBlock conv3_w_, conv3_b_, conv4_w_, conv4_b_;
    ParamBlock lstm_d_wx_, lstm_d_wh_, lstm_d_b_;
    ParamBlock out_w_, out_b_;

    // forward caches
    struct ConvCache {
        Seq input;
        Seq pre_act;  // before ReLU
    };
    struct PoolCache {
        std::vector<Eigen::MatrixXi> argmax;  // per output step: B x C source offsets
        int in_len = 0;
    };
    struct LstmCache {
        Seq x, h, c;              // inputs and states per step (h,c sized T+1 with leading zeros)
        Seq gi, gf, gg, go;       // post-nonlinearity gates
        bool reversed = false;
    };
    ConvCache c1_cache_, c2_cache_, c3_cache_, c4_cache_;
    PoolCache p1_cache_, p2_cache_;
    LstmCache lf_cache_, lb_cache_, ld_cache_;
    Eigen::MatrixXd enc_concat_;       // B x 2H
    Eigen::MatrixXd latent_cache_;     // B x L
    Seq seed_cache_;                   // decoder seed sequence pre conv stages
    Seq dec_lstm_out_;                 // decoder LSTM hidden states
    Seq drop_mask_c1_, drop_mask_c2_;  // dropout masks (empty when inactive)
    Eigen::MatrixXd drop_mask_latent_;
    long batch_ = 0;
};

// Batch helpers: segments as T x F matrices -> batched Seq.
Seq make_batch(const std::vector<Eigen::MatrixXd>& segments, const std::vector<int>& indices);

// Composite loss L = (1-lambda) * Lrec + lambda * Lclu on one batch, with
// Lrec the per-element mean squared reconstruction error and Lclu the mean
// squared Euclidean distance between latents and their assigned centroids.
// When do_backward is set, parameter gradients accumulate into the model.
double composite_loss(Autoencoder& ae, const Seq& x, const Eigen::MatrixXd& centroids,
                      const std::vector<int>& assignments, double lambda, bool train_mode, bool do_backward,
                      double* rec_out = nullptr, double* clu_out = nullptr);

}  // namespace gist::deepcluster
