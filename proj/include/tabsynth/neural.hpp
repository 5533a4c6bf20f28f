#pragma once

#include <cstddef>
#include <vector>

#include "tabsynth/backend.hpp"

namespace tabsynth {

struct NeuralConfig {
    int dim = 64;
    int context = 128;  // maximum sequence length L; longer rows are truncated
    int layers = 2;
    int hidden = 0;     // MLP width; 0 means 4 * dim
    double learningRate = 3e-4;
    int batchSize = 8;
    double initScale = 0.08;
    double clipNorm = 1.0;  // global gradient norm clip; 0 disables
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adamEpsilon = 1e-8;

    int hidden_width() const noexcept { return hidden > 0 ? hidden : 4 * dim; }
    bool operator==(const NeuralConfig&) const = default;
};

/// Small decoder-only transformer: token + position embeddings, pre-norm
/// blocks of single-head causal self-attention and a SiLU MLP (RMSNorm, no
/// biases), a final RMSNorm and a biased output projection. Training is
/// minibatch Adam on mean per-token negative log-likelihood; gradients are
/// computed by hand-written backpropagation in double precision.
///
/// The vocabulary is fixed at construction; unseen tokens map to UNK.
class TinyNeuralLM final : public GenerativeBackend {
public:
    TinyNeuralLM(Vocabulary vocabulary, NeuralConfig config, std::uint64_t initSeed);

    std::string_view kind() const noexcept override { return "neural"; }
    const Vocabulary& vocabulary() const noexcept override { return vocab_; }
    const NeuralConfig& config() const noexcept { return config_; }

    std::vector<double> next_distribution(std::span<const TokenId> context) const override;
    std::unique_ptr<Decoder> start() const override;

    std::vector<double> pretrain(const Corpus& corpus, int epochs, std::uint64_t seed) override;
    /// `steps` minibatch updates over the downstream corpus.
    void finetune(const Corpus& downstream, int steps, std::uint64_t seed) override;

    TokenId intern(std::string_view token) override { return vocab_.id(token); }
    std::unique_ptr<GenerativeBackend> clone() const override { return std::make_unique<TinyNeuralLM>(*this); }

    nlohmann::json describe() const override;
    void write_state(std::ostream& out) const override;
    static std::unique_ptr<TinyNeuralLM> read(const nlohmann::json& header, std::istream& in);

    /// Mean per-token NLL over the batch.
    double loss(const std::vector<TokenSequence>& batch) const;
    /// Same loss; writes d(loss)/d(parameters) into grad (resized and zeroed).
    double loss_and_gradient(const std::vector<TokenSequence>& batch, std::vector<double>& grad) const;

    /// One Adam update on the batch; returns the pre-update loss.
    double train_step(const std::vector<TokenSequence>& batch);

    std::vector<double>& parameters() noexcept { return params_; }
    const std::vector<double>& parameters() const noexcept { return params_; }
    std::size_t parameter_count() const noexcept { return params_.size(); }

    /// Offset of the output bias inside parameters().
    std::size_t output_bias_offset() const noexcept;

    const std::vector<double>& loss_trace() const noexcept { return lossTrace_; }

    struct LayerOffsets {
        std::size_t norm1, wq, wk, wv, wo, norm2, w1, w2;
    };
    struct Layout {
        std::size_t tokenEmbedding = 0;
        std::size_t positionEmbedding = 0;
        std::vector<LayerOffsets> layers;
        std::size_t finalNorm = 0;
        std::size_t head = 0;
        std::size_t headBias = 0;
        std::size_t total = 0;
    };

private:
    void build_layout();
    void check_tokens(const std::vector<TokenSequence>& batch) const;
    double run_batch(const std::vector<TokenSequence>& batch, std::vector<double>* grad) const;

    Vocabulary vocab_;
    NeuralConfig config_;
    Layout layout_;
    std::vector<double> params_;
    std::vector<double> adamM_;
    std::vector<double> adamV_;
    std::uint64_t step_ = 0;
    std::vector<double> lossTrace_;

    friend class NeuralDecoder;
};

/// Maximum relative error between the analytic gradient and central finite
/// differences over every parameter: |a - n| / max(|a|, |n|, 1e-6).
/// Throws data error on an empty batch or a non-finite loss.
double neural_gradient_check(TinyNeuralLM& model, const std::vector<TokenSequence>& batch, double epsilon);

}  // namespace tabsynth
