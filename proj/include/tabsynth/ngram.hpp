#pragma once

#include <map>
#include <vector>

#include "tabsynth/backend.hpp"

namespace tabsynth {

struct NgramConfig {
    int order = 5;
    double addK = 1e-3;
    // Weight of downstream counts relative to pre-training counts.
    double finetuneWeight = 1e3;

    bool operator==(const NgramConfig&) const = default;
};

/// Count-based backoff language model with add-k smoothing.
///
/// For context h (the last order-1 tokens), the model uses the longest suffix
/// h' of h that has been observed as a context and returns
///
///     p(w | h) = (c(h', w) + k) / (c(h') + k |V|)
///
/// Unseen contexts back off one token at a time down to the empty context;
/// an untrained model is uniform. Counts are real-valued so fine-tuning can
/// add downstream counts with a weight.
class NgramModel final : public GenerativeBackend {
public:
    NgramModel(Vocabulary vocabulary, NgramConfig config);

    std::string_view kind() const noexcept override { return "ngram"; }
    const Vocabulary& vocabulary() const noexcept override { return vocab_; }
    const NgramConfig& config() const noexcept { return config_; }

    std::vector<double> next_distribution(std::span<const TokenId> context) const override;
    std::unique_ptr<Decoder> start() const override;

    /// One counting pass; epochs are ignored. Returns an empty trace.
    std::vector<double> pretrain(const Corpus& corpus, int epochs, std::uint64_t seed) override;
    /// Adds downstream counts times finetuneWeight; steps == 0 is a no-op.
    void finetune(const Corpus& downstream, int steps, std::uint64_t seed) override;

    TokenId intern(std::string_view token) override { return vocab_.add(token); }
    std::unique_ptr<GenerativeBackend> clone() const override { return std::make_unique<NgramModel>(*this); }

    nlohmann::json describe() const override;
    void write_state(std::ostream& out) const override;
    static std::unique_ptr<NgramModel> read(const nlohmann::json& header, std::istream& in);

    /// Raw (weighted) count of `token` after `context`, and of the context itself.
    double count(std::span<const TokenId> context, TokenId token) const;
    double context_count(std::span<const TokenId> context) const;

private:
    struct ContextCounts {
        double total = 0.0;
        std::map<TokenId, double> next;
    };
    using Level = std::map<std::vector<TokenId>, ContextCounts>;

    void accumulate(const Corpus& corpus, double weight);
    const ContextCounts* lookup(std::span<const TokenId> context) const;

    Vocabulary vocab_;
    NgramConfig config_;
    std::vector<Level> levels_;  // levels_[j]: contexts of length j
};

}  // namespace tabsynth
