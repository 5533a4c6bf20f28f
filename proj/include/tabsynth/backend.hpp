#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "tabsynth/vocabulary.hpp"

namespace tabsynth {

/// Token ids of one serialized row: BOS first, EOS last when complete.
using TokenSequence = std::vector<TokenId>;

struct Corpus {
    std::vector<TokenSequence> sequences;
    std::vector<std::string> provenance;  // one source id per sequence

    std::size_t size() const noexcept { return sequences.size(); }
    bool empty() const noexcept { return sequences.empty(); }
    void append(const Corpus& other);
};

/// Incremental decoding state over a frozen backend.
class Decoder {
public:
    virtual ~Decoder() = default;
    virtual void push(TokenId token) = 0;
    /// Next-token distribution given everything pushed so far.
    virtual std::vector<double> distribution() = 0;
};

/// An autoregressive model p(w_k | w_<k) over its vocabulary.
class GenerativeBackend {
public:
    virtual ~GenerativeBackend() = default;

    virtual std::string_view kind() const noexcept = 0;
    virtual const Vocabulary& vocabulary() const noexcept = 0;

    /// Probability vector over the vocabulary; context starts with BOS.
    virtual std::vector<double> next_distribution(std::span<const TokenId> context) const = 0;

    /// Default decoder re-evaluates next_distribution on the whole context.
    virtual std::unique_ptr<Decoder> start() const;

    /// Training on a corpus from scratch state; returns the per-epoch mean
    /// negative log-likelihood (empty for count-based models).
    virtual std::vector<double> pretrain(const Corpus& corpus, int epochs, std::uint64_t seed) = 0;

    /// Continued training on downstream sequences.
    virtual void finetune(const Corpus& downstream, int steps, std::uint64_t seed) = 0;

    /// Maps a token to an id. Backends that can grow their vocabulary add
    /// unseen tokens; fixed-vocabulary backends return UNK.
    virtual TokenId intern(std::string_view token) = 0;

    virtual std::unique_ptr<GenerativeBackend> clone() const = 0;

    /// Backend config for the checkpoint header (see checkpoint.hpp).
    virtual nlohmann::json describe() const = 0;

    /// Length-prefixed little-endian arrays of counts or parameters.
    virtual void write_state(std::ostream& out) const = 0;
};

/// Sum of log next-token probabilities over positions 1..N-1.
double sequence_logprob(const GenerativeBackend& backend, std::span<const TokenId> sequence);

/// Tokenizes sentences and maps them through backend.intern, wrapping each
/// in BOS/EOS.
Corpus make_corpus(GenerativeBackend& backend, const std::vector<std::string>& sentences,
                   std::string_view separator, const std::string& sourceId);

/// Throws data error if any id is outside the vocabulary or a sequence is empty.
void check_corpus(const Corpus& corpus, std::size_t vocabularySize);

std::vector<double> pretrain(GenerativeBackend& backend, const Corpus& corpus, int epochs, std::uint64_t seed);
void finetune(GenerativeBackend& backend, const Corpus& downstream, int steps, std::uint64_t seed);

}  // namespace tabsynth
